#pragma once
#include <utility>
#include <vector>

#include "objects.hpp"
#include "report.hpp"

namespace bslab {

// size, separation and min(c(n)) >= n for all n < depth
inline Verdict block_seq_check(const BlockSeq& c, Nat depth) {
    if (depth == 0) return Verdict::pass();
    Block prev = c.block(0);
    if (prev.empty()) return Verdict::fail(0, "nonempty", "empty block");
    for (Nat n = 0; n + 1 < depth; ++n) {
        Block next = c.block(n + 1);
        if (next.empty()) return Verdict::fail(n + 1, "nonempty", "empty block");
        if (next.size() <= prev.size())
            return Verdict::fail(n, "size", "|c(" + std::to_string(n) + ")|=" + std::to_string(prev.size()) +
                                                " >= |c(" + std::to_string(n + 1) + ")|=" + std::to_string(next.size()));
        if (prev.back() >= next.front())
            return Verdict::fail(n, "separation", "max c(" + std::to_string(n) + ")=" + std::to_string(prev.back()) +
                                                      " >= min c(" + std::to_string(n + 1) + ")=" +
                                                      std::to_string(next.front()));
        prev = std::move(next);
    }
    for (Nat n = 0; n < depth; ++n)
        if (c.min_of(n) < n)
            return Verdict::fail(n, "min-bound", "min c(" + std::to_string(n) + ") < " + std::to_string(n));
    return Verdict::pass();
}

struct LeResult {
    bool ok = true;
    Nat failed_at = 0;
    std::string reason;
    std::vector<std::pair<Nat, Nat>> witness;  // (m, n) with c(m) inside d(n)
    explicit operator bool() const { return ok; }
};

// c <=_l d checked for l <= m < depth; a pass certifies the inspected prefix only
inline LeResult le_at(const BlockSeq& c, const BlockSeq& d, Nat l, Nat depth) {
    LeResult r;
    for (Nat m = l; m < depth; ++m) {
        Block cm = c.block(m);
        auto n0 = d.locate(cm.front());
        auto fail = [&](std::string why) {
            r.ok = false;
            r.failed_at = m;
            r.reason = std::move(why);
            return r;
        };
        if (!n0) return fail("c(" + std::to_string(m) + ") leaves Set(d) at " + std::to_string(cm.front()));
        for (Nat x : cm) {
            auto nx = d.locate(x);
            if (!nx) return fail("c(" + std::to_string(m) + ") leaves Set(d) at " + std::to_string(x));
            if (*nx != *n0) return fail("c(" + std::to_string(m) + ") meets d-blocks " + std::to_string(*n0) + " and " +
                                        std::to_string(*nx));
        }
        if (*n0 < m) return fail("c(" + std::to_string(m) + ") lies in d(" + std::to_string(*n0) + ") with index below m");
        r.witness.emplace_back(m, *n0);
    }
    return r;
}

// Y = X cap Z and Y(n) >= f(n) for n < depth
inline Verdict rapid_witness_check(const SetStream& x, const SetStream& z, const Fn& f, Nat depth) {
    SetStream y = SetStream::intersection(x, z);
    for (Nat n = 0; n < depth; ++n) {
        Nat yn = y.nth(n), fn = f(n);
        if (yn < fn)
            return Verdict::fail(n, "rapid", "Y(" + std::to_string(n) + ")=" + std::to_string(yn) + " < f(n)=" +
                                                 std::to_string(fn));
    }
    return Verdict::pass();
}

}  // namespace bslab
