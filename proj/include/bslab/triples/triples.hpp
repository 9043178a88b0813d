#pragma once
#include <optional>
#include <string>
#include <vector>

#include "../core/objects.hpp"
#include "../core/poset.hpp"

namespace bslab {

struct NormalTriple {
    BlockMap pi;
    Fn psi;
    BlockSeq c;

    // pi(k) = psi(l) on c(l), 0 elsewhere
    static NormalTriple of(BlockSeq c, Fn psi) { return {BlockMap::normal(c, psi), psi, c}; }
    // the map k -> n for k in c(n)
    static NormalTriple standard(BlockSeq c) { return of(std::move(c), Fn::identity()); }
};

inline constexpr Nat kGapSamples = 16;

// constancy, psi monotone, range growth over [depth/2, depth), zero on gaps
inline Verdict normal_check(const NormalTriple& t, Nat depth) {
    for (Nat l = 0; l < depth; ++l) {
        Nat v = t.psi(l);
        for (Nat k : t.c.block(l))
            if (t.pi(k) != v)
                return Verdict::fail(l, "constancy", "pi(" + std::to_string(k) + ")=" + std::to_string(t.pi(k)) +
                                                         " != psi(" + std::to_string(l) + ")=" + std::to_string(v));
        if (l + 1 < depth && t.psi(l + 1) < v)
            return Verdict::fail(l, "monotone", "psi(" + std::to_string(l + 1) + ") < psi(" + std::to_string(l) + ")");
    }
    if (depth >= 2) {
        Nat h = depth / 2;
        if (t.psi(depth - 1) <= t.psi(h - 1))
            return Verdict::fail(depth - 1, "range",
                                 "psi constant on window [" + std::to_string(h - 1) + "," + std::to_string(depth) + ")");
    }
    auto check_gap = [&](Nat lo, Nat hi, Nat l) -> std::optional<Verdict> {
        // k in [lo, hi): sample both ends
        for (Nat k = lo; k < hi; ++k) {
            if (k - lo >= kGapSamples && hi - k > kGapSamples) { k = hi - kGapSamples - 1; continue; }
            if (t.pi(k) != 0)
                return Verdict::fail(l, "off-support", "pi(" + std::to_string(k) + ")=" + std::to_string(t.pi(k)));
        }
        return std::nullopt;
    };
    if (depth > 0) {
        if (auto v = check_gap(0, t.c.min_of(0), 0)) return *v;
        for (Nat l = 0; l + 1 < depth; ++l)
            if (auto v = check_gap(t.c.max_of(l) + 1, t.c.min_of(l + 1), l)) return *v;
    }
    return Verdict::pass();
}

// least l such that c <=_l d holds on [l, depth)
inline Nat le_threshold(const BlockSeq& c, const BlockSeq& d, Nat depth) {
    for (Nat m = depth; m-- > 0;) {
        if (!le_at(c, d, m, m + 1)) return m + 1;
    }
    return 0;
}

struct MonotoneBound {
    Nat threshold = 0;  // N
    Nat le_index = 0;   // least l with d <=_l c on the prefix
};

inline MonotoneBound eventual_monotone_bound(const NormalTriple& t, const BlockSeq& d, Nat depth) {
    Nat l = le_threshold(d, t.c, depth);
    if (l >= depth)
        throw PreconditionFailed("le", "d <= c fails at the last inspected block " + std::to_string(depth - 1));
    MonotoneBound r{l == 0 ? 0 : d.min_of(l), l};
    // literal re-check on Set(d) within depth
    Nat last = 0;
    bool first = true;
    for (Nat m = l; m < depth; ++m)
        for (Nat k : d.block(m)) {
            Nat v = t.pi(k);
            if (!first && v < last)
                throw PreconditionFailed("monotone", "pi decreases at " + std::to_string(k) + " beyond threshold");
            last = v;
            first = false;
        }
    return r;
}

struct FiberBlocks {
    Nat n0 = 0;
    std::vector<std::vector<Nat>> F;  // F[n] sorted
    std::vector<Nat> max_f;           // max F_n
    std::vector<Nat> min_above;       // min(F_n minus n0)
    Verdict chain;                    // max F_n < min(F_{n+1} - n0) <= max F_{n+1}
};

// pi''c(m) when it is a singleton
inline std::optional<Nat> block_value(const BlockMap& pi, const Block& blk) {
    Nat v = pi(blk.front());
    for (Nat k : blk)
        if (pi(k) != v) return std::nullopt;
    return v;
}

inline FiberBlocks fiber_blocks(const NormalTriple& t, const SetStream& a, const BlockSeq& c, Nat n0, Nat depth) {
    if (auto le = le_at(c, t.c, n0, depth + n0); !le)
        throw PreconditionFailed("le", "c <=_n0 b fails at " + std::to_string(le.failed_at) + ": " + le.reason);
    FiberBlocks out;
    out.n0 = n0;
    out.F.assign(depth, {});
    std::vector<Nat> targets = a.prefix(depth);
    auto slot = [&](Nat v) -> std::optional<Nat> {
        auto it = std::lower_bound(targets.begin(), targets.end(), v);
        if (it != targets.end() && *it == v) return static_cast<Nat>(it - targets.begin());
        return std::nullopt;
    };
    for (Nat m = 0; m < n0; ++m)
        if (auto v = block_value(t.pi, c.block(m)))
            if (auto s = slot(*v)) out.F[*s].push_back(m);
    Nat top = depth ? targets.back() : 0;
    for (Nat m = n0;; ++m) {
        auto v = block_value(t.pi, c.block(m));
        if (!v) throw PreconditionFailed("normal", "pi not constant on c(" + std::to_string(m) + ")");
        if (*v > top) break;
        if (auto s = slot(*v)) out.F[*s].push_back(m);
    }
    for (Nat n = 0; n < depth; ++n) {
        const auto& f = out.F[n];
        auto it = std::lower_bound(f.begin(), f.end(), n0);
        if (it == f.end())
            throw PreconditionFailed("a-in-image", "a(" + std::to_string(n) + ")=" + std::to_string(targets[n]) +
                                                      " not in pi''Set(c)<n0>");
        out.max_f.push_back(f.back());
        out.min_above.push_back(*it);
    }
    out.chain = Verdict::pass();
    for (Nat n = 0; n + 1 < depth; ++n) {
        if (!(out.max_f[n] < out.min_above[n + 1] && out.min_above[n + 1] <= out.max_f[n + 1])) {
            out.chain = Verdict::fail(n, "interleave",
                                      "max F_n=" + std::to_string(out.max_f[n]) + ", min(F_{n+1}-n0)=" +
                                          std::to_string(out.min_above[n + 1]));
            break;
        }
    }
    return out;
}

}  // namespace bslab
