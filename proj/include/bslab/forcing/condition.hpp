#pragma once
#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "context.hpp"

namespace bslab {

struct Coordinate {
    Label alpha = 0;
    NormalTriple t = NormalTriple::standard(BlockSeq::triangular());  // pi_{q,alpha}, psi, b
};

struct Condition {
    BlockSeq c = BlockSeq::triangular();
    Label gamma = kTop;
    std::vector<Coordinate> X;  // increasing in alpha

    const Coordinate* find(Label a) const {
        for (const auto& x : X)
            if (x.alpha == a) return &x;
        return nullptr;
    }
    const Coordinate& at(Label a) const {
        if (auto p = find(a)) return *p;
        throw PreconditionFailed("d14:X", "label " + std::to_string(a) + " not in X_q");
    }
    bool has(Label a) const { return find(a) != nullptr; }
    std::vector<Label> labels() const {
        std::vector<Label> out;
        for (const auto& x : X) out.push_back(x.alpha);
        return out;
    }
    Condition with_c(BlockSeq c2) const {
        Condition q = *this;
        q.c = std::move(c2);
        return q;
    }
    Condition with(Coordinate co) const {
        Condition q = *this;
        auto it = std::find_if(q.X.begin(), q.X.end(), [&](const Coordinate& x) { return x.alpha >= co.alpha; });
        if (it != q.X.end() && it->alpha == co.alpha) *it = std::move(co);
        else q.X.insert(it, std::move(co));
        return q;
    }
};

inline std::string summary(const Condition& q, const GenericContext& ctx) {
    std::string s = "gamma=" + ctx.name(q.gamma) + " X={";
    for (std::size_t i = 0; i < q.X.size(); ++i) s += (i ? "," : "") + ctx.name(q.X[i].alpha);
    return s + "} c=" + q.c.describe();
}

// r2: c, gamma = 0, X = {0}, the standard map
inline Condition standard_condition(const BlockSeq& c) {
    Condition q;
    q.c = c;
    q.gamma = 0;
    q.X.push_back({0, NormalTriple::standard(c)});
    return q;
}

// delta = 0
inline Condition empty_condition(const BlockSeq& c) {
    Condition q;
    q.c = c;
    return q;
}

namespace detail {

// pi''c(m) for m < depth, then pi(min c(m)) for m < 4*depth until 2*depth values (a subset of the image)
inline std::vector<Nat> image_values(const Condition& q, const BlockMap& pi, Nat depth) {
    std::set<Nat> vals;
    for (Nat m = 0; m < depth; ++m)
        for (Nat k : q.c.block(m)) vals.insert(pi(k));
    try {
        for (Nat m = depth; vals.size() < 2 * depth && m < 4 * depth; ++m) vals.insert(pi(q.c.min_of(m)));
    } catch (const DepthExceeded&) {
    }
    return {vals.begin(), vals.end()};
}

}  // namespace detail

// d14 (i11)-(i17) at depth; thresholds must sit in the first half of the inspected prefix
inline Report check_condition(const Condition& q, const GenericContext& ctx, Nat depth) {
    Report rep("condition");
    rep.note("q", summary(q, ctx));
    rep.add("d14:i11", block_seq_check(q.c, depth), "c_q in P on " + std::to_string(depth) + " blocks");

    // i13
    {
        std::string why;
        for (std::size_t i = 0; i < q.X.size(); ++i) {
            if (q.X[i].alpha >= ctx.delta()) why = "label " + std::to_string(q.X[i].alpha) + " outside delta";
            else if (i && q.X[i].alpha <= q.X[i - 1].alpha) why = "X_q not increasing";
        }
        if (why.empty()) {
            if (q.gamma == kTop) {
                if (ctx.delta() == 0) {
                    if (!q.X.empty()) why = "delta = 0 needs X_q empty";
                } else if (!ctx.delta_limit) {
                    why = "gamma_q = delta needs delta limit";
                } else {
                    for (Label a : ctx.top_cofinal)
                        if (!q.has(a)) why = "X_q misses cofinal label " + ctx.name(a);
                }
            } else if (q.gamma >= ctx.delta()) {
                why = "gamma_q outside delta";
            } else if (q.X.empty() || q.X.back().alpha != q.gamma) {
                why = "gamma_q < delta must be max X_q";
            }
        }
        rep.add("d14:i13", why.empty(), why.empty() ? "gamma=" + ctx.name(q.gamma) : why);
    }

    const Nat half = depth / 2;
    for (const auto& co : q.X) {
        const std::string a = ctx.name(co.alpha);
        // i15
        {
            std::string tag = "d14:i15(" + a + ")";
            Verdict v = normal_check(co.t, depth);
            if (!v) rep.add(tag, v);
            else {
                Nat l = le_threshold(q.c, co.t.c, depth);
                if (l > half) rep.add(tag, false, "c_q <= b only from block " + std::to_string(l));
                else rep.add(tag, true, "c_q <=_" + std::to_string(l) + " b");
            }
        }
        // i16
        if (co.alpha < ctx.delta()) {
            std::string tag = "d14:i16(" + a + ")";
            auto vals = detail::image_values(q, co.t.pi, depth);
            Decision d = ctx.decide(co.alpha, SetStream::table(vals), vals.back());
            rep.add(tag, d.in(), d.witness());
        }
    }
    // i17
    for (std::size_t i = 0; i < q.X.size(); ++i)
        for (std::size_t j = i + 1; j < q.X.size(); ++j) {
            const auto& lo = q.X[i];
            const auto& hi = q.X[j];
            if (hi.alpha >= ctx.delta()) continue;
            std::string tag = "d14:i17(" + ctx.name(hi.alpha) + "," + ctx.name(lo.alpha) + ")";
            BlockMap down = ctx.map(hi.alpha, lo.alpha);
            Nat th = 0;
            for (Nat m = depth; m-- > 0 && th == 0;)
                for (Nat k : q.c.block(m))
                    if (lo.t.pi(k) != down(hi.t.pi(k))) { th = m + 1; break; }
            if (th > half) rep.add(tag, false, "commuting fails at block " + std::to_string(th - 1));
            else rep.add(tag, true, "from block " + std::to_string(th));
        }
    return rep;
}

// q1 <= q0 at depth
inline Report leq_condition(const Condition& q1, const Condition& q0, Nat depth) {
    Report rep("order");
    {
        Nat l = le_threshold(q1.c, q0.c, depth);
        if (l >= depth || l > depth / 2) rep.add("d14:le-c", false, "c_q1 <= c_q0 only from block " + std::to_string(l));
        else rep.add("d14:le-c", true, "c_q1 <=_" + std::to_string(l) + " c_q0");
    }
    {
        std::string miss;
        for (const auto& x : q0.X)
            if (!q1.has(x.alpha)) miss = std::to_string(x.alpha);
        rep.add("d14:le-X", miss.empty(), miss.empty() ? "X_q1 contains X_q0" : "missing label " + miss);
    }
    for (const auto& x : q0.X) {
        const Coordinate* y = q1.find(x.alpha);
        if (!y) continue;
        std::string tag = "d14:le-map(" + std::to_string(x.alpha) + ")";
        if (y->t.pi.same_node(x.t.pi)) {
            rep.add(tag, true, "same map");
            continue;
        }
        std::set<Nat> pts;
        for (Nat k = 0; k < depth; ++k) pts.insert(k);
        for (Nat m = 0; m < depth; ++m) {
            for (Nat k : q1.c.block(m)) pts.insert(k);
            for (const BlockSeq* b : {&x.t.c, &y->t.c}) {
                pts.insert(b->min_of(m));
                pts.insert(b->max_of(m));
            }
        }
        std::string bad;
        for (Nat k : pts)
            if (y->t.pi(k) != x.t.pi(k)) { bad = std::to_string(k); break; }
        rep.add(tag, bad.empty(), bad.empty() ? std::to_string(pts.size()) + " points" : "differs at " + bad);
    }
    return rep;
}

}  // namespace bslab
