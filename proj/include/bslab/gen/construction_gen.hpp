#pragma once
#include <set>

#include "../constructions/diagonal.hpp"
#include "../constructions/fuse.hpp"
#include "../constructions/lift.hpp"
#include "calibration_gen.hpp"

namespace bslab {

// b(m + a) as a closed-form interval sequence
inline BlockSeq shifted_intervals(Nat start, Nat first, Nat step, Nat gap, Nat a) {
    Nat tri = a == 0 ? 0 : tri_s(a - 1);
    Nat begin = add(add(start, mul(a, add(first, gap))), mul(step, tri));
    return BlockSeq::intervals(begin, add(first, mul(a, step)), step, gap);
}

struct IntervalShape {
    Nat start, first, step, gap;
    static IntervalShape random(Rng& rng) {
        return {rng.below(6), rng.between(1, 3), rng.between(1, 3), rng.below(4)};
    }
    BlockSeq at(Nat a) const { return shifted_intervals(start, first, step, gap, a); }
};

// pi(k) = scale*floor(l/r) on b(l)
inline NormalTriple quotient_triple(const BlockSeq& b, Nat scale, Nat r) {
    Fn psi = r == 1 ? Fn::linear(scale, 0) : Fn::compose(Fn::linear(scale, 0), Fn::quotient(r));
    return NormalTriple::of(b, psi);
}

// Chain of shifted interval sequences, D_k nested tails of one sparse periodic set.
inline FusionInput random_fusion_input(Rng& rng) {
    FusionInput in;
    auto shape = IntervalShape::random(rng);
    Nat r = rng.between(1, 2);
    in.t = quotient_triple(shape.at(0), 1, r);
    Nat J = rng.between(0, 3);
    Nat a = 0;
    for (Nat j = 0; j <= J; ++j) {
        in.chain.push_back(shape.at(a));
        a += rng.between(j == 0 ? 0 : 1, 3);
    }
    Nat c_top = a / r + 1;
    std::vector<Nat> gaps;
    for (Nat i = rng.between(1, 3); i > 0; --i) gaps.push_back(rng.between(3, 6));
    SetStream V = SetStream::periodic(c_top + 2 + rng.below(5), gaps);
    std::set<Nat> removed;
    const Nat head = 6;
    auto vhead = V.prefix(head);
    for (Nat k = 0; k <= J; ++k) {
        if (k > 0)
            for (Nat i = 0; i < head; ++i)
                if (rng.coin(1, 4)) removed.insert(i);
        std::vector<Nat> kept;
        for (Nat i = 0; i < head; ++i)
            if (!removed.count(i)) kept.push_back(vhead[i]);
        in.Dk.push_back(SetStream::with_prefix(kept, SetStream::tail(V, head)));
        in.D_threshold.push_back(removed.empty() ? 0 : *removed.rbegin() + 1);
    }
    in.D = V;
    return in;
}

// calibration system with E = omega, f = id and a random interval sequence e
inline CalibrationInput random_lift_input(Rng& rng, Nat levels, Nat depth) {
    auto in = random_calibration_input(rng, levels, depth);
    in.f = Fn::identity();
    return in;
}

inline BlockSeq random_intervals(Rng& rng) { return IntervalShape::random(rng).at(0); }

struct TowerOptions {
    Nat levels = 2;
    bool degenerate = false;  // d_j = e, side maps equal to top maps
    std::optional<Fn> f;
};

// Exact commuting tower on multiples of u_n = 8*2^n with pi_{n+1,n}(x) = 2*floor(x/4).
inline TowerInput random_tower_input(Rng& rng, TowerOptions opt) {
    TowerInput in;
    const Nat N = opt.levels;
    in.levels = N;
    in.f = opt.f ? *opt.f : (rng.coin() ? Fn::identity() : Fn::linear(2, 0));
    auto top_shape = IntervalShape::random(rng);
    auto side_shape = opt.degenerate ? top_shape : IntervalShape::random(rng);
    Nat re = rng.between(1, 2), rd = opt.degenerate ? re : rng.between(1, 2);
    in.e = top_shape.at(opt.degenerate ? 0 : rng.below(3));
    Nat J = opt.degenerate ? 0 : rng.between(0, 2);
    Nat a = rng.below(3);
    for (Nat j = 0; j <= J; ++j) {
        in.chain.push_back(opt.degenerate ? in.e : side_shape.at(a));
        a += rng.between(1, 2);
    }
    auto step = BlockMap::quotient(2, 4);
    for (Nat n = 0; n < N; ++n) {
        Nat u = Nat(8) << n;
        in.top.push_back(quotient_triple(top_shape.at(0), u, re));
        in.side.push_back(opt.degenerate ? in.top.back() : quotient_triple(side_shape.at(0), u, rd));
        in.j_of.push_back(rng.below(J + 1));
        std::vector<BlockMap> row;
        std::vector<Nat> jc, ld, le;
        for (Nat m = 0; m < n; ++m) {
            BlockMap p = step;
            for (Nat k = m + 1; k < n; ++k) p = BlockMap::compose(step, p);
            row.push_back(p);
        }
        row.push_back(BlockMap::identity());
        for (Nat m = 0; m <= n; ++m) {
            jc.push_back(rng.below(J + 1));
            ld.push_back(rng.below(3));
            le.push_back(rng.below(3));
        }
        in.pi.push_back(row);
        in.j_comm.push_back(jc);
        in.L_d.push_back(ld);
        in.L_e.push_back(le);
    }
    // S(k) odd and >= pad + g(2k); C_n = u_n S, D_n = u_n S o idx_n
    Fn g = diagonal_schedule(in.f);
    const Nat pad = 32;
    Fn S = Fn::derived("2(32+g(2k))+1", [g, pad](Nat k) { return 2 * (pad + g(2 * k)) + 1; });
    for (Nat n = 0; n < N; ++n) {
        Nat u = Nat(8) << n;
        in.C.push_back(SetStream::from_fn(Fn::compose(Fn::linear(u, 0), S)));
        std::vector<Nat> gaps;
        for (Nat i = rng.between(1, 2); i > 0; --i) gaps.push_back(rng.between(1, 2));
        auto idx = SetStream::periodic(0, gaps);  // every idx_n holds the multiples of its period
        SetStream tail = SetStream::from_fn(Fn::compose(Fn::linear(u, 0), Fn::compose(S, Fn::nth_of(idx))));
        std::set<Nat> junk;
        Nat Jn = rng.below(3);
        while (junk.size() < Jn) junk.insert(8 * rng.below(6) + rng.between(1, 7));
        in.D.push_back(junk.empty() ? tail : SetStream::with_prefix({junk.begin(), junk.end()}, tail));
        in.disjoint_threshold.push_back(junk.size());
    }
    for (Nat n = 0; n < N; ++n) {
        std::vector<Nat> t;
        for (Nat m = 0; m <= n; ++m) t.push_back(in.disjoint_threshold[m]);
        in.image_threshold.push_back(t);
    }
    return in;
}

}  // namespace bslab
