#pragma once
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "../core/objects.hpp"
#include "../core/poset.hpp"
#include "../core/report.hpp"
#include "../triples/triples.hpp"

namespace bslab {

// Chain d_0 >= d_1 >= ... >= d_J (d_k = d_J for k > J), one map pi normal on b with d_0 <= b.
struct FusionInput {
    std::vector<BlockSeq> chain;
    NormalTriple t = NormalTriple::standard(BlockSeq::triangular());
    std::vector<SetStream> Dk;           // D_k, k <= J
    std::vector<std::optional<Fn>> witness;  // optional caller indices: D_k(n) = C_k(witness_k(n))
    SetStream D = SetStream::omega();
    std::vector<Nat> D_threshold;        // D[h_k] inside D_k
    Nat cert_depth = 48;                 // blocks inspected for the chain certificates

    Nat top() const { return chain.empty() ? 0 : chain.size() - 1; }
    const BlockSeq& d(Nat k) const { return chain.at(std::min(k, top())); }
    const SetStream& Dat(Nat k) const { return Dk.at(std::min(k, top())); }
    Nat h(Nat k) const { return D_threshold.at(std::min(k, top())); }
};

struct FusionResult {
    BlockSeq d = BlockSeq::table({});
    std::vector<Nat> n;          // n_k
    std::vector<Nat> g;          // g(k) while g(k) <= depth
    std::vector<Nat> source_k;   // d(l) drawn from d_k(top_l)
    std::vector<Nat> source_m;   // the maximal fiber index
    std::vector<Nat> threshold;  // d <=_{threshold[j]} d_j
    Report report{"fusion"};
};

namespace detail {

// C_k = pi''Set(d_k)<n_k>, blockwise
inline SetStream fusion_C(const FusionInput& in, Nat k, Nat nk) {
    return SetStream::block_image(in.d(k), nk, in.t.pi);
}

// largest m >= from with pi(min c(m)) == v, values nondecreasing from `from`
inline std::optional<Nat> last_block_with(const BlockSeq& c, const BlockMap& pi, Nat from, Nat v) {
    auto val = [&](Nat m) { return pi(c.min_of(m)); };
    if (val(from) > v) return std::nullopt;
    Nat lo = from, step = 1;
    Nat hi = add(from, step);
    while (val(hi) <= v) {
        lo = hi;
        step = mul(step, 2);
        hi = add(from, step);
    }
    while (lo + 1 < hi) {
        Nat mid = lo + (hi - lo) / 2;
        if (val(mid) <= v) lo = mid; else hi = mid;
    }
    if (val(lo) == v) return lo;
    return std::nullopt;
}

}  // namespace detail

inline std::vector<Nat> fusion_n(const FusionInput& in) {
    std::vector<Nat> n;
    const Nat W = in.cert_depth;
    Nat n0 = le_threshold(in.d(0), in.t.c, W);
    if (n0 >= W) throw PreconditionFailed("t36:d0-le-b", "d_0 <= b fails at block " + std::to_string(W - 1));
    n.push_back(n0);
    for (Nat k = 0; k < in.top(); ++k) {
        Nat l = le_threshold(in.d(k + 1), in.d(k), W);
        if (l >= W)
            throw PreconditionFailed("t36:chain", "d_" + std::to_string(k + 1) + " <= d_" + std::to_string(k) +
                                                      " fails at block " + std::to_string(W - 1));
        n.push_back(std::max(l, n.back()));
    }
    return n;
}

// rapidity witness D_k(i) = C_k(m), m >= 2(i+1), and D inside D_0, D[h_k] inside D_k, for i < count
inline void require_fusion_input(const FusionInput& in, const std::vector<Nat>& n, Nat count) {
    if (in.chain.empty() || in.Dk.size() != in.chain.size() || in.D_threshold.size() != in.chain.size())
        throw PreconditionFailed("t36:shape", "chain, D_k and thresholds differ in length");
    if (!in.witness.empty() && in.witness.size() != in.chain.size())
        throw PreconditionFailed("t36:shape", "witness list length");
    for (Nat k = 0; k <= in.top(); ++k) {
        auto C = detail::fusion_C(in, k, n[k]);
        for (Nat i = 0; i < count; ++i) {
            Nat v = in.Dk[k].nth(i);
            auto idx = C.index_of(v);
            if (!idx)
                throw PreconditionFailed("t36:rapid", "D_" + std::to_string(k) + "(" + std::to_string(i) + ")=" +
                                                          std::to_string(v) + " not in C_k");
            if (!in.witness.empty() && in.witness[k] && (*in.witness[k])(i) != *idx)
                throw PreconditionFailed("t36:rapid", "supplied witness for D_" + std::to_string(k) + "(" +
                                                          std::to_string(i) + ") is " +
                                                          std::to_string((*in.witness[k])(i)) + ", actual " +
                                                          std::to_string(*idx));
            if (*idx < 2 * (i + 1))
                throw PreconditionFailed("t36:rapid", "D_" + std::to_string(k) + "(" + std::to_string(i) + ")=C_k(" +
                                                          std::to_string(*idx) + "), need index >= " +
                                                          std::to_string(2 * (i + 1)));
        }
    }
    for (Nat i = 0; i < count; ++i) {
        Nat v = in.D.nth(i);
        if (!in.Dk[0].contains(v))
            throw PreconditionFailed("t36:D-sub", "D(" + std::to_string(i) + ")=" + std::to_string(v) + " not in D_0");
        for (Nat k = 1; k <= in.top(); ++k)
            if (i >= in.h(k) && !in.Dk[k].contains(v))
                throw PreconditionFailed("t36:D-sub", "D(" + std::to_string(i) + ") not in D_" + std::to_string(k) +
                                                          " past threshold " + std::to_string(in.h(k)));
    }
}

// produces d(0..depth-1)
inline FusionResult fuse(const FusionInput& in, Nat depth) {
    FusionResult out;
    out.n = fusion_n(in);
    require_fusion_input(in, out.n, depth + 1);
    const BlockMap& pi = in.t.pi;

    out.g.push_back(0);
    for (Nat k = 0; out.g.back() < depth; ++k) {
        Nat gk = out.g.back();
        // X_k: least X > g(k) with D[X] inside D_{k+1}
        Nat h = in.h(k + 1);
        const SetStream& Dn = in.Dat(k + 1);
        Nat x = 0;
        for (Nat i = h; i-- > 0;)
            if (!Dn.contains(in.D.nth(i))) { x = i + 1; break; }
        Nat X = std::max(gk + 1, x);
        out.g.push_back(mul(2, X));
    }
    std::vector<Block> blocks;
    for (std::size_t k = 0; k + 1 < out.g.size(); ++k) {
        Nat from = out.n[std::min<Nat>(k, in.top())];
        for (Nat l = out.g[k]; l < out.g[k + 1] && l < depth; ++l) {
            Nat v = in.D.nth(l);
            auto top = detail::last_block_with(in.d(k), pi, from, v);
            if (!top)
                throw PreconditionFailed("t14:a-in-image", "D(" + std::to_string(l) + ")=" + std::to_string(v) +
                                                               " has no fiber in d_" + std::to_string(k));
            Block src = in.d(k).block(*top);
            if (src.size() < l + 1)
                throw PreconditionFailed("t36:size", "d_" + std::to_string(k) + "(" + std::to_string(*top) +
                                                         ") smaller than " + std::to_string(l + 1));
            blocks.emplace_back(src.begin(), src.begin() + l + 1);
            out.source_k.push_back(k);
            out.source_m.push_back(*top);
        }
    }
    out.d = BlockSeq::table(blocks);

    auto& rep = out.report;
    rep.note("g", join_nats(out.g));
    rep.note("n_k", join_nats(out.n));
    rep.add("t36:P", block_seq_check(out.d, depth), "blocks " + std::to_string(depth));
    for (Nat j = 0; j <= in.top(); ++j) {
        Nat th = j < out.g.size() ? out.g[j] : out.g.back();
        out.threshold.push_back(th);
        auto le = le_at(out.d, in.d(j), th, depth);
        std::string tag = "t36:le(" + std::to_string(j) + ")";
        if (le) rep.add(tag, true, "d <=_" + std::to_string(th) + " d_" + std::to_string(j));
        else rep.add(tag, false, "at " + std::to_string(le.failed_at) + ": " + le.reason);
    }
    bool img = true;
    for (Nat l = 0; l < depth && img; ++l) {
        auto v = block_value(pi, out.d.block(l));
        if (!v || *v != in.D.nth(l)) {
            img = false;
            rep.add("t36:image", false, "pi''d(" + std::to_string(l) + ") != {D(" + std::to_string(l) + ")}");
        }
    }
    if (img) rep.add("t36:image", true, "pi''Set(d) = D on " + std::to_string(depth) + " points");
    return out;
}

}  // namespace bslab
