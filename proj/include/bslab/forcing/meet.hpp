#pragma once
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "../constructions/fuse.hpp"
#include "condition.hpp"

namespace bslab {

struct MeetResult {
    Condition q;
    std::string branch;  // I, IIa, IIb, IIc
    std::vector<Nat> m;  // IIa indices
    std::optional<FusionResult> fusion;
    Report report{"t91"};
};

namespace detail {

// pi_{q,alpha} from the first condition carrying alpha
inline std::vector<Coordinate> inherited(const std::vector<Condition>& chain, const std::vector<Label>& Y) {
    std::vector<Coordinate> out;
    for (Label a : Y)
        for (const auto& q : chain)
            if (auto p = q.find(a)) {
                out.push_back(*p);
                break;
            }
    return out;
}

// m_{n+1} = max(k_n, max c_{q_n}(m_n) + 2); the chain is constant past its end
inline BlockSeq meet_blocks(const std::vector<Condition>& chain, std::vector<Nat> k, std::shared_ptr<std::vector<Nat>> m) {
    std::vector<BlockSeq> cs;
    for (const auto& q : chain) cs.push_back(q.c);
    auto mu = std::make_shared<std::mutex>();
    return BlockSeq::from_fn("meet(IIa)", [cs, k, m, mu](Nat n) {
        std::lock_guard lock(*mu);
        auto at = [&](Nat j) -> const BlockSeq& { return cs[std::min<Nat>(j, cs.size() - 1)]; };
        while (m->size() <= n) {
            Nat j = m->size() - 1;
            Nat kn = j < k.size() ? k[j] : 0;
            m->push_back(std::max(kn, add(at(j).max_of((*m)[j]), 2)));
        }
        return at(n).block((*m)[n]);
    });
}

}  // namespace detail

inline MeetResult meet_chain(const std::vector<Condition>& chain, const GenericContext& ctx, Nat depth,
                             std::optional<Label> declared_sup = std::nullopt) {
    if (chain.empty()) throw PreconditionFailed("t91:chain", "empty chain");
    MeetResult r;
    // decreasing
    std::vector<Nat> k;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        Report o = leq_condition(chain[i + 1], chain[i], depth);
        r.report.append(o, "q_" + std::to_string(i + 1) + "<=q_" + std::to_string(i));
        if (!o.ok()) throw PreconditionFailed("t91:decreasing", "q_" + std::to_string(i + 1) + " is not below q_" +
                                                                   std::to_string(i));
        k.push_back(le_threshold(chain[i + 1].c, chain[i].c, depth));
    }
    std::vector<Label> Y;
    for (const auto& q : chain)
        for (Label a : q.labels())
            if (std::find(Y.begin(), Y.end(), a) == Y.end()) Y.push_back(a);
    std::sort(Y.begin(), Y.end());
    Label gamma = declared_sup ? *declared_sup : (Y.empty() ? 0 : Y.back());
    if (!Y.empty() && gamma < Y.back()) throw PreconditionFailed("t91:sup", "declared sup below max Y");
    const bool in_Y = std::binary_search(Y.begin(), Y.end(), gamma);
    r.report.note("Y", std::to_string(Y.size()) + " labels");
    r.report.note("gamma", Y.empty() && !declared_sup ? "0" : ctx.name(gamma));

    if (in_Y) {
        r.branch = "I";
        std::size_t n0 = 0;
        while (!chain[n0].has(gamma)) ++n0;
        FusionInput in;
        for (std::size_t i = n0; i < chain.size(); ++i) in.chain.push_back(chain[i].c);
        in.t = chain[n0].at(gamma).t;
        in.cert_depth = std::max<Nat>(depth, 8);
        auto n = fusion_n(in);
        Fn F = Fn::derived("2(i+1)", [](Nat i) { return 2 * (i + 1); });
        std::optional<SetStream> D;
        for (std::size_t j = 0; j < in.chain.size(); ++j) {
            SetStream C = detail::fusion_C(in, j, n[j]);
            auto w = ctx.find_rapid(gamma, C, F, depth + 1);
            if (!w) throw OracleRequired("d22(i4):rapid U_" + ctx.name(gamma));
            in.Dk.push_back(w->Y);
            in.D_threshold.push_back(0);
            D = D ? SetStream::intersection(*D, w->Y) : w->Y;
        }
        in.D = *D;
        FusionResult fr = fuse(in, depth);
        r.report.append(fr.report, "fuse");
        Condition q;
        q.c = fr.d;
        q.gamma = gamma;
        q.X = detail::inherited(chain, Y);
        r.q = q;
        r.fusion = std::move(fr);
    } else if (Y.empty() && ctx.delta() == 0) {
        r.branch = "IIa";
        auto m = std::make_shared<std::vector<Nat>>(std::vector<Nat>{0});
        r.q = empty_condition(detail::meet_blocks(chain, k, m));
        for (Nat i = 0; i < depth; ++i) r.q.c.block(i);
        r.m = *m;
        r.m.resize(std::min<std::size_t>(r.m.size(), depth));
        Verdict v = Verdict::pass();
        for (std::size_t i = 1; i < r.m.size(); ++i)
            if (r.m[i] <= r.m[i - 1]) v = Verdict::fail(i, "m-increasing", "");
        r.report.add("t91:m", v, "m = " + join_nats(std::vector<Nat>(r.m.begin(), r.m.begin() + std::min<std::size_t>(5, r.m.size()))));
    } else {
        bool top = gamma == kTop || gamma >= ctx.delta();
        r.branch = top ? "IIc" : "IIb";
        if (!ctx.is_limit(top ? kTop : gamma))
            throw PreconditionFailed("t91:cf", "sup of Y not attained and not a declared limit");
        if (!ctx.limit_oracle) throw OracleRequired("d22(8)");
        LimitRequest req;
        req.mu = top ? kTop : gamma;
        for (const auto& q : chain) req.chain.push_back(q.c);
        req.X = Y;
        for (const auto& co : detail::inherited(chain, Y)) req.side.push_back(co.t);
        req.depth = depth;
        LimitAnswer ans = ctx.limit_oracle(req);
        Condition q;
        q.c = ans.d_star;
        q.X = detail::inherited(chain, Y);
        if (top) q.gamma = kTop;
        else {
            q.gamma = gamma;
            q = q.with(Coordinate{gamma, ans.t});
        }
        r.q = q;
    }
    for (std::size_t i = 0; i < chain.size(); ++i)
        r.report.append(leq_condition(r.q, chain[i], depth), "q<=q_" + std::to_string(i));
    r.report.append(check_condition(r.q, ctx, depth), "q");
    bool constant = true;
    for (const auto& q : chain)
        if (q.labels() != chain[0].labels()) constant = false;
    if (constant) r.report.add("t91:moreover", r.q.labels() == chain[0].labels(), "X_q = X_q0");
    return r;
}

}  // namespace bslab
