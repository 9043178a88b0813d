#pragma once
#include <memory>
#include <optional>
#include <vector>

#include "../forcing/stage.hpp"
#include "construction_gen.hpp"

namespace bslab {

// intervals(start, first, step, gap) with closed-form positions inside Set(b)
struct IntervalBase {
    Nat start = 0, first = 1, step = 1, gap = 0;

    static IntervalBase random(Rng& rng) {
        return {rng.below(6), rng.between(1, 3), rng.between(1, 2), rng.below(3)};
    }
    BlockSeq seq() const { return BlockSeq::intervals(start, first, step, gap); }
    Nat size(Nat j) const { return add(first, mul(j, step)); }
    Nat begin(Nat j) const { return add(add(start, mul(j, add(first, gap))), mul(step, j == 0 ? 0 : tri_s(j - 1))); }
    // elements of blocks < j
    Nat cum(Nat j) const { return add(mul(j, first), mul(step, j == 0 ? 0 : tri_s(j - 1))); }

    // largest j with key(j) <= x
    template <class Key>
    static Nat last_le(Key key, Nat x) {
        Nat lo = 0, hi = 1;
        while (key(hi) <= x) hi = mul(hi, 2);
        while (lo + 1 < hi) {
            Nat mid = lo + (hi - lo) / 2;
            if (key(mid) <= x) lo = mid; else hi = mid;
        }
        return lo;
    }
    Nat nth(Nat p) const {
        Nat j = last_le([this](Nat i) { return cum(i); }, p);
        return begin(j) + (p - cum(j));
    }
    Nat lower_bound(Nat x) const {
        if (x <= start) return 0;
        Nat j = last_le([this](Nat i) { return begin(i); }, x);
        if (x < begin(j) + size(j)) return cum(j) + (x - begin(j));
        return cum(j + 1);
    }
    Nat pos(Nat v) const {
        Nat p = lower_bound(v);
        if (nth(p) != v) throw PreconditionFailed("base-member", std::to_string(v) + " not in " + seq().describe());
        return p;
    }
    SetStream set() const;
    Fn nth_fn() const {
        IntervalBase b = *this;
        return Fn::derived("nth[" + seq().describe() + "]", [b](Nat p) { return b.nth(p); });
    }
    Fn pos_fn() const {
        IntervalBase b = *this;
        return Fn::derived("pos[" + seq().describe() + "]", [b](Nat v) { return b.pos(v); });
    }
};

namespace detail {
struct IntervalSetNode final : SetStream::Node {
    IntervalBase b;
    explicit IntervalSetNode(IntervalBase x) : b(x) {}
    Nat nth(Nat n) const override { return b.nth(n); }
    Nat lower_bound(Nat x) const override { return b.lower_bound(x); }
    std::string describe() const override { return "set(" + b.seq().describe() + ")"; }
};
}  // namespace detail

inline SetStream IntervalBase::set() const { return SetStream(std::make_shared<detail::IntervalSetNode>(*this)); }

struct TreeOptions {
    Nat labels = 2;
    Nat towers = 6;
    std::vector<Fn> schedule;  // c^0_{i+1}(m) inside c^0_i(schedule[i](m)); default 2m+1
    bool random_bases = true;
};

// label alpha+1 sits over label alpha by pi(b_{alpha+1}(p)) = Set(b_alpha)(p)
struct TreeContext {
    GenericContext ctx;
    std::vector<IntervalBase> bases;
    IntervalBase cond_base{0, 2, 2, 1};

    // c_q = intervals with blocks w(n+1), pi_{q,top}''c_q(n) = Set(c^top_i)(n)
    Condition condition(Label top, std::size_t tower, const std::vector<Label>& extra = {}) const {
        Condition q;
        q.c = cond_base.seq();
        q.gamma = top;
        Fn S = Fn::nth_of(ctx.tower_set(top, tower));
        std::vector<Label> X = extra;
        X.push_back(top);
        std::sort(X.begin(), X.end());
        X.erase(std::unique(X.begin(), X.end()), X.end());
        for (Label a : X) {
            if (a > top) throw PreconditionFailed("d14:i13", "label above gamma");
            if (a == top) {
                q.X.push_back({a, NormalTriple::of(q.c, S)});
                continue;
            }
            BlockMap down = ctx.map(top, a);
            Fn psi = Fn::derived("pi(" + ctx.name(top) + "," + ctx.name(a) + ")oS", [down, S](Nat n) { return down(S(n)); });
            q.X.push_back({a, NormalTriple::of(q.c, psi)});
        }
        return q;
    }
};

inline Fn linear_schedule() { return Fn::linear(2, 1); }
// 2, 11, 45, 46, ...: Set(c_{i+1})(n) sits at index >= 2^s(n+1) of Set(c_i) for n < 4
inline Fn sparse_schedule() {
    return Fn::derived("rapid(2^n)", [](Nat m) -> Nat {
        static const Nat head[] = {2, 11, 45};
        return m < 3 ? head[m] : 43 + m;
    });
}

inline TreeContext tree_context(Rng& rng, const TreeOptions& opt) {
    TreeContext tc;
    auto& ctx = tc.ctx;
    const Nat L = opt.labels;
    for (Nat a = 0; a < L; ++a) {
        ctx.labels.push_back(std::to_string(a));
        ctx.limit.push_back(false);
        ctx.cofinal.emplace_back();
        tc.bases.push_back(opt.random_bases ? IntervalBase::random(rng) : IntervalBase{});
    }
    if (opt.random_bases) tc.cond_base = {rng.below(4), 2 + rng.below(2), 2 + rng.below(2), rng.below(3)};
    ctx.towers.resize(L);
    ctx.maps.resize(L);
    for (Nat a = 0; a < L; ++a) ctx.maps[a].resize(a);
    // label 0
    {
        auto& tw = ctx.towers[0];
        tw.push_back(BlockSeq::select(tc.bases[0].seq(), std::nullopt, std::nullopt, true, Take::first));
        for (Nat i = 0; i + 1 < opt.towers; ++i) {
            Fn k = i < opt.schedule.size() ? opt.schedule[i] : linear_schedule();
            tw.push_back(BlockSeq::select(tw.back(), k, std::nullopt, true, Take::first));
        }
    }
    for (Nat a = 1; a < L; ++a) {
        const IntervalBase below = tc.bases[a - 1];
        for (Nat i = 0; i < opt.towers; ++i) {
            Fn S = Fn::nth_of(ctx.tower_set(a - 1, i));
            Fn at = Fn::compose(below.pos_fn(), S);
            ctx.towers[a].push_back(BlockSeq::select(tc.bases[a].seq(), at, std::nullopt, true, Take::first));
        }
        ctx.maps[a][a - 1] = NormalTriple::of(tc.bases[a].seq(), below.nth_fn());
        for (Nat b = 0; b + 1 < a; ++b) {
            BlockMap prev = ctx.map(a - 1, b);
            Fn nth = below.nth_fn();
            Fn psi = Fn::derived("pi(" + std::to_string(a - 1) + "," + std::to_string(b) + ")onth",
                                 [prev, nth](Nat p) { return prev(nth(p)); });
            ctx.maps[a][b] = NormalTriple::of(tc.bases[a].seq(), psi);
        }
    }
    return tc;
}

// one label, towers dense / 2m+1 / sparse / 2m+1: room for DecideSet, Rapidify(2^n), Kill at small depth
inline TreeContext stage_context() {
    Rng rng(0);
    TreeOptions opt;
    opt.labels = 1;
    opt.towers = 4;
    opt.random_bases = false;
    opt.schedule = {linear_schedule(), sparse_schedule(), linear_schedule()};
    TreeContext tc = tree_context(rng, opt);
    tc.cond_base = {0, 4, 4, 0};
    return tc;
}

// one label, r2 condition over triangular c
inline std::pair<GenericContext, Condition> single_label_context() {
    Rng rng(0);
    TreeOptions opt;
    opt.labels = 1;
    opt.towers = 3;
    opt.random_bases = false;
    TreeContext tc = tree_context(rng, opt);
    return {tc.ctx, standard_condition(BlockSeq::triangular())};
}

struct ForcingInstance {
    GenericContext ctx;
    Condition q;
    Task task = DecideSet{SetStream::omega()};
    std::string kind;
};

// random periodic set with density between 1/4 and 3/4
inline SetStream random_decide_set(Rng& rng) {
    Nat p = rng.between(2, 4);
    std::vector<Nat> gaps;
    Nat r = rng.between(1, p - 1);
    for (Nat i = 0; i + 1 < r; ++i) gaps.push_back(1);
    gaps.push_back(p - r + 1);
    return SetStream::periodic(rng.below(p), gaps);
}

inline Fn random_mild_f(Rng& rng) {
    switch (rng.below(3)) {
        case 0: return Fn::linear(1, 1);
        case 1: return Fn::linear(2, 1);
        default: return Fn::derived("n^2+1", [](Nat n) { return n * n + 1; });
    }
}

// (context, condition, task) drawn so that the task needs no scripted oracle
inline ForcingInstance random_forcing_instance(Rng& rng) {
    ForcingInstance inst;
    if (rng.coin(1, 3)) {
        inst.kind = "delta0";
        inst.q = empty_condition(IntervalBase::random(rng).seq());
        switch (rng.below(4)) {
            case 0: inst.task = DecideSet{random_decide_set(rng)}; break;
            case 1: inst.task = Thin{random_mild_f(rng), rng.coin()}; break;
            case 2: inst.task = Rapidify{random_mild_f(rng)}; break;
            default: inst.task = Rapidify{Fn::power(2)}; break;
        }
        return inst;
    }
    TreeOptions opt;
    opt.labels = rng.between(1, 2);
    opt.towers = 6;
    TreeContext tc = tree_context(rng, opt);
    Label top = opt.labels - 1;
    std::vector<Label> extra;
    for (Label a = 0; a < top; ++a)
        if (rng.coin()) extra.push_back(a);
    inst.ctx = tc.ctx;
    inst.q = tc.condition(top, rng.below(2), extra);
    inst.kind = "tree" + std::to_string(opt.labels);
    switch (rng.below(6)) {
        case 0: inst.task = DecideSet{random_decide_set(rng)}; break;
        case 1: inst.task = Thin{Fn::linear(rng.between(1, 2), 1), rng.coin()}; break;
        case 2: inst.task = Rapidify{Fn::linear(1, 1)}; break;
        case 3: inst.task = AddCoordinate{rng.below(opt.labels)}; break;
        case 4: inst.task = NormalizeMaps{rng.below(opt.labels)}; break;
        default: inst.task = Kill{rng.below(opt.labels), rng.coin() ? Phi::tail(rng.below(4)) : Phi::image(BlockMap::identity()), std::nullopt}; break;
    }
    return inst;
}

}  // namespace bslab
