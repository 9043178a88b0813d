#pragma once
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "../core/objects.hpp"
#include "../core/poset.hpp"
#include "../core/report.hpp"
#include "../triples/triples.hpp"

namespace bslab {

// labels are positions in GenericContext::labels; kTop stands for delta itself
using Label = std::size_t;
inline constexpr Label kTop = std::numeric_limits<Label>::max();

struct Decision {
    enum class Kind { in, out, undecided };
    Kind kind = Kind::undecided;
    std::size_t tower = 0;  // generator index
    Nat threshold = 0;      // tower elements from this index on agree with the verdict
    Nat window = 0;         // tower elements inspected
    bool scripted = false;

    bool in() const { return kind == Kind::in; }
    bool out() const { return kind == Kind::out; }
    std::string witness() const {
        if (kind == Kind::undecided) return "undecided";
        std::string s = std::string(in() ? "contains" : "misses") + " tower " + std::to_string(tower) + " past " +
                        std::to_string(threshold) + " of " + std::to_string(window);
        return scripted ? s + " (scripted)" : s;
    }
};

struct RapidWitness {
    SetStream Y = SetStream::omega();  // tail(Set(c^a_tower), tail) cap a
    std::size_t tower = 0;
    Nat tail = 0;
    std::vector<Nat> index;  // Y(n) = a(index[n]) for the checked n
    bool scripted = false;
};

// d22(1): lift a normal triple living over label `from` to label `to` > from
struct RkRequest {
    Label from = 0, to = 0;
    NormalTriple t1 = NormalTriple::standard(BlockSeq::triangular());
    BlockSeq d = BlockSeq::triangular();  // d <= t1.c, t1.pi''Set(d) in U_from
    SetStream a = SetStream::omega();     // pseudo-intersection in U_to
    Nat depth = 0;
};

struct RkAnswer {
    SetStream b = SetStream::omega();  // in U_to, inside a
    NormalTriple t = NormalTriple::standard(BlockSeq::triangular());  // pi''Set(t.c) = b
    BlockSeq d_star = BlockSeq::triangular();                         // d* <= d
};

// d22(8) and its uses through diagonalization: e absent asks for a new generator at mu
struct LimitRequest {
    Label mu = kTop;
    std::optional<BlockSeq> e;
    std::vector<BlockSeq> chain;     // d_j
    std::vector<Label> X;
    std::vector<NormalTriple> side;  // pi_alpha for alpha in X, on the chain
    Fn f = Fn::identity();
    Nat depth = 0;
};

struct LimitAnswer {
    BlockSeq e_star = BlockSeq::triangular();
    BlockSeq d_star = BlockSeq::triangular();
    NormalTriple t = NormalTriple::standard(BlockSeq::triangular());  // pi''Set(d*) = Set(e*)
    std::vector<Nat> m;  // e*(n) inside e(m_n), m_n >= f(n)
};

struct GenericContext {
    std::vector<std::string> labels;
    std::vector<bool> limit;                      // label has cofinality omega
    std::vector<std::vector<Label>> cofinal;      // declared cofinal sample below a limit label
    bool delta_limit = false;
    std::vector<Label> top_cofinal;               // declared cofinal sample below delta
    std::vector<std::vector<BlockSeq>> towers;    // towers[alpha][i] = c^alpha_i
    std::vector<std::vector<std::optional<NormalTriple>>> maps;  // maps[beta][alpha], alpha < beta

    std::function<Decision(Label, const SetStream&, Nat)> membership;
    std::function<std::optional<RapidWitness>(Label, const SetStream&, const Fn&, Nat)> rapid;
    std::function<RkAnswer(const RkRequest&)> rk;
    std::function<LimitAnswer(const LimitRequest&)> limit_oracle;

    Nat window_cap = 4096;  // tower elements scanned per membership decision
    Nat max_tail = 12;      // tails tried by the rapid search

    std::size_t delta() const { return labels.size(); }

    std::string name(Label a) const {
        if (a == kTop) return "TOP";
        return a < labels.size() ? labels[a] : "#" + std::to_string(a);
    }
    std::optional<Label> find(const std::string& n) const {
        for (Label a = 0; a < labels.size(); ++a)
            if (labels[a] == n) return a;
        return std::nullopt;
    }
    bool is_limit(Label a) const { return a == kTop ? delta_limit : a < limit.size() && limit[a]; }

    const NormalTriple& triple(Label beta, Label alpha) const {
        if (beta >= maps.size() || alpha >= beta || !maps[beta][alpha])
            throw PreconditionFailed("d22:i0", "no map pi_{" + name(beta) + "," + name(alpha) + "}");
        return *maps[beta][alpha];
    }
    BlockMap map(Label beta, Label alpha) const {
        if (beta == alpha) return BlockMap::identity();
        return triple(beta, alpha).pi;
    }
    SetStream tower_set(Label a, std::size_t i) const { return sset(towers.at(a).at(i)); }

    Decision decide(Label a, const SetStream& A, Nat bound) const;
    std::optional<RapidWitness> find_rapid(Label a, const SetStream& s, const Fn& F, Nat count) const;
};

namespace detail {

// A against tower sets of U_a on elements <= bound
inline Decision tower_decide(const GenericContext& ctx, Label a, const SetStream& A, Nat bound) {
    std::optional<Decision> out;
    for (std::size_t j = 0; j < ctx.towers.at(a).size(); ++j) {
        SetStream T = ctx.tower_set(a, j);
        Nat M = 0;
        std::optional<Nat> last_out, last_in;
        bool over = false;
        for (Nat i = 0;; ++i) {
            Nat x = T.nth(i);
            if (x > bound) break;
            if (i >= ctx.window_cap) { over = true; break; }
            ++M;
            if (A.contains(x)) last_in = i; else last_out = i;
        }
        if (over || M == 0) continue;
        Nat n_in = last_out ? *last_out + 1 : 0;
        Nat n_out = last_in ? *last_in + 1 : 0;
        if (2 * n_in <= M) return {Decision::Kind::in, j, n_in, M};
        if (2 * n_out <= M && !out) out = Decision{Decision::Kind::out, j, n_out, M};
    }
    return out ? *out : Decision{};
}

// tail(T_j, r) inside s with index >= F(n), n < count; least r first
inline std::optional<RapidWitness> tower_rapid(const GenericContext& ctx, Label a, const SetStream& s, const Fn& F,
                                               Nat count) {
    for (Nat r = 0; r <= ctx.max_tail; ++r) {
        for (std::size_t j = 0; j < ctx.towers.at(a).size(); ++j) {
            SetStream T = ctx.tower_set(a, j);
            std::vector<Nat> idx;
            bool ok = true;
            for (Nat n = 0; n < count && ok; ++n) {
                Nat x = T.nth(r + n);
                Nat p = s.lower_bound(x);
                if (s.nth(p) != x || p < F(n)) ok = false;
                else idx.push_back(p);
            }
            if (!ok) continue;
            RapidWitness w;
            w.Y = SetStream::intersection(SetStream::tail(T, r), s);
            w.tower = j;
            w.tail = r;
            w.index = std::move(idx);
            return w;
        }
    }
    return std::nullopt;
}

}  // namespace detail

inline Decision GenericContext::decide(Label a, const SetStream& A, Nat bound) const {
    if (membership) {
        Decision d = membership(a, A, bound);
        d.scripted = true;
        return d;
    }
    return detail::tower_decide(*this, a, A, bound);
}

inline std::optional<RapidWitness> GenericContext::find_rapid(Label a, const SetStream& s, const Fn& F,
                                                              Nat count) const {
    if (rapid) {
        auto w = rapid(a, s, F, count);
        if (w) w->scripted = true;
        return w;
    }
    return detail::tower_rapid(*this, a, s, F, count);
}

// d22 surrogate clauses at depth
inline Report check_context(const GenericContext& ctx, Nat depth) {
    Report rep("context");
    rep.note("labels", std::to_string(ctx.delta()));
    if (ctx.towers.size() != ctx.delta() || ctx.maps.size() != ctx.delta())
        throw PreconditionFailed("d22:shape", "towers and maps must have one row per label");
    for (Label a = 0; a < ctx.delta(); ++a) {
        const auto& tw = ctx.towers[a];
        std::string tag = "d22:i2(" + ctx.name(a) + ")";
        if (tw.empty()) { rep.add(tag, false, "no generators"); continue; }
        bool ok = true;
        for (std::size_t i = 0; i + 1 < tw.size() && ok; ++i) {
            if (auto v = block_seq_check(tw[i + 1], depth); !v) {
                rep.add(tag, v);
                ok = false;
            } else if (auto le = le_at(tw[i + 1], tw[i], 0, depth); !le) {
                rep.add(tag, false, "c_" + std::to_string(i + 1) + " <= c_" + std::to_string(i) + " fails at " +
                                        std::to_string(le.failed_at) + ": " + le.reason);
                ok = false;
            }
        }
        if (ok) rep.add(tag, true, std::to_string(tw.size()) + " generators decreasing");
    }
    for (Label b = 0; b < ctx.delta(); ++b)
        for (Label a = 0; a < b; ++a) {
            const auto& t = ctx.triple(b, a);
            std::string pair = ctx.name(b) + "," + ctx.name(a);
            rep.add("d22:i6(" + pair + ")", normal_check(t, depth), "b = " + t.c.describe());
            for (std::size_t i = 0; i < ctx.towers[b].size(); ++i) {
                const BlockSeq& c = ctx.towers[b][i];
                std::vector<Nat> vals;
                for (Nat m = 0; m < depth; ++m) vals.push_back(t.pi(c.min_of(m)));
                std::sort(vals.begin(), vals.end());
                vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
                Decision d = ctx.decide(a, SetStream::table(vals), vals.back());
                rep.add("d22:i5(" + pair + "," + std::to_string(i) + ")", d.in(), d.witness());
            }
            for (Label g = b + 1; g < ctx.delta(); ++g) {
                const BlockSeq& base = ctx.triple(g, b).c;
                std::string tag = "d22:i0(" + ctx.name(g) + "," + pair + ")";
                bool ok = true;
                for (Nat m = 0; m < depth && ok; ++m) {
                    Nat k = base.min_of(m);
                    if (ctx.map(g, a)(k) != ctx.map(b, a)(ctx.map(g, b)(k))) {
                        rep.add(tag, false, "k=" + std::to_string(k));
                        ok = false;
                    }
                }
                if (ok) rep.add(tag, true, "block minima of b_" + ctx.name(g) + " below " + std::to_string(depth));
            }
        }
    return rep;
}

}  // namespace bslab
