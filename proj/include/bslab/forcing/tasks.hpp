#pragma once
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "../constructions/fuse.hpp"
#include "condition.hpp"

namespace bslab {

// monotone set map, applied to depth-truncated streams
struct Phi {
    std::string name;
    std::function<SetStream(const SetStream&)> apply;

    static Phi image(BlockMap map) {
        return {"image(" + map.describe() + ")", [map](const SetStream& A) { return SetStream::image(A, map); }};
    }
    static Phi tail(Nat k) {
        return {"tail(" + std::to_string(k) + ")", [k](const SetStream& A) { return SetStream::tail(A, k); }};
    }
    static Phi constant(SetStream s) {
        return {"const(" + s.describe() + ")", [s](const SetStream&) { return s; }};
    }
};

enum class Half { first, second };

struct KillProbe {
    std::string name;
    bool inside_first = false;  // phi(A) inside Set(d_1) on the window
};
using Chooser = std::function<Half(const std::vector<KillProbe>&)>;

struct DecideSet { SetStream X; };
struct Thin { Fn f; bool moreover = false; };
struct Rapidify { Fn f; };
struct RestrictImage { Label alpha; SetStream a; };
struct NormalizeMaps { Label beta; };
struct AddCoordinate { Label beta; };
struct Kill { Label beta; Phi phi; std::optional<Chooser> chooser; };
struct RKPullback { NormalTriple t1; BlockSeq d; Label alpha; };
struct SealLimit { std::vector<Label> X; std::vector<BlockSeq> chain; std::vector<NormalTriple> side; };

using Task = std::variant<DecideSet, Thin, Rapidify, RestrictImage, NormalizeMaps, AddCoordinate, Kill, RKPullback,
                          SealLimit>;

inline std::string task_name(const Task& t) {
    static const char* names[] = {"DecideSet", "Thin", "Rapidify", "RestrictImage", "NormalizeMaps",
                                  "AddCoordinate", "Kill", "RKPullback", "SealLimit"};
    return names[t.index()];
}

inline std::string task_tag(const Task& t) {
    static const char* tags[] = {"t3", "t5", "t11", "t10", "t0", "t2", "t4", "t12", "t9"};
    return tags[t.index()];
}

struct ExtendResult {
    Condition q;
    std::string task;
    std::string branch;
    Report report;
    std::vector<Nat> m;                    // Thin: c_q'(n) inside c_q(m[n])
    std::optional<BlockSeq> d_star;        // RKPullback, SealLimit
    std::optional<NormalTriple> t_star;
    std::optional<std::pair<BlockSeq, BlockSeq>> halves;  // Kill
    Half chosen = Half::first;
};

namespace detail {

inline std::string lbl(const GenericContext& ctx, Label a) { return ctx.name(a); }

inline std::vector<NormalTriple> side_maps(const Condition& q) {
    std::vector<NormalTriple> out;
    for (const auto& x : q.X) out.push_back(x.t);
    return out;
}

inline Nat count_in(const Block& b, const SetStream& X) {
    Nat k = 0;
    for (Nat x : b)
        if (X.contains(x)) ++k;
    return k;
}

// |c(n) cap X| >= need (keep) or |c(n) minus X| >= need, reading c(n) in growing heads
inline bool enough_in(const BlockSeq& c, Nat n, const SetStream& X, bool keep, Nat need) {
    if (need == 0) return true;
    for (Nat count = std::max<Nat>(4, 2 * need);; count = mul(count, 4)) {
        Block h = c.head(n, count);
        Nat k = 0;
        for (Nat x : h)
            if (X.contains(x) == keep && ++k >= need) return true;
        if (h.size() < count) return false;
    }
}

inline std::optional<Nat> count_limit_check(Nat n0, Nat depth, const std::string& what) {
    if (n0 > depth / 2) throw PreconditionFailed("d14:i15", what + " only from block " + std::to_string(n0));
    return n0;
}

// every element of c(n), n < depth, in X (keep) or outside X
inline Verdict exact_subset(const BlockSeq& c, const SetStream& X, bool keep, Nat depth) {
    for (Nat n = 0; n < depth; ++n)
        for (Nat x : c.block(n))
            if (X.contains(x) != keep)
                return Verdict::fail(n, "exact", std::to_string(x) + (keep ? " outside X" : " inside X"));
    return Verdict::pass();
}

inline Nat first_image_bound(const BlockMap& pi, const BlockSeq& c, Nat depth) { return pi(c.min_of(depth - 1)); }

inline std::vector<Nat> union_image(const BlockMap& pi, const BlockSeq& c, const std::vector<Nat>& blocks) {
    std::set<Nat> v;
    for (Nat n : blocks)
        for (Nat k : c.block(n)) v.insert(pi(k));
    return {v.begin(), v.end()};
}

inline Decision decide_values(const GenericContext& ctx, Label a, const std::vector<Nat>& vals, Nat bound) {
    if (vals.empty()) return {Decision::Kind::out, 0, 0, 0};
    return ctx.decide(a, SetStream::table(vals), std::min(bound, vals.back()));
}

// last block m < depth where pi_{g,b} o pi_{q,g} decreases, +1
inline Nat monotone_threshold(const BlockMap& outer, const BlockMap& inner, const BlockSeq& c, Nat depth) {
    Nat th = 0;
    Nat prev = 0;
    for (Nat m = 0; m < depth; ++m) {
        Block b = c.block(m);
        Nat lo = outer(inner(b.front()));
        bool ok = m == 0 || lo >= prev;
        Nat hi = lo;
        for (Nat k : b) {
            Nat v = outer(inner(k));
            if (v < hi) ok = false;
            hi = v;
        }
        if (!ok) th = m + 1;
        prev = hi;
    }
    return th;
}

}  // namespace detail

// ---------------------------------------------------------------- Thin (t5)

inline ExtendResult thin(const Condition& q, const Fn& f, bool moreover, const GenericContext& ctx, Nat depth) {
    ExtendResult r;
    r.task = "Thin";
    r.report = Report("t5");
    Take take = moreover ? Take::first : Take::all;
    if (q.gamma == kTop && ctx.delta() == 0) {
        r.branch = "Ia";
        r.q = q.with_c(BlockSeq::select(q.c, f, std::nullopt, true, take));
        for (Nat n = 0; n < depth; ++n) r.m.push_back(f(n));
    } else if (q.gamma == kTop) {
        r.branch = "Ib";
        if (!ctx.limit_oracle) throw OracleRequired("d22(8)");
        LimitRequest req;
        req.mu = kTop;
        req.e = q.c;
        req.chain = {q.c};
        req.X = q.labels();
        req.side = detail::side_maps(q);
        req.f = f;
        req.depth = depth;
        LimitAnswer ans = ctx.limit_oracle(req);
        if (ans.m.size() < depth) throw PreconditionFailed("t30:i84", "limit oracle returned too few witnesses");
        BlockSeq e = moreover ? BlockSeq::select(ans.e_star, std::nullopt, std::nullopt, true, Take::first) : ans.e_star;
        r.q = q.with_c(e);
        r.m.assign(ans.m.begin(), ans.m.begin() + depth);
    } else {
        r.branch = "II";
        const auto& co = q.at(q.gamma);
        Nat n0 = le_threshold(q.c, co.t.c, depth);
        detail::count_limit_check(n0, depth, "c_q <= b_{q,gamma}");
        SetStream a = SetStream::block_image(q.c, n0, co.t.pi);
        auto w = ctx.find_rapid(q.gamma, a, f, depth);
        if (!w) throw OracleRequired("d22(i4):rapid U_" + ctx.name(q.gamma));
        BlockSeq c = q.c;
        BlockMap pi = co.t.pi;
        SetStream Y = w->Y;
        Fn idx = Fn::derived("fibertop", [c, pi, n0, Y](Nat n) {
            Nat v = Y.nth(n);
            auto m = detail::last_block_with(c, pi, n0, v);
            if (!m) throw PreconditionFailed("t14:a-in-image", std::to_string(v) + " has no fiber");
            return *m;
        });
        r.q = q.with_c(BlockSeq::select(c, idx, std::nullopt, true, take));
        for (Nat n = 0; n < depth; ++n) r.m.push_back(idx(n));
        r.report.note("Y", "tower " + std::to_string(w->tower) + " tail " + std::to_string(w->tail) +
                               (w->scripted ? " (scripted)" : ""));
        r.report.note("n0", std::to_string(n0));
    }
    // witnesses
    Verdict v = Verdict::pass();
    for (Nat n = 0; n < depth && v; ++n) {
        if (r.m[n] < f(n)) { v = Verdict::fail(n, "m>=f(n)", "m=" + std::to_string(r.m[n])); break; }
        Block got = r.q.c.block(n);
        if (moreover && got.size() != n + 1) { v = Verdict::fail(n, "size", "|c'(n)| != n+1"); break; }
        for (Nat x : got)
            if (q.c.locate(x) != r.m[n]) {
                v = Verdict::fail(n, "inside", std::to_string(x) + " not in c(" + std::to_string(r.m[n]) + ")");
                break;
            }
        if (!moreover && v && (got.front() != q.c.min_of(r.m[n]) || got.back() != q.c.max_of(r.m[n])))
            v = Verdict::fail(n, "equal", "c'(n) != c(m)");
    }
    r.report.add("t5:m>=f(n)", v, "m = " + join_nats(std::vector<Nat>(r.m.begin(), r.m.begin() + std::min<Nat>(6, depth))) +
                                      (depth > 6 ? ",..." : ""));
    return r;
}

// ---------------------------------------------------------------- Rapidify (t11)

inline ExtendResult rapidify(const Condition& q, const Fn& f, const GenericContext& ctx, Nat depth) {
    Fn g = Fn::derived(f.describe() + "os(n+1)", [f](Nat n) { return f(tri_s(n + 1)); });
    ExtendResult r = thin(q, g, true, ctx, depth);
    r.task = "Rapidify";
    Report rep("t11");
    rep.append(r.report);
    SetStream s = sset(r.q.c);
    Verdict v = Verdict::pass();
    for (Nat n = 0; n < depth; ++n)
        if (s.nth(n) < f(n)) { v = Verdict::fail(n, "rapid", "Set(c')(n)=" + std::to_string(s.nth(n))); break; }
    rep.add("t11:Set(c')(n)>=f(n)", v, "n < " + std::to_string(depth));
    r.report = rep;
    return r;
}

// ---------------------------------------------------------------- DecideSet (t3)

inline ExtendResult decide_set(const Condition& q, const SetStream& X, const GenericContext& ctx, Nat depth) {
    ExtendResult r;
    r.task = "DecideSet";
    r.report = Report("t3");
    bool keep = true;
    if (q.gamma == kTop && ctx.delta() == 0) {
        r.branch = "Ia";
        BlockSeq c = q.c;
        auto inside = [c, X](Nat n) { return detail::count_in(c.block(n), X); };
        SetStream X0 = SetStream::where("X_0", [=](Nat n) { return 2 * inside(n) >= n + 1; });
        SetStream X1 = SetStream::where("X_1", [=](Nat n) { return 2 * (c.block(n).size() - inside(n)) >= n + 1; });
        Nat scan = 32 * depth + 64, k0 = 0, k1 = 0;
        for (Nat n = 0; n < scan; ++n) {
            Nat in = inside(n), sz = c.block(n).size();
            if (2 * in >= n + 1) ++k0;
            if (2 * (sz - in) >= n + 1) ++k1;
        }
        r.report.note("|X_0|,|X_1| below " + std::to_string(scan), std::to_string(k0) + "," + std::to_string(k1));
        if (k0 >= 4 * depth) keep = true;
        else if (k1 >= 4 * depth) keep = false;
        else throw DepthExceeded("neither X_0 nor X_1 reaches " + std::to_string(4 * depth) + " points");
        SetStream Xi = keep ? X0 : X1;
        r.branch += keep ? ":X_0" : ":X_1";
        Fn at = Fn::compose(Fn::nth_of(Xi), Fn::linear(2, 1));
        r.q = q.with_c(BlockSeq::select(c, at, X, keep, Take::first));
    } else {
        bool top = q.gamma == kTop;
        r.branch = top ? "Ib" : "II";
        Fn f = top ? Fn::derived("2^(n+1)", [](Nat n) { return pow_nat(2, n + 1); }) : Fn::linear(2, 1);
        ExtendResult th = thin(q, f, false, ctx, depth);
        r.report.append(th.report, "thin");
        BlockSeq c1 = th.q.c;
        auto need = [top](Nat n) { return top ? pow_nat(2, n) : n + 1; };
        auto member = [=](bool k, Nat n) { return detail::enough_in(c1, n, X, k, need(n)); };
        const Nat W = top ? depth : 16 * depth;
        std::vector<Nat> B0, B1;
        for (Nat n = 0; n < W; ++n) {
            if (member(true, n)) B0.push_back(n);
            if (member(false, n)) B1.push_back(n);
        }
        r.report.note("|X_0|,|X_1| below " + std::to_string(W), std::to_string(B0.size()) + "," + std::to_string(B1.size()));
        std::vector<Label> probe;
        if (top) probe = ctx.top_cofinal.empty() ? th.q.labels() : ctx.top_cofinal;
        else probe = {q.gamma};
        Nat votes0 = 0, votes1 = 0;
        for (Label a : probe) {
            const auto& co = th.q.at(a);
            Nat bound = detail::first_image_bound(co.t.pi, c1, W);
            Decision d0 = detail::decide_values(ctx, a, detail::union_image(co.t.pi, c1, B0), bound);
            std::optional<bool> pick;
            if (d0.in()) pick = true;
            else {
                Decision d1 = detail::decide_values(ctx, a, detail::union_image(co.t.pi, c1, B1), bound);
                if (d1.in()) pick = false;
                else if (d0.out()) pick = false;
                else if (d1.out()) pick = true;
                r.report.note("A_1(" + ctx.name(a) + ")", d1.witness());
            }
            r.report.note("A_0(" + ctx.name(a) + ")", d0.witness());
            if (!pick) throw OracleRequired("d22(i4):membership U_" + ctx.name(a));
            (*pick ? votes0 : votes1)++;
        }
        keep = votes0 >= votes1;
        // a branch thinner than the window cannot carry the next depth blocks
        const Nat enough = top ? depth : 4 * depth;
        if ((keep ? B0 : B1).size() < enough) {
            if ((keep ? B1 : B0).size() < enough)
                throw DepthExceeded("neither X_0 nor X_1 reaches " + std::to_string(enough) + " points");
            keep = !keep;
            r.report.note("branch", "switched: decided side too thin below the window");
        }
        r.branch += keep ? ":X_0" : ":X_1";
        SetStream Xi = SetStream::where(keep ? "X_0" : "X_1", [=](Nat n) { return member(keep, n); });
        r.q = th.q.with_c(BlockSeq::select(c1, Fn::nth_of(Xi), X, keep, Take::first));
    }
    r.report.add("t3:exact", detail::exact_subset(r.q.c, X, keep, depth),
                 std::string("Set(c') inside ") + (keep ? "X" : "complement of X") + " on " + std::to_string(depth) +
                     " blocks");
    return r;
}

// ---------------------------------------------------------------- RestrictImage (t10)

inline ExtendResult restrict_image(const Condition& q, Label alpha, const SetStream& a, const GenericContext& ctx,
                                   Nat depth) {
    const auto& co = q.at(alpha);
    Decision d = ctx.decide(alpha, a, detail::first_image_bound(co.t.pi, q.c, depth));
    if (!d.in()) {
        if (d.out()) throw PreconditionFailed("t10:a-in-U", "a is not in U_" + ctx.name(alpha) + ": " + d.witness());
        throw OracleRequired("d22(i4):membership U_" + ctx.name(alpha));
    }
    SetStream V = SetStream::preimage(a, co.t.pi, q.c);
    ExtendResult r = decide_set(q, V, ctx, depth);
    if (r.branch.find("X_1") != std::string::npos)
        throw PreconditionFailed("t10:contradiction", "Set(c_q') landed outside the preimage of a");
    r.task = "RestrictImage";
    Report rep("t10");
    rep.note("a", d.witness());
    rep.append(r.report, "decide");
    Verdict v = Verdict::pass();
    for (Nat n = 0; n < depth && v; ++n)
        for (Nat k : r.q.c.block(n))
            if (!a.contains(co.t.pi(k))) { v = Verdict::fail(n, "image", "pi(" + std::to_string(k) + ") outside a"); break; }
    rep.add("t10:image-in-a", v, "blocks < " + std::to_string(depth));
    r.report = rep;
    return r;
}

// ---------------------------------------------------------------- NormalizeMaps (t0)

struct NormalTriplet {
    Label zeta, xi, mu;
};

inline std::vector<NormalTriplet> normalize_triplets(const Condition& q, Label beta) {
    std::vector<Label> Y = q.labels();
    if (std::find(Y.begin(), Y.end(), beta) == Y.end()) Y.push_back(beta);
    std::sort(Y.begin(), Y.end());
    std::vector<NormalTriplet> out;
    for (Label mu : q.labels())
        for (Label xi : Y)
            for (Label zeta : Y)
                if (zeta <= xi && xi <= mu) out.push_back({zeta, xi, mu});
    return out;
}

// last bad block +1 for one triplet
inline Nat triplet_threshold(const Condition& q, const NormalTriplet& t, const GenericContext& ctx, Nat depth) {
    const auto& co = q.at(t.mu);
    BlockMap mx = ctx.map(t.mu, t.xi), mz = ctx.map(t.mu, t.zeta), xz = ctx.map(t.xi, t.zeta);
    Nat th = detail::monotone_threshold(mx, co.t.pi, q.c, depth);
    for (Nat m = depth; m-- > th;) {
        bool bad = false;
        for (Nat k : q.c.block(m)) {
            Nat ks = co.t.pi(k);
            if (mz(ks) != xz(mx(ks))) { bad = true; break; }
        }
        if (bad) { th = m + 1; break; }
    }
    return th;
}

inline ExtendResult normalize_maps(const Condition& q, Label beta, const GenericContext& ctx, Nat depth) {
    if (beta >= ctx.delta()) throw PreconditionFailed("t0:beta", "beta outside delta");
    ExtendResult r;
    r.task = "NormalizeMaps";
    r.report = Report("t0");
    auto triplets = normalize_triplets(q, beta);
    Condition cur = q;
    bool restricted = false;
    for (const auto& t : triplets) {
        Nat th = triplet_threshold(cur, t, ctx, depth);
        if (th == 0) continue;
        // a = tail of the image at mu past the bad prefix; in U_mu because the image is
        const auto& co = cur.at(t.mu);
        Nat n0 = le_threshold(cur.c, co.t.c, depth);
        Nat cut = co.t.pi(cur.c.min_of(std::max(th, n0)));
        SetStream img = SetStream::block_image(cur.c, std::max(th, n0), co.t.pi);
        SetStream a = SetStream::tail(img, img.lower_bound(cut));
        ExtendResult step = restrict_image(cur, t.mu, a, ctx, depth);
        r.report.append(step.report, "restrict(" + ctx.name(t.mu) + ")");
        cur = step.q;
        restricted = true;
    }
    r.branch = restricted ? "restricted" : "already";
    r.q = cur;
    for (const auto& t : triplets) {
        Nat th = triplet_threshold(r.q, t, ctx, depth);
        std::string tag = "t0:N(" + ctx.name(t.zeta) + "," + ctx.name(t.xi) + "," + ctx.name(t.mu) + ")";
        if (th > depth / 2) r.report.add(tag, false, "bad up to block " + std::to_string(th));
        else r.report.add(tag, true, "N at block " + std::to_string(th));
    }
    return r;
}

// ---------------------------------------------------------------- AddCoordinate (t2)

inline ExtendResult add_coordinate(const Condition& q, Label beta, const GenericContext& ctx, Nat depth) {
    if (beta >= ctx.delta()) throw PreconditionFailed("t2:beta", "beta outside delta");
    ExtendResult r;
    r.task = "AddCoordinate";
    r.report = Report("t2");
    if (q.has(beta)) {
        r.branch = "present";
        r.q = q;
        r.report.add("t2:beta-in-X", true, "already present");
        return r;
    }
    ExtendResult norm = normalize_maps(q, beta, ctx, depth);
    r.report.append(norm.report, "normalize");
    const Condition& qs = norm.q;
    auto compose_at = [&](Label via) {
        const auto& co = qs.at(via);
        BlockMap down = ctx.map(via, beta);
        Nat m1 = std::max(le_threshold(qs.c, co.t.c, depth), detail::monotone_threshold(down, co.t.pi, qs.c, depth));
        detail::count_limit_check(m1, depth, "composition monotone");
        Fn psi = Fn::block_value(BlockMap::compose(down, co.t.pi), qs.c, m1);
        r.report.note("m", std::to_string(m1));
        return qs.with(Coordinate{beta, NormalTriple::of(qs.c, psi)});
    };
    if (qs.gamma == kTop) {
        r.branch = "Ib";
        Label gs = kTop;
        for (Label a : qs.labels())
            if (a >= beta) { gs = a; break; }
        if (gs == kTop) throw PreconditionFailed("t2:sup", "no label of X_q above beta");
        r.report.note("gamma*", ctx.name(gs));
        r.q = compose_at(gs);
    } else if (beta < qs.gamma) {
        r.branch = "II:below";
        r.q = compose_at(qs.gamma);
    } else {
        r.branch = "II:above";
        if (!ctx.rk) throw OracleRequired("d22(1)");
        const auto& co = qs.at(qs.gamma);
        // pseudo-intersection: a tail of the first generator of U_beta past every commuting failure
        SetStream T = ctx.tower_set(beta, 0);
        Nat cut = 0;
        for (Label a : qs.labels()) {
            BlockMap ba = ctx.map(beta, a), bg = ctx.map(beta, qs.gamma), ga = ctx.map(qs.gamma, a);
            for (Nat i = 0; i < 4 * depth; ++i) {
                Nat k = T.nth(i);
                if (ba(k) != ga(bg(k))) cut = std::max(cut, i + 1);
            }
        }
        r.report.note("a", "tail " + std::to_string(cut) + " of " + T.describe());
        RkRequest req;
        req.from = qs.gamma;
        req.to = beta;
        req.t1 = co.t;
        req.d = qs.c;
        req.a = SetStream::tail(T, cut);
        req.depth = depth;
        RkAnswer ans = ctx.rk(req);
        // d22(1) clauses on the window
        auto le0 = le_at(ans.d_star, qs.c, 0, depth);
        r.report.add("d22:i1(d*<=_0 d)", le0.ok, le0.ok ? "" : le0.reason);
        r.report.add("d22:i1(normal)", normal_check(ans.t, depth), "");
        Verdict img = Verdict::pass(), comm = Verdict::pass(), sub = Verdict::pass();
        BlockMap up = ctx.map(beta, qs.gamma);
        for (Nat n = 0; n < depth; ++n) {
            Nat v = ans.t.pi(ans.d_star.min_of(n));
            if (img && v != ans.b.nth(n)) img = Verdict::fail(n, "image", "pi''Set(d*) != b");
            if (sub && n >= depth / 2 && !req.a.contains(v)) sub = Verdict::fail(n, "b-in-a", std::to_string(v));
            for (Nat k : ans.d_star.block(n))
                if (comm && co.t.pi(k) != up(ans.t.pi(k)))
                    comm = Verdict::fail(n, "commute", "k=" + std::to_string(k));
        }
        r.report.add("d22:i1(image)", img, "pi''Set(d*) = b");
        r.report.add("d22:i1(commute)", comm, "pi_1 = pi_{beta,alpha} o pi on Set(d*)");
        r.report.add("d22:i1(b<=*a)", sub, "upper half");
        Condition out = qs.with_c(ans.d_star).with(Coordinate{beta, ans.t});
        out.gamma = beta;
        r.q = out;
    }
    r.report.add("t2:beta-in-X", r.q.has(beta), ctx.name(beta));
    // commuting through the composed map
    if (r.branch != "II:above") {
        Label g = r.q.gamma == kTop ? beta : r.q.gamma;
        Verdict v = Verdict::pass();
        if (g != beta) {
            Nat m1 = depth / 2;
            for (Nat n = m1; n < depth && v; ++n)
                for (Nat k : r.q.c.block(n))
                    for (Label a : r.q.labels()) {
                        if (a > g) continue;
                        if (r.q.at(a).t.pi(k) != ctx.map(g, a)(r.q.at(g).t.pi(k))) {
                            v = Verdict::fail(n, "commute", "alpha=" + ctx.name(a) + " k=" + std::to_string(k));
                            break;
                        }
                    }
        }
        r.report.add("t2:commute", v, "blocks [" + std::to_string(depth / 2) + "," + std::to_string(depth) + ")");
    }
    return r;
}

// ---------------------------------------------------------------- Kill (t4)

inline ExtendResult kill(const Condition& q, Label beta, const Phi& phi, const std::optional<Chooser>& chooser,
                         const GenericContext& ctx, Nat depth) {
    ExtendResult r;
    r.task = "Kill";
    r.report = Report("t4");
    ExtendResult add = add_coordinate(q, beta, ctx, depth);
    r.report.append(add.report, "add");
    ExtendResult th = thin(add.q, Fn::linear(2, 1), false, ctx, depth);
    r.report.append(th.report, "thin");
    const Condition& q2 = th.q;
    Verdict big = Verdict::pass();
    for (Nat n = 0; n < depth; ++n)
        if (q2.c.block(n).size() < 2 * n + 2) { big = Verdict::fail(n, "size", "|c''(n)| < 2n+2"); break; }
    r.report.add("t4:|c''(n)|>=2n+2", big, "");
    BlockSeq d1 = BlockSeq::select(q2.c, std::nullopt, std::nullopt, true, Take::first);
    BlockSeq d2 = BlockSeq::select(q2.c, std::nullopt, std::nullopt, true, Take::second);
    r.halves = std::make_pair(d1, d2);
    {
        Verdict v = Verdict::pass();
        std::vector<Nat> all;
        for (Nat n = 0; n < depth; ++n) {
            Block a = d1.block(n), b = d2.block(n);
            if (a.size() != n + 1 || b.size() != n + 1) { v = Verdict::fail(n, "size", "half not n+1"); break; }
            all.insert(all.end(), a.begin(), a.end());
            all.insert(all.end(), b.begin(), b.end());
        }
        std::sort(all.begin(), all.end());
        if (v && std::adjacent_find(all.begin(), all.end()) != all.end())
            v = Verdict::fail(0, "disjoint", "shared point");
        r.report.add("t4:disjoint", v, "Set(d_1) and Set(d_2) on " + std::to_string(depth) + " blocks");
    }
    // probes: generators of U_beta and the image at beta
    std::vector<std::pair<std::string, SetStream>> family;
    for (std::size_t j = 0; j < ctx.towers.at(beta).size(); ++j)
        family.emplace_back("tower " + std::to_string(j), ctx.tower_set(beta, j));
    {
        const auto& co = q2.at(beta);
        Nat n0 = le_threshold(q2.c, co.t.c, depth);
        family.emplace_back("image", SetStream::block_image(q2.c, n0, co.t.pi));
    }
    auto inside = [&](const SetStream& P, const BlockSeq& d) {
        for (Nat i = 0; i < depth; ++i)
            if (!d.locate(P.nth(i))) return false;
        return true;
    };
    std::vector<KillProbe> probes;
    for (const auto& [name, A] : family) {
        SetStream P = phi.apply(A);
        P.nth(0);  // nonempty, else DepthExceeded
        probes.push_back({name, inside(P, d1)});
    }
    Half h;
    if (chooser) h = (*chooser)(probes);
    else {
        h = Half::first;
        for (const auto& p : probes)
            if (p.inside_first) h = Half::second;
    }
    r.chosen = h;
    r.branch = h == Half::first ? "d_1" : "d_2";
    BlockSeq chosen = h == Half::first ? d1 : d2;
    r.q = q2.with_c(chosen);
    bool escapes = true;
    std::string wit;
    for (const auto& [name, A] : family) {
        if (inside(phi.apply(A), chosen)) { escapes = false; wit = name; }
    }
    r.report.add("t4:phi(A)-not-inside", escapes, escapes ? std::to_string(family.size()) + " probes, phi=" + phi.name
                                                           : "probe " + wit);
    return r;
}

// ---------------------------------------------------------------- RKPullback (t12)

inline ExtendResult rk_pullback(const Condition& q, const NormalTriple& t1, const BlockSeq& d, Label alpha,
                                const GenericContext& ctx, Nat depth) {
    ExtendResult r;
    r.task = "RKPullback";
    r.report = Report("t12");
    if (alpha >= ctx.delta()) throw PreconditionFailed("t12:alpha", "alpha outside delta");
    // hypotheses: normal, d <= b1, image in U_alpha
    r.report.add("t12:hyp-normal", normal_check(t1, depth), "");
    Nat l = le_threshold(d, t1.c, depth);
    detail::count_limit_check(l, depth, "d <= b_1");
    ExtendResult add = add_coordinate(q, alpha, ctx, depth);
    r.report.append(add.report, "add");
    const Condition& q0 = add.q;
    if (q0.gamma == kTop) {
        r.branch = "Ib";
        if (!ctx.rk) throw OracleRequired("d22(1)");
        if (!ctx.limit_oracle) throw OracleRequired("d22(8)");
        LimitRequest req;
        req.mu = kTop;
        req.e = q0.c;
        req.chain = {d};
        req.X = {alpha};
        req.side = {t1};
        req.depth = depth;
        LimitAnswer ans = ctx.limit_oracle(req);
        r.q = q0.with_c(ans.e_star);
        r.d_star = ans.d_star;
        r.t_star = ans.t;
    } else {
        const Label g = q0.gamma;
        const auto& cg = q0.at(g);
        Nat n0 = le_threshold(q0.c, cg.t.c, depth);
        if (alpha != g) {
            const auto& ca = q0.at(alpha);
            BlockMap ga = ctx.map(g, alpha);
            for (Nat m = depth; m-- > n0;) {
                bool bad = false;
                for (Nat k : q0.c.block(m))
                    if (ca.t.pi(k) != ga(cg.t.pi(k))) { bad = true; break; }
                if (bad) { n0 = m + 1; break; }
            }
        }
        detail::count_limit_check(n0, depth, "c_q0 <= b_gamma with commuting");
        SetStream img = SetStream::block_image(q0.c, n0, cg.t.pi);
        SetStream b = SetStream::omega();
        NormalTriple t2 = t1;
        if (alpha == g) {
            r.branch = "II:alpha=gamma";
            SetStream im1 = SetStream::block_image(d, l, t1.pi);
            b = SetStream::intersection(im1, img);
            Decision db = detail::decide_values(ctx, g, b.prefix(depth), b.nth(depth - 1));
            if (!db.in()) throw OracleRequired("d22(i4):membership U_" + ctx.name(g));
            r.report.note("b", db.witness());
            BlockMap p1 = t1.pi;
            Fn L = Fn::derived("L", [d, p1, l, b](Nat n) {
                auto m = detail::last_block_with(d, p1, l, b.nth(n));
                if (!m) throw PreconditionFailed("t201:L", "b(" + std::to_string(n) + ") has no fiber in d");
                return *m;
            });
            BlockSeq d1 = BlockSeq::select(d, L, std::nullopt, true, Take::all);
            t2 = NormalTriple::of(d1, Fn::nth_of(b));
        } else {
            r.branch = "II:alpha<gamma";
            if (!ctx.rk) throw OracleRequired("d22(1)");
            RkRequest req;
            req.from = alpha;
            req.to = g;
            req.t1 = t1;
            req.d = d;
            req.a = img;
            req.depth = depth;
            RkAnswer ans = ctx.rk(req);
            b = ans.b;
            t2 = ans.t;
            BlockMap ga = ctx.map(g, alpha);
            Verdict v = Verdict::pass();
            for (Nat n = 0; n < depth && v; ++n)
                for (Nat k : ans.d_star.block(n))
                    if (t1.pi(k) != ga(ans.t.pi(k))) { v = Verdict::fail(n, "commute", std::to_string(k)); break; }
            r.report.add("d22:i1(commute)", v, "pi_1 = pi_{gamma,alpha} o pi on Set(d')");
            auto le = le_at(ans.d_star, d, 0, depth);
            r.report.add("d22:i1(d'<=_0 d)", le.ok, le.ok ? "" : le.reason);
        }
        // c in U_gamma inside b with index >= t(n+1)
        SetStream bb = SetStream::intersection(b, img);
        Fn tt = Fn::derived("t(n+1)", [](Nat n) { return tri_t(n + 1); });
        Nat need = 1;
        while (tri_s(need) < depth) ++need;
        auto w = ctx.find_rapid(g, bb, tt, std::max<Nat>(need + 1, 2));
        if (!w) throw OracleRequired("d22(i4):rapid U_" + ctx.name(g));
        r.report.note("c", "tower " + std::to_string(w->tower) + " tail " + std::to_string(w->tail));
        SetStream C = w->Y;
        BlockSeq cq = q0.c, dp = t2.c;
        BlockMap pg = cg.t.pi, p2 = t2.pi;
        Fn M = Fn::derived("M", [cq, pg, n0, C](Nat n) {
            auto m = detail::last_block_with(cq, pg, n0, C.nth(n));
            if (!m) throw PreconditionFailed("t201:M", "c(" + std::to_string(n) + ") has no fiber in c_q0");
            return *m;
        });
        Fn K = Fn::derived("K", [dp, p2, C](Nat n) {
            auto m = detail::last_block_with(dp, p2, 0, C.nth(n));
            if (!m) throw PreconditionFailed("t201:K", "c(" + std::to_string(n) + ") has no fiber in d'");
            return *m;
        });
        BlockSeq e = BlockSeq::select(cq, M, std::nullopt, true, Take::first);
        BlockSeq dstar = BlockSeq::from_fn("chunks(d'(K))", [dp, K](Nat n) {
            Nat k = 0;
            while (tri_s(k + 1) <= n) ++k;
            Nat off = 0;
            for (Nat i = tri_s(k); i < n; ++i) off += i + 1;
            Block src = dp.block(K(k));
            if (src.size() < off + n + 1)
                throw PreconditionFailed("t201:size", "d'(K_" + std::to_string(k) + ") too small");
            return Block(src.begin() + off, src.begin() + off + n + 1);
        });
        SetStream se = sset(e);
        NormalTriple ts = NormalTriple::of(dstar, Fn::nth_of(se));
        Condition out = q0.with_c(e);
        r.q = out;
        r.d_star = dstar;
        r.t_star = ts;
    }
    // t12 conclusions
    const BlockSeq& ds = *r.d_star;
    const NormalTriple& ts = *r.t_star;
    r.report.add("t12:normal", normal_check(ts, depth), "");
    r.report.add("t12:d*-in-P", block_seq_check(ds, depth), "");
    {
        Nat ld = le_threshold(ds, d, depth);
        r.report.add("t12:d*<=d", ld <= depth / 2, "from block " + std::to_string(ld));
    }
    SetStream se = sset(r.q.c);
    Verdict img = Verdict::pass(), comm = Verdict::pass();
    const auto& ca = r.q.at(alpha);
    for (Nat n = 0; n < depth; ++n) {
        Nat v = ts.pi(ds.min_of(n));
        if (img && v != se.nth(n)) img = Verdict::fail(n, "image", "pi''d*(n) != Set(c_q*)(n)");
        for (Nat k : ds.block(n))
            if (comm && t1.pi(k) != ca.t.pi(ts.pi(k))) comm = Verdict::fail(n, "pullback", "k=" + std::to_string(k));
    }
    r.report.add("t12:image", img, "pi''Set(d*) = Set(c_q*)");
    r.report.add("t12:pullback", comm, "pi_1 = pi_{q*,alpha} o pi on Set(d*)");
    return r;
}

// ---------------------------------------------------------------- SealLimit (t9)

inline ExtendResult seal_limit(const Condition& q, const SealLimit& task, const GenericContext& ctx, Nat depth) {
    ExtendResult r;
    r.task = "SealLimit";
    r.report = Report("t9");
    if (!ctx.delta_limit || q.gamma != kTop)
        throw PreconditionFailed("t9:cf", "needs a limit delta and gamma_q = delta");
    if (task.side.size() != task.X.size() || task.chain.empty())
        throw PreconditionFailed("t9:shape", "one map per label and a nonempty chain");
    if (!ctx.limit_oracle) throw OracleRequired("d22(8)");
    LimitRequest req;
    req.mu = kTop;
    req.e = q.c;
    req.chain = task.chain;
    req.X = task.X;
    req.side = task.side;
    req.depth = depth;
    LimitAnswer ans = ctx.limit_oracle(req);
    r.branch = "t30";
    r.q = q.with_c(ans.e_star);
    r.d_star = ans.d_star;
    r.t_star = ans.t;
    for (std::size_t j = 0; j < task.chain.size(); ++j) {
        Nat l = le_threshold(ans.d_star, task.chain[j], depth);
        r.report.add("t9:i2005(d*<=d_" + std::to_string(j) + ")", l <= depth / 2, "from block " + std::to_string(l));
    }
    SetStream se = sset(ans.e_star);
    Verdict img = Verdict::pass();
    for (Nat n = 0; n < depth && img; ++n)
        if (ans.t.pi(ans.d_star.min_of(n)) != se.nth(n)) img = Verdict::fail(n, "image", "");
    r.report.add("t9:i2005(image)", img, "Set(c_q') = pi''Set(d*)");
    for (std::size_t i = 0; i < task.X.size(); ++i) {
        const auto& co = r.q.at(task.X[i]);
        Nat th = 0;
        for (Nat n = depth; n-- > 0 && th == 0;)
            for (Nat k : ans.d_star.block(n))
                if (task.side[i].pi(k) != co.t.pi(ans.t.pi(k))) { th = n + 1; break; }
        r.report.add("t9:i2006(" + ctx.name(task.X[i]) + ")", th <= depth / 2, "from block " + std::to_string(th));
    }
    r.report.add("t9:i2008", normal_check(ans.t, depth), "");
    return r;
}

// ---------------------------------------------------------------- dispatcher

inline ExtendResult extend_condition(const Condition& q, const Task& task, const GenericContext& ctx, Nat depth) {
    ExtendResult r = std::visit(
        [&](const auto& t) -> ExtendResult {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, DecideSet>) return decide_set(q, t.X, ctx, depth);
            else if constexpr (std::is_same_v<T, Thin>) return thin(q, t.f, t.moreover, ctx, depth);
            else if constexpr (std::is_same_v<T, Rapidify>) return rapidify(q, t.f, ctx, depth);
            else if constexpr (std::is_same_v<T, RestrictImage>) return restrict_image(q, t.alpha, t.a, ctx, depth);
            else if constexpr (std::is_same_v<T, NormalizeMaps>) return normalize_maps(q, t.beta, ctx, depth);
            else if constexpr (std::is_same_v<T, AddCoordinate>) return add_coordinate(q, t.beta, ctx, depth);
            else if constexpr (std::is_same_v<T, Kill>) return kill(q, t.beta, t.phi, t.chooser, ctx, depth);
            else if constexpr (std::is_same_v<T, RKPullback>) return rk_pullback(q, t.t1, t.d, t.alpha, ctx, depth);
            else return seal_limit(q, t, ctx, depth);
        },
        task);
    r.report.append(check_condition(r.q, ctx, depth), "q'");
    r.report.append(leq_condition(r.q, q, depth), "q'<=q");
    return r;
}

}  // namespace bslab
