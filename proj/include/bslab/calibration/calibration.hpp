#pragma once
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "../core/objects.hpp"
#include "../core/report.hpp"
#include "../core/rho.hpp"

namespace bslab {

struct CalibrationInput {
    Nat levels = 0;
    std::vector<std::vector<BlockMap>> pi;  // pi[n][m] = pi_{n,m}, m <= n
    std::vector<SetStream> E, C, D;
    Fn f = Fn::identity();
    Nat depth = 64;  // certification depth for prefix checks
    // D_m[image_threshold[n][m]] inside pi''_{n,m} F_n
    std::vector<std::vector<Nat>> image_threshold;
    // D_n[disjoint_threshold[n]] misses every D_m, m < n
    std::vector<Nat> disjoint_threshold;

    const BlockMap& map(Nat n, Nat m) const { return pi.at(n).at(m); }
};

// F_n = C_n cap pi''_{n+1,n} C_{n+1}; the top level has no successor and keeps F = C
inline std::vector<SetStream> derived_F(const CalibrationInput& in) {
    std::vector<SetStream> F;
    for (Nat n = 0; n < in.levels; ++n) {
        if (n + 1 < in.levels)
            F.push_back(SetStream::intersection(in.C[n], SetStream::image(in.C[n + 1], in.map(n + 1, n))));
        else
            F.push_back(in.C[n]);
    }
    return F;
}

struct LevelRecord {
    Nat L = 0;                 // L_n
    Nat R = 0;                 // |Delta_n|
    std::vector<Nat> x, m, z, l;
};

struct StepScratch {
    std::vector<Nat> X;  // X_{m,n+1}
    Nat Y = 0;
    Nat x_star = 0;
};

struct Calibration {
    std::vector<std::vector<Nat>> K;  // K[n][m] = K_{m,n}
    std::vector<Nat> g;               // g'(n)
    std::vector<Nat> L;               // L_n for n <= levels computed
    std::vector<LevelRecord> level;   // records for n with K row n+1 present
    std::vector<StepScratch> scratch; // scratch[n] for step n -> n+1
    Nat k(Nat m, Nat n) const { return K.at(n).at(m); }
    RhoTriple rho(const CalibrationInput& in) const { return {in.D, K, in.pi}; }
};

namespace detail {

// least X with D[X] inside S, given D[T] inside S
template <class In>
Nat least_tail_in(const SetStream& d, Nat T, In&& in) {
    for (Nat i = T; i-- > 0;)
        if (!in(d.nth(i))) return i + 1;
    return 0;
}

// largest index i with pi(F(i)) == x, when it exists
inline std::optional<Nat> last_in_fiber(const SetStream& F, const BlockMap& pi, Nat x) {
    Nat hi = 1;
    while (pi(F.nth(hi - 1)) <= x) hi *= 2;
    // pi(F(hi-1)) > x; find last i < hi-1 with pi(F(i)) <= x
    Nat lo = 0, top = hi - 1;  // answer in [0, top)
    if (pi(F.nth(0)) > x) return std::nullopt;
    while (lo + 1 < top) {
        Nat mid = (lo + top) / 2;
        if (pi(F.nth(mid)) <= x) lo = mid; else top = mid;
    }
    if (pi(F.nth(lo)) == x) return lo;
    return std::nullopt;
}

}  // namespace detail

inline Report check_calibration_input(const CalibrationInput& in) {
    Report r("calibration input");
    auto F = derived_F(in);
    const Nat N = in.levels, W = in.depth;
    auto bad = [&](const std::string& tag, const std::string& what) { r.add(tag, false, what); };
    if (in.pi.size() < N || in.E.size() < N || in.C.size() < N || in.D.size() < N ||
        in.image_threshold.size() < N || in.disjoint_threshold.size() < N) {
        bad("t7:shape", "input lists shorter than level count");
        return r;
    }
    bool ok_id = true, ok_sub = true, ok_rapid = true, ok_comm = true, ok_mono = true;
    for (Nat n = 0; n < N; ++n) {
        auto c = in.C[n].prefix(W);
        for (Nat k = 0; k < W; ++k) {
            Nat v = c[k];
            if (ok_id && in.map(n, n)(v) != v) { ok_id = false; bad("t7:pi-identity", "pi_{n,n}(" + std::to_string(v) + ") at n=" + std::to_string(n)); }
            if (ok_sub && !in.E[n].contains(v)) { ok_sub = false; bad("t7:C-in-E", "C_" + std::to_string(n) + "(" + std::to_string(k) + ")=" + std::to_string(v)); }
            if (ok_rapid && v < in.E[n].nth(in.f(2 * k))) {
                ok_rapid = false;
                bad("t7:rapid", "C_" + std::to_string(n) + "(" + std::to_string(k) + ") < E_n(f(2k))");
            }
            for (Nat m = 0; m <= n && ok_comm; ++m)
                for (Nat mp = m; mp <= n && ok_comm; ++mp)
                    if (in.map(n, m)(v) != in.map(mp, m)(in.map(n, mp)(v))) {
                        ok_comm = false;
                        bad("t7:commute", "v=" + std::to_string(v) + " n,m',m=" + std::to_string(n) + "," +
                                              std::to_string(mp) + "," + std::to_string(m));
                    }
            if (k + 1 < W)
                for (Nat m = 0; m <= n && ok_mono; ++m)
                    if (in.map(n, m)(c[k]) > in.map(n, m)(c[k + 1])) {
                        ok_mono = false;
                        bad("t7:monotone", "pi_{" + std::to_string(n) + "," + std::to_string(m) + "} at " + std::to_string(c[k]));
                    }
        }
    }
    if (ok_id) r.add("t7:pi-identity", true, "");
    if (ok_sub) r.add("t7:C-in-E", true, "");
    if (ok_rapid) r.add("t7:rapid", true, "");
    if (ok_comm) r.add("t7:commute", true, "");
    if (ok_mono) r.add("t7:monotone", true, "");
    bool ok_img = true, ok_dis = true;
    for (Nat n = 0; n < N && ok_img; ++n)
        for (Nat m = 0; m <= n && ok_img; ++m) {
            auto img = SetStream::image(F[n], in.map(n, m));
            Nat T = in.image_threshold[n].at(m);
            for (Nat i = T; i < T + W; ++i)
                if (!img.contains(in.D[m].nth(i))) {
                    ok_img = false;
                    bad("t7:D-image", "D_" + std::to_string(m) + "(" + std::to_string(i) + ") not in pi''_{" +
                                          std::to_string(n) + "," + std::to_string(m) + "}F_n");
                    break;
                }
        }
    for (Nat n = 0; n < N && ok_dis; ++n) {
        Nat T = in.disjoint_threshold[n];
        for (Nat i = T; i < T + W && ok_dis; ++i)
            for (Nat m = 0; m < n; ++m)
                if (in.D[m].contains(in.D[n].nth(i))) {
                    ok_dis = false;
                    bad("t7:D-disjoint", "D_" + std::to_string(n) + "(" + std::to_string(i) + ") in D_" + std::to_string(m));
                    break;
                }
    }
    if (ok_img) r.add("t7:D-image", true, "");
    if (ok_dis) r.add("t7:D-disjoint", true, "");
    return r;
}

inline void require_calibration_input(const CalibrationInput& in) {
    auto r = check_calibration_input(in);
    for (const auto& l : r.lines())
        if (!l.pass) throw PreconditionFailed(l.tag, l.witness);
}

// the induction on n producing K_{m,n}, g'(n); levels 0..n_max
inline Calibration calibrate(const CalibrationInput& in, Nat n_max) {
    if (n_max >= in.levels) throw PreconditionFailed("t7:levels", "n_max beyond level count");
    require_calibration_input(in);
    auto F = derived_F(in);
    const auto& D = in.D;
    std::vector<std::vector<SetStream>> imgF(in.levels);
    for (Nat n = 0; n < in.levels; ++n)
        for (Nat m = 0; m <= n; ++m) imgF[n].push_back(SetStream::image(F[n], in.map(n, m)));
    const Nat search_cap = default_budget();

    Calibration cal;
    cal.L.push_back(0);
    {
        Nat lp = detail::least_tail_in(D[0], in.image_threshold[0][0], [&](Nat x) { return F[0].contains(x); });
        Nat K00 = lp + 1;
        cal.K.push_back({K00});
        cal.g.push_back(F[0].lower_bound(D[0].nth(K00)));
    }
    for (Nat n = 0; n < n_max; ++n) {
        const Nat np = n + 1;
        StepScratch st;
        for (Nat m = 0; m <= n; ++m) {
            Nat xm = detail::least_tail_in(D[m], in.image_threshold[np][m],
                                           [&](Nat x) { return imgF[np][m].contains(x); });
            st.X.push_back(std::max(cal.k(m, n), xm));
        }
        st.Y = detail::least_tail_in(D[np], in.disjoint_threshold[np], [&](Nat x) {
            for (Nat m = 0; m < np; ++m)
                if (D[m].contains(x)) return false;
            return true;
        });
        Nat xtop = detail::least_tail_in(D[np], in.image_threshold[np][np], [&](Nat x) { return F[np].contains(x); });
        st.X.push_back(std::max(st.Y, xtop));
        st.x_star = cal.L[n];
        for (Nat m = 0; m <= n; ++m) st.x_star = add(st.x_star, st.X[m] - cal.k(m, n));

        // K_{0,n+1}
        std::vector<SetStream> common;
        for (Nat m = 0; m <= np; ++m) common.push_back(SetStream::image(SetStream::tail(D[m], st.X[m]), in.map(m, 0)));
        Nat l = add(add(st.X[0], st.x_star), 1);
        for (Nat tries = 0;; ++l, ++tries) {
            if (tries > search_cap) throw DepthExceeded("search for K_{0," + std::to_string(np) + "}");
            Nat v = D[0].nth(l - 1);
            bool all = true;
            for (const auto& s : common)
                if (!s.contains(v)) { all = false; break; }
            if (all) break;
        }
        std::vector<Nat> row(np + 1, 0);
        row[0] = l;
        // g'(n+1)
        Nat target = D[0].nth(l);
        Nat g = 0;
        for (Nat tries = 0; in.map(np, 0)(F[np].nth(g)) < target; ++g, ++tries)
            if (tries > search_cap) throw DepthExceeded("search for g'(" + std::to_string(np) + ")");
        Nat G0 = F[np].nth(g);
        for (Nat m = 1; m <= np; ++m) {
            Nat xm = detail::least_tail_in(D[m], in.image_threshold[np][m],
                                           [&](Nat x) { return imgF[np][m].contains(x); });
            row[m] = std::max(xm, D[m].lower_bound(in.map(np, m)(G0)));
        }
        cal.K.push_back(row);
        cal.g.push_back(g);
        cal.scratch.push_back(st);

        // Delta_n with its order
        RhoTriple rho{in.D, cal.K, in.pi};
        auto dl = delta_level(rho, n, cal.L[n]);
        cal.L.push_back(dl.L_next);
        LevelRecord rec;
        rec.L = cal.L[n];
        rec.R = dl.delta.size();
        struct Item { Nat z, x, m; };
        std::vector<Item> items;
        for (Nat x : dl.delta) {
            Nat owner = n + 1;
            for (Nat m = 0; m <= n && owner > n; ++m)
                if (std::binary_search(dl.H[m].begin(), dl.H[m].end(), x)) owner = m;
            auto zi = detail::last_in_fiber(F[n], in.map(n, owner), x);
            if (!zi) throw PreconditionFailed("t7:i53", "no F_n point over " + std::to_string(x));
            items.push_back({F[n].nth(*zi), x, owner});
        }
        std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.z < b.z; });
        for (const auto& it : items) {
            rec.x.push_back(it.x);
            rec.m.push_back(it.m);
            rec.z.push_back(it.z);
            auto li = in.E[n].index_of(it.z);
            if (!li) throw PreconditionFailed("t7:C-in-E", "z=" + std::to_string(it.z) + " not in E_n");
            rec.l.push_back(*li);
        }
        cal.level.push_back(std::move(rec));
    }
    return cal;
}

// Independent re-check of every clause; Delta recomputed by a direct double loop.
inline Report verify_calibration(const CalibrationInput& in, const Calibration& cal, Nat n_max) {
    Report r("calibration");
    auto F = derived_F(in);
    const auto& D = in.D;
    const Nat W = in.depth;
    auto ns = [](Nat v) { return std::to_string(v); };
    if (cal.K.size() <= n_max || cal.g.size() <= n_max) {
        r.add("t7:shape", false, "calibration shorter than n_max");
        return r;
    }
    // value-bounded image of F_n[from, ...) under pi
    auto image_upto = [&](Nat n, Nat m, Nat from, Nat bound) {
        std::set<Nat> out;
        for (Nat i = from;; ++i) {
            Nat v = in.map(n, m)(F[n].nth(i));
            if (v > bound) break;
            out.insert(v);
        }
        return out;
    };
    std::vector<Nat> L{0};
    for (Nat n = 0; n <= n_max; ++n) {
        const std::string at = "n=" + ns(n);
        // i51
        {
            bool ok = true;
            std::string w;
            Nat gF = F[n].nth(cal.g[n]);
            for (Nat m = 0; m <= n && ok; ++m) {
                Nat K = cal.k(m, n);
                if (K == 0) { ok = false; w = "K_{" + ns(m) + "," + ns(n) + "}=0"; break; }
                Nat y = D[m].nth(K - 1);
                bool found = false;
                for (Nat i = 0; i < cal.g[n]; ++i)
                    if (in.map(n, m)(F[n].nth(i)) == y) { found = true; w += " m=" + ns(m) + ":z=" + ns(F[n].nth(i)); break; }
                if (!found) { ok = false; w = "no z below F_n(g')=" + ns(gF) + " over D_" + ns(m) + "(K-1)=" + ns(y); }
                if (ok && n > 0 && m < n && !(K > cal.k(m, n - 1))) {
                    ok = false;
                    w = "K_{" + ns(m) + "," + ns(n) + "}=" + ns(K) + " <= K_{" + ns(m) + "," + ns(n - 1) + "}";
                }
            }
            r.add("t7:i51", ok, at + (ok ? w : ": " + w));
        }
        // i53: D_m[K_{m,n}] inside pi''(F_n minus F_n(g'))
        {
            bool ok = true;
            std::string w;
            for (Nat m = 0; m <= n && ok; ++m) {
                Nat K = cal.k(m, n);
                auto window = D[m].range(K, K + W);
                auto img = image_upto(n, m, cal.g[n], window.back());
                for (Nat i = 0; i < window.size(); ++i)
                    if (!img.count(window[i])) { ok = false; w = "D_" + ns(m) + "(" + ns(K + i) + ")=" + ns(window[i]) + " missed"; break; }
            }
            r.add("t7:i53", ok, at + (ok ? ", window " + ns(W) : ": " + w));
        }
        // i54
        {
            bool ok = true;
            std::string w;
            Nat gF = F[n].nth(cal.g[n]);
            Nat start = in.C[n].lower_bound(gF);
            for (Nat m = 0; m <= n && ok; ++m) {
                if (cal.k(m, n) == 0) { ok = false; w = "K=0"; break; }
                Nat y = D[m].nth(cal.k(m, n) - 1);
                for (Nat i = start; i < start + W; ++i) {
                    Nat v = in.C[n].nth(i);
                    if (in.map(n, m)(v) <= y) { ok = false; w = "v=" + ns(v) + " m=" + ns(m); break; }
                }
            }
            r.add("t7:i54", ok, at + (ok ? "" : ": " + w));
        }
        // i55 first part
        {
            bool ok = true;
            std::string w;
            Nat K = cal.k(n, n);
            for (Nat i = K; i < K + W && ok; ++i)
                for (Nat m = 0; m < n; ++m)
                    if (D[m].contains(D[n].nth(i))) { ok = false; w = "D_" + ns(n) + "(" + ns(i) + ") in D_" + ns(m); break; }
            r.add("t7:i55", ok, at + (ok ? "" : ": " + w));
        }
        // i52
        if (n > 0) {
            // L_n from brute-force Delta_{n-1}
            Nat p = n - 1;
            std::set<Nat> delta;
            for (Nat m = 0; m <= p; ++m)
                for (Nat i = cal.k(m, p); i < cal.k(m, n); ++i) {
                    Nat x = D[m].nth(i);
                    bool hit = false;
                    for (Nat mp = m + 1; mp <= p && !hit; ++mp)
                        for (Nat j = cal.k(mp, p); j < cal.k(mp, n); ++j)
                            if (in.map(mp, m)(D[mp].nth(j)) == x) { hit = true; break; }
                    if (!hit) delta.insert(x);
                }
            L.push_back(L.back() + delta.size());
            // i55 second part: unique window
            bool ok = true;
            std::string w;
            std::map<Nat, Nat> owner;
            for (Nat x : delta) {
                Nat count = 0;
                for (Nat m = 0; m <= p; ++m) {
                    auto idx = D[m].index_of(x);
                    if (idx && *idx >= cal.k(m, p) && *idx < cal.k(m, n)) { ++count; owner[x] = m; }
                }
                if (count != 1) { ok = false; w = "x=" + ns(x) + " lies in " + ns(count) + " windows"; break; }
            }
            r.add("t7:i55", ok, "n=" + ns(n) + " windows" + (ok ? "" : ": " + w));
            // i56 and i60 on the recorded level p
            if (p < cal.level.size() && ok) {
                const auto& rec = cal.level[p];
                std::vector<Nat> xs(rec.x.begin(), rec.x.end());
                std::sort(xs.begin(), xs.end());
                bool same = std::vector<Nat>(delta.begin(), delta.end()) == xs && rec.R == delta.size();
                // keys recomputed from F_{n-1}
                std::map<Nat, Nat> key;
                for (Nat x : delta) {
                    Nat m = owner[x];
                    std::optional<Nat> best;
                    for (Nat i = 0;; ++i) {
                        Nat z = F[p].nth(i);
                        Nat v = in.map(p, m)(z);
                        if (v > x) break;
                        if (v == x) best = z;
                    }
                    if (best) key[x] = *best;
                }
                bool lin = key.size() == delta.size();
                std::string lw;
                std::vector<Nat> dv(delta.begin(), delta.end());
                auto prec = [&](Nat a, Nat b) { return key[a] < key[b]; };
                for (Nat a : dv) {
                    if (!lin) break;
                    if (prec(a, a)) { lin = false; lw = "reflexive at " + ns(a); }
                    for (Nat b : dv) {
                        if (a != b && prec(a, b) == prec(b, a)) { lin = false; lw = "incomparable " + ns(a) + "," + ns(b); break; }
                        if (dv.size() <= 64)
                            for (Nat c : dv)
                                if (prec(a, b) && prec(b, c) && !prec(a, c)) { lin = false; lw = "intransitive"; break; }
                        if (!lin) break;
                    }
                }
                if (!same) { lin = false; lw = "recorded Delta differs from recomputed Delta"; }
                r.add("t7:i56", lin, "n=" + ns(n) + " |Delta|=" + ns(delta.size()) + (lin ? "" : ": " + lw));
                bool ok60 = same && lin;
                std::string w60;
                for (Nat j = 0; j < rec.R && ok60; ++j) {
                    if (j + 1 < rec.R && !(key[rec.x[j]] < key[rec.x[j + 1]])) { ok60 = false; w60 = "order position " + ns(j); break; }
                    if (rec.z[j] != key[rec.x[j]] || owner[rec.x[j]] != rec.m[j]) { ok60 = false; w60 = "z/m mismatch at j=" + ns(j); break; }
                    if (in.E[p].nth(rec.l[j]) != rec.z[j]) { ok60 = false; w60 = "E index at j=" + ns(j); break; }
                    if (rec.l[j] < in.f(L[p] + j)) { ok60 = false; w60 = "l=" + ns(rec.l[j]) + " < f(L+j) at j=" + ns(j); break; }
                    if (rec.z[j] < F[p].nth(cal.g[p])) { ok60 = false; w60 = "z below F_n(g') at j=" + ns(j); break; }
                }
                r.add("t7:i60", ok60, "n=" + ns(n) + (ok60 ? "" : ": " + w60));
            }
        }
        // g'(n) is the least l with pi_{n,0}(F_n(l)) >= D_0(K_{0,n})
        {
            Nat target = D[0].nth(cal.k(0, n));
            bool reach = in.map(n, 0)(F[n].nth(cal.g[n])) >= target;
            bool least = cal.g[n] == 0 || in.map(n, 0)(F[n].nth(cal.g[n] - 1)) < target;
            r.add("t7:g-least", reach && least,
                  at + (reach && least ? "" : reach ? ": g'-1 already reaches D_0(K_{0,n})" : ": F_n(g') below D_0(K_{0,n})"));
        }
        bool ok52 = 2 * cal.g[n] >= L[n];
        r.add("t7:i52", ok52, at + " 2g'=" + ns(2 * cal.g[n]) + " L=" + ns(L[n]));
    }
    return r;
}

}  // namespace bslab
