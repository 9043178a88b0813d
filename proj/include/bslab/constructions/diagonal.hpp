#pragma once
#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "../calibration/calibration.hpp"
#include "../core/poset.hpp"
#include "../triples/triples.hpp"
#include "fuse.hpp"

namespace bslab {

// Labels delta_0 < ... < delta_{N-1} below a top label delta.
struct TowerInput {
    Nat levels = 0;
    BlockSeq e = BlockSeq::triangular();
    std::vector<NormalTriple> top;        // (pi_{delta,delta_n}, psi, b_{delta,delta_n})
    std::vector<BlockSeq> chain;          // d_j, constant past the end
    std::vector<NormalTriple> side;       // (pi_{delta_n}, psi, b_{delta_n})
    std::vector<Nat> j_of;                // d_{j(n)} <= b_{delta_n}
    std::vector<std::vector<BlockMap>> pi;  // pi[n][m] = pi_{delta_n,delta_m}
    std::vector<std::vector<Nat>> j_comm;   // j_{m,n} as [n][m]
    std::vector<std::vector<Nat>> L_d;      // L^d(m,n) as [n][m]
    std::vector<std::vector<Nat>> L_e;      // L^e(m,n) as [n][m]
    Fn f = Fn::identity();
    std::vector<SetStream> C, D;
    std::vector<std::vector<Nat>> image_threshold;
    std::vector<Nat> disjoint_threshold;
    Nat cal_depth = 8;    // calibration certificate depth
    Nat cert_depth = 24;  // blocks inspected for the hypotheses

    const BlockSeq& d(Nat j) const { return chain.at(std::min<Nat>(j, chain.size() - 1)); }
};

struct TowerScratch {
    std::vector<Nat> K_d, Q_d, j_N, M_d, K_e, M_e;
    std::vector<std::vector<Nat>> zeta, zeta_d;  // [n][j]
};

struct DiagonalResult {
    BlockSeq e_star = BlockSeq::table({});
    BlockSeq d_star = BlockSeq::table({});
    BlockMap pi = BlockMap::identity();
    std::vector<Nat> psi;                 // psi(l) = Set(e*)(l)
    std::vector<Nat> i81_threshold;       // per label delta_n, block index in d*
    std::vector<Nat> i84_witness;         // e*(k) inside e(witness[k])
    CalibrationInput cal_in;
    Calibration cal;
    TowerScratch scratch;
    Report report{"diagonal"};

    NormalTriple triple() const { return {pi, Fn::table(psi), d_star}; }
};

// g(n) = max{f(n), t(n), s(n+1)}
inline Fn diagonal_schedule(const Fn& f) {
    return Fn::max_of({f, Fn::tri_t(), Fn::compose(Fn::tri_s(), Fn::linear(1, 1))});
}

inline Report check_tower_input(const TowerInput& in) {
    Report r("tower input");
    const Nat N = in.levels, W = in.cert_depth;
    auto ns = [](Nat v) { return std::to_string(v); };
    if (in.top.size() < N || in.side.size() < N || in.j_of.size() < N || in.pi.size() < N || in.C.size() < N ||
        in.D.size() < N || in.j_comm.size() < N || in.L_d.size() < N || in.L_e.size() < N || in.chain.empty()) {
        r.add("t30:shape", false, "input lists shorter than level count");
        return r;
    }
    for (Nat n = 0; n < N; ++n) {
        r.add("t30:i75(" + ns(n) + ")", normal_check(in.top[n], W));
        Nat ke = le_threshold(in.e, in.top[n].c, W);
        r.add("t30:i75(" + ns(n) + ")", ke < W, "e <=_" + ns(ke) + " b_{delta,delta_n}");
        r.add("t30:i79(" + ns(n) + ")", normal_check(in.side[n], W));
        Nat kd = le_threshold(in.d(in.j_of[n]), in.side[n].c, W);
        r.add("t30:i79(" + ns(n) + ")", kd < W, "d_j(n) <=_" + ns(kd) + " b_delta_n");
    }
    for (Nat j = 0; j + 1 < in.chain.size(); ++j) {
        Nat l = le_threshold(in.chain[j + 1], in.chain[j], W);
        r.add("t30:i76(" + ns(j) + ")", l < W, "d_" + ns(j + 1) + " <=_" + ns(l) + " d_" + ns(j));
    }
    bool ce = true, cd = true;
    for (Nat n = 0; n < N; ++n)
        for (Nat m = 0; m <= n; ++m) {
            for (Nat b = in.L_e[n][m]; b < W && ce; ++b)
                for (Nat k : in.e.block(b))
                    if (in.top[m].pi(k) != in.pi[n][m](in.top[n].pi(k))) {
                        ce = false;
                        r.add("t30:i74", false, "k=" + ns(k) + " m,n=" + ns(m) + "," + ns(n));
                        break;
                    }
            const BlockSeq& dj = in.d(in.j_comm[n][m]);
            for (Nat b = in.L_d[n][m]; b < W && cd; ++b)
                for (Nat k : dj.block(b))
                    if (in.side[m].pi(k) != in.pi[n][m](in.side[n].pi(k))) {
                        cd = false;
                        r.add("t30:i78", false, "k=" + ns(k) + " m,n=" + ns(m) + "," + ns(n));
                        break;
                    }
        }
    if (ce) r.add("t30:i74", true, "blocks [L^e, " + ns(W) + ")");
    if (cd) r.add("t30:i78", true, "blocks [L^d, " + ns(W) + ")");
    return r;
}

inline TowerScratch tower_thresholds(const TowerInput& in) {
    TowerScratch s;
    const Nat N = in.levels, W = in.cert_depth;
    for (Nat n = 0; n < N; ++n) {
        s.K_d.push_back(le_threshold(in.d(in.j_of[n]), in.side[n].c, W));
        Nat jn = in.j_of[n];
        for (Nat k = 0; k < n; ++k) jn = std::max(jn, s.j_N[k] + 1);
        for (Nat m = 0; m <= n; ++m) jn = std::max(jn, in.j_comm[n][m]);
        s.j_N.push_back(jn);
        Nat q = le_threshold(in.d(jn), in.d(in.j_of[n]), W);
        for (Nat k = 0; k < n; ++k) q = std::max(q, le_threshold(in.d(jn), in.d(s.j_N[k]), W));
        for (Nat m = 0; m <= n; ++m) q = std::max(q, le_threshold(in.d(jn), in.d(in.j_comm[n][m]), W));
        if (q >= W) throw PreconditionFailed("t30:i76", "d_{j_N} not below the earlier chain members");
        s.Q_d.push_back(q);
        Nat md = std::max(s.K_d[n], q);
        for (Nat m = 0; m <= n; ++m) md = std::max(md, in.L_d[n][m]);
        if (n) md = std::max(md, s.M_d[n - 1]);
        s.M_d.push_back(md);
        s.K_e.push_back(le_threshold(in.e, in.top[n].c, W));
        Nat me = s.K_e[n];
        for (Nat m = 0; m <= n; ++m) me = std::max(me, in.L_e[n][m]);
        if (n) me = std::max(me, s.M_e[n - 1]);
        s.M_e.push_back(me);
    }
    return s;
}

// E_n = pi''_{delta,delta_n}Set(e)<M^e_n> cap pi''_{delta_n}Set(d_{j_n})<M^d_n>
inline CalibrationInput tower_calibration_input(const TowerInput& in, const TowerScratch& s) {
    CalibrationInput c;
    c.levels = in.levels;
    c.pi = in.pi;
    for (Nat n = 0; n < in.levels; ++n)
        c.E.push_back(SetStream::intersection(SetStream::block_image(in.e, s.M_e[n], in.top[n].pi),
                                              SetStream::block_image(in.d(s.j_N[n]), s.M_d[n], in.side[n].pi)));
    c.C = in.C;
    c.D = in.D;
    c.f = diagonal_schedule(in.f);
    c.depth = in.cal_depth;
    c.image_threshold = in.image_threshold;
    c.disjoint_threshold = in.disjoint_threshold;
    return c;
}

inline DiagonalResult diagonal(const TowerInput& in) {
    auto pre = check_tower_input(in);
    for (const auto& l : pre.lines())
        if (!l.pass) throw PreconditionFailed(l.tag, l.witness);
    const Nat N = in.levels;
    if (N < 2) throw PreconditionFailed("t30:levels", "at least two labels are needed for one window");
    DiagonalResult out;
    out.scratch = tower_thresholds(in);
    auto& s = out.scratch;
    out.cal_in = tower_calibration_input(in, s);
    out.cal = calibrate(out.cal_in, N - 1);
    const auto& cal = out.cal;
    const Fn g = out.cal_in.f;
    auto ns = [](Nat v) { return std::to_string(v); };

    std::vector<Block> eb, db;
    s.zeta.assign(N - 1, {});
    s.zeta_d.assign(N - 1, {});
    for (Nat n = 0; n + 1 < N; ++n) {
        const auto& rec = cal.level[n];
        const BlockSeq& dj = in.d(s.j_N[n]);
        for (Nat j = 0; j < rec.R; ++j) {
            Nat z = rec.z[j];
            auto ze = detail::last_block_with(in.e, in.top[n].pi, s.M_e[n], z);
            auto zd = detail::last_block_with(dj, in.side[n].pi, s.M_d[n], z);
            if (!ze || !zd)
                throw PreconditionFailed("t14:a-in-image", "z^" + ns(n) + "_" + ns(j) + "=" + ns(z) + " has no fiber");
            s.zeta[n].push_back(*ze);
            s.zeta_d[n].push_back(*zd);
            Nat k = rec.L + j;
            Block src = in.e.block(*ze);
            if (src.size() < k + 1) throw PreconditionFailed("t30:size", "e(" + ns(*ze) + ") too small");
            eb.emplace_back(src.begin(), src.begin() + k + 1);
            out.i84_witness.push_back(*ze);
            Block dsrc = dj.block(*zd);
            if (dsrc.size() < tri_t(k)) throw PreconditionFailed("t30:size", "d_j_n(" + ns(*zd) + ") below t(m)");
            Nat pos = 0;
            for (Nat l = tri_s(k); l < tri_s(k + 1); ++l) {
                db.emplace_back(dsrc.begin() + pos, dsrc.begin() + pos + l + 1);
                pos += l + 1;
            }
        }
    }
    out.e_star = BlockSeq::table(eb);
    out.d_star = BlockSeq::table(db);
    for (const auto& b : eb) out.psi.insert(out.psi.end(), b.begin(), b.end());
    out.pi = BlockMap::normal(out.d_star, Fn::table(out.psi));

    const Nat Ltop = cal.L.at(N - 1), Dtop = tri_s(Ltop);
    auto& rep = out.report;
    rep.note("L", join_nats(cal.L));
    rep.note("j_N", join_nats(s.j_N));
    rep.note("M^d", join_nats(s.M_d));
    rep.note("M^e", join_nats(s.M_e));
    rep.append(verify_calibration(out.cal_in, cal, N - 1));

    // i84
    {
        bool ok = true;
        std::string w;
        for (Nat k = 0; k < Ltop && ok; ++k) {
            Nat m = out.i84_witness[k];
            Block em = in.e.block(m), ek = eb[k];
            if (m < in.f(k) || !std::includes(em.begin(), em.end(), ek.begin(), ek.end())) {
                ok = false;
                w = "k=" + ns(k) + " m=" + ns(m) + " f(k)=" + ns(in.f(k));
            }
        }
        rep.add("t30:i84", ok, ok ? "m = " + join_nats(out.i84_witness) : w);
    }
    // sizes and separation
    {
        bool ok = true;
        for (Nat k = 0; k < Ltop; ++k) ok = ok && eb[k].size() == k + 1;
        for (Nat l = 0; l < Dtop; ++l) ok = ok && db[l].size() == l + 1;
        rep.add("t30:sizes", ok, "|e*(k)|=k+1 for k<" + ns(Ltop) + ", |d*(l)|=l+1 for l<" + ns(Dtop));
        rep.add("t8:e*", block_seq_check(out.e_star, Ltop), "blocks " + ns(Ltop));
        rep.add("t8:d*", block_seq_check(out.d_star, Dtop), "blocks " + ns(Dtop));
        // i60 carried into the block indices
        bool big = true;
        std::string w;
        for (Nat n = 0; n + 1 < N; ++n)
            for (Nat j = 0; j < cal.level[n].R; ++j) {
                Nat gv = g(cal.level[n].L + j);
                if (s.zeta[n][j] < gv || s.zeta_d[n][j] < gv) {
                    big = false;
                    w = "n=" + ns(n) + " j=" + ns(j);
                }
            }
        rep.add("t30:zeta", big, big ? "zeta, zeta' >= g(L_n+j)" : w);
    }
    // i80
    for (Nat n = 0; n + 1 < N; ++n) {
        Nat th = tri_s(cal.L[n]);
        auto le = le_at(out.d_star, in.d(s.j_N[n]), th, Dtop);
        std::string tag = "t30:i80(j_" + ns(n) + "=" + ns(s.j_N[n]) + ")";
        if (le) rep.add(tag, true, "d* <=_" + ns(th) + " d_" + ns(s.j_N[n]));
        else rep.add(tag, false, "at " + ns(le.failed_at) + ": " + le.reason);
    }
    {
        bool ok = true;
        std::string w;
        for (Nat l = 0; l < Dtop && ok; ++l) {
            auto v = block_value(out.pi, db[l]);
            if (!v || *v != out.psi[l]) { ok = false; w = "block " + ns(l); }
        }
        rep.add("t30:i80", ok, ok ? "Set(e*) = pi''Set(d*) on " + ns(Dtop) + " points" : w);
    }
    // i81
    bool comm = true;
    for (Nat n = 0; n + 1 < N; ++n) {
        Nat th = tri_s(cal.L[n]);
        out.i81_threshold.push_back(th);
        for (Nat l = th; l < Dtop && comm; ++l)
            for (Nat k : db[l])
                if (in.side[n].pi(k) != in.top[n].pi(out.pi(k))) {
                    comm = false;
                    rep.add("t30:i81", false, "k=" + ns(k) + " alpha=" + ns(n));
                    break;
                }
    }
    if (comm) rep.add("t30:i81", true, "thresholds " + join_nats(out.i81_threshold));
    // i82
    {
        bool ok = true;
        std::string w;
        for (Nat m = 0; m + 1 < N && ok; ++m) {
            std::set<Nat> img;
            for (Nat k : out.psi) img.insert(in.top[m].pi(k));
            for (Nat n = m; n + 1 < N && ok; ++n)
                for (Nat u : in.D[m].range(cal.k(m, n), cal.k(m, n + 1)))
                    if (!img.count(u)) { ok = false; w = "D_" + ns(m) + " point " + ns(u); break; }
        }
        rep.add("t30:i82", ok, ok ? "D_m[K_{m,n},K_{m,n+1}) inside pi''Set(e*)" : w);
    }
    rep.add("t30:i83", normal_check(out.triple(), Dtop), "psi = nth(Set(e*))");
    return out;
}

}  // namespace bslab
