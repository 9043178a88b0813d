#pragma once
#include <set>
#include <string>
#include <vector>

#include "../calibration/calibration.hpp"
#include "../core/poset.hpp"
#include "../triples/triples.hpp"

namespace bslab {

struct LiftResult {
    std::vector<BlockMap> pi;              // pi_m, m <= levels-2
    std::vector<std::vector<Nat>> psi;     // psi_m on [0, L_{N-1})
    BlockSeq base = BlockSeq::table({});   // b_m = e
    Nat domain = 0;                        // L_{N-1}
    Report report{"lift"};

    NormalTriple triple(Nat m) const { return {pi.at(m), Fn::table(psi.at(m)), base}; }
};

// E_k = omega and f = id on the inspected prefix
inline void require_lift_input(const CalibrationInput& in) {
    for (Nat n = 0; n < in.levels; ++n)
        for (Nat k = 0; k < in.depth; ++k)
            if (in.E.at(n).nth(k) != k)
                throw PreconditionFailed("t101:E-omega", "E_" + std::to_string(n) + "(" + std::to_string(k) + ")");
    for (Nat k = 0; k < in.depth; ++k)
        if (in.f(k) != k) throw PreconditionFailed("t101:f-id", "f(" + std::to_string(k) + ")");
    if (in.levels < 2) throw PreconditionFailed("t101:levels", "at least two levels are needed for one window");
}

inline LiftResult lift(const CalibrationInput& in, const Calibration& cal, const BlockSeq& e) {
    require_lift_input(in);
    const Nat N = in.levels;
    if (cal.level.size() + 1 < N) throw PreconditionFailed("t101:calibration", "calibration shorter than system");
    LiftResult out;
    out.base = e;
    out.domain = cal.L.at(N - 1);
    for (Nat m = 0; m + 1 < N; ++m) {
        std::vector<Nat> v;
        v.reserve(out.domain);
        for (Nat n = 0; n + 1 < N; ++n) {
            const auto& rec = cal.level[n];
            for (Nat j = 0; j < rec.R; ++j) v.push_back(n < m ? 0 : in.map(n, m)(rec.z[j]));
        }
        out.pi.push_back(BlockMap::normal(e, Fn::table(v)));
        out.psi.push_back(std::move(v));
    }

    auto& rep = out.report;
    rep.note("L", join_nats(cal.L));
    const Nat top = out.domain;
    // i105
    bool comm = true;
    for (Nat l = 0; l + 1 < N && comm; ++l)
        for (Nat b = cal.L[l]; b < top && comm; ++b)
            for (Nat k : e.block(b))
                for (Nat m = 0; m <= l; ++m)
                    if (out.pi[m](k) != in.map(l, m)(out.pi[l](k))) {
                        comm = false;
                        rep.add("t101:i105", false, "k=" + std::to_string(k) + " m=" + std::to_string(m) +
                                                        " l=" + std::to_string(l));
                        break;
                    }
    if (comm) rep.add("t101:i105", true, "blocks [L_l, " + std::to_string(top) + ")");
    // i104
    bool cover = true;
    for (Nat m = 0; m + 1 < N && cover; ++m) {
        std::set<Nat> vals(out.psi[m].begin(), out.psi[m].end());
        for (Nat n = m; n + 1 < N && cover; ++n)
            for (Nat u : in.D[m].range(cal.k(m, n), cal.k(m, n + 1)))
                if (!vals.count(u)) {
                    cover = false;
                    rep.add("t101:i104", false, "D_" + std::to_string(m) + " point " + std::to_string(u) +
                                                    " missing from pi_m''Set(e)");
                    break;
                }
    }
    if (cover) rep.add("t101:i104", true, "windows D_m[K_{m,n},K_{m,n+1})");
    // i106
    for (Nat m = 0; m + 1 < N; ++m)
        rep.add("t101:i106(" + std::to_string(m) + ")", normal_check(out.triple(m), top), "b_m = e");
    return out;
}

}  // namespace bslab
