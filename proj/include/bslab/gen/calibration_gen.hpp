#pragma once
#include <set>

#include "../calibration/calibration.hpp"
#include "rng.hpp"

namespace bslab {

namespace detail {

// values scale*y + off for y in residues (within [1,P]) mod P, as one periodic stream
inline SetStream residue_stream(Nat P, const std::vector<std::pair<Nat, Nat>>& entries, Nat scale) {
    std::vector<Nat> offs;
    for (auto [r, off] : entries) offs.push_back(scale * r + off);
    std::sort(offs.begin(), offs.end());
    offs.erase(std::unique(offs.begin(), offs.end()), offs.end());
    std::vector<Nat> gaps;
    for (std::size_t i = 1; i < offs.size(); ++i) gaps.push_back(offs[i] - offs[i - 1]);
    gaps.push_back(offs.front() + scale * P - offs.back());
    return SetStream::periodic(offs.front(), gaps);
}

inline std::vector<Nat> random_residues(Rng& rng, Nat P, bool odd_only, Nat keep_num, Nat keep_den) {
    std::vector<Nat> out;
    for (Nat r = 1; r <= P; ++r)
        if ((!odd_only || r % 2 == 1) && rng.coin(keep_num, keep_den)) out.push_back(r);
    return out;
}

}  // namespace detail

// Admissible random input: level n lives on multiples of u_n = 8*2^n, pi_{n+1,n}(x) = 2*floor(x/4)
// sends position y to position y, D_n sits on odd positions so the levels are disjoint past a junk prefix.
inline CalibrationInput random_calibration_input(Rng& rng, Nat levels, Nat depth) {
    CalibrationInput in;
    in.levels = levels;
    in.depth = depth;
    const Nat P = 2 * rng.between(3, 6);
    auto R = detail::random_residues(rng, P, true, 1, 2);
    Nat core = 2 * rng.below(P / 2) + 1;
    if (std::find(R.begin(), R.end(), core) == R.end()) R.push_back(core);
    std::sort(R.begin(), R.end());
    in.f = rng.coin() ? Fn::identity() : Fn::linear(2, 0);
    auto step = BlockMap::quotient(2, 4);
    for (Nat n = 0; n < levels; ++n) {
        Nat u = Nat(8) << n;
        std::set<Nat> A(R.begin(), R.end());
        for (Nat r : detail::random_residues(rng, P, false, 1, 3)) A.insert(r);
        auto B = detail::random_residues(rng, P, false, 1, 3);
        std::vector<std::pair<Nat, Nat>> entries;
        for (Nat r : A) entries.push_back({r, 0});
        for (Nat r : B) entries.push_back({r, 2});
        in.C.push_back(detail::residue_stream(P, entries, u));
        in.E.push_back(SetStream::omega());
        std::vector<Nat> Rn;
        for (Nat r : R)
            if (r == core || rng.coin(2, 3)) Rn.push_back(r);
        std::vector<std::pair<Nat, Nat>> dent;
        for (Nat r : Rn) dent.push_back({r, 0});
        auto tail = detail::residue_stream(P, dent, u);
        std::set<Nat> junk;
        Nat J = rng.below(4);
        while (junk.size() < J) junk.insert(8 * rng.below(6) + rng.between(1, 7));  // off every lattice
        in.D.push_back(junk.empty() ? tail : SetStream::with_prefix({junk.begin(), junk.end()}, tail));
        in.disjoint_threshold.push_back(junk.size());
        std::vector<BlockMap> row;
        for (Nat m = 0; m < n; ++m) {
            BlockMap p = step;
            for (Nat k = m + 1; k < n; ++k) p = BlockMap::compose(step, p);
            row.push_back(p);
        }
        row.push_back(BlockMap::identity());
        in.pi.push_back(row);
    }
    for (Nat n = 0; n < levels; ++n) {
        std::vector<Nat> t;
        for (Nat m = 0; m <= n; ++m) t.push_back(in.disjoint_threshold[m]);
        in.image_threshold.push_back(t);
    }
    return in;
}

// perturb one K entry upward or one g' entry downward
inline Calibration mutate_calibration(Calibration cal, Rng& rng, std::string* what = nullptr) {
    std::vector<Nat> gpos;
    for (Nat n = 0; n < cal.g.size(); ++n)
        if (cal.g[n] > 0) gpos.push_back(n);
    if (!gpos.empty() && rng.coin()) {
        Nat n = rng.pick(gpos);
        --cal.g[n];
        if (what) *what = "g'(" + std::to_string(n) + ")-1";
    } else {
        Nat n = rng.below(cal.K.size());
        Nat m = rng.below(cal.K[n].size());
        ++cal.K[n][m];
        if (what) *what = "K_{" + std::to_string(m) + "," + std::to_string(n) + "}+1";
    }
    return cal;
}

}  // namespace bslab
