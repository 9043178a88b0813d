#pragma once
#include <algorithm>
#include <set>
#include <vector>

#include "objects.hpp"

namespace bslab {

// rho = (D, K, pi); K[n][m] holds K_{m,n} for m <= n, pi[n][m] holds pi_{n,m}
struct RhoTriple {
    std::vector<SetStream> D;
    std::vector<std::vector<Nat>> K;
    std::vector<std::vector<BlockMap>> pi;

    Nat k(Nat m, Nat n) const {
        if (n >= K.size() || m >= K[n].size())
            throw PreconditionFailed("K-defined", "K_{" + std::to_string(m) + "," + std::to_string(n) + "} undefined");
        return K[n][m];
    }
    const BlockMap& map(Nat n, Nat m) const {
        if (n >= pi.size() || m >= pi[n].size())
            throw PreconditionFailed("pi-defined", "pi_{" + std::to_string(n) + "," + std::to_string(m) + "} undefined");
        return pi[n][m];
    }
    // D_m[K_{m,n}, K_{m,n+1})
    std::vector<Nat> window(Nat m, Nat n) const { return D.at(m).range(k(m, n), k(m, n + 1)); }
};

struct DeltaLevel {
    std::vector<std::vector<Nat>> H;  // H[m] = H_{m,n}
    std::vector<Nat> delta;           // sorted union
    Nat L = 0;                        // L_n
    Nat L_next = 0;                   // L_{n+1}
};

inline DeltaLevel delta_level(const RhoTriple& rho, Nat n, Nat L_n) {
    DeltaLevel out;
    out.L = L_n;
    std::vector<std::vector<Nat>> win(n + 1);
    for (Nat m = 0; m <= n; ++m) win[m] = rho.window(m, n);
    std::set<Nat> all;
    for (Nat m = 0; m <= n; ++m) {
        std::set<Nat> hit;
        for (Nat mp = m + 1; mp <= n; ++mp)
            for (Nat x : win[mp]) hit.insert(rho.map(mp, m)(x));
        std::vector<Nat> h;
        for (Nat k : win[m])
            if (!hit.count(k)) h.push_back(k);
        all.insert(h.begin(), h.end());
        out.H.push_back(std::move(h));
    }
    out.delta.assign(all.begin(), all.end());
    out.L_next = add(L_n, out.delta.size());
    return out;
}

// levels 0..n_count-1
inline std::vector<DeltaLevel> delta_levels(const RhoTriple& rho, Nat n_count) {
    std::vector<DeltaLevel> out;
    Nat L = 0;
    for (Nat n = 0; n < n_count; ++n) {
        out.push_back(delta_level(rho, n, L));
        L = out.back().L_next;
    }
    return out;
}

inline DeltaLevel delta_rho(const RhoTriple& rho, Nat n) { return delta_levels(rho, n + 1).back(); }

}  // namespace bslab
