#pragma once
#include <random>
#include <vector>

#include "../core/nat.hpp"

namespace bslab {

// mt19937_64 with a portable bounded draw (the std distributions are not portable across libraries)
class Rng {
public:
    explicit Rng(Nat seed) : eng_(seed) {}
    Nat next() { return eng_(); }
    Nat below(Nat n) { return n == 0 ? 0 : next() % n; }
    Nat between(Nat lo, Nat hi) { return lo + below(hi - lo + 1); }  // inclusive
    bool coin(Nat num = 1, Nat den = 2) { return below(den) < num; }
    template <class T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
    Rng fork(Nat salt) { return Rng(next() ^ (salt * 0x9E3779B97F4A7C15ull)); }

private:
    std::mt19937_64 eng_;
};

}  // namespace bslab
