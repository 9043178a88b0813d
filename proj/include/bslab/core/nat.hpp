#pragma once
#include <cstdint>
#include <string>

#include "errors.hpp"

namespace bslab {

using Nat = std::uint64_t;

inline Nat add(Nat a, Nat b) {
    Nat r;
    if (__builtin_add_overflow(a, b, &r)) throw DepthExceeded("overflow in addition");
    return r;
}

inline Nat mul(Nat a, Nat b) {
    Nat r;
    if (__builtin_mul_overflow(a, b, &r)) throw DepthExceeded("overflow in multiplication");
    return r;
}

inline Nat sub(Nat a, Nat b) {
    if (b > a) throw PreconditionFailed("arith", "negative difference " + std::to_string(a) + "-" + std::to_string(b));
    return a - b;
}

inline Nat pow_nat(Nat base, Nat e) {
    Nat r = 1;
    for (Nat i = 0; i < e; ++i) r = mul(r, base);
    return r;
}

// s(m) = m(m+1)/2
inline Nat tri_s(Nat m) {
    Nat a = m, b = add(m, 1);
    if (a % 2 == 0) a /= 2; else b /= 2;
    return mul(a, b);
}

// t(m) = sum of (k+1) over s(m) <= k < s(m+1)
inline Nat tri_t(Nat m) {
    // m+1 terms from s(m)+1 up to s(m+1)
    Nat terms = add(m, 1);
    Nat ends = add(add(tri_s(m), 1), tri_s(add(m, 1)));
    if (terms % 2 == 0) terms /= 2; else ends /= 2;
    return mul(terms, ends);
}

}  // namespace bslab
