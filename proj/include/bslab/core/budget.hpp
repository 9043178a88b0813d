#pragma once
#include <atomic>
#include <cstdlib>
#include <string>

#include "nat.hpp"

namespace bslab {

inline constexpr Nat kFallbackBudget = 200'000'000;

inline std::atomic<Nat>& budget_slot() {
    static std::atomic<Nat> slot{kFallbackBudget};
    return slot;
}

// Budget captured by every stream node at construction.
inline Nat default_budget() { return budget_slot().load(std::memory_order_relaxed); }
inline void set_default_budget(Nat b) { budget_slot().store(b, std::memory_order_relaxed); }

// Reads BSLAB_BUDGET; returns fallback when unset or malformed.
inline Nat budget_from_env(Nat fallback = kFallbackBudget) {
    const char* v = std::getenv("BSLAB_BUDGET");
    if (!v || !*v) return fallback;
    char* end = nullptr;
    unsigned long long x = std::strtoull(v, &end, 10);
    if (!end || *end != '\0' || x == 0) return fallback;
    return static_cast<Nat>(x);
}

}  // namespace bslab
