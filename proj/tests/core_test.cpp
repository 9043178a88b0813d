#include <gtest/gtest.h>

#include <bslab/core/poset.hpp>
#include <bslab/core/rho.hpp>

using namespace bslab;

namespace {

Nat t_by_loop(Nat m) {
    Nat sum = 0;
    for (Nat k = m * (m + 1) / 2; k < (m + 1) * (m + 2) / 2; ++k) sum += k + 1;
    return sum;
}

BlockSeq blocks(std::vector<Block> b) { return BlockSeq::table(std::move(b)); }

}  // namespace

TEST(Notation, STValues) {
    EXPECT_EQ(tri_s(0), 0u);
    EXPECT_EQ(tri_t(0), 1u);
    EXPECT_EQ(tri_s(2), 3u);
    EXPECT_EQ(tri_t(2), 15u);
    EXPECT_EQ(tri_s(3), 6u);
    EXPECT_EQ(tri_t(3), 34u);  // 7+8+9+10
}

TEST(Notation, TAgreesWithLoop) {
    for (Nat m = 0; m < 300; ++m) ASSERT_EQ(tri_t(m), t_by_loop(m)) << m;
}

TEST(Notation, OverflowIsReported) {
    EXPECT_THROW(tri_t(Nat(1) << 40), DepthExceeded);
    EXPECT_THROW(mul(Nat(1) << 40, Nat(1) << 40), DepthExceeded);
}

TEST(Streams, ArithmeticAndPeriodic) {
    auto evens = SetStream::arithmetic(0, 2);
    EXPECT_EQ(evens.prefix(4), (std::vector<Nat>{0, 2, 4, 6}));
    EXPECT_TRUE(evens.contains(10));
    EXPECT_FALSE(evens.contains(11));
    auto p = SetStream::periodic(1, {1, 3});
    EXPECT_EQ(p.prefix(5), (std::vector<Nat>{1, 2, 5, 6, 9}));
    for (Nat x = 0; x < 40; ++x) {
        Nat i = p.lower_bound(x);
        ASSERT_GE(p.nth(i), x);
        if (i > 0) { ASSERT_LT(p.nth(i - 1), x); }
    }
}

TEST(Streams, NthIsStable) {
    auto s = SetStream::image(SetStream::omega(), BlockMap::quotient(3, 2));
    auto a = s.prefix(50);
    auto b = s.prefix(50);
    EXPECT_EQ(a, b);
    EXPECT_EQ(s.nth(7), a[7]);
}

TEST(Streams, TableDepthIsDeclared) {
    auto t = SetStream::table({1, 4, 9});
    EXPECT_EQ(t.nth(2), 9u);
    EXPECT_THROW(t.nth(3), DepthExceeded);
}

TEST(Streams, BudgetExhaustionIsSignalled) {
    Nat old = default_budget();
    set_default_budget(100);
    auto empty = SetStream::intersection(SetStream::arithmetic(0, 2), SetStream::arithmetic(1, 2));
    set_default_budget(old);
    EXPECT_THROW(empty.nth(0), DepthExceeded);
}

TEST(Streams, WithPrefixSkipsSmallTail) {
    auto s = SetStream::with_prefix({1, 5}, SetStream::arithmetic(0, 3));
    EXPECT_EQ(s.prefix(5), (std::vector<Nat>{1, 5, 6, 9, 12}));
    EXPECT_EQ(s.lower_bound(6), 2u);
}

TEST(BlockSeqCheck, Examples) {
    EXPECT_TRUE(block_seq_check(BlockSeq::triangular(), 10).ok);
    auto size_bad = block_seq_check(blocks({{0, 1}, {2}}), 2);
    EXPECT_FALSE(size_bad.ok);
    EXPECT_EQ(size_bad.index, 0u);
    EXPECT_EQ(size_bad.clause, "size");
    auto sep_bad = block_seq_check(blocks({{5}, {3, 4}}), 2);
    EXPECT_FALSE(sep_bad.ok);
    EXPECT_EQ(sep_bad.index, 0u);
    EXPECT_EQ(sep_bad.clause, "separation");
}

TEST(Sset, Examples) {
    auto c = BlockSeq::triangular();
    EXPECT_EQ(sset(c).prefix(6), (std::vector<Nat>{0, 1, 2, 3, 4, 5}));
    EXPECT_EQ(sset(c, 1).prefix(4), (std::vector<Nat>{1, 2, 3, 4}));
    // thinned variant: even members of every block; brute force union
    auto ev = BlockSeq::select(c, std::nullopt, SetStream::arithmetic(0, 2), true, Take::all);
    std::vector<Nat> brute;
    for (Nat n = 0; brute.size() < 30; ++n)
        for (Nat x = n * (n + 1) / 2; x < (n + 1) * (n + 2) / 2; ++x)
            if (x % 2 == 0) brute.push_back(x);
    brute.resize(30);
    EXPECT_EQ(sset(ev).prefix(30), brute);
}

TEST(LeAt, Examples) {
    auto c = BlockSeq::triangular();
    auto r = le_at(c, c, 0, 20);
    ASSERT_TRUE(r.ok);
    for (auto [m, n] : r.witness) EXPECT_EQ(m, n);
    auto c2 = BlockSeq::select(c, Fn::linear(2, 0), std::nullopt, true, Take::all);
    auto r2 = le_at(c2, c, 0, 20);
    ASSERT_TRUE(r2.ok);
    for (auto [m, n] : r2.witness) EXPECT_EQ(n, 2 * m);
    auto d = blocks({{0, 1}, {3, 4, 5}});
    auto r3 = le_at(d, c, 0, 2);
    EXPECT_FALSE(r3.ok);
    EXPECT_EQ(r3.failed_at, 0u);
}

TEST(DeltaRho, SingleRow) {
    RhoTriple rho;
    rho.D = {SetStream::arithmetic(0, 2)};
    rho.K = {{1}, {3}};
    rho.pi = {{BlockMap::identity()}};
    auto d = delta_rho(rho, 0);
    EXPECT_EQ(d.delta, (std::vector<Nat>{2, 4}));
    EXPECT_EQ(d.L_next, 2u);
}

TEST(DeltaRho, TwoRowsExcludeHitPoints) {
    RhoTriple rho;
    rho.D = {SetStream::arithmetic(0, 2), SetStream::arithmetic(1, 2)};
    rho.K = {{0}, {1, 1}, {4, 3}};
    rho.pi = {{BlockMap::identity()}, {BlockMap::quotient(2, 2), BlockMap::identity()}};
    auto lv = delta_levels(rho, 2);
    EXPECT_EQ(lv[0].delta, (std::vector<Nat>{0}));
    EXPECT_EQ(lv[1].H[0], (std::vector<Nat>{6}));
    EXPECT_EQ(lv[1].H[1], (std::vector<Nat>{3, 5}));
    EXPECT_EQ(lv[1].delta, (std::vector<Nat>{3, 5, 6}));
    EXPECT_EQ(lv[1].L, 1u);
    EXPECT_EQ(lv[1].L_next, 4u);
    // top row H_{n,n} is the whole window
    EXPECT_EQ(lv[1].H[1], rho.window(1, 1));
}

TEST(RapidWitness, Examples) {
    auto pow2 = SetStream::geometric(1, 2);
    EXPECT_TRUE(rapid_witness_check(SetStream::omega(), pow2, Fn::identity(), 30).ok);
    auto bad = rapid_witness_check(SetStream::omega(), SetStream::omega(), Fn::linear(1, 1), 10);
    EXPECT_FALSE(bad.ok);
    EXPECT_EQ(bad.index, 0u);
    auto y = SetStream::intersection(SetStream::arithmetic(0, 2), pow2);
    EXPECT_EQ(y.prefix(4), (std::vector<Nat>{2, 4, 8, 16}));
    EXPECT_TRUE(rapid_witness_check(SetStream::arithmetic(0, 2), pow2, Fn::identity(), 20).ok);
}
