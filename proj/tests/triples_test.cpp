#include <gtest/gtest.h>

#include <bslab/triples/triples.hpp>

using namespace bslab;

TEST(NormalCheck, StandardTripleIsNormal) {
    auto t = NormalTriple::standard(BlockSeq::triangular());
    EXPECT_TRUE(normal_check(t, 40).ok);
}

TEST(NormalCheck, ParityValuesFail) {
    auto c = BlockSeq::triangular();
    auto standard = BlockMap::normal(c, Fn::identity());
    NormalTriple t{standard, Fn::derived("mod2", [](Nat l) { return l % 2; }), c};
    EXPECT_FALSE(normal_check(t, 20).ok);
}

TEST(NormalCheck, ConstantRangeFails) {
    auto c = BlockSeq::intervals(1, 1, 1, 1);
    auto t = NormalTriple::of(c, Fn::constant(7));
    auto v = normal_check(t, 20);
    EXPECT_FALSE(v.ok);
    EXPECT_EQ(v.clause, "range");
}

TEST(NormalCheck, NonzeroOffSupportFails) {
    auto c = BlockSeq::intervals(1, 1, 1, 1);
    auto good = NormalTriple::of(c, Fn::identity());
    EXPECT_TRUE(normal_check(good, 20).ok);
    NormalTriple bad{BlockMap::quotient(1, 1), Fn::identity(), BlockSeq::triangular()};
    // identity map agrees with nothing block-constant
    EXPECT_FALSE(normal_check(bad, 20).ok);
}

TEST(EventualMonotone, Examples) {
    auto c = BlockSeq::triangular();
    auto t = NormalTriple::standard(c);
    EXPECT_EQ(eventual_monotone_bound(t, c, 30).threshold, 0u);
    auto d2 = BlockSeq::select(c, Fn::linear(2, 0), std::nullopt, true, Take::all);
    EXPECT_EQ(eventual_monotone_bound(t, d2, 30).threshold, 0u);
    // base c starts at 10; d(0) sits below the support
    auto cb = BlockSeq::intervals(10, 1, 1, 0);
    auto tb = NormalTriple::standard(cb);
    std::vector<Block> db{{0}};
    for (Nat m = 1; m < 30; ++m) db.push_back(cb.block(2 * m));
    auto d = BlockSeq::table(db);
    auto r = eventual_monotone_bound(tb, d, 30);
    EXPECT_EQ(r.threshold, d.min_of(1));
    EXPECT_EQ(r.le_index, 1u);
}

TEST(FiberBlocks, OmegaGivesSingletons) {
    auto c = BlockSeq::triangular();
    auto t = NormalTriple::standard(c);
    auto fb = fiber_blocks(t, SetStream::omega(), c, 0, 25);
    for (Nat n = 0; n < 25; ++n) EXPECT_EQ(fb.F[n], (std::vector<Nat>{n}));
    EXPECT_TRUE(fb.chain.ok);
}

TEST(FiberBlocks, EvensGiveEvenBlocks) {
    auto c = BlockSeq::triangular();
    auto t = NormalTriple::standard(c);
    auto fb = fiber_blocks(t, SetStream::arithmetic(0, 2), c, 0, 25);
    for (Nat n = 0; n < 25; ++n) EXPECT_EQ(fb.F[n], (std::vector<Nat>{2 * n}));
    EXPECT_TRUE(fb.chain.ok);
}

TEST(FiberBlocks, ThresholdTwo) {
    auto c = BlockSeq::triangular();
    auto t = NormalTriple::standard(c);
    auto a = SetStream::arithmetic(2, 2);  // psi-values of every other block past 2
    auto fb = fiber_blocks(t, a, c, 2, 20);
    for (Nat n = 0; n < 20; ++n) EXPECT_GE(fb.min_above[n], 2u);
    EXPECT_TRUE(fb.chain.ok);
}

TEST(FiberBlocks, MissingTargetIsPrecondition) {
    auto c = BlockSeq::triangular();
    auto t = NormalTriple::of(c, Fn::linear(2, 0));
    EXPECT_THROW(fiber_blocks(t, SetStream::omega(), c, 0, 5), PreconditionFailed);
}

TEST(BlockMaps, LazyCompositionMatchesTabulation) {
    auto c = BlockSeq::triangular();
    auto inner = BlockMap::normal(c, Fn::identity());
    auto outer = BlockMap::quotient(2, 3);
    auto lazy = BlockMap::compose(outer, inner);
    std::vector<Nat> tab;
    for (Nat k = 0; k < 200; ++k) tab.push_back(2 * (inner(k) / 3));
    auto eager = BlockMap::table(tab);
    for (Nat k = 0; k < 200; ++k) ASSERT_EQ(lazy(k), eager(k));
}
