#include <gtest/gtest.h>

#include <chrono>

#include <bslab/gen/construction_gen.hpp>

using namespace bslab;

namespace {

FusionInput constant_chain(Nat length) {
    FusionInput in;
    auto c = BlockSeq::triangular();
    in.t = NormalTriple::standard(c);
    SetStream D = SetStream::arithmetic(2, 2);  // D(n) = C(2n+2) with C = omega
    for (Nat j = 0; j < length; ++j) {
        in.chain.push_back(c);
        in.Dk.push_back(D);
        in.witness.push_back(Fn::linear(2, 2));
        in.D_threshold.push_back(0);
    }
    in.D = D;
    return in;
}

}  // namespace

TEST(Fuse, ConstantTriangularChain) {
    auto in = constant_chain(3);
    auto out = fuse(in, 14);
    EXPECT_EQ(out.g, (std::vector<Nat>{0, 2, 6, 14}));
    auto c = BlockSeq::triangular();
    for (Nat l = 0; l < 14; ++l) {
        Block full = c.block(2 * l + 2);
        EXPECT_EQ(out.d.block(l), Block(full.begin(), full.begin() + l + 1)) << l;
        EXPECT_EQ(out.source_m[l], 2 * l + 2);
    }
    EXPECT_TRUE(out.report.ok()) << out.report.text();
}

TEST(Fuse, MissingSpacingIsRapidityFailure) {
    auto in = constant_chain(2);
    in.Dk[1] = SetStream::arithmetic(1, 2);  // D_1(0) = C(1), index below 2
    in.witness.clear();
    try {
        fuse(in, 10);
        FAIL() << "accepted";
    } catch (const PreconditionFailed& e) {
        EXPECT_EQ(e.clause(), "t36:rapid");
    }
}

TEST(Fuse, WrongWitnessRejected) {
    auto in = constant_chain(2);
    in.witness[0] = Fn::linear(2, 3);
    EXPECT_THROW(fuse(in, 10), PreconditionFailed);
}

TEST(Fuse, RandomInstances) {
    Rng rng(36);
    for (int i = 0; i < 15; ++i) {
        auto in = random_fusion_input(rng);
        auto out = fuse(in, 30);
        EXPECT_TRUE(out.report.ok()) << i << "\n" << out.report.text();
        for (Nat l = 0; l + 1 < 30; ++l) EXPECT_LT(out.d.max_of(l), out.d.min_of(l + 1));
    }
}

TEST(Fuse, Deterministic) {
    Rng a(5), b(5);
    auto x = fuse(random_fusion_input(a), 20), y = fuse(random_fusion_input(b), 20);
    for (Nat l = 0; l < 20; ++l) EXPECT_EQ(x.d.block(l), y.d.block(l));
}

TEST(Lift, TwoLevelSystem) {
    // level 1 on multiples of 16, level 0 on multiples of 8
    CalibrationInput in;
    in.levels = 2;
    in.pi = {{BlockMap::identity()}, {BlockMap::quotient(2, 4), BlockMap::identity()}};
    in.E = {SetStream::omega(), SetStream::omega()};
    in.C = {SetStream::arithmetic(8, 8), SetStream::arithmetic(16, 16)};
    in.D = {SetStream::arithmetic(8, 16), SetStream::arithmetic(16, 32)};
    in.f = Fn::identity();
    in.depth = 30;
    in.image_threshold = {{0}, {0, 0}};
    in.disjoint_threshold = {0, 0};
    auto cal = calibrate(in, 1);
    auto e = BlockSeq::intervals(0, 1, 2, 1);
    auto out = lift(in, cal, e);
    ASSERT_EQ(out.pi.size(), 1u);
    const auto& rec = cal.level[0];
    for (Nat j = 0; j < rec.R; ++j) {
        EXPECT_EQ(out.psi[0][rec.L + j], rec.z[j]);
        for (Nat k : e.block(rec.L + j)) EXPECT_EQ(out.pi[0](k), rec.z[j]);
    }
    EXPECT_TRUE(out.report.ok()) << out.report.text();
}

TEST(Lift, ZeroBelowLevel) {
    Rng rng(101);
    auto in = random_lift_input(rng, 3, 40);
    auto cal = calibrate(in, 2);
    auto out = lift(in, cal, random_intervals(rng));
    for (Nat j = 0; j < cal.level[0].R; ++j) EXPECT_EQ(out.psi[1][j], 0u);
    EXPECT_TRUE(out.report.ok()) << out.report.text();
}

TEST(Lift, RandomSystems) {
    Rng rng(1010);
    for (int i = 0; i < 10; ++i) {
        Nat levels = rng.between(2, 4);
        auto in = random_lift_input(rng, levels, 40);
        auto cal = calibrate(in, levels - 1);
        auto out = lift(in, cal, random_intervals(rng));
        EXPECT_TRUE(out.report.ok()) << out.report.text();
        for (Nat m = 0; m < out.psi.size(); ++m)
            for (Nat l = 0; l + 1 < out.domain; ++l) EXPECT_LE(out.psi[m][l], out.psi[m][l + 1]);
    }
}

TEST(Lift, RejectsNonOmegaE) {
    Rng rng(3);
    auto in = random_lift_input(rng, 2, 20);
    auto cal = calibrate(in, 1);
    in.E[0] = SetStream::arithmetic(0, 2);
    EXPECT_THROW(lift(in, cal, random_intervals(rng)), PreconditionFailed);
}

TEST(Diagonal, DegenerateTower) {
    Rng rng(30);
    auto in = random_tower_input(rng, {2, true, std::nullopt});
    auto out = diagonal(in);
    EXPECT_TRUE(out.report.ok()) << out.report.text();
    Nat D = out.psi.size();
    EXPECT_TRUE(le_at(out.d_star, in.e, 0, D));
}

TEST(Diagonal, ScheduleTwoN) {
    Rng rng(31);
    auto in = random_tower_input(rng, {2, false, Fn::linear(2, 0)});
    auto out = diagonal(in);
    ASSERT_TRUE(out.report.ok()) << out.report.text();
    for (Nat k = 0; k < out.i84_witness.size(); ++k) EXPECT_GE(out.i84_witness[k], 2 * k);
}

TEST(Diagonal, RandomTowers) {
    Rng rng(300);
    for (int i = 0; i < 6; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        auto in = random_tower_input(rng, {rng.between(2, 3), false, std::nullopt});
        auto out = diagonal(in);
        EXPECT_TRUE(out.report.ok()) << out.report.text();
        Nat L = out.i84_witness.size();
        for (Nat k = 0; k < L; ++k) EXPECT_EQ(out.e_star.block(k).size(), k + 1);
        for (Nat l = 0; l < tri_s(L); ++l) EXPECT_EQ(out.d_star.block(l).size(), l + 1);
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
        EXPECT_LT(ms, 20000);
    }
}
