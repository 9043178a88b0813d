#include <gtest/gtest.h>

#include <bslab/calibration/calibration.hpp>
#include <bslab/gen/calibration_gen.hpp>

using namespace bslab;

namespace {

CalibrationInput one_level(SetStream D0) {
    CalibrationInput in;
    in.levels = 1;
    in.pi = {{BlockMap::identity()}};
    in.E = {SetStream::omega()};
    in.C = {SetStream::omega()};
    in.D = {std::move(D0)};
    in.f = Fn::quotient(2);  // C = E = omega is rapid for floor(n/2) but not for the identity
    in.depth = 40;
    in.image_threshold = {{0}};
    in.disjoint_threshold = {0};
    return in;
}

}  // namespace

TEST(Calibrate, OneLevelOmega) {
    auto in = one_level(SetStream::omega());
    auto cal = calibrate(in, 0);
    EXPECT_EQ(cal.k(0, 0), 1u);
    EXPECT_EQ(cal.g[0], 1u);
    EXPECT_TRUE(verify_calibration(in, cal, 0).ok());
}

TEST(Calibrate, OneLevelEvens) {
    auto in = one_level(SetStream::arithmetic(0, 2));
    auto cal = calibrate(in, 0);
    EXPECT_EQ(cal.k(0, 0), 1u);
    EXPECT_EQ(cal.g[0], 2u);
}

TEST(Calibrate, RandomInputsPassAllClauses) {
    Rng rng(7);
    for (int i = 0; i < 12; ++i) {
        Nat levels = rng.between(1, 5);
        auto in = random_calibration_input(rng, levels, 60);
        auto cal = calibrate(in, levels - 1);
        auto rep = verify_calibration(in, cal, levels - 1);
        EXPECT_TRUE(rep.ok()) << rep.text();
        for (Nat n = 1; n < levels; ++n)
            for (Nat m = 0; m < n; ++m) EXPECT_GT(cal.k(m, n), cal.k(m, n - 1));
    }
}

TEST(Calibrate, MutationsAreCaught) {
    Rng rng(11);
    int caught = 0, total = 0;
    for (int i = 0; i < 20; ++i) {
        Nat levels = rng.between(2, 4);
        auto in = random_calibration_input(rng, levels, 40);
        auto cal = calibrate(in, levels - 1);
        std::string what;
        auto bad = mutate_calibration(cal, rng, &what);
        auto rep = verify_calibration(in, bad, levels - 1);
        ++total;
        if (!rep.ok()) ++caught;
        else ADD_FAILURE() << "mutation survived: " << what << "\n" << rep.text();
        if (what.front() == 'K') {
            bool clause_caught = false;
            for (const auto& l : rep.lines())
                if (!l.pass && l.tag != "t7:g-least") clause_caught = true;
            EXPECT_TRUE(clause_caught) << what;
        }
    }
    EXPECT_EQ(caught, total);
}

TEST(Calibrate, IdentityScheduleRejectsOmega) {
    auto in = one_level(SetStream::omega());
    in.f = Fn::identity();
    EXPECT_THROW(calibrate(in, 0), PreconditionFailed);
}

TEST(Calibrate, BrokenCertificateIsPrecondition) {
    auto in = one_level(SetStream::arithmetic(0, 2));
    in.C = {SetStream::arithmetic(0, 4)};
    in.E = {SetStream::arithmetic(0, 4)};
    EXPECT_THROW(calibrate(in, 0), PreconditionFailed);
}
