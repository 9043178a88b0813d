#include <gtest/gtest.h>

#include <bslab/gen/forcing_gen.hpp>

using namespace bslab;

namespace {

std::vector<Nat> block_of(const BlockSeq& c, Nat n) { return c.block(n); }

bool has_tag(const Report& r, const std::string& tag, bool pass) {
    for (const auto& l : r.lines())
        if (l.tag == tag && l.pass == pass) return true;
    return false;
}

TreeContext two_labels(Nat seed) {
    Rng rng(seed);
    TreeOptions opt;
    opt.labels = 2;
    opt.towers = 6;
    return tree_context(rng, opt);
}

}  // namespace

TEST(IntervalBase, ClosedFormMatchesScan) {
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        auto b = IntervalBase::random(rng);
        auto scan = sset(b.seq());
        auto fast = b.set();
        for (Nat p = 0; p < 300; ++p) {
            ASSERT_EQ(fast.nth(p), scan.nth(p));
            ASSERT_EQ(b.pos(scan.nth(p)), p);
        }
        for (Nat x = 0; x < 400; ++x) ASSERT_EQ(fast.lower_bound(x), scan.lower_bound(x));
    }
}

TEST(TreeContext, SurrogateClausesHold) {
    for (Nat seed : {1, 2, 3}) {
        auto tc = two_labels(seed);
        auto rep = check_context(tc.ctx, 8);
        EXPECT_TRUE(rep.ok()) << rep.text();
    }
    auto st = stage_context();
    EXPECT_TRUE(check_context(st.ctx, 4).ok());
}

TEST(TreeContext, TowerImageIsLowerTower) {
    auto tc = two_labels(5);
    BlockMap down = tc.ctx.map(1, 0);
    for (std::size_t i = 0; i < 4; ++i) {
        auto up = tc.ctx.tower_set(1, i), low = tc.ctx.tower_set(0, i);
        std::set<Nat> img;
        for (Nat n = 0; n < 30; ++n) img.insert(down(up.nth(n)));
        for (Nat x : img) EXPECT_TRUE(low.contains(x));
    }
}

TEST(ConditionCheck, SingleLabelConditionPasses) {
    auto [ctx, q] = single_label_context();
    auto rep = check_condition(q, ctx, 12);
    EXPECT_TRUE(rep.ok()) << rep.text();
    EXPECT_TRUE(has_tag(rep, "d14:i16(0)", true));
}

TEST(ConditionCheck, NonMonotonePsiFailsI15) {
    auto [ctx, q] = single_label_context();
    Fn swapped = Fn::derived("swap01", [](Nat n) { return n == 0 ? 1 : n == 1 ? 0 : n; });
    q.X[0].t = NormalTriple::of(q.c, swapped);
    auto rep = check_condition(q, ctx, 12);
    EXPECT_TRUE(rep.failed("d14:i15(0)")) << rep.text();
}

TEST(ConditionCheck, MissingMaxFailsI13) {
    auto [ctx, q] = single_label_context();
    q.X.clear();
    auto rep = check_condition(q, ctx, 12);
    EXPECT_TRUE(rep.failed("d14:i13"));
}

TEST(ConditionCheck, TopNeedsEmptyXAtDeltaZero) {
    GenericContext none;
    EXPECT_TRUE(check_condition(empty_condition(BlockSeq::triangular()), none, 10).ok());
    auto [ctx, q] = single_label_context();
    q.gamma = kTop;
    EXPECT_TRUE(check_condition(q, ctx, 10).failed("d14:i13"));
}

TEST(Order, Reflexive) {
    auto [ctx, q] = single_label_context();
    EXPECT_TRUE(leq_condition(q, q, 12).ok());
}

TEST(Order, ThinOutputIsBelow) {
    auto tc = two_labels(4);
    auto q = tc.condition(1, 0, {0});
    auto r = thin(q, Fn::linear(2, 1), false, tc.ctx, 8);
    EXPECT_TRUE(leq_condition(r.q, q, 8).ok());
    EXPECT_TRUE(check_condition(r.q, tc.ctx, 8).ok());
}

TEST(Order, RedefinedMapFails) {
    auto [ctx, q] = single_label_context();
    Condition q1 = q;
    Block b3 = q.c.block(3);
    Nat k = b3.front();
    BlockMap base = q.X[0].t.pi;
    BlockMap moved = BlockMap::normal(q.c, Fn::derived("bump3", [](Nat n) { return n == 3 ? 4 : n; }));
    q1.X[0].t = NormalTriple{moved, Fn::identity(), q.c};
    auto rep = leq_condition(q1, q, 12);
    EXPECT_TRUE(rep.failed("d14:le-map(0)")) << rep.text();
    EXPECT_NE(moved(k), base(k));
}

// ---------------------------------------------------------------- DecideSet

// block n kept when at least half of c(n) lies in X
std::vector<Nat> brute_X0(const BlockSeq& c, const SetStream& X, Nat count) {
    std::vector<Nat> out;
    for (Nat n = 0; out.size() < count; ++n) {
        Nat in = 0, sz = 0;
        for (Nat x : c.block(n)) {
            ++sz;
            if (X.contains(x)) ++in;
        }
        if (2 * in >= n + 1) out.push_back(n);
    }
    return out;
}

TEST(DecideSet, EvensOnTriangularDeltaZero) {
    GenericContext none;
    auto c = BlockSeq::triangular();
    auto evens = SetStream::arithmetic(0, 2);
    auto X0 = brute_X0(c, evens, 10);
    EXPECT_EQ(X0, (std::vector<Nat>{0, 1, 3, 4, 5, 7, 8, 9, 11, 12}));
    // c(2) = {3,4,5} holds one even, so X_0 is not all of omega
    EXPECT_EQ(std::count(X0.begin(), X0.end(), 2), 0);

    auto r = extend_condition(empty_condition(c), DecideSet{evens}, none, 10);
    EXPECT_EQ(r.branch, "Ia:X_0");
    EXPECT_TRUE(r.report.ok()) << r.report.text();
    for (Nat n = 0; n < 4; ++n) {
        std::vector<Nat> want;
        for (Nat x : c.block(X0[2 * n + 1]))
            if (x % 2 == 0 && want.size() < n + 1) want.push_back(x);
        EXPECT_EQ(block_of(r.q.c, n), want);
    }
    EXPECT_EQ(block_of(r.q.c, 0), (std::vector<Nat>{2}));
    EXPECT_EQ(block_of(r.q.c, 1), (std::vector<Nat>{10, 12}));
    EXPECT_EQ(block_of(r.q.c, 2), (std::vector<Nat>{28, 30, 32}));
    EXPECT_EQ(block_of(r.q.c, 3), (std::vector<Nat>{46, 48, 50, 52}));
}

TEST(DecideSet, ComplementBranchIsExact) {
    GenericContext none;
    auto c = BlockSeq::triangular();
    auto sparse = SetStream::arithmetic(0, 5);
    auto r = decide_set(empty_condition(c), sparse, none, 8);
    EXPECT_EQ(r.branch, "Ia:X_1");
    for (Nat n = 0; n < 8; ++n)
        for (Nat x : r.q.c.block(n)) EXPECT_NE(x % 5, 0u);
}

TEST(DecideSet, LabelledCaseIsExact) {
    auto tc = two_labels(8);
    auto q = tc.condition(1, 0, {0});
    for (auto X : {SetStream::arithmetic(0, 2), SetStream::arithmetic(1, 3), SetStream::periodic(0, {1, 3})}) {
        auto r = extend_condition(q, DecideSet{X}, tc.ctx, 6);
        EXPECT_TRUE(r.report.ok()) << r.report.text();
        bool keep = r.branch.find("X_0") != std::string::npos;
        for (Nat n = 0; n < 6; ++n)
            for (Nat x : r.q.c.block(n)) EXPECT_EQ(X.contains(x), keep);
    }
}

// ---------------------------------------------------------------- Thin, Rapidify

TEST(Thin, MoreoverTakesNPlusOne) {
    GenericContext none;
    auto r = thin(empty_condition(BlockSeq::triangular()), Fn::linear(3, 0), true, none, 10);
    EXPECT_TRUE(r.report.ok());
    for (Nat n = 0; n < 10; ++n) {
        EXPECT_EQ(r.m[n], 3 * n);
        EXPECT_EQ(r.q.c.block(n).size(), n + 1);
    }
}

TEST(Rapidify, PowerOfTwoDeltaZero) {
    GenericContext none;
    auto r = extend_condition(empty_condition(BlockSeq::triangular()), Rapidify{Fn::power(2)}, none, 6);
    EXPECT_TRUE(r.report.ok()) << r.report.text();
    auto s = sset(r.q.c);
    for (Nat n = 0; n < 6; ++n) EXPECT_GE(s.nth(n), pow_nat(2, n));
}

TEST(Rapidify, PowerOfTwoOneLabel) {
    auto st = stage_context();
    auto q = st.condition(0, 1);
    auto r = extend_condition(q, Rapidify{Fn::power(2)}, st.ctx, 4);
    EXPECT_TRUE(r.report.ok()) << r.report.text();
    auto s = sset(r.q.c);
    for (Nat n = 0; n < 4; ++n) EXPECT_GE(s.nth(n), pow_nat(2, n));
}

TEST(Rapidify, TooDeepOverflows) {
    GenericContext none;
    EXPECT_THROW(rapidify(empty_condition(BlockSeq::triangular()), Fn::power(2), none, 9), DepthExceeded);
}

// ---------------------------------------------------------------- Kill

TEST(Kill, HalvesDisjointAndChosenEscapes) {
    auto tc = two_labels(9);
    auto q = tc.condition(1, 0, {0});
    auto r = extend_condition(q, Kill{0, Phi::tail(1), std::nullopt}, tc.ctx, 6);
    EXPECT_TRUE(r.report.ok()) << r.report.text();
    ASSERT_TRUE(r.halves);
    std::set<Nat> a, b;
    for (Nat n = 0; n < 6; ++n) {
        auto x = r.halves->first.block(n), y = r.halves->second.block(n);
        EXPECT_EQ(x.size(), n + 1);
        EXPECT_EQ(y.size(), n + 1);
        a.insert(x.begin(), x.end());
        b.insert(y.begin(), y.end());
    }
    for (Nat x : a) EXPECT_EQ(b.count(x), 0u);
}

TEST(Kill, ConstantImageInsideFirstHalfPicksSecond) {
    auto tc = two_labels(9);
    auto q = tc.condition(1, 0, {0});
    auto first = kill(q, 1, Phi::tail(0), std::nullopt, tc.ctx, 6);
    SetStream inside = sset(first.halves->first);
    auto r = extend_condition(q, Kill{1, Phi::constant(inside), std::nullopt}, tc.ctx, 6);
    EXPECT_EQ(r.branch, "d_2");
    EXPECT_TRUE(r.report.ok()) << r.report.text();
}

TEST(Kill, ChooserOverrides) {
    auto tc = two_labels(9);
    auto q = tc.condition(1, 0, {0});
    Chooser pick_second = [](const std::vector<KillProbe>&) { return Half::second; };
    auto r = kill(q, 1, Phi::tail(0), pick_second, tc.ctx, 6);
    EXPECT_EQ(r.chosen, Half::second);
    EXPECT_EQ(r.q.c.block(2), r.halves->second.block(2));
}

// ---------------------------------------------------------------- AddCoordinate, NormalizeMaps, RestrictImage

TEST(AddCoordinate, BelowGammaCommutes) {
    auto tc = two_labels(12);
    auto q = tc.condition(1, 0);
    auto r = extend_condition(q, AddCoordinate{0}, tc.ctx, 8);
    EXPECT_EQ(r.branch, "II:below");
    EXPECT_TRUE(r.report.ok()) << r.report.text();
    ASSERT_TRUE(r.q.has(0));
    BlockMap down = tc.ctx.map(1, 0);
    for (Nat n = 4; n < 8; ++n)
        for (Nat k : r.q.c.block(n)) EXPECT_EQ(r.q.at(0).t.pi(k), down(r.q.at(1).t.pi(k)));
}

TEST(AddCoordinate, PresentIsIdentity) {
    auto tc = two_labels(12);
    auto q = tc.condition(1, 0, {0});
    auto r = add_coordinate(q, 0, tc.ctx, 8);
    EXPECT_EQ(r.branch, "present");
    EXPECT_TRUE(r.q.c.describe() == q.c.describe());
}

TEST(AddCoordinate, AboveGammaNeedsLiftOracle) {
    auto tc = two_labels(12);
    auto q = tc.condition(0, 0);
    try {
        add_coordinate(q, 1, tc.ctx, 8);
        FAIL() << "expected OracleRequired";
    } catch (const OracleRequired& e) {
        EXPECT_EQ(e.obligation(), "d22(1)");
    }
}

TEST(NormalizeMaps, TreeConditionsAlreadyNormal) {
    auto tc = two_labels(13);
    auto q = tc.condition(1, 0, {0});
    auto r = extend_condition(q, NormalizeMaps{0}, tc.ctx, 8);
    EXPECT_EQ(r.branch, "already");
    EXPECT_TRUE(r.report.ok()) << r.report.text();
}

TEST(RestrictImage, TowerSetInsideImage) {
    auto tc = two_labels(14);
    auto q = tc.condition(1, 0);
    auto a = tc.ctx.tower_set(1, 1);
    auto r = extend_condition(q, RestrictImage{1, a}, tc.ctx, 6);
    EXPECT_TRUE(r.report.ok()) << r.report.text();
    for (Nat n = 0; n < 6; ++n)
        for (Nat k : r.q.c.block(n)) EXPECT_TRUE(a.contains(r.q.at(1).t.pi(k)));
}

TEST(RestrictImage, SetOutsideUltrafilterRejected) {
    auto tc = two_labels(14);
    auto q = tc.condition(1, 0);
    auto tower = tc.ctx.tower_set(1, 0);
    auto a = SetStream::where("not-tower", [tower](Nat x) { return !tower.contains(x); });
    EXPECT_THROW(restrict_image(q, 1, a, tc.ctx, 6), PreconditionFailed);
}

// ---------------------------------------------------------------- oracles

TEST(Oracles, PullbackBelowGammaNeedsLift) {
    auto tc = two_labels(15);
    auto q = tc.condition(1, 0, {0});
    auto t1 = NormalTriple::of(BlockSeq::triangular(), Fn::nth_of(tc.ctx.tower_set(0, 0)));
    RKPullback task{t1, BlockSeq::triangular(), 0};
    try {
        extend_condition(q, task, tc.ctx, 6);
        FAIL() << "expected OracleRequired";
    } catch (const OracleRequired& e) {
        EXPECT_EQ(e.obligation(), "d22(1)");
    }
}

TEST(Oracles, SealLimitNeedsLimitDelta) {
    auto tc = two_labels(15);
    auto q = tc.condition(1, 0);
    EXPECT_THROW(seal_limit(q, SealLimit{{1}, {q.c}, {q.at(1).t}}, tc.ctx, 6), PreconditionFailed);
}

TEST(Oracles, ScriptedMembershipUsed) {
    auto tc = two_labels(16);
    tc.ctx.membership = [](Label, const SetStream&, Nat) { return Decision{Decision::Kind::in, 0, 0, 1}; };
    auto q = tc.condition(1, 0);
    auto rep = check_condition(q, tc.ctx, 6);
    EXPECT_TRUE(rep.ok());
    EXPECT_NE(rep.text().find("scripted"), std::string::npos);
}

// ---------------------------------------------------------------- meet

TEST(Meet, SubcaseIIaIndices) {
    GenericContext none;
    auto q = empty_condition(BlockSeq::triangular());
    auto m = meet_chain({q, q, q}, none, 6);
    EXPECT_EQ(m.branch, "IIa");
    ASSERT_GE(m.m.size(), 3u);
    EXPECT_EQ(m.m[0], 0u);
    EXPECT_EQ(m.m[1], 2u);
    EXPECT_EQ(m.m[2], 7u);
    for (std::size_t i = 1; i < m.m.size(); ++i) EXPECT_GT(m.m[i], m.m[i - 1]);
    for (Nat n = 0; n < 3; ++n) EXPECT_EQ(m.q.c.block(n), q.c.block(m.m[n]));
    EXPECT_TRUE(m.report.ok()) << m.report.text();
}

TEST(Meet, SubcaseIIaThinnedChain) {
    GenericContext none;
    auto q0 = empty_condition(BlockSeq::triangular());
    auto q1 = thin(q0, Fn::linear(2, 1), false, none, 12).q;
    auto q2 = thin(q1, Fn::linear(2, 1), false, none, 12).q;
    auto m = meet_chain({q0, q1, q2}, none, 4);
    EXPECT_EQ(m.branch, "IIa");
    EXPECT_TRUE(m.report.ok()) << m.report.text();
}

TEST(Meet, CaseIConstantLabelsKept) {
    auto tc = two_labels(3);
    auto q0 = tc.condition(1, 0, {0});
    auto q1 = thin(q0, Fn::linear(2, 1), false, tc.ctx, 8).q;
    auto q2 = thin(q1, Fn::linear(2, 1), false, tc.ctx, 8).q;
    auto m = meet_chain({q0, q1, q2}, tc.ctx, 8);
    EXPECT_EQ(m.branch, "I");
    EXPECT_TRUE(m.report.ok()) << m.report.text();
    EXPECT_EQ(m.q.labels(), q0.labels());
    ASSERT_TRUE(m.fusion);
    EXPECT_TRUE(m.fusion->report.ok());
}

TEST(Meet, NotDecreasingRejected) {
    GenericContext none;
    auto q0 = empty_condition(BlockSeq::triangular());
    auto q1 = thin(q0, Fn::linear(2, 1), false, none, 12).q;
    EXPECT_THROW(meet_chain({q1, q0}, none, 8), PreconditionFailed);
}

TEST(Meet, LimitWithoutOracle) {
    auto tc = two_labels(3);
    tc.ctx.limit[1] = true;
    auto q0 = tc.condition(0, 0);
    try {
        meet_chain({q0}, tc.ctx, 6, Label{1});
        FAIL() << "expected OracleRequired";
    } catch (const OracleRequired& e) {
        EXPECT_EQ(e.obligation(), "d22(8)");
    }
}

// ---------------------------------------------------------------- stage

TEST(Stage, DecideRapidifyKill) {
    auto st = stage_context();
    auto q0 = st.condition(0, 0);
    std::vector<Task> tasks{DecideSet{SetStream::arithmetic(0, 2)}, Rapidify{Fn::power(2)},
                            Kill{0, Phi::tail(0), std::nullopt}};
    StageOptions opt;
    opt.depth = 4;
    auto tr = run_stage(st.ctx, tasks, q0, opt);
    ASSERT_EQ(tr.entries.size(), 3u);
    EXPECT_EQ(tr.chain.size(), 4u);
    EXPECT_TRUE(tr.ok());
    for (const auto& e : tr.entries) EXPECT_FALSE(e.skipped);
    EXPECT_TRUE(leq_condition(tr.last(), q0, 4).ok());
}

TEST(Stage, EmptyTaskListKeepsCondition) {
    auto st = stage_context();
    auto q0 = st.condition(0, 0);
    auto tr = run_stage(st.ctx, {}, q0, StageOptions{});
    EXPECT_TRUE(tr.entries.empty());
    ASSERT_EQ(tr.chain.size(), 1u);
    EXPECT_EQ(tr.last().c.describe(), q0.c.describe());
    EXPECT_EQ(tr.last().labels(), q0.labels());
}

TEST(Stage, StrictAbortsOnMissingLift) {
    auto tc = two_labels(15);
    auto q = tc.condition(1, 0, {0});
    auto t1 = NormalTriple::of(BlockSeq::triangular(), Fn::nth_of(tc.ctx.tower_set(0, 0)));
    std::vector<Task> tasks{RKPullback{t1, BlockSeq::triangular(), 0}};
    StageOptions opt;
    opt.depth = 6;
    opt.strict = true;
    try {
        run_stage(tc.ctx, tasks, q, opt);
        FAIL() << "expected OracleRequired";
    } catch (const OracleRequired& e) {
        EXPECT_EQ(e.obligation(), "d22(1)");
    }
    opt.strict = false;
    auto tr = run_stage(tc.ctx, tasks, q, opt);
    ASSERT_EQ(tr.entries.size(), 1u);
    EXPECT_TRUE(tr.entries[0].skipped);
    EXPECT_EQ(tr.entries[0].obligation, "d22(1)");
    EXPECT_EQ(tr.chain.size(), 1u);
}

TEST(Stage, CheckpointMeets) {
    GenericContext none;
    auto q0 = empty_condition(BlockSeq::triangular());
    std::vector<Task> tasks{Thin{Fn::linear(2, 1), false}, DecideSet{SetStream::arithmetic(0, 2)}};
    StageOptions opt;
    opt.depth = 4;
    opt.checkpoints = {1};
    auto tr = run_stage(none, tasks, q0, opt);
    ASSERT_EQ(tr.entries.size(), 3u);
    EXPECT_EQ(tr.entries[2].task, "meet");
    EXPECT_EQ(tr.entries[2].branch, "IIa");
    EXPECT_TRUE(tr.ok());
    EXPECT_TRUE(leq_condition(tr.last(), q0, 4).ok());
}

// ---------------------------------------------------------------- properties

TEST(ForcingProperty, RandomTasksCertify) {
    Rng rng(2024);
    for (int i = 0; i < 30; ++i) {
        auto inst = random_forcing_instance(rng);
        auto r = extend_condition(inst.q, inst.task, inst.ctx, 6);
        EXPECT_TRUE(r.report.ok()) << inst.kind << " " << task_name(inst.task) << "\n" << r.report.text();
    }
}

TEST(ForcingProperty, DecideSetAlwaysExact) {
    Rng rng(77);
    GenericContext none;
    for (int i = 0; i < 20; ++i) {
        auto c = IntervalBase::random(rng).seq();
        auto X = random_decide_set(rng);
        auto r = decide_set(empty_condition(c), X, none, 6);
        bool keep = r.branch == "Ia:X_0";
        for (Nat n = 0; n < 6; ++n)
            for (Nat x : r.q.c.block(n)) ASSERT_EQ(X.contains(x), keep);
    }
}
