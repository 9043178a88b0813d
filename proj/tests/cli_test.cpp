#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "bslab/cli/commands.hpp"

using namespace bslab;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string scenario_path(const std::string& name) { return std::string(BSLAB_SOURCE_DIR) + "/docs/scenarios/" + name; }

CommandResult run(const std::string& cmd, const std::string& file, std::optional<Nat> depth = std::nullopt,
                  bool structured = false, bool strict = false) {
    CommandOptions o;
    o.command = cmd;
    o.depth = depth;
    o.structured = structured;
    o.strict = strict;
    return run_command(read_file(scenario_path(file)), o);
}

const char* kMinimal =
    "bslab-scenario 1\n"
    "blocks c = triangular()\n"
    "condition q = standard(c)\n";

}  // namespace

TEST(Parse, MinimalDocumentHasTwoEntries) {
    Scenario sc = parse_scenario(kMinimal);
    ASSERT_EQ(sc.defs.size(), 2u);
    EXPECT_EQ(sc.defs[0].kind, "blocks");
    EXPECT_EQ(sc.defs[1].name, "q");
    EXPECT_EQ(sc.defs[1].expr.items[0], Expr::ref("c"));
}

TEST(Parse, SettingsAndComments) {
    Scenario sc = parse_scenario("# lead\nbslab-scenario 1\ndepth 9  # inline\nbudget 1000\nseed 4\n\nfn f = linear(2, 1)\n");
    EXPECT_EQ(sc.depth, 9u);
    EXPECT_EQ(sc.budget, 1000u);
    EXPECT_EQ(sc.seed, 4u);
    EXPECT_EQ(sc.defs.size(), 1u);
}

TEST(Parse, MultilineCallsInsideBrackets) {
    Scenario sc = parse_scenario("bslab-scenario 1\nset s = periodic(\n  0,\n  [1,\n   2])\n");
    ASSERT_EQ(sc.defs.size(), 1u);
    EXPECT_EQ(sc.defs[0].expr.items[1].items.size(), 2u);
}

TEST(Parse, ErrorsCarryPosition) {
    try {
        parse_scenario("bslab-scenario 1\nblocks c = triangular(\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    try {
        parse_scenario("bslab-scenario 1\nblocks c = @\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 12u);
    }
}

TEST(Parse, RejectsMalformedDocuments) {
    EXPECT_THROW(parse_scenario("blocks c = triangular()\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 2\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nblocks c = triangular()\nblocks c = triangular()\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\ndepth 3\ndepth 4\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nwidget w = triangular()\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nset s = arithmetic(start=0, 2)\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nset s = arithmetic(start=0, start=2)\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nset s = table([1, 2)\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nfn f = constant(99999999999999999999999)\n"), ParseError);
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nset s = omega() omega()\n"), ParseError);
}

TEST(Parse, UndefinedNameIsResolutionError) {
    try {
        parse_scenario("bslab-scenario 1\ncondition q = standard(D3)\n");
        FAIL();
    } catch (const ResolutionError& e) {
        EXPECT_EQ(e.name(), "D3");
    }
}

TEST(Parse, MapBaseThroughItsOwnImageIsCycle) {
    try {
        parse_scenario(read_file(scenario_path("cycle.scn")));
        FAIL();
    } catch (const CycleError& e) {
        ASSERT_GE(e.path().size(), 2u);
        EXPECT_EQ(e.path().front(), e.path().back());
    }
    EXPECT_THROW(parse_scenario("bslab-scenario 1\nset a = tail(a, 1)\n"), CycleError);
}

TEST(Resolve, UnknownFieldsAndConstructorsRejected) {
    EXPECT_THROW(load_scenario("bslab-scenario 1\nset s = arithmetic(start=0, stride=2)\n"), ParseError);
    EXPECT_THROW(load_scenario("bslab-scenario 1\nset s = arithmetic(0, 2, 4)\n"), ParseError);
    EXPECT_THROW(load_scenario("bslab-scenario 1\nset s = cantor()\n"), ParseError);
    EXPECT_THROW(load_scenario("bslab-scenario 1\nset s = arithmetic(0)\n"), ParseError);
    EXPECT_THROW(load_scenario("bslab-scenario 1\nset s = omega()\nblocks c = chunks(s, 1, \"x\")\n"), ParseError);
    EXPECT_THROW(load_scenario("bslab-scenario 1\nfn f = identity()\nblocks c = chunks(f, 1, 1)\n"), ParseError);
    EXPECT_NO_THROW(load_scenario(kMinimal));
}

TEST(Resolve, KindMismatchPointsAtReference) {
    try {
        load_scenario("bslab-scenario 1\nfn f = identity()\nblocks c = chunks(\n  f, 1, 1)\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_EQ(e.column(), 3u);
    }
}

TEST(Resolve, ExamplesLoad) {
    for (const auto& entry : std::filesystem::directory_iterator(std::string(BSLAB_SOURCE_DIR) + "/docs/scenarios")) {
        if (entry.path().filename() == "cycle.scn") continue;
        EXPECT_NO_THROW(load_scenario(read_file(entry.path().string()))) << entry.path();
    }
}

TEST(RoundTrip, ExamplesPrintAndReparse) {
    for (const auto& entry : std::filesystem::directory_iterator(std::string(BSLAB_SOURCE_DIR) + "/docs/scenarios")) {
        if (entry.path().filename() == "cycle.scn") continue;
        Scenario sc = parse_scenario(read_file(entry.path().string()));
        std::string once = print_scenario(sc);
        Scenario back = parse_scenario(once);
        EXPECT_EQ(back, sc) << entry.path();
        EXPECT_EQ(print_scenario(back), once);
    }
}

namespace {

Expr random_expr(Rng& rng, int depth) {
    Expr e;
    Nat pick = depth <= 0 ? rng.below(4) : rng.below(6);
    static const std::vector<std::string> heads{"omega", "linear", "select", "tree", "f'", "x_1"};
    switch (pick) {
        case 0: e = Expr::integer(rng.below(1000)); break;
        case 1:
            e.kind = Expr::Kind::string;
            e.text = rng.coin(1, 2) ? "first" : "a \"q\" \\ b";
            break;
        case 2:
            e.kind = Expr::Kind::boolean;
            e.value = rng.coin(1, 2);
            break;
        case 3: e = Expr::ref("d" + std::to_string(rng.below(3))); break;
        case 4: {
            e.kind = Expr::Kind::call;
            e.text = rng.pick(heads);
            Nat n = rng.below(4), pos = rng.below(n + 1);
            for (Nat i = 0; i < n; ++i) {
                e.items.push_back(random_expr(rng, depth - 1));
                e.keys.push_back(i < pos ? "" : "k" + std::to_string(i));
            }
            break;
        }
        default:
            e.kind = Expr::Kind::list;
            for (Nat i = rng.below(4); i-- > 0;) e.items.push_back(random_expr(rng, depth - 1));
    }
    return e;
}

}  // namespace

TEST(RoundTrip, RandomScenarios) {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        Scenario sc;
        if (rng.coin(1, 2)) sc.depth = rng.below(100);
        if (rng.coin(1, 2)) sc.seed = rng.below(100);
        for (int d = 0; d < 3; ++d) sc.defs.push_back({"fn", "d" + std::to_string(d), Expr::integer(d), 0});
        for (Nat i = rng.below(5); i-- > 0;)
            sc.defs.push_back({rng.pick(definition_kinds()), "n" + std::to_string(sc.defs.size()), random_expr(rng, 3), 0});
        std::string text = print_scenario(sc);
        Scenario back = parse_scenario(text);
        ASSERT_EQ(back, sc) << text;
    }
}

TEST(Command, R2ConditionChecksAtDepth50) {
    auto r = run("check", "r2_condition.scn", 50);
    EXPECT_EQ(r.exit, 0) << r.output;
    EXPECT_NE(r.output.find("d14:i16(0)"), std::string::npos);
}

TEST(Command, OneLevelCalibration) {
    auto r = run("lemma7", "one_level_calibration.scn", 200);
    EXPECT_EQ(r.exit, 0) << r.output;
    EXPECT_NE(r.output.find("K_{0,0} = 1"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("g'(0) = 1"), std::string::npos) << r.output;
}

TEST(Command, StrictStageWithoutRkOracleExits4) {
    auto strict = run("stage", "stage_rk.scn", std::nullopt, false, true);
    EXPECT_EQ(strict.exit, kExitOracle) << strict.output;
    EXPECT_NE(strict.output.find("d22(1)"), std::string::npos);
    auto lax = run("stage", "stage_rk.scn");
    EXPECT_EQ(lax.exit, kExitOracle) << lax.output;
    EXPECT_NE(lax.output.find("skipped: d22(1)"), std::string::npos);
}

TEST(Command, ExitCodes) {
    CommandOptions o;
    o.command = "check";
    EXPECT_EQ(run_command("bslab-scenario 1\nblocks c = (\n", o).exit, kExitParse);
    EXPECT_EQ(run_command("bslab-scenario 1\ncondition q = standard(D3)\n", o).exit, kExitParse);
    EXPECT_EQ(run_command("bslab-scenario 1\nset s = arithmetic(0, 2, 4)\nblocks c = chunks(s, 1, 1)\n", o).exit, kExitParse);
    // a finite table runs out: depth
    EXPECT_EQ(run_command("bslab-scenario 1\nblocks c = table([[0], [1, 2]])\n", o).exit, kExitDepth);
    // not a block sequence: certificate failure
    EXPECT_EQ(run_command("bslab-scenario 1\nblocks c = table([[0], [0, 1], [5, 6, 7]])\n", o).exit, kExitFailed);
    o.depth = 2;
    EXPECT_EQ(run_command("bslab-scenario 1\nblocks c = table([[0], [1, 2]])\n", o).exit, kExitOk);
    o.depth.reset();
    // no jobs for the command
    o.command = "fuse";
    EXPECT_EQ(run_command(kMinimal, o).exit, kExitPrecondition);
    // tree condition on a trivial context
    o.command = "check";
    EXPECT_EQ(run_command("bslab-scenario 1\ncontext t = trivial()\ncondition q = tree(t, 0, 0)\n", o).exit, kExitParse);
}

TEST(Command, PreconditionExit2) {
    CommandOptions o;
    o.command = "lemma7";
    // f = identity is not dominated by the omega stream
    std::string doc =
        "bslab-scenario 1\ncalibration c = calibration(levels=1, pi=[[identity()]], E=[omega()], C=[omega()],"
        " D=[omega()], f=identity(), depth=40, image_threshold=[[0]], disjoint_threshold=[0])\n";
    auto r = run_command(doc, o);
    EXPECT_TRUE(r.exit == kExitPrecondition || r.exit == kExitFailed) << r.output;
    EXPECT_NE(r.exit, 0);
}

TEST(Command, BudgetPrecedence) {
    CommandOptions o;
    o.command = "check";
    o.budget = 5;
    auto r = run_command("bslab-scenario 1\nbudget 100000000\nset s = from_fn(linear(3, 0))\nblocks c = chunks(s, 1, 1)\n", o);
    EXPECT_EQ(r.exit, kExitDepth) << r.output;
    o.budget.reset();
    r = run_command("bslab-scenario 1\nbudget 100000000\nset s = from_fn(linear(3, 0))\nblocks c = chunks(s, 1, 1)\n", o);
    EXPECT_EQ(r.exit, 0) << r.output;
    set_default_budget(budget_from_env());
}

TEST(Command, StructuredMirrorsTextAndIsDeterministic) {
    auto a = run("extend", "forcing_tasks.scn", std::nullopt, true);
    auto b = run("extend", "forcing_tasks.scn", std::nullopt, true);
    EXPECT_EQ(a.output, b.output);
    auto t = run("extend", "forcing_tasks.scn");
    auto j = nlohmann::json::parse(a.output);
    EXPECT_EQ(j["format"], kReportFormat);
    EXPECT_EQ(j["exit"], a.exit);
    EXPECT_EQ(a.exit, t.exit);
    for (const auto& job : j["jobs"]) {
        EXPECT_NE(t.output.find("[extend " + job["name"].get<std::string>() + "]"), std::string::npos);
        for (const auto& line : job["report"]["lines"]) {
            std::string tag = line["tag"];
            EXPECT_NE(tag.find(':'), std::string::npos) << tag;
            EXPECT_NE(t.output.find(tag), std::string::npos) << tag;
        }
    }
}

TEST(Command, EveryLineCarriesClauseTag) {
    for (auto [cmd, file] : std::vector<std::pair<std::string, std::string>>{{"check", "r2_condition.scn"},
                                                                             {"lemma7", "one_level_calibration.scn"},
                                                                             {"stage", "stage_rk.scn"},
                                                                             {"extend", "forcing_tasks.scn"},
                                                                             {"meet", "meet_chains.scn"},
                                                                             {"fuse", "constructions.scn"},
                                                                             {"lift", "constructions.scn"},
                                                                             {"diagonal", "constructions.scn"}}) {
        auto j = nlohmann::json::parse(run(cmd, file, std::nullopt, true).output);
        ASSERT_FALSE(j["jobs"].empty()) << cmd;
        for (const auto& job : j["jobs"])
            for (const auto& line : job["report"]["lines"]) {
                std::string tag = line["tag"];
                EXPECT_NE(tag.find(':'), std::string::npos) << cmd << " " << tag;
            }
    }
}

TEST(Command, MeetScenario) {
    auto r = run("meet", "meet_chains.scn", std::nullopt, true);
    EXPECT_EQ(r.exit, 0) << r.output;
    auto j = nlohmann::json::parse(r.output);
    EXPECT_EQ(j["jobs"][0]["report"]["notes"]["branch"], "IIa");
    EXPECT_EQ(j["jobs"][0]["report"]["notes"]["m"].get<std::string>().rfind("[0,2,7,", 0), 0u);
    EXPECT_EQ(j["jobs"][1]["report"]["notes"]["branch"], "I");
}

TEST(Command, ConstructionsPass) {
    for (std::string cmd : {"lemma7", "fuse", "lift", "diagonal"}) {
        auto r = run(cmd, "constructions.scn");
        EXPECT_EQ(r.exit, 0) << cmd << "\n" << r.output;
    }
}

TEST(Command, SuiteSeedsAreReproducible) {
    CommandOptions o;
    o.command = "suite";
    o.structured = true;
    std::string doc = "bslab-scenario 1\nsuite a = suite(\"rho\", count=40)\nsuite b = suite(\"fiber\", count=10)\n";
    auto x = run_command(doc, o), y = run_command(doc, o);
    EXPECT_EQ(x.exit, 0) << x.output;
    EXPECT_EQ(x.output, y.output);
    o.seed = 99;
    auto z = run_command(doc, o);
    EXPECT_NE(x.output, z.output);
}
