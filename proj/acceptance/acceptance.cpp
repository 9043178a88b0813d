#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bslab/cli/commands.hpp"

using namespace bslab;

namespace {

// pinned: seeds, counts, depths, wall-clock ceiling; every certificate must pass
constexpr Nat kSeed = 20240601;
constexpr double kMaxSeconds = 120.0;

struct Criterion {
    int id;
    std::string what;
    std::vector<SuiteSpec> suites;
    std::vector<std::string> required;  // tags that must occur with at least one instance
};

std::vector<Criterion> criteria() {
    return {
        {1, "random block sequences and thinning chains", {{"poset", kSeed, 500, 64}},
         {"d13:block-seq", "r5:i201", "r5:threshold", "r5:i203", "r5:i204"}},
        {2, "Delta^rho against brute force", {{"rho", kSeed, 200, 0}}, {"r1:delta"}},
        {3, "fiber blocks of normal triples", {{"fiber", kSeed, 100, 24}}, {"t14:chain", "t14:fibers", "t14:order"}},
        {4, "calibrations and mutations", {{"calibration", kSeed, 50, 400}},
         {"input/t7:rapid", "input/t7:commute", "input/t7:monotone", "t7:i51", "t7:i52", "t7:i53", "t7:i54", "t7:i55",
          "t7:i56", "t7:i60", "t7:mutation-caught"}},
        {5, "fusion", {{"fusion", kSeed, 30, 30}}, {"t36:le", "t36:image"}},
        {6, "lifted systems", {{"lift", kSeed, 30, 120}}, {"t101:i105", "t101:i105-pointwise", "t101:normal"}},
        {7, "diagonalization of towers", {{"diagonal", kSeed, 20, 0}},
         {"t30:i84-witness", "t30:i80", "t30:i81", "t8:e*", "t8:d*", "t30:sizes-recheck"}},
        {8, "random (condition, task) pairs", {{"forcing", kSeed, 100, 6}},
         {"d14:q'", "d14:q'<=q", "t3:exact-subset", "t4:halves-disjoint", "t11:rapid"}},
        {9, "meets of chains", {{"meet", kSeed, 4, 6}}, {"t91:IIa-m", "t91:case-I", "t91:X_q=X_q0"}},
    };
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Outcome {
    bool pass = true;
    std::string detail;
    std::string dump;  // structured output for the determinism rerun
};

Outcome judge(const Criterion& c) {
    Outcome o;
    std::vector<Report> reps;
    for (const auto& s : c.suites) reps.push_back(run_suite(s));
    for (const auto& r : reps) {
        o.dump += r.json().dump() + "\n";
        for (const auto& l : r.lines())
            if (!l.pass && o.pass) o.pass = false, o.detail = l.tag + " " + l.witness;
    }
    for (const auto& tag : c.required) {
        bool seen = false;
        for (const auto& r : reps)
            for (const auto& l : r.lines()) seen = seen || l.tag == tag;
        if (!seen && o.pass) o.pass = false, o.detail = "no instance exercised " + tag;
    }
    if (o.pass) {
        Nat instances = 0, checks = 0;
        for (const auto& r : reps) {
            for (const auto& [k, v] : r.notes())
                if (k == "instances") instances += std::stoull(v);
            for (const auto& l : r.lines()) checks += std::stoull(l.witness.substr(l.witness.find('/') + 1));
        }
        o.detail = std::to_string(instances) + " instances, " + std::to_string(checks) + " checks, all pass";
    }
    return o;
}

// structured CLI runs over the shipped scenarios
std::string cli_dump(const std::string& root) {
    std::string out;
    const std::vector<std::pair<std::string, std::string>> runs{
        {"check", "r2_condition.scn"},   {"lemma7", "one_level_calibration.scn"}, {"stage", "stage_rk.scn"},
        {"extend", "forcing_tasks.scn"}, {"meet", "meet_chains.scn"},             {"fuse", "constructions.scn"},
        {"lift", "constructions.scn"},   {"diagonal", "constructions.scn"},       {"suite", "suites.scn"}};
    for (const auto& [cmd, file] : runs) {
        CommandOptions o;
        o.command = cmd;
        o.structured = true;
        o.seed = kSeed;
        out += run_command(read_file(root + "/docs/scenarios/" + file), o).output;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::string root = argc > 1 ? argv[1] : BSLAB_SOURCE_DIR;
    auto start = std::chrono::steady_clock::now();
    bool all = true;
    std::string first_dump;
    for (const auto& c : criteria()) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = judge(c);
        } catch (const Error& e) {
            o.pass = false;
            o.detail = o.dump = e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d  %s  %s: %s (%.1fs)\n", c.id, o.pass ? "PASS" : "FAIL", c.what.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && o.pass;
        first_dump += o.dump;
    }
    first_dump += cli_dump(root);

    // 10: everything again, same seed, byte-identical
    {
        auto t0 = std::chrono::steady_clock::now();
        std::string again;
        for (const auto& c : criteria()) {
            try {
                again += judge(c).dump;
            } catch (const Error& e) {
                again += e.what();
            }
        }
        again += cli_dump(root);
        bool same = again == first_dump;
        std::size_t at = 0;
        while (at < again.size() && at < first_dump.size() && again[at] == first_dump[at]) ++at;
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion 10  %s  deterministic structured reports: %s (%.1fs)\n", same ? "PASS" : "FAIL",
                    same ? (std::to_string(first_dump.size()) + " bytes identical").c_str()
                         : ("first difference at byte " + std::to_string(at)).c_str(),
                    secs);
        all = all && same;
    }

    double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool fast = total < kMaxSeconds;
    std::printf("runtime %.1fs (ceiling %.0fs) %s\n", total, kMaxSeconds, fast ? "ok" : "exceeded");
    std::printf("%s\n", all ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL");
    return all ? 0 : 1;
}
