#pragma once
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../core/budget.hpp"
#include "resolve.hpp"

namespace bslab {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailed = 1,
    kExitPrecondition = 2,
    kExitDepth = 3,
    kExitOracle = 4,
    kExitParse = 5,
};

inline int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::depth: return kExitDepth;
        case ErrorKind::precondition: return kExitPrecondition;
        case ErrorKind::oracle: return kExitOracle;
        case ErrorKind::parse:
        case ErrorKind::resolution:
        case ErrorKind::cycle: return kExitParse;
    }
    return kExitFailed;
}

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> c{"check", "lemma7", "fuse", "lift", "diagonal", "extend", "meet", "stage", "suite"};
    return c;
}

struct CommandOptions {
    std::string command;
    std::optional<Nat> depth, budget, seed;
    bool strict = false;
    bool structured = false;
};

struct JobOutcome {
    std::string name, kind;
    int exit = kExitOk;
    std::string error;
    Report report;
};

struct CommandResult {
    int exit = kExitOk;
    std::string output;
};

namespace detail {

inline Nat default_depth(const std::string& cmd) {
    if (cmd == "check") return 24;
    if (cmd == "fuse") return 30;
    if (cmd == "extend" || cmd == "stage") return 6;
    if (cmd == "meet") return 4;
    return 0;  // lemma7, lift, diagonal, suite: carried by the input
}

inline std::vector<std::string> kinds_for(const std::string& cmd) {
    if (cmd == "check") return {"blocks", "triple", "context", "condition"};
    if (cmd == "lemma7") return {"calibration"};
    if (cmd == "fuse") return {"fusion"};
    if (cmd == "lift") return {"lift"};
    if (cmd == "diagonal") return {"tower"};
    if (cmd == "extend") return {"extend"};
    if (cmd == "meet") return {"meet"};
    if (cmd == "stage") return {"stage"};
    if (cmd == "suite") return {"suite"};
    throw PreconditionFailed("cli:command", "unknown command " + cmd);
}

inline std::string row_text(const std::vector<Nat>& v) { return "[" + join_nats(v) + "]"; }

inline Report calibration_job(const CalibrationInput& given, std::optional<Nat> depth) {
    CalibrationInput in = given;
    if (depth) in.depth = *depth;
    Report r("lemma7");
    Report input = check_calibration_input(in);
    r.append(input);
    if (!input.ok()) return r;
    Nat top = in.levels - 1;
    Calibration cal = calibrate(in, top);
    for (Nat n = 0; n < cal.K.size(); ++n)
        for (Nat m = 0; m < cal.K[n].size(); ++m)
            r.note("K_{" + std::to_string(m) + "," + std::to_string(n) + "}", std::to_string(cal.K[n][m]));
    for (Nat n = 0; n < cal.g.size(); ++n) r.note("g'(" + std::to_string(n) + ")", std::to_string(cal.g[n]));
    r.note("L", row_text(cal.L));
    r.append(verify_calibration(in, cal, top));
    return r;
}

inline Report check_job(Env& env, const Definition& d, Nat depth) {
    Report r("check " + d.name);
    if (d.kind == "blocks") {
        r.add("d13:block-seq", block_seq_check(env.get<BlockSeq>(d.name), depth));
    } else if (d.kind == "triple") {
        r.add("triple:normal", normal_check(env.get<NormalTriple>(d.name), depth));
    } else if (d.kind == "context") {
        r.append(check_context(*env.get<ContextVal>(d.name).ctx, depth));
    } else {
        const auto& q = env.get<ConditionVal>(d.name);
        r.note("summary", summary(q.q, *q.ctx));
        r.append(check_condition(q.q, *q.ctx, depth));
    }
    return r;
}

inline Report extend_job(const ExtendJob& j, Nat depth) {
    ExtendResult out = extend_condition(j.q.q, j.task, *j.q.ctx, depth);
    Report r("extend " + task_name(j.task));
    r.note("branch", out.branch);
    r.note("summary", summary(out.q, *j.q.ctx));
    r.append(out.report);
    r.append(check_condition(out.q, *j.q.ctx, depth), "q'");
    r.append(leq_condition(out.q, j.q.q, depth), "q'<=q");
    return r;
}

inline Report meet_job(const MeetJob& j, Nat depth) {
    std::vector<Condition> chain{j.q.q};
    Report r("meet");
    for (const auto& t : j.tasks) {
        ExtendResult out = extend_condition(chain.back(), t, *j.q.ctx, depth);
        r.append(out.report, task_name(t));
        chain.push_back(std::move(out.q));
    }
    MeetResult m = meet_chain(chain, *j.q.ctx, depth, j.sup);
    r.note("branch", m.branch);
    if (!m.m.empty()) r.note("m", row_text(m.m));
    r.note("summary", summary(m.q, *j.q.ctx));
    r.append(m.report);
    return r;
}

// a skipped entry leaves an obligation; the job then exits 4
inline std::pair<Report, bool> stage_job(const StageJob& j, Nat depth, bool strict) {
    StageOptions opt;
    opt.depth = depth;
    opt.checkpoints = j.checkpoints;
    opt.strict = strict;
    Trace tr = run_stage(*j.q.ctx, j.tasks, j.q.q, opt);
    Report r("stage");
    bool skipped = false;
    for (const auto& e : tr.entries) {
        std::string at = "#" + std::to_string(e.index) + " " + e.task;
        r.note(at, e.skipped ? "skipped: " + e.obligation : e.branch + "; " + e.summary);
        if (e.skipped) {
            skipped = true;
            r.add("stage:obligation", false, at + ": " + e.obligation);
        } else {
            r.append(e.report, at);
        }
    }
    return {r, skipped};
}

inline JobOutcome run_job(Env& env, const Definition& d, const CommandOptions& opt, Nat depth) {
    JobOutcome o{d.name, d.kind, kExitOk, "", Report(d.name)};
    try {
        const std::string& c = opt.command;
        if (c == "check") o.report = check_job(env, d, depth);
        else if (c == "lemma7") o.report = calibration_job(env.get<CalibrationInput>(d.name), opt.depth);
        else if (c == "fuse") o.report = fuse(env.get<FusionInput>(d.name), depth).report;
        else if (c == "lift") {
            const auto& j = env.get<LiftJob>(d.name);
            Calibration cal = calibrate(j.in, j.in.levels - 1);
            o.report = lift(j.in, cal, j.e).report;
        } else if (c == "diagonal") o.report = diagonal(env.get<TowerInput>(d.name)).report;
        else if (c == "extend") o.report = extend_job(env.get<ExtendJob>(d.name), depth);
        else if (c == "meet") o.report = meet_job(env.get<MeetJob>(d.name), depth);
        else if (c == "stage") {
            auto [r, skipped] = stage_job(env.get<StageJob>(d.name), depth, opt.strict);
            o.report = std::move(r);
            if (skipped) o.exit = kExitOracle;
        } else if (c == "suite") {
            SuiteSpec s = env.get<SuiteSpec>(d.name);
            if (!s.depth && opt.depth) s.depth = *opt.depth;
            o.report = run_suite(s);
        }
        if (o.exit == kExitOk && !o.report.ok()) o.exit = kExitFailed;
    } catch (const Error& e) {
        o.exit = exit_code(e.kind());
        o.error = e.what();
        o.report = Report(d.name);
    }
    return o;
}

inline std::string render_text(const CommandOptions& opt, Nat depth, Nat seed, const std::vector<JobOutcome>& jobs, int code) {
    std::ostringstream os;
    os << "bslab " << opt.command << "  depth=" << depth << " seed=" << seed << "\n";
    os << "clause  verdict  witness\n";
    for (const auto& j : jobs) {
        os << "\n[" << j.kind << " " << j.name << "] exit " << j.exit << "\n";
        if (!j.error.empty()) os << "  error: " << j.error << "\n";
        os << j.report.text();
    }
    os << "\nexit " << code << "\n";
    return os.str();
}

inline std::string render_structured(const CommandOptions& opt, Nat depth, Nat seed, const std::vector<JobOutcome>& jobs,
                                     int code, const std::string& error = "") {
    nlohmann::ordered_json j;
    j["format"] = kReportFormat;
    j["command"] = opt.command;
    j["depth"] = depth;
    j["seed"] = seed;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& o : jobs) {
        nlohmann::ordered_json e;
        e["name"] = o.name;
        e["kind"] = o.kind;
        e["status"] = o.exit == kExitOk ? "pass" : o.error.empty() ? "fail" : "error";
        e["exit"] = o.exit;
        if (!o.error.empty()) e["error"] = o.error;
        e["report"] = o.report.json();
        arr.push_back(std::move(e));
    }
    j["jobs"] = arr;
    if (!error.empty()) j["error"] = error;
    j["ok"] = code == kExitOk;
    j["exit"] = code;
    return j.dump(2) + "\n";
}

}  // namespace detail

// first job error wins, then certificate failure
inline CommandResult run_command(const Scenario& sc, const CommandOptions& opt) {
    auto kinds = detail::kinds_for(opt.command);
    Nat budget = opt.budget ? *opt.budget : sc.budget ? *sc.budget : budget_from_env();
    set_default_budget(budget);
    Nat seed = opt.seed ? *opt.seed : sc.seed ? *sc.seed : 1;
    Nat depth = opt.depth ? *opt.depth : sc.depth ? *sc.depth : detail::default_depth(opt.command);
    CommandOptions eff = opt;
    if (!eff.depth && sc.depth) eff.depth = sc.depth;

    Env env(sc, seed);
    env.resolve_all();
    std::vector<JobOutcome> jobs;
    for (const auto& d : sc.defs)
        if (std::find(kinds.begin(), kinds.end(), d.kind) != kinds.end()) jobs.push_back(detail::run_job(env, d, eff, depth));

    int code = kExitOk;
    for (const auto& j : jobs)
        if (j.exit != kExitOk && j.exit != kExitFailed) {
            code = j.exit;
            break;
        }
    if (code == kExitOk)
        for (const auto& j : jobs)
            if (j.exit == kExitFailed) code = kExitFailed;
    if (jobs.empty()) code = kExitPrecondition;

    CommandResult r;
    r.exit = code;
    r.output = opt.structured ? detail::render_structured(opt, depth, seed, jobs, code)
                              : detail::render_text(opt, depth, seed, jobs, code) +
                                    (jobs.empty() ? "no " + opt.command + " jobs in scenario\n" : "");
    return r;
}

// parse failures exit 5 with an empty job list
inline CommandResult run_command(const std::string& text, const CommandOptions& opt) {
    try {
        Scenario sc = parse_scenario(text);
        return run_command(sc, opt);
    } catch (const Error& e) {
        CommandResult r;
        r.exit = exit_code(e.kind());
        Nat depth = opt.depth.value_or(0), seed = opt.seed.value_or(1);
        r.output = opt.structured ? detail::render_structured(opt, depth, seed, {}, r.exit, e.what())
                                  : std::string("error: ") + e.what() + "\nexit " + std::to_string(r.exit) + "\n";
        return r;
    }
}

}  // namespace bslab
