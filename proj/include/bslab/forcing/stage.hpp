#pragma once
#include <set>
#include <string>
#include <vector>

#include "../core/budget.hpp"
#include "meet.hpp"
#include "tasks.hpp"

namespace bslab {

struct TraceEntry {
    std::size_t index = 0;
    std::string task;  // task name, or "meet"
    std::string branch;
    std::string summary;
    bool skipped = false;
    std::string obligation;  // set when skipped
    Report report;
};

struct Trace {
    std::vector<TraceEntry> entries;
    std::vector<Condition> chain;  // q0 >= q1 >= ...
    const Condition& last() const { return chain.back(); }
    bool ok() const {
        for (const auto& e : entries)
            if (!e.skipped && !e.report.ok()) return false;
        return true;
    }
};

struct StageOptions {
    Nat depth = 12;
    std::set<std::size_t> checkpoints;  // meet the chain so far after these task indices
    bool strict = false;
    std::optional<Label> meet_sup;
};

inline Trace run_stage(const GenericContext& ctx, const std::vector<Task>& tasks, const Condition& q0,
                       const StageOptions& opt) {
    Trace tr;
    tr.chain.push_back(q0);
    std::size_t since = 0;  // chain index where the current segment starts
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        TraceEntry e;
        e.index = i;
        e.task = task_name(tasks[i]);
        try {
            ExtendResult r = extend_condition(tr.last(), tasks[i], ctx, opt.depth);
            e.branch = r.branch;
            e.report = std::move(r.report);
            tr.chain.push_back(std::move(r.q));
        } catch (const OracleRequired& err) {
            if (opt.strict) throw;
            e.skipped = true;
            e.obligation = err.obligation();
            e.branch = "skipped";
        }
        e.summary = summary(tr.last(), ctx);
        tr.entries.push_back(std::move(e));
        if (opt.checkpoints.count(i)) {
            std::vector<Condition> seg(tr.chain.begin() + since, tr.chain.end());
            TraceEntry m;
            m.index = i;
            m.task = "meet";
            try {
                MeetResult mr = meet_chain(seg, ctx, opt.depth, opt.meet_sup);
                m.branch = mr.branch;
                m.report = std::move(mr.report);
                tr.chain.push_back(std::move(mr.q));
                since = tr.chain.size() - 1;
            } catch (const OracleRequired& err) {
                if (opt.strict) throw;
                m.skipped = true;
                m.obligation = err.obligation();
                m.branch = "skipped";
            }
            m.summary = summary(tr.last(), ctx);
            tr.entries.push_back(std::move(m));
        }
    }
    return tr;
}

}  // namespace bslab
