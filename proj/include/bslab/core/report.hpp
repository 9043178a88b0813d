#pragma once
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "nat.hpp"

namespace bslab {

inline constexpr const char* kReportFormat = "bslab-report/1";

struct Verdict {
    bool ok = true;
    Nat index = 0;        // first violating index when !ok
    std::string clause;   // which clause failed
    std::string detail;

    explicit operator bool() const { return ok; }
    static Verdict pass() { return {}; }
    static Verdict fail(Nat at, std::string clause, std::string detail) {
        return {false, at, std::move(clause), std::move(detail)};
    }
};

struct ReportLine {
    std::string tag;
    bool pass = false;
    std::string witness;
};

class Report {
public:
    Report() = default;
    explicit Report(std::string subject) : subject_(std::move(subject)) {}

    void add(std::string tag, bool pass, std::string witness) {
        lines_.push_back({std::move(tag), pass, std::move(witness)});
    }
    void add(std::string tag, const Verdict& v, const std::string& ok_witness = "") {
        if (v.ok) add(std::move(tag), true, ok_witness);
        else add(std::move(tag), false, v.clause + " at " + std::to_string(v.index) + ": " + v.detail);
    }
    void append(const Report& other, const std::string& scope = "") {
        for (const auto& l : other.lines_)
            lines_.push_back({l.tag, l.pass, scope.empty() ? l.witness : scope + ": " + l.witness});
    }
    void note(std::string key, std::string value) { notes_.emplace_back(std::move(key), std::move(value)); }

    bool ok() const {
        for (const auto& l : lines_)
            if (!l.pass) return false;
        return true;
    }
    const std::vector<ReportLine>& lines() const { return lines_; }
    const std::string& subject() const { return subject_; }
    const std::vector<std::pair<std::string, std::string>>& notes() const { return notes_; }
    bool failed(const std::string& tag) const {
        for (const auto& l : lines_)
            if (l.tag == tag && !l.pass) return true;
        return false;
    }

    std::string text() const {
        std::ostringstream os;
        if (!subject_.empty()) os << "# " << subject_ << "\n";
        for (const auto& [k, v] : notes_) os << "  " << k << " = " << v << "\n";
        std::size_t w = 4;
        for (const auto& l : lines_) w = std::max(w, l.tag.size());
        for (const auto& l : lines_) {
            os << "  " << l.tag << std::string(w - l.tag.size(), ' ') << "  " << (l.pass ? "PASS" : "FAIL");
            if (!l.witness.empty()) os << "  " << l.witness;
            os << "\n";
        }
        return os.str();
    }

    nlohmann::ordered_json json() const {
        nlohmann::ordered_json j;
        j["subject"] = subject_;
        auto notes = nlohmann::ordered_json::object();
        for (const auto& [k, v] : notes_) notes[k] = v;
        j["notes"] = notes;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& l : lines_) arr.push_back({{"tag", l.tag}, {"verdict", l.pass ? "pass" : "fail"}, {"witness", l.witness}});
        j["lines"] = arr;
        j["ok"] = ok();
        return j;
    }

private:
    std::string subject_;
    std::vector<std::pair<std::string, std::string>> notes_;
    std::vector<ReportLine> lines_;
};

}  // namespace bslab
