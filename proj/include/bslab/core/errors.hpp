#pragma once
#include <stdexcept>
#include <string>
#include <vector>

namespace bslab {

enum class ErrorKind { depth, precondition, oracle, parse, resolution, cycle };

class Error : public std::runtime_error {
public:
    Error(ErrorKind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// budget or declared table depth ran out
class DepthExceeded : public Error {
public:
    explicit DepthExceeded(const std::string& where)
        : Error(ErrorKind::depth, "depth exceeded: " + where) {}
};

class PreconditionFailed : public Error {
public:
    PreconditionFailed(std::string clause, const std::string& detail)
        : Error(ErrorKind::precondition, "precondition failed [" + clause + "]: " + detail),
          clause_(std::move(clause)) {}
    const std::string& clause() const noexcept { return clause_; }

private:
    std::string clause_;
};

class OracleRequired : public Error {
public:
    explicit OracleRequired(std::string obligation)
        : Error(ErrorKind::oracle, "oracle required: " + obligation), obligation_(std::move(obligation)) {}
    const std::string& obligation() const noexcept { return obligation_; }

private:
    std::string obligation_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t col, const std::string& msg)
        : Error(ErrorKind::parse, "parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line_(line), col_(col) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return col_; }

private:
    std::size_t line_, col_;
};

class ResolutionError : public Error {
public:
    explicit ResolutionError(std::string name)
        : Error(ErrorKind::resolution, "unresolved name: " + name), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class CycleError : public Error {
public:
    explicit CycleError(std::vector<std::string> path)
        : Error(ErrorKind::cycle, "definition cycle: " + join(path)), path_(std::move(path)) {}
    const std::vector<std::string>& path() const noexcept { return path_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s;
        for (const auto& x : p) s += (s.empty() ? "" : " -> ") + x;
        return s;
    }
    std::vector<std::string> path_;
};

}  // namespace bslab
