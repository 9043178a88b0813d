#pragma once
#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "../core/errors.hpp"
#include "../core/nat.hpp"

namespace bslab {

inline constexpr const char* kScenarioHeader = "bslab-scenario";
inline constexpr Nat kScenarioVersion = 1;

struct Expr {
    enum class Kind { integer, string, boolean, ref, call, list };
    Kind kind = Kind::integer;
    Nat value = 0;                  // integer, boolean
    std::string text;               // string, ref name, call head
    std::vector<Expr> items;        // call args, list items
    std::vector<std::string> keys;  // call args: "" for positional
    std::size_t line = 0, col = 0;

    static Expr integer(Nat v) { Expr e; e.value = v; return e; }
    static Expr ref(std::string n) { Expr e; e.kind = Kind::ref; e.text = std::move(n); return e; }

    // structural, positions ignored
    friend bool operator==(const Expr& a, const Expr& b) {
        return a.kind == b.kind && a.value == b.value && a.text == b.text && a.items == b.items && a.keys == b.keys;
    }

    const Expr* kw(const std::string& k) const {
        for (std::size_t i = 0; i < keys.size(); ++i)
            if (keys[i] == k) return &items[i];
        return nullptr;
    }
    std::vector<const Expr*> positional() const {
        std::vector<const Expr*> out;
        for (std::size_t i = 0; i < keys.size(); ++i)
            if (keys[i].empty()) out.push_back(&items[i]);
        return out;
    }
};

struct Definition {
    std::string kind, name;
    Expr expr;
    std::size_t line = 0;
    friend bool operator==(const Definition& a, const Definition& b) {
        return a.kind == b.kind && a.name == b.name && a.expr == b.expr;
    }
};

struct Scenario {
    Nat version = kScenarioVersion;
    std::optional<Nat> depth, budget, seed;
    std::vector<Definition> defs;

    const Definition* find(const std::string& name) const {
        for (const auto& d : defs)
            if (d.name == name) return &d;
        return nullptr;
    }
    friend bool operator==(const Scenario& a, const Scenario& b) {
        return a.version == b.version && a.depth == b.depth && a.budget == b.budget && a.seed == b.seed && a.defs == b.defs;
    }
};

inline const std::vector<std::string>& definition_kinds() {
    static const std::vector<std::string> k{"fn",      "set",     "blocks",    "map",       "triple", "calibration",
                                            "fusion",  "lift",    "tower",     "context",   "condition", "task",
                                            "tasks",   "extend",  "meet",      "stage",     "suite"};
    return k;
}

namespace detail {

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(&src) {}

    struct Tok {
        enum class T { ident, integer, string, punct, newline, end } t;
        std::string text;
        Nat value = 0;
        std::size_t line, col;
    };

    Tok next() {
        skip_space();
        const std::string& s_ = *src_;
        Tok k{Tok::T::end, "", 0, line_, col_};
        if (i_ >= s_.size()) return k;
        char c = s_[i_];
        if (c == '\n') {
            adv();
            k.t = Tok::T::newline;
            return k;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            k.t = Tok::T::ident;
            while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-' || s_[i_] == '\''))
                k.text += adv();
            return k;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            k.t = Tok::T::integer;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) k.text += adv();
            try {
                std::size_t used = 0;
                k.value = std::stoull(k.text, &used);
            } catch (...) {
                throw ParseError(k.line, k.col, "integer out of range: " + k.text);
            }
            return k;
        }
        if (c == '"') {
            adv();
            k.t = Tok::T::string;
            while (i_ < s_.size() && s_[i_] != '"' && s_[i_] != '\n') {
                if (s_[i_] == '\\' && i_ + 1 < s_.size()) adv();
                k.text += adv();
            }
            if (i_ >= s_.size() || s_[i_] != '"') throw ParseError(k.line, k.col, "unterminated string");
            adv();
            return k;
        }
        if (std::string("()[],=").find(c) != std::string::npos) {
            k.t = Tok::T::punct;
            k.text = std::string(1, adv());
            if (c == '(' || c == '[') ++depth_;
            if ((c == ')' || c == ']') && depth_ > 0) --depth_;
            return k;
        }
        throw ParseError(k.line, k.col, std::string("unexpected character '") + c + "'");
    }

private:
    // newlines inside brackets are whitespace
    void skip_space() {
        const std::string& s_ = *src_;
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (c == '#') {
                while (i_ < s_.size() && s_[i_] != '\n') adv();
            } else if (c == ' ' || c == '\t' || c == '\r') {
                adv();
            } else if (c == '\n' && depth_ > 0) {
                adv();
            } else {
                break;
            }
        }
    }
    char adv() {
        char c = (*src_)[i_++];
        if (c == '\n') ++line_, col_ = 1;
        else ++col_;
        return c;
    }
    const std::string* src_;
    std::size_t i_ = 0, line_ = 1, col_ = 1;
    int depth_ = 0;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) { tok_ = lex_.next(); }

    Scenario document() {
        Scenario sc;
        skip_newlines();
        if (!(is_ident() && tok_.text == kScenarioHeader)) fail("document must start with '" + std::string(kScenarioHeader) + " 1'");
        take();
        if (tok_.t != Lexer::Tok::T::integer) fail("expected format version");
        sc.version = tok_.value;
        if (sc.version != kScenarioVersion) fail("unsupported format version " + tok_.text);
        take();
        end_of_line();
        while (true) {
            skip_newlines();
            if (tok_.t == Lexer::Tok::T::end) break;
            if (!is_ident()) fail("expected a definition");
            std::string head = tok_.text;
            std::size_t line = tok_.line;
            if (head == "depth" || head == "budget" || head == "seed") {
                take();
                if (tok_.t != Lexer::Tok::T::integer) fail("expected integer after " + head);
                auto& slot = head == "depth" ? sc.depth : head == "budget" ? sc.budget : sc.seed;
                if (slot) fail("duplicate setting " + head);
                slot = tok_.value;
                take();
                end_of_line();
                continue;
            }
            bool known = false;
            for (const auto& k : definition_kinds()) known = known || k == head;
            if (!known) fail("unknown definition kind '" + head + "'");
            take();
            if (!is_ident()) fail("expected a name");
            Definition d;
            d.kind = head;
            d.name = tok_.text;
            d.line = line;
            if (d.name == "true" || d.name == "false") fail("reserved name " + d.name);
            if (sc.find(d.name)) fail("duplicate name '" + d.name + "'");
            take();
            expect("=");
            d.expr = expr();
            end_of_line();
            sc.defs.push_back(std::move(d));
        }
        return sc;
    }

private:
    Expr expr() {
        Expr e;
        e.line = tok_.line;
        e.col = tok_.col;
        switch (tok_.t) {
            case Lexer::Tok::T::integer:
                e.kind = Expr::Kind::integer;
                e.value = tok_.value;
                take();
                return e;
            case Lexer::Tok::T::string:
                e.kind = Expr::Kind::string;
                e.text = tok_.text;
                take();
                return e;
            case Lexer::Tok::T::ident: {
                std::string id = tok_.text;
                take();
                if (id == "true" || id == "false") {
                    e.kind = Expr::Kind::boolean;
                    e.value = id == "true";
                    return e;
                }
                if (!is_punct("(")) {
                    e.kind = Expr::Kind::ref;
                    e.text = id;
                    return e;
                }
                e.kind = Expr::Kind::call;
                e.text = id;
                take();
                bool seen_kw = false;
                if (!is_punct(")"))
                    while (true) {
                        std::string key;
                        if (is_ident()) {
                            // lookahead for key=
                            Lexer save = lex_;
                            auto t = tok_;
                            take();
                            if (is_punct("=")) {
                                key = t.text;
                                take();
                            } else {
                                lex_ = save;
                                tok_ = t;
                            }
                        }
                        if (!key.empty()) {
                            for (const auto& k : e.keys)
                                if (k == key) fail("duplicate argument '" + key + "'");
                            seen_kw = true;
                        } else if (seen_kw) {
                            fail("positional argument after keyword argument");
                        }
                        e.items.push_back(expr());
                        e.keys.push_back(key);
                        if (is_punct(")")) break;
                        expect(",");
                    }
                take();
                return e;
            }
            case Lexer::Tok::T::punct:
                if (tok_.text == "[") {
                    e.kind = Expr::Kind::list;
                    take();
                    if (!is_punct("]"))
                        while (true) {
                            e.items.push_back(expr());
                            if (is_punct("]")) break;
                            expect(",");
                        }
                    take();
                    return e;
                }
                [[fallthrough]];
            default:
                fail("expected an expression");
        }
        return e;
    }

    bool is_ident() const { return tok_.t == Lexer::Tok::T::ident; }
    bool is_punct(const char* p) const { return tok_.t == Lexer::Tok::T::punct && tok_.text == p; }
    void take() { tok_ = lex_.next(); }
    void expect(const char* p) {
        if (!is_punct(p)) fail(std::string("expected '") + p + "'");
        take();
    }
    void end_of_line() {
        if (tok_.t != Lexer::Tok::T::newline && tok_.t != Lexer::Tok::T::end) fail("expected end of line");
    }
    void skip_newlines() {
        while (tok_.t == Lexer::Tok::T::newline) take();
    }
    [[noreturn]] void fail(const std::string& msg) const {
        std::string at = tok_.t == Lexer::Tok::T::end ? "end of input" : tok_.t == Lexer::Tok::T::newline ? "end of line" : "'" + tok_.text + "'";
        throw ParseError(tok_.line, tok_.col, msg + " (at " + at + ")");
    }

    Lexer lex_;
    Lexer::Tok tok_;
};

inline std::string quote(const std::string& s) {
    std::string o = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') o += '\\';
        o += c;
    }
    return o + "\"";
}

inline void collect_refs(const Expr& e, std::vector<const Expr*>& out) {
    if (e.kind == Expr::Kind::ref) out.push_back(&e);
    for (const auto& x : e.items) collect_refs(x, out);
}

// every reference names a definition; the reference graph is acyclic
inline void check_references(const Scenario& sc) {
    std::map<std::string, int> state;  // 1 open, 2 done
    std::vector<std::string> path;
    std::function<void(const Definition&)> visit = [&](const Definition& d) {
        state[d.name] = 1;
        path.push_back(d.name);
        std::vector<const Expr*> refs;
        collect_refs(d.expr, refs);
        for (const Expr* r : refs) {
            const Definition* t = sc.find(r->text);
            if (!t) throw ResolutionError(r->text);
            int st = state[t->name];
            if (st == 1) {
                std::vector<std::string> cyc(std::find(path.begin(), path.end(), t->name), path.end());
                cyc.push_back(t->name);
                throw CycleError(cyc);
            }
            if (st == 0) visit(*t);
        }
        path.pop_back();
        state[d.name] = 2;
    };
    for (const auto& d : sc.defs)
        if (state[d.name] == 0) visit(d);
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    Scenario sc = detail::Parser(text).document();
    detail::check_references(sc);
    return sc;
}

inline std::string print_expr(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::integer: return std::to_string(e.value);
        case Expr::Kind::string: return detail::quote(e.text);
        case Expr::Kind::boolean: return e.value ? "true" : "false";
        case Expr::Kind::ref: return e.text;
        case Expr::Kind::call: {
            std::string s = e.text + "(";
            for (std::size_t i = 0; i < e.items.size(); ++i) {
                if (i) s += ", ";
                if (!e.keys[i].empty()) s += e.keys[i] + "=";
                s += print_expr(e.items[i]);
            }
            return s + ")";
        }
        case Expr::Kind::list: {
            std::string s = "[";
            for (std::size_t i = 0; i < e.items.size(); ++i) s += (i ? ", " : "") + print_expr(e.items[i]);
            return s + "]";
        }
    }
    return "";
}

// canonical text: header, settings, definitions in order
inline std::string print_scenario(const Scenario& sc) {
    std::string s = std::string(kScenarioHeader) + " " + std::to_string(sc.version) + "\n";
    if (sc.depth) s += "depth " + std::to_string(*sc.depth) + "\n";
    if (sc.budget) s += "budget " + std::to_string(*sc.budget) + "\n";
    if (sc.seed) s += "seed " + std::to_string(*sc.seed) + "\n";
    for (const auto& d : sc.defs) s += d.kind + " " + d.name + " = " + print_expr(d.expr) + "\n";
    return s;
}

}  // namespace bslab
