#pragma once
#include <any>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "../gen/construction_gen.hpp"
#include "../gen/forcing_gen.hpp"
#include "scenario.hpp"
#include "suites.hpp"

namespace bslab {

using ContextPtr = std::shared_ptr<const GenericContext>;

struct ContextVal {
    ContextPtr ctx;
    std::optional<TreeContext> tree;  // when built by a tree generator
};

struct ConditionVal {
    Condition q;
    ContextPtr ctx;
};

struct LiftJob {
    CalibrationInput in;
    BlockSeq e = BlockSeq::triangular();
};

struct ExtendJob {
    ConditionVal q;
    Task task = DecideSet{SetStream::omega()};
};

struct MeetJob {
    ConditionVal q;
    std::vector<Task> tasks;
    std::optional<Label> sup;
};

struct StageJob {
    ConditionVal q;
    std::vector<Task> tasks;
    std::set<std::size_t> checkpoints;
};

// Evaluates definitions on demand; every name is resolved once.
class Env {
public:
    Env(const Scenario& sc, Nat seed) : sc_(sc), seed_(seed) {}

    // resolve every definition, in order; only malformed text is fatal here
    void resolve_all() {
        for (const auto& d : sc_.defs) {
            try {
                value(d.name, d.kind, d.expr);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::parse || e.kind() == ErrorKind::resolution || e.kind() == ErrorKind::cycle) throw;
            }
        }
    }

    template <class T>
    const T& get(const std::string& name) {
        const Definition* d = sc_.find(name);
        if (!d) throw ResolutionError(name);
        return std::any_cast<const T&>(value(name, d->kind, d->expr));
    }

    const Scenario& scenario() const { return sc_; }

private:
    // ---- plumbing

    struct Args {
        const Expr& call;
        std::vector<std::string> names;
        std::map<std::string, const Expr*> got;

        Args(const Expr& e, std::vector<std::string> params) : call(e), names(std::move(params)) {
            std::size_t p = 0;
            for (std::size_t i = 0; i < e.items.size(); ++i) {
                const std::string& k = e.keys[i];
                if (k.empty()) {
                    if (p >= names.size())
                        throw ParseError(e.items[i].line, e.items[i].col, e.text + "() takes at most " + std::to_string(names.size()) + " arguments");
                    got[names[p++]] = &e.items[i];
                } else {
                    if (std::find(names.begin(), names.end(), k) == names.end())
                        throw ParseError(e.items[i].line, e.items[i].col, "unknown argument '" + k + "' for " + e.text + "()");
                    if (got.count(k)) throw ParseError(e.items[i].line, e.items[i].col, "argument '" + k + "' given twice");
                    got[k] = &e.items[i];
                }
            }
        }
        const Expr* opt(const std::string& k) const {
            auto it = got.find(k);
            return it == got.end() ? nullptr : it->second;
        }
        const Expr& need(const std::string& k) const {
            if (auto e = opt(k)) return *e;
            throw ParseError(call.line, call.col, e_missing(k));
        }
        std::string e_missing(const std::string& k) const { return call.text + "() needs argument '" + k + "'"; }
    };

    [[noreturn]] static void bad(const Expr& e, const std::string& msg) { throw ParseError(e.line, e.col, msg); }

    const std::any& value(const std::string& name, const std::string& kind, const Expr& e) {
        if (auto it = memo_.find(name); it != memo_.end()) return it->second;
        if (std::find(stack_.begin(), stack_.end(), name) != stack_.end()) {
            std::vector<std::string> path(std::find(stack_.begin(), stack_.end(), name), stack_.end());
            path.push_back(name);
            throw CycleError(path);
        }
        stack_.push_back(name);
        std::any v;
        try {
            v = build(kind, e);
        } catch (...) {
            stack_.pop_back();
            throw;
        }
        stack_.pop_back();
        return memo_.emplace(name, std::move(v)).first->second;
    }

    std::any build(const std::string& kind, const Expr& e) {
        if (kind == "fn") return fn(e);
        if (kind == "set") return set(e);
        if (kind == "blocks") return blocks(e);
        if (kind == "map") return map(e);
        if (kind == "triple") return triple(e);
        if (kind == "calibration") return calibration(e);
        if (kind == "fusion") return fusion(e);
        if (kind == "lift") return lift_job(e);
        if (kind == "tower") return tower(e);
        if (kind == "context") return context(e);
        if (kind == "condition") return condition(e);
        if (kind == "task") return task(e);
        if (kind == "tasks") return tasks(e);
        if (kind == "extend") return extend(e);
        if (kind == "meet") return meet(e);
        if (kind == "stage") return stage(e);
        if (kind == "suite") return suite(e);
        bad(e, "unknown kind " + kind);
    }

    // a reference to a definition of the given kind
    template <class T>
    std::optional<T> deref(const Expr& e, const std::string& kind) {
        if (e.kind != Expr::Kind::ref) return std::nullopt;
        const Definition* d = sc_.find(e.text);
        if (!d) throw ResolutionError(e.text);
        if (d->kind != kind) bad(e, "'" + e.text + "' is a " + d->kind + ", expected " + kind);
        return std::any_cast<T>(value(d->name, d->kind, d->expr));
    }

    void want_call(const Expr& e, const std::string& kind) {
        if (e.kind != Expr::Kind::call) bad(e, "expected a " + kind + " expression");
    }

    static Nat num(const Expr& e) {
        if (e.kind != Expr::Kind::integer) bad(e, "expected an integer");
        return e.value;
    }
    static bool flag(const Expr& e) {
        if (e.kind != Expr::Kind::boolean) bad(e, "expected true or false");
        return e.value != 0;
    }
    static std::string str(const Expr& e) {
        if (e.kind != Expr::Kind::string) bad(e, "expected a string");
        return e.text;
    }
    static const std::vector<Expr>& list(const Expr& e) {
        if (e.kind != Expr::Kind::list) bad(e, "expected a list");
        return e.items;
    }
    static std::vector<Nat> nums(const Expr& e) {
        std::vector<Nat> out;
        for (const auto& x : list(e)) out.push_back(num(x));
        return out;
    }
    static std::vector<std::vector<Nat>> num_rows(const Expr& e) {
        std::vector<std::vector<Nat>> out;
        for (const auto& x : list(e)) out.push_back(nums(x));
        return out;
    }
    template <class F>
    auto each(const Expr& e, F&& f) {
        std::vector<decltype(f(e))> out;
        for (const auto& x : list(e)) out.push_back(f(x));
        return out;
    }
    Nat seed_of(const Args& a) { return a.opt("seed") ? num(*a.opt("seed")) : seed_; }

    // ---- objects

    Fn fn(const Expr& e) {
        if (auto r = deref<Fn>(e, "fn")) return *r;
        want_call(e, "fn");
        const std::string& h = e.text;
        if (h == "identity") return Args(e, {}), Fn::identity();
        if (h == "constant") { Args a(e, {"value"}); return Fn::constant(num(a.need("value"))); }
        if (h == "linear") { Args a(e, {"a", "b"}); return Fn::linear(num(a.need("a")), num(a.need("b"))); }
        if (h == "quotient") { Args a(e, {"d"}); return Fn::quotient(num(a.need("d"))); }
        if (h == "power") { Args a(e, {"base"}); return Fn::power(num(a.need("base"))); }
        if (h == "tri_s") return Args(e, {}), Fn::tri_s();
        if (h == "tri_t") return Args(e, {}), Fn::tri_t();
        if (h == "compose") { Args a(e, {"outer", "inner"}); return Fn::compose(fn(a.need("outer")), fn(a.need("inner"))); }
        if (h == "max") { Args a(e, {"parts"}); return Fn::max_of(each(a.need("parts"), [&](const Expr& x) { return fn(x); })); }
        if (h == "table") { Args a(e, {"values"}); return Fn::table(nums(a.need("values"))); }
        if (h == "nth") { Args a(e, {"set"}); return Fn::nth_of(set(a.need("set"))); }
        if (h == "block_value") {
            Args a(e, {"map", "blocks", "from"});
            return Fn::block_value(map(a.need("map")), blocks(a.need("blocks")), num(a.need("from")));
        }
        bad(e, "unknown fn constructor " + h + "()");
    }

    SetStream set(const Expr& e) {
        if (auto r = deref<SetStream>(e, "set")) return *r;
        want_call(e, "set");
        const std::string& h = e.text;
        if (h == "omega") return Args(e, {}), SetStream::omega();
        if (h == "arithmetic") { Args a(e, {"start", "step"}); return SetStream::arithmetic(num(a.need("start")), num(a.need("step"))); }
        if (h == "periodic") { Args a(e, {"start", "gaps"}); return SetStream::periodic(num(a.need("start")), nums(a.need("gaps"))); }
        if (h == "geometric") { Args a(e, {"start", "ratio"}); return SetStream::geometric(num(a.need("start")), num(a.need("ratio"))); }
        if (h == "table") { Args a(e, {"values"}); return SetStream::table(nums(a.need("values"))); }
        if (h == "image") { Args a(e, {"set", "map"}); return SetStream::image(set(a.need("set")), map(a.need("map"))); }
        if (h == "preimage") {
            Args a(e, {"set", "map", "base"});
            return SetStream::preimage(set(a.need("set")), map(a.need("map")), blocks(a.need("base")));
        }
        if (h == "intersection") { Args a(e, {"a", "b"}); return SetStream::intersection(set(a.need("a")), set(a.need("b"))); }
        if (h == "union") {
            Args a(e, {"blocks", "from"});
            return SetStream::block_union(blocks(a.need("blocks")), a.opt("from") ? num(*a.opt("from")) : 0);
        }
        if (h == "block_image") {
            Args a(e, {"blocks", "from", "map"});
            return SetStream::block_image(blocks(a.need("blocks")), num(a.need("from")), map(a.need("map")));
        }
        if (h == "tail") { Args a(e, {"set", "from"}); return SetStream::tail(set(a.need("set")), num(a.need("from"))); }
        if (h == "with_prefix") { Args a(e, {"values", "rest"}); return SetStream::with_prefix(nums(a.need("values")), set(a.need("rest"))); }
        if (h == "from_fn") { Args a(e, {"fn"}); return SetStream::from_fn(fn(a.need("fn"))); }
        if (h == "tower") {
            Args a(e, {"context", "label", "index"});
            auto c = context(a.need("context"));
            return c.ctx->tower_set(label(*c.ctx, a.need("label")), num(a.need("index")));
        }
        bad(e, "unknown set constructor " + h + "()");
    }

    BlockSeq blocks(const Expr& e) {
        if (auto r = deref<BlockSeq>(e, "blocks")) return *r;
        want_call(e, "blocks");
        const std::string& h = e.text;
        if (h == "triangular") return Args(e, {}), BlockSeq::triangular();
        if (h == "intervals") {
            Args a(e, {"start", "first", "step", "gap"});
            return BlockSeq::intervals(num(a.need("start")), num(a.need("first")), num(a.need("step")), num(a.need("gap")));
        }
        if (h == "chunks") {
            Args a(e, {"set", "first", "step"});
            return BlockSeq::chunks(set(a.need("set")), num(a.need("first")), num(a.need("step")));
        }
        if (h == "select") {
            Args a(e, {"src", "at", "in", "out", "take"});
            if (a.opt("in") && a.opt("out")) bad(e, "select() takes in= or out=, not both");
            std::optional<Fn> at;
            if (a.opt("at")) at = fn(*a.opt("at"));
            std::optional<SetStream> filter;
            bool keep = true;
            if (a.opt("in")) filter = set(*a.opt("in"));
            if (a.opt("out")) filter = set(*a.opt("out")), keep = false;
            Take t = Take::all;
            if (a.opt("take")) {
                std::string s = str(*a.opt("take"));
                if (s == "first") t = Take::first;
                else if (s == "second") t = Take::second;
                else if (s != "all") bad(*a.opt("take"), "take must be \"all\", \"first\" or \"second\"");
            }
            return BlockSeq::select(blocks(a.need("src")), at, filter, keep, t);
        }
        if (h == "table") {
            Args a(e, {"blocks"});
            std::vector<Block> bs;
            for (auto& r : num_rows(a.need("blocks"))) bs.push_back(Block(r.begin(), r.end()));
            return BlockSeq::table(bs);
        }
        if (h == "tower") {
            Args a(e, {"context", "label", "index"});
            auto c = context(a.need("context"));
            return c.ctx->towers.at(label(*c.ctx, a.need("label"))).at(num(a.need("index")));
        }
        bad(e, "unknown blocks constructor " + h + "()");
    }

    BlockMap map(const Expr& e) {
        if (auto r = deref<BlockMap>(e, "map")) return *r;
        want_call(e, "map");
        const std::string& h = e.text;
        if (h == "identity") return Args(e, {}), BlockMap::identity();
        if (h == "normal") { Args a(e, {"base", "psi"}); return BlockMap::normal(blocks(a.need("base")), fn(a.need("psi"))); }
        if (h == "table") { Args a(e, {"values"}); return BlockMap::table(nums(a.need("values"))); }
        if (h == "compose") { Args a(e, {"outer", "inner"}); return BlockMap::compose(map(a.need("outer")), map(a.need("inner"))); }
        if (h == "quotient") { Args a(e, {"scale", "divisor"}); return BlockMap::quotient(num(a.need("scale")), num(a.need("divisor"))); }
        if (h == "of") { Args a(e, {"triple"}); return triple(a.need("triple")).pi; }
        if (h == "context") {
            Args a(e, {"context", "beta", "alpha"});
            auto c = context(a.need("context"));
            return c.ctx->map(label(*c.ctx, a.need("beta")), label(*c.ctx, a.need("alpha")));
        }
        bad(e, "unknown map constructor " + h + "()");
    }

    NormalTriple triple(const Expr& e) {
        if (auto r = deref<NormalTriple>(e, "triple")) return *r;
        want_call(e, "triple");
        const std::string& h = e.text;
        if (h == "normal") { Args a(e, {"blocks", "psi"}); return NormalTriple::of(blocks(a.need("blocks")), fn(a.need("psi"))); }
        if (h == "standard") { Args a(e, {"blocks"}); return NormalTriple::standard(blocks(a.need("blocks"))); }
        if (h == "quotient") {
            Args a(e, {"blocks", "scale", "r"});
            return quotient_triple(blocks(a.need("blocks")), num(a.need("scale")), num(a.need("r")));
        }
        if (h == "context") {
            Args a(e, {"context", "beta", "alpha"});
            auto c = context(a.need("context"));
            return c.ctx->triple(label(*c.ctx, a.need("beta")), label(*c.ctx, a.need("alpha")));
        }
        bad(e, "unknown triple constructor " + h + "()");
    }

    CalibrationInput calibration(const Expr& e) {
        if (auto r = deref<CalibrationInput>(e, "calibration")) return *r;
        want_call(e, "calibration");
        if (e.text == "random") {
            Args a(e, {"seed", "levels", "depth"});
            Rng rng(seed_of(a));
            return random_calibration_input(rng, num(a.need("levels")), a.opt("depth") ? num(*a.opt("depth")) : 64);
        }
        if (e.text != "calibration") bad(e, "unknown calibration constructor " + e.text + "()");
        Args a(e, {"levels", "pi", "E", "C", "D", "f", "depth", "image_threshold", "disjoint_threshold"});
        CalibrationInput in;
        in.levels = num(a.need("levels"));
        for (const auto& row : list(a.need("pi"))) in.pi.push_back(each(row, [&](const Expr& x) { return map(x); }));
        in.E = each(a.need("E"), [&](const Expr& x) { return set(x); });
        in.C = each(a.need("C"), [&](const Expr& x) { return set(x); });
        in.D = each(a.need("D"), [&](const Expr& x) { return set(x); });
        in.f = fn(a.need("f"));
        if (a.opt("depth")) in.depth = num(*a.opt("depth"));
        in.image_threshold = num_rows(a.need("image_threshold"));
        in.disjoint_threshold = nums(a.need("disjoint_threshold"));
        return in;
    }

    FusionInput fusion(const Expr& e) {
        if (auto r = deref<FusionInput>(e, "fusion")) return *r;
        want_call(e, "fusion");
        if (e.text == "random") {
            Args a(e, {"seed"});
            Rng rng(seed_of(a));
            return random_fusion_input(rng);
        }
        if (e.text != "fusion") bad(e, "unknown fusion constructor " + e.text + "()");
        Args a(e, {"chain", "t", "Dk", "D", "D_threshold", "witness", "cert_depth"});
        FusionInput in;
        in.chain = each(a.need("chain"), [&](const Expr& x) { return blocks(x); });
        in.t = triple(a.need("t"));
        in.Dk = each(a.need("Dk"), [&](const Expr& x) { return set(x); });
        in.D = set(a.need("D"));
        in.D_threshold = nums(a.need("D_threshold"));
        if (a.opt("witness"))
            for (const auto& x : list(*a.opt("witness"))) in.witness.push_back(fn(x));
        if (a.opt("cert_depth")) in.cert_depth = num(*a.opt("cert_depth"));
        return in;
    }

    LiftJob lift_job(const Expr& e) {
        if (auto r = deref<LiftJob>(e, "lift")) return *r;
        want_call(e, "lift");
        if (e.text == "random") {
            Args a(e, {"seed", "levels", "depth"});
            Rng rng(seed_of(a));
            LiftJob j;
            j.in = random_lift_input(rng, num(a.need("levels")), a.opt("depth") ? num(*a.opt("depth")) : 40);
            j.e = random_intervals(rng);
            return j;
        }
        if (e.text != "lift") bad(e, "unknown lift constructor " + e.text + "()");
        Args a(e, {"calibration", "e"});
        return {calibration(a.need("calibration")), blocks(a.need("e"))};
    }

    TowerInput tower(const Expr& e) {
        if (auto r = deref<TowerInput>(e, "tower")) return *r;
        want_call(e, "tower");
        if (e.text != "random") bad(e, "unknown tower constructor " + e.text + "()");
        Args a(e, {"seed", "levels", "degenerate", "f"});
        Rng rng(seed_of(a));
        TowerOptions opt;
        opt.levels = num(a.need("levels"));
        if (a.opt("degenerate")) opt.degenerate = flag(*a.opt("degenerate"));
        if (a.opt("f")) opt.f = fn(*a.opt("f"));
        return random_tower_input(rng, opt);
    }

    ContextVal context(const Expr& e) {
        if (auto r = deref<ContextVal>(e, "context")) return *r;
        want_call(e, "context");
        const std::string& h = e.text;
        if (h == "trivial") return Args(e, {}), ContextVal{std::make_shared<GenericContext>(), std::nullopt};
        if (h == "tree") {
            Args a(e, {"seed", "labels", "towers"});
            Rng rng(seed_of(a));
            TreeOptions opt;
            opt.labels = num(a.need("labels"));
            if (a.opt("towers")) opt.towers = num(*a.opt("towers"));
            if (opt.labels == 0) bad(e, "tree() needs at least one label");
            TreeContext tc = tree_context(rng, opt);
            return {std::make_shared<GenericContext>(tc.ctx), tc};
        }
        if (h == "stage") {
            Args a(e, {});
            TreeContext tc = stage_context();
            return {std::make_shared<GenericContext>(tc.ctx), tc};
        }
        if (h == "single") {
            Args a(e, {});
            return {std::make_shared<GenericContext>(single_label_context().first), std::nullopt};
        }
        bad(e, "unknown context constructor " + h + "()");
    }

    static Label label(const GenericContext& ctx, const Expr& e) {
        if (e.kind == Expr::Kind::string) {
            if (e.text == "TOP") return kTop;
            if (auto a = ctx.find(e.text)) return *a;
            bad(e, "no label " + e.text);
        }
        Nat v = num(e);
        if (v >= ctx.delta()) bad(e, "label " + std::to_string(v) + " outside the context");
        return v;
    }

    ConditionVal condition(const Expr& e) {
        if (auto r = deref<ConditionVal>(e, "condition")) return *r;
        want_call(e, "condition");
        const std::string& h = e.text;
        if (h == "empty") {
            Args a(e, {"blocks"});
            return {empty_condition(blocks(a.need("blocks"))), std::make_shared<GenericContext>()};
        }
        if (h == "standard") {
            Args a(e, {"blocks", "context"});
            ContextPtr ctx = a.opt("context") ? context(*a.opt("context")).ctx
                                              : std::make_shared<GenericContext>(single_label_context().first);
            if (ctx->delta() == 0) bad(e, "standard() needs a context with a label 0");
            return {standard_condition(blocks(a.need("blocks"))), ctx};
        }
        if (h == "tree") {
            Args a(e, {"context", "top", "tower", "extra"});
            auto c = context(a.need("context"));
            if (!c.tree) bad(a.need("context"), "tree() needs a context built by tree() or stage()");
            std::vector<Label> extra;
            if (a.opt("extra"))
                for (const auto& x : list(*a.opt("extra"))) extra.push_back(label(*c.ctx, x));
            Label top = label(*c.ctx, a.need("top"));
            if (top == kTop) bad(a.need("top"), "tree() needs a label of the context as top");
            return {c.tree->condition(top, num(a.need("tower")), extra), c.ctx};
        }
        if (h == "with") {
            Args a(e, {"condition", "label", "triple"});
            auto base = condition(a.need("condition"));
            Label l = label(*base.ctx, a.need("label"));
            base.q = base.q.with(Coordinate{l, triple(a.need("triple"))});
            return base;
        }
        if (h == "without") {
            Args a(e, {"condition", "label"});
            auto base = condition(a.need("condition"));
            Label l = label(*base.ctx, a.need("label"));
            auto& X = base.q.X;
            X.erase(std::remove_if(X.begin(), X.end(), [l](const Coordinate& c) { return c.alpha == l; }), X.end());
            return base;
        }
        bad(e, "unknown condition constructor " + h + "()");
    }

    Phi phi(const Expr& e) {
        want_call(e, "phi");
        if (e.text == "image") { Args a(e, {"map"}); return Phi::image(map(a.need("map"))); }
        if (e.text == "tail") { Args a(e, {"from"}); return Phi::tail(num(a.need("from"))); }
        if (e.text == "constant") { Args a(e, {"set"}); return Phi::constant(set(a.need("set"))); }
        bad(e, "unknown phi constructor " + e.text + "()");
    }

    // labels inside tasks are plain numbers; the condition's context checks them on use
    Task task(const Expr& e) {
        if (auto r = deref<Task>(e, "task")) return *r;
        want_call(e, "task");
        const std::string& h = e.text;
        if (h == "decide") { Args a(e, {"set"}); return DecideSet{set(a.need("set"))}; }
        if (h == "thin") {
            Args a(e, {"f", "moreover"});
            return Thin{fn(a.need("f")), a.opt("moreover") ? flag(*a.opt("moreover")) : false};
        }
        if (h == "rapidify") { Args a(e, {"f"}); return Rapidify{fn(a.need("f"))}; }
        if (h == "restrict") { Args a(e, {"label", "set"}); return RestrictImage{num(a.need("label")), set(a.need("set"))}; }
        if (h == "normalize") { Args a(e, {"label"}); return NormalizeMaps{num(a.need("label"))}; }
        if (h == "add") { Args a(e, {"label"}); return AddCoordinate{num(a.need("label"))}; }
        if (h == "kill") {
            Args a(e, {"label", "phi", "choose"});
            std::optional<Chooser> ch;
            if (a.opt("choose")) {
                std::string s = str(*a.opt("choose"));
                if (s != "first" && s != "second") bad(*a.opt("choose"), "choose must be \"first\" or \"second\"");
                Half side = s == "first" ? Half::first : Half::second;
                ch = [side](const std::vector<KillProbe>&) { return side; };
            }
            return Kill{num(a.need("label")), phi(a.need("phi")), ch};
        }
        if (h == "pullback") {
            Args a(e, {"triple", "blocks", "label"});
            return RKPullback{triple(a.need("triple")), blocks(a.need("blocks")), num(a.need("label"))};
        }
        if (h == "seal") {
            Args a(e, {"labels", "chain", "side"});
            return SealLimit{nums(a.need("labels")), each(a.need("chain"), [&](const Expr& x) { return blocks(x); }),
                             each(a.need("side"), [&](const Expr& x) { return triple(x); })};
        }
        bad(e, "unknown task constructor " + h + "()");
    }

    std::vector<Task> tasks(const Expr& e) {
        if (auto r = deref<std::vector<Task>>(e, "tasks")) return *r;
        return each(e, [&](const Expr& x) { return task(x); });
    }

    ExtendJob extend(const Expr& e) {
        want_call(e, "extend");
        if (e.text != "extend") bad(e, "expected extend(condition, task)");
        Args a(e, {"condition", "task"});
        return {condition(a.need("condition")), task(a.need("task"))};
    }

    MeetJob meet(const Expr& e) {
        want_call(e, "meet");
        if (e.text != "chain") bad(e, "expected chain(condition, tasks, sup=)");
        Args a(e, {"condition", "tasks", "sup"});
        MeetJob j{condition(a.need("condition")), tasks(a.need("tasks")), std::nullopt};
        if (a.opt("sup")) j.sup = label(*j.q.ctx, *a.opt("sup"));
        return j;
    }

    StageJob stage(const Expr& e) {
        want_call(e, "stage");
        if (e.text != "stage") bad(e, "expected stage(condition, tasks, checkpoints=)");
        Args a(e, {"condition", "tasks", "checkpoints"});
        StageJob j{condition(a.need("condition")), tasks(a.need("tasks")), {}};
        if (a.opt("checkpoints"))
            for (Nat c : nums(*a.opt("checkpoints"))) j.checkpoints.insert(c);
        return j;
    }

    SuiteSpec suite(const Expr& e) {
        want_call(e, "suite");
        if (e.text != "suite") bad(e, "expected suite(kind, seed=, count=, depth=)");
        Args a(e, {"kind", "seed", "count", "depth"});
        SuiteSpec s;
        s.kind = str(a.need("kind"));
        bool known = false;
        for (const auto& k : suite_kinds()) known = known || k.kind == s.kind;
        if (!known) bad(a.need("kind"), "unknown suite kind \"" + s.kind + "\"");
        s.seed = seed_of(a);
        if (a.opt("count")) s.count = num(*a.opt("count"));
        if (a.opt("depth")) s.depth = num(*a.opt("depth"));
        return s;
    }

    const Scenario& sc_;
    Nat seed_;
    std::map<std::string, std::any> memo_;
    std::vector<std::string> stack_;
};

// parse, then resolve every definition: unknown constructors and fields fail here
inline Scenario load_scenario(const std::string& text) {
    Scenario sc = parse_scenario(text);
    Env env(sc, sc.seed.value_or(1));
    env.resolve_all();
    return sc;
}

}  // namespace bslab
