#pragma once
#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "../gen/construction_gen.hpp"
#include "../gen/forcing_gen.hpp"

namespace bslab {

struct SuiteSpec {
    std::string kind;
    Nat seed = 1;
    Nat count = 0;  // 0: kind default
    Nat depth = 0;  // 0: kind default
};

struct SuiteInfo {
    std::string kind;
    Nat count, depth;
    std::string what;
};

inline const std::vector<SuiteInfo>& suite_kinds() {
    static const std::vector<SuiteInfo> k{
        {"poset", 500, 64, "random block sequences; thinning chains"},
        {"rho", 200, 0, "Delta^rho against a brute-force double loop"},
        {"fiber", 100, 24, "fiber blocks of random normal triples"},
        {"calibration", 50, 200, "calibrate + verify, plus mutations"},
        {"fusion", 30, 30, "fusion below random chains"},
        {"lift", 30, 120, "lifted calibration systems"},
        {"diagonal", 20, 0, "diagonalization of random towers"},
        {"forcing", 100, 6, "random (condition, task) pairs"},
        {"meet", 2, 6, "Subcase IIa indices; constant-X chains"},
    };
    return k;
}

inline const SuiteInfo& suite_info(const std::string& kind) {
    for (const auto& s : suite_kinds())
        if (s.kind == kind) return s;
    throw PreconditionFailed("suite-kind", "unknown suite " + kind);
}

// outcome of one instance
struct Sample {
    std::vector<ReportLine> lines;
    std::string print;  // output fingerprint material
    void add(std::string tag, bool pass, std::string w = "") { lines.push_back({std::move(tag), pass, std::move(w)}); }
    void add(std::string tag, const Verdict& v) {
        add(std::move(tag), v.ok, v.ok ? "" : v.clause + " at " + std::to_string(v.index) + ": " + v.detail);
    }
    void take(const Report& r, const std::string& prefix = "") {
        for (const auto& l : r.lines()) add(prefix + l.tag, l.pass, l.witness);
    }
};

namespace detail {

inline Nat mix_seed(Nat seed, Nat i) {
    Nat z = seed + 0x9E3779B97F4A7C15ull * (i + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline Nat fnv(const std::string& s, Nat h = 1469598103934665603ull) {
    for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ull;
    return h;
}

template <class F>
std::vector<Sample> run_instances(Nat count, Nat seed, F&& one) {
    std::vector<Sample> out(count);
    std::atomic<Nat> next{0};
    auto work = [&] {
        for (Nat i; (i = next++) < count;) {
            Rng rng(mix_seed(seed, i));
            try {
                out[i] = one(rng, i);
            } catch (const Error& e) {
                out[i].add("suite:error", false, e.what());
            }
        }
    };
    unsigned n = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

// one line per tag: pass count, first failing instance
inline Report fold(const std::string& kind, const std::vector<Sample>& samples, Nat seed, Nat depth) {
    Report r("suite:" + kind);
    r.note("seed", std::to_string(seed));
    r.note("instances", std::to_string(samples.size()));
    r.note("depth", std::to_string(depth));
    std::vector<std::string> order;
    std::map<std::string, std::pair<Nat, Nat>> tally;  // passes, total
    std::map<std::string, std::string> first_fail;
    Nat h = fnv("");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        h = fnv(samples[i].print + "\n", h);
        for (const auto& l : samples[i].lines) {
            if (!tally.count(l.tag)) order.push_back(l.tag);
            auto& t = tally[l.tag];
            ++t.second;
            if (l.pass) ++t.first;
            else if (!first_fail.count(l.tag)) first_fail[l.tag] = "#" + std::to_string(i) + " " + l.witness;
        }
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    r.note("digest", buf);
    for (const auto& tag : order) {
        auto [p, n] = tally[tag];
        std::string w = std::to_string(p) + "/" + std::to_string(n);
        if (first_fail.count(tag)) w += "; first failure " + first_fail[tag];
        r.add(tag, p == n, w);
    }
    return r;
}

inline std::string blocks_print(const BlockSeq& c, Nat n) {
    std::string s;
    for (Nat i = 0; i < n; ++i) s += join_nats(c.block(i)) + "|";
    return s;
}

// ---- poset

inline BlockSeq random_block_seq(Rng& rng) {
    switch (rng.below(4)) {
        case 0: return BlockSeq::intervals(rng.below(20), rng.between(1, 4), rng.between(1, 3), rng.below(5));
        case 1: {
            std::vector<Nat> gaps;
            for (Nat i = rng.between(1, 4); i > 0; --i) gaps.push_back(rng.between(1, 4));
            return BlockSeq::chunks(SetStream::periodic(rng.below(10), gaps), rng.between(1, 3), rng.between(1, 2));
        }
        case 2: {
            Fn idx = Fn::linear(rng.between(1, 3), rng.below(4));
            return BlockSeq::select(BlockSeq::triangular(), idx, std::nullopt, true, Take::first);
        }
        default: {
            Nat a = rng.between(2, 4), b = rng.below(3);
            return BlockSeq::chunks(SetStream::from_fn(Fn::linear(a, b)), rng.between(1, 2), 1);
        }
    }
}

// d(j): for j < p a block straddling src(idx(j)) and src(idx(j)+1); else the least j+1 points of src(idx(j))
inline BlockSeq straddle_thin(const BlockSeq& src, Nat p, Nat off, Nat stride) {
    return BlockSeq::from_fn("thin(" + src.describe() + ")", [=](Nat j) {
        Nat i = off + stride * j;
        Block b;
        if (j < p) {
            b.push_back(src.max_of(i));
            Block nxt = src.block(i + 1);
            b.insert(b.end(), nxt.begin(), nxt.begin() + j);
        } else {
            Block full = src.block(i);
            b.assign(full.begin(), full.begin() + j + 1);
        }
        return b;
    });
}

inline Sample poset_instance(Rng& rng, Nat depth) {
    Sample s;
    BlockSeq c = random_block_seq(rng);
    s.add("d13:block-seq", block_seq_check(c, depth));
    Verdict v = Verdict::pass();
    for (Nat n = 0; n < depth && v.ok; ++n)
        if (c.min_of(n) < n) v = Verdict::fail(n, "min", "min c(n) = " + std::to_string(c.min_of(n)));
    s.add("r5:i201", v);
    s.print = blocks_print(c, 6);
    return s;
}

inline Sample chain_instance(Rng& rng, Nat depth) {
    Sample s;
    const Nat len = rng.between(2, 4);
    std::vector<BlockSeq> d{random_block_seq(rng)};
    std::vector<Nat> m;
    for (Nat k = 0; k < len; ++k) {
        Nat p = rng.coin() ? 0 : rng.between(2, 4), stride = rng.between(2, 3), off = rng.below(3);
        d.push_back(straddle_thin(d.back(), p, off, stride));
        m.push_back(le_threshold(d.back(), d[d.size() - 2], depth));
        s.add("r5:threshold", m.back() == p, "le threshold " + std::to_string(m.back()) + ", built " + std::to_string(p));
    }
    Nat l = 0;
    for (Nat n = 0; n < len; ++n) {
        l = std::max(l, m[n]);
        LeResult r = le_at(d[n + 1], d[0], l, depth);
        s.add("r5:i203", r.ok, r.ok ? "" : "d_" + std::to_string(n + 1) + " at " + std::to_string(r.failed_at));
    }
    for (Nat n = 0; n + 2 <= len; ++n) {
        Nat lab = std::max(m[n], m[n + 1]);
        LeResult r = le_at(d[n + 2], d[n], lab, depth);
        s.add("r5:i204", r.ok, r.ok ? "" : "at " + std::to_string(r.failed_at) + ": " + r.reason);
    }
    s.print = blocks_print(d.back(), 4);
    return s;
}

// ---- rho

struct SmallRho {
    std::vector<std::vector<Nat>> D;                 // explicit sorted points
    std::vector<std::vector<Nat>> K;                 // K[n][m]
    std::vector<std::vector<std::vector<Nat>>> tab;  // tab[n][m][x] = pi_{n,m}(x)
};

inline SmallRho random_small_rho(Rng& rng) {
    SmallRho r;
    Nat rows = rng.between(1, 4), U = 60;
    for (Nat m = 0; m < rows; ++m) {
        std::set<Nat> pts;
        while (pts.size() < 24) pts.insert(rng.below(U));
        r.D.push_back({pts.begin(), pts.end()});
    }
    // K columns increasing in n, windows of at most 20 points
    std::vector<Nat> cur(rows);
    for (Nat m = 0; m < rows; ++m) cur[m] = rng.below(3);
    for (Nat n = 0; n <= rows; ++n) {
        std::vector<Nat> row;
        for (Nat m = 0; m < rows; ++m) {
            if (n > 0) cur[m] = std::min<Nat>(cur[m] + rng.between(1, 6), 23);
            row.push_back(cur[m]);
        }
        r.K.push_back(row);
    }
    for (Nat n = 0; n < rows; ++n) {
        std::vector<std::vector<Nat>> per;
        for (Nat m = 0; m <= n; ++m) {
            std::vector<Nat> t(U);
            for (Nat x = 0; x < U; ++x) t[x] = m == n ? x : rng.below(U);
            per.push_back(t);
        }
        r.tab.push_back(per);
    }
    return r;
}

inline Sample rho_instance(Rng& rng) {
    Sample s;
    SmallRho sr = random_small_rho(rng);
    const Nat rows = sr.D.size();
    RhoTriple rho;
    for (const auto& d : sr.D) rho.D.push_back(SetStream::table(d));
    for (Nat n = 0; n <= rows; ++n) {
        std::vector<Nat> row;
        for (Nat m = 0; m <= std::min(n, rows - 1); ++m) row.push_back(sr.K[n][m]);
        rho.K.push_back(row);
    }
    for (Nat n = 0; n < rows; ++n) {
        std::vector<BlockMap> row;
        for (Nat m = 0; m <= n; ++m) row.push_back(BlockMap::table(sr.tab[n][m]));
        rho.pi.push_back(row);
    }
    // K[n][m] is used only for m <= n; K row n+1 supplies K_{m,n+1}
    auto lv = delta_levels(rho, rows);
    Nat L = 0;
    bool same = true;
    std::string w;
    for (Nat n = 0; n < rows && same; ++n) {
        std::set<Nat> delta;
        for (Nat m = 0; m <= n; ++m)
            for (Nat a = sr.K[n][m]; a < sr.K[n + 1][m]; ++a) {
                Nat k = sr.D[m][a];
                bool hit = false;
                for (Nat mp = m + 1; mp <= n; ++mp)
                    for (Nat b = sr.K[n][mp]; b < sr.K[n + 1][mp]; ++b)
                        if (sr.tab[mp][m][sr.D[mp][b]] == k) hit = true;
                if (!hit) delta.insert(k);
            }
        std::vector<Nat> dv(delta.begin(), delta.end());
        if (dv != lv[n].delta || lv[n].L != L) {
            same = false;
            w = "level " + std::to_string(n) + ": engine {" + join_nats(lv[n].delta) + "} brute {" + join_nats(dv) + "}";
        }
        L += dv.size();
        s.print += join_nats(dv) + ";";
    }
    if (same && lv.back().L_next != L) same = false, w = "L mismatch";
    s.add("r1:delta", same, w);
    return s;
}

// ---- fiber

inline Sample fiber_instance(Rng& rng, Nat depth) {
    Sample s;
    auto shape = IntervalShape::random(rng);
    BlockSeq b = shape.at(0);
    Nat scale = rng.between(1, 3), r = rng.between(1, 3);
    NormalTriple t = quotient_triple(b, scale, r);
    Nat st = rng.between(1, 3), off = rng.below(3), p = rng.below(3);
    // c(j) = b(st*j + off) past a straddling head of length p
    BlockSeq c = BlockSeq::from_fn("fiber-c", [=](Nat j) {
        Nat i = off + (st + 1) * j;
        Block full = b.block(i);
        if (j >= p) return full;
        Block x{full.back()};
        Block nxt = b.block(i + 1);
        x.insert(x.end(), nxt.begin(), nxt.begin() + j);
        return x;
    });
    Nat n0 = p;
    std::vector<Nat> gaps;
    for (Nat i = rng.between(1, 3); i > 0; --i) gaps.push_back(rng.between(1, 3));
    SetStream sel = SetStream::periodic(rng.below(2), gaps);
    // a(n) = psi-value of c(n0 + r*sel(n)): distinct values
    Nat R = r;
    Fn av = Fn::derived("a", [=](Nat n) {
        Nat j = n0 + R * sel.nth(n);
        return scale * ((off + (st + 1) * j) / R);
    });
    SetStream a = SetStream::from_fn(av);
    FiberBlocks fb = fiber_blocks(t, a, c, n0, depth);
    s.add("t14:chain", fb.chain);
    // brute force fibers
    std::vector<Nat> target = a.prefix(depth);
    std::vector<std::vector<Nat>> F(depth);
    for (Nat m = 0;; ++m) {
        std::set<Nat> vals;
        for (Nat k : c.block(m)) vals.insert(t.pi(k));
        if (m >= n0 && *vals.begin() > target.back()) break;
        if (vals.size() != 1) continue;
        auto it = std::find(target.begin(), target.end(), *vals.begin());
        if (it != target.end()) F[it - target.begin()].push_back(m);
    }
    s.add("t14:fibers", F == fb.F, F == fb.F ? "" : "fiber sets differ");
    Verdict v = Verdict::pass();
    for (Nat n = 0; n + 1 < depth && v.ok; ++n) {
        Nat lo = *std::max_element(F[n].begin(), F[n].end());
        auto it = std::lower_bound(F[n + 1].begin(), F[n + 1].end(), n0);
        if (it == F[n + 1].end() || !(lo < *it && *it <= F[n + 1].back()))
            v = Verdict::fail(n, "t14", "max F_n < min(F_{n+1} - n0) <= max F_{n+1}");
    }
    s.add("t14:order", v);
    for (const auto& f : F) s.print += join_nats(f) + ";";
    return s;
}

// ---- calibration

inline Sample calibration_instance(Rng& rng, Nat depth) {
    Sample s;
    Nat levels = rng.between(1, 5);
    auto in = random_calibration_input(rng, levels, depth);
    s.take(check_calibration_input(in), "input/");
    auto cal = calibrate(in, levels - 1);
    s.take(verify_calibration(in, cal, levels - 1));
    for (const auto& row : cal.K) s.print += join_nats(row) + ";";
    s.print += "g=" + join_nats(cal.g);
    if (levels >= 2) {
        std::string what;
        auto bad = mutate_calibration(cal, rng, &what);
        bool caught = !verify_calibration(in, bad, levels - 1).ok();
        s.add("t7:mutation-caught", caught, what);
        s.print += "|" + what;
    } else {
        // a one-level g' decrement
        Calibration bad = cal;
        bool caught = true;
        if (bad.g[0] > 0) {
            --bad.g[0];
            caught = !verify_calibration(in, bad, 0).ok();
        }
        s.add("t7:mutation-caught", caught, "g'(0)-1");
    }
    return s;
}

// ---- fusion

inline Sample fusion_instance(Rng& rng, Nat depth) {
    Sample s;
    auto in = random_fusion_input(rng);
    auto out = fuse(in, depth);
    s.take(out.report);
    for (Nat j = 0; j < in.chain.size(); ++j) {
        LeResult r = le_at(out.d, in.chain[j], out.threshold.at(j), depth);
        s.add("t36:le", r.ok, r.ok ? "" : "d_" + std::to_string(j) + " at " + std::to_string(r.failed_at));
    }
    std::set<Nat> img;
    for (Nat l = 0; l < depth; ++l)
        for (Nat k : out.d.block(l)) img.insert(in.t.pi(k));
    auto want = in.D.prefix(depth);
    s.add("t36:image", img == std::set<Nat>(want.begin(), want.end()), "pi''Set(d) on " + std::to_string(depth) + " blocks");
    s.print = blocks_print(out.d, 5);
    return s;
}

// ---- lift

inline Sample lift_instance(Rng& rng, Nat depth) {
    Sample s;
    Nat levels = rng.between(2, 4);
    auto in = random_lift_input(rng, levels, depth);
    auto cal = calibrate(in, levels - 1);
    BlockSeq e = random_intervals(rng);
    auto out = lift(in, cal, e);
    s.take(out.report);
    // pointwise over Set(e) from block L_l on
    bool comm = true;
    std::string w;
    for (Nat l = 0; l + 1 < levels && comm; ++l) {
        SetStream tail = sset(e, cal.L[l]);
        Nat stop = out.domain ? e.max_of(out.domain - 1) : 0;
        for (Nat i = 0; comm && out.domain > cal.L[l]; ++i) {
            Nat k = tail.nth(i);
            if (k > stop) break;
            for (Nat m = 0; m <= l; ++m)
                if (out.pi[m](k) != in.map(l, m)(out.pi[l](k))) comm = false, w = "k=" + std::to_string(k);
        }
    }
    s.add("t101:i105-pointwise", comm, w);
    for (Nat m = 0; m < out.pi.size(); ++m) s.add("t101:normal", normal_check(out.triple(m), out.domain));
    for (const auto& p : out.psi) s.print += join_nats(p) + ";";
    return s;
}

// ---- diagonal

inline Sample diagonal_instance(Rng& rng) {
    Sample s;
    TowerOptions opt;
    opt.levels = rng.between(2, 3);
    opt.degenerate = rng.coin(1, 4);
    auto in = random_tower_input(rng, opt);
    auto out = diagonal(in);
    s.take(out.report);
    Nat L = out.i84_witness.size();
    Verdict w = Verdict::pass(), sz = Verdict::pass();
    for (Nat k = 0; k < L && w.ok; ++k) {
        Nat m = out.i84_witness[k];
        if (m < in.f(k)) w = Verdict::fail(k, "i84", "witness below f");
        Block b = out.e_star.block(k), host = in.e.block(m);
        for (Nat x : b)
            if (!std::binary_search(host.begin(), host.end(), x)) w = Verdict::fail(k, "i84", "e*(k) not inside e(m)");
        if (b.size() != k + 1) sz = Verdict::fail(k, "size", "|e*(k)|");
    }
    for (Nat l = 0; l < out.psi.size() && sz.ok; ++l)
        if (out.d_star.block(l).size() != l + 1) sz = Verdict::fail(l, "size", "|d*(l)|");
    s.add("t30:i84-witness", w);
    s.add("t30:sizes-recheck", sz);
    s.print = blocks_print(out.e_star, std::min<Nat>(L, 4)) + join_nats(out.i84_witness);
    return s;
}

// ---- forcing

inline Sample forcing_instance(Rng& rng, Nat depth) {
    Sample s;
    auto inst = random_forcing_instance(rng);
    auto r = extend_condition(inst.q, inst.task, inst.ctx, depth);
    s.take(r.report, task_tag(inst.task) + "/");
    s.add("d14:q'", check_condition(r.q, inst.ctx, depth).ok(), inst.kind);
    s.add("d14:q'<=q", leq_condition(r.q, inst.q, depth).ok());
    if (auto* d = std::get_if<DecideSet>(&inst.task)) {
        bool keep = r.branch.find("X_0") != std::string::npos;
        bool exact = true;
        for (Nat n = 0; n < depth; ++n)
            for (Nat x : r.q.c.block(n)) exact = exact && d->X.contains(x) == keep;
        s.add("t3:exact-subset", exact, r.branch);
    }
    if (std::holds_alternative<Kill>(inst.task) && r.halves) {
        std::set<Nat> a;
        bool disjoint = true;
        for (Nat n = 0; n < depth; ++n)
            for (Nat x : r.halves->first.block(n)) a.insert(x);
        for (Nat n = 0; n < depth; ++n)
            for (Nat x : r.halves->second.block(n)) disjoint = disjoint && !a.count(x);
        s.add("t4:halves-disjoint", disjoint);
    }
    if (auto* rp = std::get_if<Rapidify>(&inst.task)) {
        auto set = sset(r.q.c);
        bool fast = true;
        for (Nat n = 0; n < depth; ++n) fast = fast && set.nth(n) >= rp->f(n);
        s.add("t11:rapid", fast, rp->f.describe());
    }
    s.print = inst.kind + "/" + task_name(inst.task) + "/" + r.branch + "/" + blocks_print(r.q.c, 3);
    return s;
}

// ---- meet

inline Sample meet_instance(Rng& rng, Nat i, Nat depth) {
    Sample s;
    if (i % 2 == 0) {
        GenericContext none;
        auto q = empty_condition(BlockSeq::triangular());
        auto m = meet_chain({q, q, q}, none, depth);
        bool ok = m.m.size() >= 3 && m.m[0] == 0 && m.m[1] == 2 && m.m[2] == 7;
        s.add("t91:IIa-m", ok, "m = " + join_nats(m.m));
        s.take(m.report);
        s.print = join_nats(m.m);
    } else {
        TreeOptions opt;
        opt.labels = 2;
        auto tc = tree_context(rng, opt);
        auto q0 = tc.condition(1, 0, {0});
        auto q1 = thin(q0, Fn::linear(2, 1), false, tc.ctx, depth).q;
        auto q2 = thin(q1, Fn::linear(2, 1), false, tc.ctx, depth).q;
        auto m = meet_chain({q0, q1, q2}, tc.ctx, depth);
        s.add("t91:case-I", m.branch == "I", m.branch);
        s.add("t91:X_q=X_q0", m.q.labels() == q0.labels());
        s.take(m.report);
        s.print = blocks_print(m.q.c, 3);
    }
    return s;
}

}  // namespace detail

inline Report run_suite(const SuiteSpec& suite) {
    const SuiteInfo& info = suite_info(suite.kind);
    const Nat count = suite.count ? suite.count : info.count;
    const Nat depth = suite.depth ? suite.depth : info.depth;
    const Nat seed = suite.seed;
    using detail::run_instances;
    std::vector<Sample> all;
    const std::string& k = suite.kind;
    if (k == "poset") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::poset_instance(r, depth); });
        auto chains = run_instances(count * 2 / 5, seed ^ 0xC4A1, [&](Rng& r, Nat) { return detail::chain_instance(r, depth); });
        all.insert(all.end(), chains.begin(), chains.end());
    } else if (k == "rho") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::rho_instance(r); });
    } else if (k == "fiber") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::fiber_instance(r, depth); });
    } else if (k == "calibration") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::calibration_instance(r, depth); });
    } else if (k == "fusion") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::fusion_instance(r, depth); });
    } else if (k == "lift") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::lift_instance(r, depth); });
    } else if (k == "diagonal") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::diagonal_instance(r); });
    } else if (k == "forcing") {
        all = run_instances(count, seed, [&](Rng& r, Nat) { return detail::forcing_instance(r, depth); });
    } else if (k == "meet") {
        all = run_instances(count, seed, [&](Rng& r, Nat i) { return detail::meet_instance(r, i, depth); });
    }
    return detail::fold(k, all, seed, depth);
}

}  // namespace bslab
