#pragma once
#include <algorithm>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "budget.hpp"
#include "nat.hpp"

namespace bslab {

class SetStream;
class BlockSeq;
class BlockMap;

using Block = std::vector<Nat>;

inline std::string join_nats(const std::vector<Nat>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

// ---------------------------------------------------------------- Fn

class Fn {
public:
    struct Node {
        virtual ~Node() = default;
        virtual Nat at(Nat n) const = 0;
        virtual std::string describe() const = 0;
    };

    Fn() : Fn(identity()) {}
    explicit Fn(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    Nat operator()(Nat n) const { return node_->at(n); }
    std::string describe() const { return node_->describe(); }

    static Fn identity();
    static Fn constant(Nat c);
    static Fn linear(Nat a, Nat b);  // a*n + b
    static Fn quotient(Nat d);       // floor(n/d)
    static Fn power(Nat base);       // base^n
    static Fn tri_s();
    static Fn tri_t();
    static Fn compose(Fn outer, Fn inner);
    static Fn max_of(std::vector<Fn> parts);
    static Fn table(std::vector<Nat> values);
    static Fn nth_of(SetStream s);
    // n -> map(min b(n)) for n >= from, 0 below
    static Fn block_value(BlockMap map, BlockSeq b, Nat from);
    static Fn derived(std::string name, std::function<Nat(Nat)> f);

private:
    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------- SetStream

class SetStream {
public:
    struct Node {
        virtual ~Node() = default;
        virtual Nat nth(Nat n) const = 0;
        // least i with nth(i) >= x
        virtual Nat lower_bound(Nat x) const = 0;
        virtual std::string describe() const = 0;
    };

    explicit SetStream(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    Nat nth(Nat n) const { return node_->nth(n); }
    Nat operator()(Nat n) const { return nth(n); }
    Nat lower_bound(Nat x) const { return node_->lower_bound(x); }
    bool contains(Nat x) const { return nth(lower_bound(x)) == x; }
    std::optional<Nat> index_of(Nat x) const {
        Nat i = lower_bound(x);
        if (nth(i) == x) return i;
        return std::nullopt;
    }
    std::vector<Nat> prefix(Nat n) const {
        std::vector<Nat> out;
        out.reserve(n);
        for (Nat i = 0; i < n; ++i) out.push_back(nth(i));
        return out;
    }
    // A[k,m)
    std::vector<Nat> range(Nat k, Nat m) const {
        std::vector<Nat> out;
        for (Nat i = k; i < m; ++i) out.push_back(nth(i));
        return out;
    }
    std::string describe() const { return node_->describe(); }

    static SetStream omega() { return arithmetic(0, 1); }
    static SetStream arithmetic(Nat start, Nat step);
    static SetStream periodic(Nat start, std::vector<Nat> gaps);
    static SetStream geometric(Nat start, Nat ratio);
    static SetStream table(std::vector<Nat> values);
    static SetStream image(SetStream src, BlockMap map);
    static SetStream preimage(SetStream target, BlockMap map, BlockSeq base);
    static SetStream intersection(SetStream a, SetStream b);
    static SetStream block_union(BlockSeq c, Nat eta);
    // pi(min c(m)) for m >= eta; equals pi''Set(c)<eta> when pi is constant on those blocks
    static SetStream block_image(BlockSeq c, Nat eta, BlockMap map);
    static SetStream tail(SetStream s, Nat m);  // A[m]
    static SetStream with_prefix(std::vector<Nat> prefix, SetStream rest);
    static SetStream from_fn(Fn f);  // f strictly increasing, checked on use
    static SetStream where(std::string name, std::function<bool(Nat)> pred);  // {n : pred(n)}

private:
    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------- BlockSeq

enum class Take { all, first, second };  // first/second: n+1 elements at offset 0 / n+1

class BlockSeq {
public:
    struct Node {
        virtual ~Node() = default;
        virtual Block block(Nat n) const = 0;
        virtual std::optional<Nat> locate(Nat k) const = 0;
        virtual std::string describe() const = 0;
        virtual Nat low(Nat n) const { return block(n).front(); }
        virtual Nat high(Nat n) const { return block(n).back(); }
        // least `count` elements of block n, fewer if the block is smaller
        virtual Block head(Nat n, Nat count) const {
            Block b = block(n);
            if (b.size() > count) b.resize(count);
            return b;
        }
    };

    explicit BlockSeq(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    Block block(Nat n) const { return node_->block(n); }
    Block operator()(Nat n) const { return block(n); }
    std::optional<Nat> locate(Nat k) const { return node_->locate(k); }
    Nat min_of(Nat n) const { return node_->low(n); }
    Nat max_of(Nat n) const { return node_->high(n); }
    Block head(Nat n, Nat count) const { return node_->head(n, count); }
    std::string describe() const { return node_->describe(); }

    static BlockSeq triangular() { return intervals(0, 1, 1, 0); }
    static BlockSeq intervals(Nat start, Nat first_size, Nat size_step, Nat gap);
    static BlockSeq chunks(SetStream s, Nat first_size, Nat size_step);
    static BlockSeq select(BlockSeq src, std::optional<Fn> index, std::optional<SetStream> filter,
                           bool keep_members, Take take);
    static BlockSeq table(std::vector<Block> blocks);
    // block n = make(n), cached in order
    static BlockSeq from_fn(std::string name, std::function<Block(Nat)> make);

private:
    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------- BlockMap

class BlockMap {
public:
    struct Node {
        virtual ~Node() = default;
        virtual Nat apply(Nat k) const = 0;
        virtual bool in_support(Nat k) const = 0;
        virtual std::string describe() const = 0;
        virtual const BlockSeq* base() const { return nullptr; }
        virtual const Fn* values() const { return nullptr; }
    };

    explicit BlockMap(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    Nat operator()(Nat k) const { return node_->apply(k); }
    Nat apply(Nat k) const { return node_->apply(k); }
    bool in_support(Nat k) const { return node_->in_support(k); }
    std::string describe() const { return node_->describe(); }
    // normal-form maps expose (b, psi)
    const BlockSeq* base() const { return node_->base(); }
    const Fn* values() const { return node_->values(); }
    bool same_node(const BlockMap& o) const { return node_ == o.node_; }

    static BlockMap identity();
    static BlockMap normal(BlockSeq base, Fn psi);
    static BlockMap table(std::vector<Nat> values);
    static BlockMap compose(BlockMap outer, BlockMap inner);  // outer o inner
    static BlockMap quotient(Nat scale, Nat divisor);         // scale * floor(k / divisor)

private:
    std::shared_ptr<const Node> node_;
};

// ================================================================ implementation

namespace detail {

// Materializing node: elements appended by step() under the node mutex.
class CachedStream : public SetStream::Node {
public:
    Nat nth(Nat n) const final {
        std::lock_guard<std::mutex> g(mu_);
        while (cache_.size() <= n) pump();
        return cache_[n];
    }
    Nat lower_bound(Nat x) const final {
        std::lock_guard<std::mutex> g(mu_);
        while (cache_.empty() || cache_.back() < x) pump();
        return static_cast<Nat>(std::lower_bound(cache_.begin(), cache_.end(), x) - cache_.begin());
    }

protected:
    CachedStream() : budget_(default_budget()) {}
    // one unit of work; may or may not append
    virtual void step() const = 0;
    void emit(Nat v) const {
        if (!cache_.empty() && v <= cache_.back())
            throw PreconditionFailed("stream-increasing", describe() + " produced " + std::to_string(v) +
                                                              " after " + std::to_string(cache_.back()));
        cache_.push_back(v);
    }
    const std::vector<Nat>& cache() const { return cache_; }

private:
    void pump() const {
        if (work_ >= budget_) throw DepthExceeded(describe() + " after " + std::to_string(work_) + " steps");
        ++work_;
        step();
    }
    mutable std::mutex mu_;
    mutable std::vector<Nat> cache_;
    mutable Nat work_ = 0;
    Nat budget_;
};

struct ArithNode final : SetStream::Node {
    Nat start, step;
    ArithNode(Nat s, Nat d) : start(s), step(d) {
        if (d == 0) throw PreconditionFailed("stream-increasing", "arithmetic step 0");
    }
    Nat nth(Nat n) const override { return add(start, mul(n, step)); }
    Nat lower_bound(Nat x) const override { return x <= start ? 0 : (x - start + step - 1) / step; }
    std::string describe() const override {
        return "arith(" + std::to_string(start) + "," + std::to_string(step) + ")";
    }
};

struct PeriodicNode final : SetStream::Node {
    Nat start;
    std::vector<Nat> gaps, partial;  // partial[i] = gaps[0]+..+gaps[i-1]
    Nat period = 0;
    PeriodicNode(Nat s, std::vector<Nat> g) : start(s), gaps(std::move(g)) {
        if (gaps.empty()) throw PreconditionFailed("stream-increasing", "periodic pattern empty");
        partial.push_back(0);
        for (Nat x : gaps) {
            if (x == 0) throw PreconditionFailed("stream-increasing", "periodic gap 0");
            period = add(period, x);
            partial.push_back(period);
        }
    }
    Nat nth(Nat n) const override {
        Nat p = gaps.size();
        return add(start, add(mul(n / p, period), partial[n % p]));
    }
    Nat lower_bound(Nat x) const override {
        if (x <= start) return 0;
        Nat off = x - start;
        Nat cycles = off / period, rem = off % period;
        Nat p = gaps.size();
        Nat i = static_cast<Nat>(std::lower_bound(partial.begin(), partial.end() - 1, rem) - partial.begin());
        if (i == p) return (cycles + 1) * p;
        return cycles * p + i;
    }
    std::string describe() const override {
        return "periodic(" + std::to_string(start) + ",[" + join_nats(gaps) + "])";
    }
};

struct GeometricNode final : SetStream::Node {
    Nat start, ratio;
    GeometricNode(Nat s, Nat r) : start(s), ratio(r) {
        if (s == 0 || r < 2) throw PreconditionFailed("stream-increasing", "geometric needs start>=1, ratio>=2");
    }
    Nat nth(Nat n) const override { return mul(start, pow_nat(ratio, n)); }
    Nat lower_bound(Nat x) const override {
        Nat i = 0, v = start;
        while (v < x) { v = mul(v, ratio); ++i; }
        return i;
    }
    std::string describe() const override {
        return "geometric(" + std::to_string(start) + "," + std::to_string(ratio) + ")";
    }
};

struct TableNode final : SetStream::Node {
    std::vector<Nat> values;
    explicit TableNode(std::vector<Nat> v) : values(std::move(v)) {
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] <= values[i - 1])
                throw PreconditionFailed("stream-increasing", "table not strictly increasing at " + std::to_string(i));
    }
    Nat nth(Nat n) const override {
        if (n >= values.size())
            throw DepthExceeded("table valid to depth " + std::to_string(values.size()) + ", asked " + std::to_string(n));
        return values[n];
    }
    Nat lower_bound(Nat x) const override {
        auto it = std::lower_bound(values.begin(), values.end(), x);
        if (it == values.end())
            throw DepthExceeded("table valid to depth " + std::to_string(values.size()) + ", searched for " +
                                std::to_string(x));
        return static_cast<Nat>(it - values.begin());
    }
    std::string describe() const override { return "table[" + std::to_string(values.size()) + "]"; }
};

struct FnStreamNode final : CachedStream {
    Fn f;
    mutable Nat i = 0;
    explicit FnStreamNode(Fn g) : f(std::move(g)) {}
    void step() const override { emit(f(i)); ++i; }
    std::string describe() const override { return "values(" + f.describe() + ")"; }
};

struct ImageNode final : CachedStream {
    SetStream src;
    BlockMap map;
    mutable Nat i = 0;
    ImageNode(SetStream s, BlockMap m) : src(std::move(s)), map(std::move(m)) {}
    void step() const override {
        Nat x = src.nth(i);
        ++i;
        if (!map.in_support(x)) return;
        Nat v = map(x);
        const auto& c = cache();
        if (!c.empty() && v < c.back())
            throw PreconditionFailed("image-monotone", map.describe() + " decreases at " + std::to_string(x));
        if (c.empty() || v > c.back()) emit(v);
    }
    std::string describe() const override { return "image(" + src.describe() + "," + map.describe() + ")"; }
};

struct IntersectionNode final : CachedStream {
    SetStream a, b;
    mutable Nat i = 0, j = 0;
    IntersectionNode(SetStream x, SetStream y) : a(std::move(x)), b(std::move(y)) {}
    void step() const override {
        Nat x = a.nth(i), y = b.nth(j);
        if (x == y) { emit(x); ++i; ++j; }
        else if (x < y) i = a.lower_bound(y);
        else j = b.lower_bound(x);
    }
    std::string describe() const override { return "meet(" + a.describe() + "," + b.describe() + ")"; }
};

struct BlockUnionNode final : CachedStream {
    BlockSeq c;
    Nat eta;
    mutable Nat l, off = 0;
    mutable Block cur;
    BlockUnionNode(BlockSeq s, Nat e) : c(std::move(s)), eta(e), l(e) {}
    void step() const override {
        if (off >= cur.size()) { cur = c.block(l); ++l; off = 0; if (cur.empty()) throw PreconditionFailed("block-nonempty", c.describe()); }
        emit(cur[off++]);
    }
    std::string describe() const override { return "set(" + c.describe() + "," + std::to_string(eta) + ")"; }
};

struct BlockImageNode final : CachedStream {
    BlockSeq c;
    Nat eta;
    BlockMap map;
    mutable Nat m;
    BlockImageNode(BlockSeq b, Nat e, BlockMap p) : c(std::move(b)), eta(e), map(std::move(p)), m(e) {}
    void step() const override {
        Nat v = map(c.min_of(m++));
        const auto& sofar = cache();
        if (!sofar.empty() && v < sofar.back())
            throw PreconditionFailed("image-monotone", describe() + " decreases at block " + std::to_string(m - 1));
        if (sofar.empty() || v > sofar.back()) emit(v);
    }
    std::string describe() const override {
        return "blockimage(" + c.describe() + "," + std::to_string(eta) + "," + map.describe() + ")";
    }
};

struct PreimageNode final : CachedStream {
    SetStream target;
    BlockMap map;
    SetStream domain;
    mutable Nat i = 0;
    PreimageNode(SetStream t, BlockMap m, BlockSeq b)
        : target(std::move(t)), map(std::move(m)), domain(SetStream::block_union(std::move(b), 0)) {}
    void step() const override {
        Nat k = domain.nth(i);
        ++i;
        if (target.contains(map(k))) emit(k);
    }
    std::string describe() const override {
        return "preimage(" + target.describe() + "," + map.describe() + ")";
    }
};

struct PredicateNode final : CachedStream {
    std::string name;
    std::function<bool(Nat)> pred;
    mutable Nat i = 0;
    PredicateNode(std::string n, std::function<bool(Nat)> p) : name(std::move(n)), pred(std::move(p)) {}
    void step() const override {
        if (pred(i)) emit(i);
        ++i;
    }
    std::string describe() const override { return name; }
};

struct TailNode final : SetStream::Node {
    SetStream s;
    Nat m;
    TailNode(SetStream x, Nat k) : s(std::move(x)), m(k) {}
    Nat nth(Nat n) const override { return s.nth(add(n, m)); }
    Nat lower_bound(Nat x) const override {
        Nat i = s.lower_bound(x);
        return i > m ? i - m : 0;
    }
    std::string describe() const override { return "tail(" + s.describe() + "," + std::to_string(m) + ")"; }
};

struct PrefixedNode final : SetStream::Node {
    std::vector<Nat> pre;
    SetStream rest;
    PrefixedNode(std::vector<Nat> p, SetStream r) : pre(std::move(p)), rest(std::move(r)) {
        for (std::size_t i = 1; i < pre.size(); ++i)
            if (pre[i] <= pre[i - 1]) throw PreconditionFailed("stream-increasing", "prefix not increasing");
    }
    Nat skip() const { return pre.empty() ? 0 : rest.lower_bound(pre.back() + 1); }
    Nat nth(Nat n) const override {
        if (n < pre.size()) return pre[n];
        return rest.nth(add(skip(), n - pre.size()));
    }
    Nat lower_bound(Nat x) const override {
        auto it = std::lower_bound(pre.begin(), pre.end(), x);
        if (it != pre.end()) return static_cast<Nat>(it - pre.begin());
        Nat i = rest.lower_bound(x), k = skip();
        return pre.size() + (i > k ? i - k : 0);
    }
    std::string describe() const override { return "[" + join_nats(pre) + "]++" + rest.describe(); }
};

// ---- block nodes

class CachedBlocks : public BlockSeq::Node {
public:
    Block block(Nat n) const final {
        std::lock_guard<std::mutex> g(mu_);
        while (cache_.size() <= n) pump();
        return cache_[n];
    }
    std::optional<Nat> locate(Nat k) const final {
        std::lock_guard<std::mutex> g(mu_);
        while (cache_.empty() || cache_.back().back() < k) pump();
        // blocks are assumed separated; binary search on maxima
        std::size_t lo = 0, hi = cache_.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cache_[mid].back() < k) lo = mid + 1; else hi = mid;
        }
        const Block& b = cache_[lo];
        if (std::binary_search(b.begin(), b.end(), k)) return static_cast<Nat>(lo);
        return std::nullopt;
    }

protected:
    CachedBlocks() : budget_(default_budget()) {}
    virtual Block make(Nat n) const = 0;  // under lock, called for n = 0,1,2,...
    void charge(Nat units) const {
        work_ = add(work_, units);
        if (work_ > budget_) throw DepthExceeded(describe() + " after " + std::to_string(work_) + " steps");
    }

private:
    void pump() const {
        Nat n = cache_.size();
        Block b = make(n);
        if (b.empty()) throw PreconditionFailed("block-nonempty", describe() + " block " + std::to_string(n));
        charge(b.size());
        cache_.push_back(std::move(b));
    }
    mutable std::mutex mu_;
    mutable std::vector<Block> cache_;
    mutable Nat work_ = 0;
    Nat budget_;
};

struct IntervalsNode final : BlockSeq::Node {
    Nat start, first, step, gap;
    IntervalsNode(Nat s, Nat f, Nat d, Nat g) : start(s), first(f), step(d), gap(g) {
        if (f == 0) throw PreconditionFailed("block-nonempty", "intervals first size 0");
    }
    Nat size(Nat n) const { return add(first, mul(n, step)); }
    Nat begin(Nat n) const {
        // start + n*first + step*n(n-1)/2 + n*gap
        Nat tri = n == 0 ? 0 : tri_s(n - 1);
        return add(add(start, mul(n, add(first, gap))), mul(step, tri));
    }
    Block block(Nat n) const override {
        Nat b = begin(n), sz = size(n);
        if (sz > default_budget()) throw DepthExceeded("interval block too large");
        Block out(sz);
        for (Nat i = 0; i < sz; ++i) out[i] = b + i;
        return out;
    }
    Nat low(Nat n) const override { return begin(n); }
    Nat high(Nat n) const override { return begin(n) + size(n) - 1; }
    Block head(Nat n, Nat count) const override {
        Nat b = begin(n), sz = std::min(size(n), count);
        Block out(sz);
        for (Nat i = 0; i < sz; ++i) out[i] = b + i;
        return out;
    }
    std::optional<Nat> locate(Nat k) const override {
        if (k < start) return std::nullopt;
        Nat lo = 0, hi = 1;
        while (begin(hi) <= k) hi *= 2;
        while (lo + 1 < hi) {
            Nat mid = (lo + hi) / 2;
            if (begin(mid) <= k) lo = mid; else hi = mid;
        }
        if (k < begin(lo) + size(lo)) return lo;
        return std::nullopt;
    }
    std::string describe() const override {
        return "intervals(" + std::to_string(start) + "," + std::to_string(first) + "," + std::to_string(step) + "," +
               std::to_string(gap) + ")";
    }
};

struct ChunksNode final : CachedBlocks {
    SetStream s;
    Nat first, step;
    mutable Nat pos = 0;
    ChunksNode(SetStream x, Nat f, Nat d) : s(std::move(x)), first(f), step(d) {
        if (f == 0) throw PreconditionFailed("block-nonempty", "chunks first size 0");
    }
    Block make(Nat n) const override {
        Nat sz = add(first, mul(n, step));
        Block out = s.range(pos, pos + sz);
        pos += sz;
        return out;
    }
    std::string describe() const override {
        return "chunks(" + s.describe() + "," + std::to_string(first) + "," + std::to_string(step) + ")";
    }
};

// block n depends on n alone, so nothing is cached in order and locate inverts the index
struct SelectNode final : BlockSeq::Node {
    BlockSeq src;
    std::optional<Fn> index;
    std::optional<SetStream> filter;
    bool keep;
    Take take;
    SelectNode(BlockSeq s, std::optional<Fn> i, std::optional<SetStream> f, bool k, Take t)
        : src(std::move(s)), index(std::move(i)), filter(std::move(f)), keep(k), take(t) {}
    Nat at(Nat n) const { return index ? (*index)(n) : n; }
    Nat at_or_max(Nat n) const {
        try {
            return at(n);
        } catch (const DepthExceeded&) {
            return std::numeric_limits<Nat>::max();
        }
    }
    bool member(Nat x) const { return !filter || filter->contains(x) == keep; }
    // first `need` members of src(j), fewer if the block runs out
    Block members(Nat j, Nat need) const {
        if (!filter) return src.head(j, need);
        for (Nat count = std::max<Nat>(4, 2 * need);; count = mul(count, 4)) {
            Block raw = src.head(j, count);
            Block kept;
            for (Nat x : raw)
                if (member(x) && kept.size() < need) kept.push_back(x);
            if (kept.size() >= need || raw.size() < count) return kept;
        }
    }
    Block block(Nat n) const override {
        Nat j = at(n);
        if (take == Take::all) {
            Block raw = src.block(j);
            if (!filter) return raw;
            Block kept;
            for (Nat x : raw)
                if (member(x)) kept.push_back(x);
            return kept;
        }
        Nat want = n + 1, off = take == Take::first ? 0 : n + 1;
        Block raw = members(j, off + want);
        if (raw.size() < off + want)
            throw PreconditionFailed("block-size", describe() + ": block " + std::to_string(n) + " from source block " +
                                                       std::to_string(j) + " has " + std::to_string(raw.size()) +
                                                       " usable elements, need " + std::to_string(off + want));
        return Block(raw.begin() + off, raw.end());
    }
    Nat low(Nat n) const override {
        if (take == Take::second) return block(n).front();
        if (!filter && take == Take::all) return src.min_of(at(n));
        Block b = members(at(n), 1);
        if (b.empty()) return block(n).front();
        return b.front();
    }
    Nat high(Nat n) const override {
        if (!filter && take == Take::all) return src.max_of(at(n));
        return block(n).back();
    }
    Block head(Nat n, Nat count) const override {
        if (take == Take::all) {
            Block b = filter ? members(at(n), count) : src.head(at(n), count);
            return b;
        }
        Block b = block(n);
        if (b.size() > count) b.resize(count);
        return b;
    }
    std::optional<Nat> locate(Nat k) const override {
        if (!member(k)) return std::nullopt;
        auto j = src.locate(k);
        if (!j) return std::nullopt;
        Nat n = *j;
        if (index) {
            // least n with index(n) >= j
            Nat lo = 0, hi = 1;
            while (at_or_max(hi - 1) < *j) { lo = hi; hi = mul(hi, 2); }
            while (lo < hi) {
                Nat mid = lo + (hi - lo) / 2;
                if (at_or_max(mid) < *j) lo = mid + 1; else hi = mid;
            }
            n = lo;
            if (at(n) != *j) return std::nullopt;
        }
        if (take == Take::all) return n;
        Block b = block(n);
        if (std::binary_search(b.begin(), b.end(), k)) return n;
        return std::nullopt;
    }
    std::string describe() const override {
        std::string s = "select(" + src.describe();
        if (index) s += ",at=" + index->describe();
        if (filter) s += std::string(keep ? ",in=" : ",out=") + filter->describe();
        s += take == Take::all ? ",all" : take == Take::first ? ",first" : ",second";
        return s + ")";
    }
};

struct LambdaBlocks final : CachedBlocks {
    std::string name;
    std::function<Block(Nat)> f;
    LambdaBlocks(std::string n, std::function<Block(Nat)> g) : name(std::move(n)), f(std::move(g)) {}
    Block make(Nat n) const override { return f(n); }
    std::string describe() const override { return name; }
};

struct BlockTableNode final : BlockSeq::Node {
    std::vector<Block> blocks;
    explicit BlockTableNode(std::vector<Block> b) : blocks(std::move(b)) {
        for (const auto& x : blocks) {
            if (x.empty()) throw PreconditionFailed("block-nonempty", "table block empty");
            for (std::size_t i = 1; i < x.size(); ++i)
                if (x[i] <= x[i - 1]) throw PreconditionFailed("block-sorted", "table block not sorted");
        }
    }
    Block block(Nat n) const override {
        if (n >= blocks.size())
            throw DepthExceeded("block table valid to depth " + std::to_string(blocks.size()) + ", asked " +
                                std::to_string(n));
        return blocks[n];
    }
    std::optional<Nat> locate(Nat k) const override {
        std::size_t lo = 0, hi = blocks.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (blocks[mid].back() < k) lo = mid + 1; else hi = mid;
        }
        if (lo == blocks.size()) {
            if (!blocks.empty() && k > blocks.back().back())
                throw DepthExceeded("block table valid to depth " + std::to_string(blocks.size()) + ", located " +
                                    std::to_string(k));
            return std::nullopt;
        }
        const Block& b = blocks[lo];
        if (std::binary_search(b.begin(), b.end(), k)) return static_cast<Nat>(lo);
        return std::nullopt;
    }
    std::string describe() const override { return "blocktable[" + std::to_string(blocks.size()) + "]"; }
};

// ---- map nodes

struct IdentityMap final : BlockMap::Node {
    Nat apply(Nat k) const override { return k; }
    bool in_support(Nat) const override { return true; }
    std::string describe() const override { return "id"; }
};

struct NormalMap final : BlockMap::Node {
    BlockSeq b;
    Fn psi;
    NormalMap(BlockSeq base, Fn p) : b(std::move(base)), psi(std::move(p)) {}
    Nat apply(Nat k) const override {
        auto l = b.locate(k);
        return l ? psi(*l) : 0;
    }
    bool in_support(Nat k) const override { return b.locate(k).has_value(); }
    std::string describe() const override { return "normal(" + b.describe() + "," + psi.describe() + ")"; }
    const BlockSeq* base() const override { return &b; }
    const Fn* values() const override { return &psi; }
};

struct TableMap final : BlockMap::Node {
    std::vector<Nat> values;
    explicit TableMap(std::vector<Nat> v) : values(std::move(v)) {}
    Nat apply(Nat k) const override {
        if (k >= values.size())
            throw DepthExceeded("map table valid to depth " + std::to_string(values.size()) + ", asked " +
                                std::to_string(k));
        return values[k];
    }
    bool in_support(Nat k) const override { return k < values.size() || (apply(k), true); }
    std::string describe() const override { return "maptable[" + std::to_string(values.size()) + "]"; }
};

struct ComposeMap final : BlockMap::Node {
    BlockMap outer, inner;
    ComposeMap(BlockMap o, BlockMap i) : outer(std::move(o)), inner(std::move(i)) {}
    Nat apply(Nat k) const override { return outer(inner(k)); }
    bool in_support(Nat k) const override { return inner.in_support(k) && outer.in_support(inner(k)); }
    std::string describe() const override { return "(" + outer.describe() + " o " + inner.describe() + ")"; }
};

struct QuotientMap final : BlockMap::Node {
    Nat scale, divisor;
    QuotientMap(Nat s, Nat d) : scale(s), divisor(d) {
        if (d == 0) throw PreconditionFailed("map", "quotient divisor 0");
    }
    Nat apply(Nat k) const override { return mul(scale, k / divisor); }
    bool in_support(Nat) const override { return true; }
    std::string describe() const override {
        return "quot(" + std::to_string(scale) + "," + std::to_string(divisor) + ")";
    }
};

// ---- fn nodes

struct FnLambda final : Fn::Node {
    std::string name;
    std::function<Nat(Nat)> f;
    FnLambda(std::string n, std::function<Nat(Nat)> g) : name(std::move(n)), f(std::move(g)) {}
    Nat at(Nat n) const override { return f(n); }
    std::string describe() const override { return name; }
};

}  // namespace detail

inline Fn Fn::identity() { return derived("id", [](Nat n) { return n; }); }
inline Fn Fn::constant(Nat c) { return derived("const(" + std::to_string(c) + ")", [c](Nat) { return c; }); }
inline Fn Fn::linear(Nat a, Nat b) {
    return derived("lin(" + std::to_string(a) + "," + std::to_string(b) + ")",
                   [a, b](Nat n) { return add(mul(a, n), b); });
}
inline Fn Fn::quotient(Nat d) {
    if (d == 0) throw PreconditionFailed("fn", "division by 0");
    return derived("div(" + std::to_string(d) + ")", [d](Nat n) { return n / d; });
}
inline Fn Fn::power(Nat base) {
    return derived("pow(" + std::to_string(base) + ")", [base](Nat n) { return pow_nat(base, n); });
}
inline Fn Fn::tri_s() { return derived("s", [](Nat n) { return bslab::tri_s(n); }); }
inline Fn Fn::tri_t() { return derived("t", [](Nat n) { return bslab::tri_t(n); }); }
inline Fn Fn::compose(Fn outer, Fn inner) {
    std::string name = outer.describe() + "o" + inner.describe();
    return derived(std::move(name), [outer, inner](Nat n) { return outer(inner(n)); });
}
inline Fn Fn::max_of(std::vector<Fn> parts) {
    std::string name = "max(";
    for (std::size_t i = 0; i < parts.size(); ++i) name += (i ? "," : "") + parts[i].describe();
    name += ")";
    return derived(std::move(name), [parts](Nat n) {
        Nat m = 0;
        for (const auto& p : parts) m = std::max(m, p(n));
        return m;
    });
}
inline Fn Fn::table(std::vector<Nat> values) {
    std::string name = "fntable[" + std::to_string(values.size()) + "]";
    return derived(std::move(name), [v = std::move(values)](Nat n) {
        if (n >= v.size())
            throw DepthExceeded("function table valid to depth " + std::to_string(v.size()) + ", asked " +
                                std::to_string(n));
        return v[n];
    });
}
inline Fn Fn::nth_of(SetStream s) {
    std::string name = "nth(" + s.describe() + ")";
    return derived(std::move(name), [s](Nat n) { return s.nth(n); });
}
inline Fn Fn::block_value(BlockMap map, BlockSeq b, Nat from) {
    std::string name = "blockval(" + map.describe() + "," + b.describe() + "," + std::to_string(from) + ")";
    return derived(std::move(name), [map, b, from](Nat n) { return n < from ? 0 : map(b.min_of(n)); });
}
inline Fn Fn::derived(std::string name, std::function<Nat(Nat)> f) {
    return Fn(std::make_shared<detail::FnLambda>(std::move(name), std::move(f)));
}

inline SetStream SetStream::arithmetic(Nat start, Nat step) {
    return SetStream(std::make_shared<detail::ArithNode>(start, step));
}
inline SetStream SetStream::periodic(Nat start, std::vector<Nat> gaps) {
    return SetStream(std::make_shared<detail::PeriodicNode>(start, std::move(gaps)));
}
inline SetStream SetStream::geometric(Nat start, Nat ratio) {
    return SetStream(std::make_shared<detail::GeometricNode>(start, ratio));
}
inline SetStream SetStream::table(std::vector<Nat> values) {
    return SetStream(std::make_shared<detail::TableNode>(std::move(values)));
}
inline SetStream SetStream::image(SetStream src, BlockMap map) {
    return SetStream(std::make_shared<detail::ImageNode>(std::move(src), std::move(map)));
}
inline SetStream SetStream::preimage(SetStream target, BlockMap map, BlockSeq base) {
    return SetStream(std::make_shared<detail::PreimageNode>(std::move(target), std::move(map), std::move(base)));
}
inline SetStream SetStream::intersection(SetStream a, SetStream b) {
    return SetStream(std::make_shared<detail::IntersectionNode>(std::move(a), std::move(b)));
}
inline SetStream SetStream::block_union(BlockSeq c, Nat eta) {
    return SetStream(std::make_shared<detail::BlockUnionNode>(std::move(c), eta));
}
inline SetStream SetStream::block_image(BlockSeq c, Nat eta, BlockMap map) {
    return SetStream(std::make_shared<detail::BlockImageNode>(std::move(c), eta, std::move(map)));
}
inline SetStream SetStream::tail(SetStream s, Nat m) {
    return SetStream(std::make_shared<detail::TailNode>(std::move(s), m));
}
inline SetStream SetStream::with_prefix(std::vector<Nat> prefix, SetStream rest) {
    return SetStream(std::make_shared<detail::PrefixedNode>(std::move(prefix), std::move(rest)));
}
inline SetStream SetStream::from_fn(Fn f) { return SetStream(std::make_shared<detail::FnStreamNode>(std::move(f))); }
inline SetStream SetStream::where(std::string name, std::function<bool(Nat)> pred) {
    return SetStream(std::make_shared<detail::PredicateNode>(std::move(name), std::move(pred)));
}

inline BlockSeq BlockSeq::intervals(Nat start, Nat first_size, Nat size_step, Nat gap) {
    return BlockSeq(std::make_shared<detail::IntervalsNode>(start, first_size, size_step, gap));
}
inline BlockSeq BlockSeq::chunks(SetStream s, Nat first_size, Nat size_step) {
    return BlockSeq(std::make_shared<detail::ChunksNode>(std::move(s), first_size, size_step));
}
inline BlockSeq BlockSeq::select(BlockSeq src, std::optional<Fn> index, std::optional<SetStream> filter,
                                 bool keep_members, Take take) {
    return BlockSeq(
        std::make_shared<detail::SelectNode>(std::move(src), std::move(index), std::move(filter), keep_members, take));
}
inline BlockSeq BlockSeq::table(std::vector<Block> blocks) {
    return BlockSeq(std::make_shared<detail::BlockTableNode>(std::move(blocks)));
}

inline BlockSeq BlockSeq::from_fn(std::string name, std::function<Block(Nat)> make) {
    return BlockSeq(std::make_shared<detail::LambdaBlocks>(std::move(name), std::move(make)));
}

inline BlockMap BlockMap::identity() { return BlockMap(std::make_shared<detail::IdentityMap>()); }
inline BlockMap BlockMap::normal(BlockSeq base, Fn psi) {
    return BlockMap(std::make_shared<detail::NormalMap>(std::move(base), std::move(psi)));
}
inline BlockMap BlockMap::table(std::vector<Nat> values) {
    return BlockMap(std::make_shared<detail::TableMap>(std::move(values)));
}
inline BlockMap BlockMap::compose(BlockMap outer, BlockMap inner) {
    return BlockMap(std::make_shared<detail::ComposeMap>(std::move(outer), std::move(inner)));
}
inline BlockMap BlockMap::quotient(Nat scale, Nat divisor) {
    return BlockMap(std::make_shared<detail::QuotientMap>(scale, divisor));
}

// Set(c)<eta>
inline SetStream sset(const BlockSeq& c, Nat eta = 0) { return SetStream::block_union(c, eta); }

// pi''S restricted to supp(pi)
inline SetStream image_of(const SetStream& s, const BlockMap& pi) { return SetStream::image(s, pi); }

}  // namespace bslab
