#pragma once

// Degree-corrected planted-partition block model for directed multigraphs.
//
// Edge counts follow A_ij ~ Poisson(k_i^out k_j^in w(b_i, b_j)) where w takes one value for
// pairs inside the same block and one for pairs across blocks. With the rates at their
// maximum-likelihood values the partition-dependent part of the log-likelihood is
//
//     m_in log(m_in / S_in) + m_out log(m_out / S_out),
//
// with m_in / m_out the internal / external edge counts, S_in = sum_r K_r^out K_r^in over
// block degree sums and S_out = E^2 - S_in. The description length adds the cost of the
// partition itself:
//
//     log N!/prod_r n_r!  +  log C(N-1, B-1)  +  log N  +  [B > 1] log(E + 1)
//
// i.e. the labels given block sizes, the block sizes given B, B itself, and the split of
// E edges into internal and external counts. All quantities are in nats.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include <json.hpp>

#include "polarnet/core.hpp"
#include "polarnet/graph.hpp"

namespace polarnet {

struct Partition {
    std::vector<std::uint32_t> assignment;  // node -> block in [0, blocks)
    std::uint32_t blocks = 0;
    double dl = 0;
};

/// Relabels blocks by order of first appearance (node 0's block becomes 0, ...), drops
/// empty blocks and returns the block count. Two partitions describe the same grouping
/// iff their canonical labelings are equal.
inline std::uint32_t canonicalize(std::vector<std::uint32_t>& assignment) {
    std::vector<std::uint32_t> remap;
    for (auto& b : assignment) {
        if (b >= remap.size()) remap.resize(b + 1, std::numeric_limits<std::uint32_t>::max());
        if (remap[b] == std::numeric_limits<std::uint32_t>::max()) {
            std::uint32_t next = 0;
            for (auto r : remap)
                if (r != std::numeric_limits<std::uint32_t>::max()) ++next;
            remap[b] = next;
        }
        b = remap[b];
    }
    std::uint32_t used = 0;
    for (auto r : remap)
        if (r != std::numeric_limits<std::uint32_t>::max()) ++used;
    return used;
}

/// Per-node aggregated adjacency with multiplicities, shared by every run.
class BlockGraph {
public:
    struct Neighbor {
        std::uint32_t node;
        std::int64_t out;  // edges node -> neighbor
        std::int64_t in;   // edges neighbor -> node
    };

    explicit BlockGraph(const TopicNetwork& g) : n_(g.node_count()), kout_(n_, 0), kin_(n_, 0), self_(n_, 0) {
        std::vector<std::pair<std::uint64_t, std::int64_t>> pairs;
        pairs.reserve(g.edge_count());
        for (const auto& e : g.edges()) {
            ++kout_[e.source];
            ++kin_[e.target];
            ++edges_;
            if (e.source == e.target) {
                ++self_[e.source];
                continue;
            }
            pairs.push_back({(std::uint64_t(e.source) << 32) | e.target, 1});
        }
        std::sort(pairs.begin(), pairs.end());
        // Collapse duplicates: multiplicity per ordered pair.
        std::vector<std::pair<std::uint64_t, std::int64_t>> agg;
        for (const auto& p : pairs) {
            if (!agg.empty() && agg.back().first == p.first)
                ++agg.back().second;
            else
                agg.push_back(p);
        }
        for (const auto& [key, m] : agg) log_mult_factorials_ += std::lgamma(double(m) + 1.0);
        for (std::uint32_t v = 0; v < n_; ++v)
            if (self_[v] > 0) log_mult_factorials_ += std::lgamma(double(self_[v]) + 1.0);

        // Merge both directions into one neighbor list per node.
        std::vector<std::vector<Neighbor>> lists(n_);
        for (const auto& [key, m] : agg) {
            auto a = std::uint32_t(key >> 32), b = std::uint32_t(key & 0xffffffffu);
            lists[a].push_back({b, m, 0});
            lists[b].push_back({a, 0, m});
        }
        offsets_.assign(n_ + 1, 0);
        for (std::uint32_t v = 0; v < n_; ++v) {
            auto& l = lists[v];
            std::sort(l.begin(), l.end(), [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
            for (const auto& nb : l) {
                if (!adj_.empty() && offsets_[v] < adj_.size() && adj_.back().node == nb.node) {
                    adj_.back().out += nb.out;
                    adj_.back().in += nb.in;
                } else {
                    adj_.push_back(nb);
                }
            }
            offsets_[v + 1] = adj_.size();
        }
        for (std::uint32_t v = 0; v < n_; ++v) {
            if (kout_[v] > 0) degree_term_ += double(kout_[v]) * std::log(double(kout_[v]));
            if (kin_[v] > 0) degree_term_ += double(kin_[v]) * std::log(double(kin_[v]));
        }
    }

    std::uint32_t size() const noexcept { return n_; }
    std::int64_t edges() const noexcept { return edges_; }
    std::int64_t kout(std::uint32_t v) const { return kout_[v]; }
    std::int64_t kin(std::uint32_t v) const { return kin_[v]; }
    std::int64_t self_loops(std::uint32_t v) const { return self_[v]; }

    std::span<const Neighbor> neighbors(std::uint32_t v) const {
        return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
    }

    /// Partition-independent part of the log-likelihood:
    /// sum k log k (both directions) - E - sum log A_ij!.
    double constant_loglik() const { return degree_term_ - double(edges_) - log_mult_factorials_; }

private:
    std::uint32_t n_;
    std::vector<std::int64_t> kout_, kin_, self_;
    std::vector<Neighbor> adj_;
    std::vector<std::size_t> offsets_;
    std::int64_t edges_ = 0;
    double degree_term_ = 0;
    double log_mult_factorials_ = 0;
};

namespace detail {

inline double xlogy_ratio(double m, double s) { return m > 0 ? m * std::log(m / s) : 0.0; }

inline double log_factorial(double n) { return std::lgamma(n + 1.0); }

inline double log_binomial(double n, double k) {
    if (k < 0 || k > n) return 0.0;
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

inline double fit_term(std::int64_t edges, std::int64_t m_in, std::int64_t s_in) {
    double e = double(edges);
    return xlogy_ratio(double(m_in), double(s_in)) + xlogy_ratio(double(edges - m_in), e * e - double(s_in));
}

inline double model_term(std::uint32_t n, std::int64_t edges, std::uint32_t nonempty, double sum_log_size_fact) {
    if (n == 0) return 0.0;
    double t = log_factorial(n) - sum_log_size_fact + log_binomial(n - 1.0, nonempty - 1.0) + std::log(double(n));
    if (nonempty > 1) t += std::log(double(edges) + 1.0);
    return t;
}

} // namespace detail

/// Description length of `assignment` on `g` (nats). Block ids need not be contiguous.
inline double description_length(const BlockGraph& g, const std::vector<std::uint32_t>& assignment) {
    if (assignment.size() != g.size()) throw ArgumentError("description_length: partition does not cover the graph");
    std::uint32_t nb = 0;
    for (auto b : assignment) nb = std::max(nb, b + 1);
    std::vector<std::int64_t> size(nb, 0), kout(nb, 0), kin(nb, 0);
    std::int64_t m_in = 0;
    for (std::uint32_t v = 0; v < g.size(); ++v) {
        auto b = assignment[v];
        ++size[b];
        kout[b] += g.kout(v);
        kin[b] += g.kin(v);
        m_in += g.self_loops(v);
        for (const auto& nbr : g.neighbors(v))
            if (assignment[nbr.node] == b) m_in += nbr.out;
    }
    std::int64_t s_in = 0;
    std::uint32_t nonempty = 0;
    double log_size_fact = 0;
    for (std::uint32_t r = 0; r < nb; ++r) {
        s_in += kout[r] * kin[r];
        if (size[r] > 0) {
            ++nonempty;
            log_size_fact += detail::log_factorial(double(size[r]));
        }
    }
    double loglik = g.constant_loglik() + detail::fit_term(g.edges(), m_in, s_in);
    return -loglik + detail::model_term(g.size(), g.edges(), nonempty, log_size_fact);
}

inline double description_length(const TopicNetwork& g, const Partition& p) {
    return description_length(BlockGraph(g), p.assignment);
}

// ---------------------------------------------------------------------------
// Search

struct DetectOptions {
    std::uint32_t max_groups = 5;
    std::uint32_t runs = 15;
    std::uint32_t iters = 50;           // one iteration = one sweep over all nodes
    std::uint32_t merge_split_every = 10;
    std::uint64_t seed = 0;
    std::uint32_t threads = 0;           // 0: hardware concurrency
    std::uint32_t exhaustive_up_to = 10; // graphs with at most this many nodes are solved exactly
};

struct RunDiagnostics {
    std::uint64_t seed = 0;
    std::uint32_t initial_blocks = 0;
    std::vector<double> dl_trajectory;  // DL after each sweep
    double final_dl = 0;
    std::uint32_t blocks = 0;
};

struct DetectResult {
    Partition best;
    std::vector<RunDiagnostics> runs;
    bool exhaustive = false;
};

namespace detail {

/// Mutable state of one run: assignment plus block sufficient statistics, with O(deg + B)
/// move deltas.
class BlockState {
public:
    BlockState(const BlockGraph& g, std::vector<std::uint32_t> assignment, std::uint32_t capacity)
        : g_(&g), b_(std::move(assignment)), cap_(capacity), size_(capacity, 0), kout_(capacity, 0),
          kin_(capacity, 0), out_to_(capacity, 0), in_from_(capacity, 0) {
        for (std::uint32_t v = 0; v < g_->size(); ++v) {
            auto r = b_[v];
            ++size_[r];
            kout_[r] += g_->kout(v);
            kin_[r] += g_->kin(v);
            m_in_ += g_->self_loops(v);
            for (const auto& nb : g_->neighbors(v))
                if (b_[nb.node] == r) m_in_ += nb.out;
        }
        for (std::uint32_t r = 0; r < cap_; ++r) {
            s_in_ += kout_[r] * kin_[r];
            if (size_[r] > 0) {
                ++nonempty_;
                log_size_fact_ += log_factorial(double(size_[r]));
            }
        }
    }

    double dl() const {
        return -(g_->constant_loglik() + fit_term(g_->edges(), m_in_, s_in_)) +
               model_term(g_->size(), g_->edges(), nonempty_, log_size_fact_);
    }

    std::uint32_t block_of(std::uint32_t v) const { return b_[v]; }
    std::uint32_t nonempty() const { return nonempty_; }
    std::int64_t block_size(std::uint32_t r) const { return size_[r]; }
    std::uint32_t capacity() const { return cap_; }
    const std::vector<std::uint32_t>& assignment() const { return b_; }

    /// Fills per-block edge counts between v and the other nodes.
    void tally_neighbors(std::uint32_t v) {
        std::fill(out_to_.begin(), out_to_.end(), 0);
        std::fill(in_from_.begin(), in_from_.end(), 0);
        for (const auto& nb : g_->neighbors(v)) {
            out_to_[b_[nb.node]] += nb.out;
            in_from_[b_[nb.node]] += nb.in;
        }
    }

    /// DL change of moving v to s; requires tally_neighbors(v) first.
    double move_delta(std::uint32_t v, std::uint32_t s) const {
        std::uint32_t r = b_[v];
        if (r == s) return 0.0;
        std::int64_t ko = g_->kout(v), ki = g_->kin(v);
        std::int64_t m_in = m_in_ - (out_to_[r] + in_from_[r]) + (out_to_[s] + in_from_[s]);
        std::int64_t s_in = s_in_ - kout_[r] * kin_[r] - kout_[s] * kin_[s] + (kout_[r] - ko) * (kin_[r] - ki) +
                            (kout_[s] + ko) * (kin_[s] + ki);
        std::uint32_t nonempty = nonempty_ - (size_[r] == 1 ? 1 : 0) + (size_[s] == 0 ? 1 : 0);
        double lsf = log_size_fact_ - std::log(double(size_[r])) + std::log(double(size_[s] + 1));
        double after = -(g_->constant_loglik() + fit_term(g_->edges(), m_in, s_in)) +
                       model_term(g_->size(), g_->edges(), nonempty, lsf);
        return after - dl();
    }

    void move(std::uint32_t v, std::uint32_t s) {
        std::uint32_t r = b_[v];
        if (r == s) return;
        tally_neighbors(v);
        std::int64_t ko = g_->kout(v), ki = g_->kin(v);
        m_in_ += (out_to_[s] + in_from_[s]) - (out_to_[r] + in_from_[r]);
        s_in_ -= kout_[r] * kin_[r] + kout_[s] * kin_[s];
        log_size_fact_ += std::log(double(size_[s] + 1)) - std::log(double(size_[r]));
        if (size_[r] == 1) --nonempty_;
        if (size_[s] == 0) ++nonempty_;
        --size_[r];
        ++size_[s];
        kout_[r] -= ko;
        kin_[r] -= ki;
        kout_[s] += ko;
        kin_[s] += ki;
        s_in_ += kout_[r] * kin_[r] + kout_[s] * kin_[s];
        b_[v] = s;
    }

    /// Lowest-numbered empty block, or capacity() when all are used.
    std::uint32_t empty_block() const {
        for (std::uint32_t r = 0; r < cap_; ++r)
            if (size_[r] == 0) return r;
        return cap_;
    }

private:
    const BlockGraph* g_;
    std::vector<std::uint32_t> b_;
    std::uint32_t cap_;
    std::vector<std::int64_t> size_, kout_, kin_;
    std::vector<std::int64_t> out_to_, in_from_;
    std::int64_t m_in_ = 0;
    std::int64_t s_in_ = 0;
    std::uint32_t nonempty_ = 0;
    double log_size_fact_ = 0;
};

inline constexpr double dl_epsilon = 1e-9;

/// One pass of single-node moves in random order. Each node goes to the block with the
/// most negative delta (empty block included while B < capacity); ties prefer the
/// smaller block id. Returns the number of moves.
inline std::size_t sweep(BlockState& st, Rng& rng, std::vector<std::uint32_t>& order) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
    std::size_t moves = 0;
    for (auto v : order) {
        st.tally_neighbors(v);
        std::uint32_t r = st.block_of(v);
        std::uint32_t best = r;
        double best_delta = -dl_epsilon;
        bool tried_empty = false;
        for (std::uint32_t s = 0; s < st.capacity(); ++s) {
            if (s == r) continue;
            if (st.block_size(s) == 0) {
                if (tried_empty || st.block_size(r) == 1) continue;  // moving a singleton to an empty block is a relabel
                tried_empty = true;
            }
            double d = st.move_delta(v, s);
            if (d < best_delta - dl_epsilon || (best != r && std::abs(d - best_delta) <= dl_epsilon && s < best)) {
                best = s;
                best_delta = d;
            }
        }
        if (best != r) {
            st.move(v, best);
            ++moves;
        }
    }
    return moves;
}

/// Greedily merges block pairs while some merge lowers the DL.
inline void merge_pass(BlockState& st) {
    for (;;) {
        double base = st.dl();
        double best = -dl_epsilon;
        std::uint32_t from = 0, into = 0;
        bool found = false;
        for (std::uint32_t r = 0; r < st.capacity(); ++r) {
            if (st.block_size(r) == 0) continue;
            for (std::uint32_t s = r + 1; s < st.capacity(); ++s) {
                if (st.block_size(s) == 0) continue;
                BlockState trial = st;
                for (std::uint32_t v = 0; v < st.assignment().size(); ++v)
                    if (trial.block_of(v) == s) trial.move(v, r);
                double d = trial.dl() - base;
                if (d < best - dl_epsilon) {
                    best = d;
                    from = s;
                    into = r;
                    found = true;
                }
            }
        }
        if (!found) return;
        for (std::uint32_t v = 0; v < st.assignment().size(); ++v)
            if (st.block_of(v) == from) st.move(v, into);
    }
}

/// Tries to split each block in two: random halves refined by moves restricted to the
/// pair. A split is kept only when it lowers the DL.
inline void split_pass(BlockState& st, Rng& rng, std::uint32_t refine_sweeps = 5) {
    for (std::uint32_t r = 0; r < st.capacity(); ++r) {
        if (st.block_size(r) < 2) continue;
        std::uint32_t s = st.empty_block();
        if (s == st.capacity()) return;
        std::vector<std::uint32_t> members;
        for (std::uint32_t v = 0; v < st.assignment().size(); ++v)
            if (st.block_of(v) == r) members.push_back(v);
        BlockState trial = st;
        for (auto v : members)
            if (rng() & 1) trial.move(v, s);
        for (std::uint32_t it = 0; it < refine_sweeps; ++it) {
            std::size_t moved = 0;
            for (auto v : members) {
                std::uint32_t cur = trial.block_of(v);
                std::uint32_t other = cur == r ? s : r;
                if (trial.block_size(cur) == 1) continue;
                trial.tally_neighbors(v);
                if (trial.move_delta(v, other) < -dl_epsilon) {
                    trial.move(v, other);
                    ++moved;
                }
            }
            if (moved == 0) break;
        }
        if (trial.block_size(s) > 0 && trial.block_size(r) > 0 && trial.dl() < st.dl() - dl_epsilon) st = trial;
    }
}

inline RunDiagnostics run_once(const BlockGraph& g, const DetectOptions& opt, std::uint64_t seed,
                               std::vector<std::uint32_t>& out_assignment) {
    RunDiagnostics diag;
    diag.seed = seed;
    Rng rng(seed);
    std::uint32_t n = g.size();
    std::uint32_t b0 = 1 + static_cast<std::uint32_t>(uniform_below(rng, std::min<std::uint64_t>(opt.max_groups, n)));
    diag.initial_blocks = b0;
    std::vector<std::uint32_t> init(n);
    for (auto& b : init) b = static_cast<std::uint32_t>(uniform_below(rng, b0));
    BlockState st(g, std::move(init), opt.max_groups);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    for (std::uint32_t it = 1; it <= opt.iters; ++it) {
        std::size_t moves = sweep(st, rng, order);
        if (opt.merge_split_every > 0 && it % opt.merge_split_every == 0) {
            merge_pass(st);
            split_pass(st, rng);
        }
        diag.dl_trajectory.push_back(st.dl());
        (void)moves;
    }
    merge_pass(st);
    out_assignment = st.assignment();
    diag.blocks = canonicalize(out_assignment);
    diag.final_dl = description_length(g, out_assignment);
    return diag;
}

/// Enumerates every partition with at most `max_groups` blocks as restricted growth
/// strings and returns the canonical minimizer.
inline Partition exhaustive_minimum(const BlockGraph& g, std::uint32_t max_groups) {
    std::uint32_t n = g.size();
    std::vector<std::uint32_t> a(n, 0), best;
    double best_dl = std::numeric_limits<double>::infinity();
    // prefix maxima so that a[i] <= max(a[0..i-1]) + 1
    auto visit = [&](auto&& self, std::uint32_t i, std::uint32_t used) -> void {
        if (i == n) {
            double dl = description_length(g, a);
            if (dl < best_dl - dl_epsilon) {
                best_dl = dl;
                best = a;
            }
            return;
        }
        std::uint32_t limit = std::min(used + 1, max_groups);
        for (std::uint32_t b = 0; b < limit; ++b) {
            a[i] = b;
            self(self, i + 1, std::max(used, b + 1));
        }
    };
    if (n == 0) return {};
    a[0] = 0;
    visit(visit, 1, 1);
    Partition p;
    p.assignment = best;
    p.blocks = canonicalize(p.assignment);
    p.dl = best_dl;
    return p;
}

} // namespace detail

/// Best-DL partition over independent greedy runs (or exhaustive search on tiny graphs).
/// Equal-DL candidates resolve to the lexicographically smallest canonical labeling.
inline DetectResult detect_structural_groups(const TopicNetwork& g, const DetectOptions& opt = {}) {
    if (g.node_count() == 0) throw ArgumentError("detect_structural_groups: empty graph");
    if (opt.max_groups == 0 || opt.runs == 0) throw ArgumentError("detect_structural_groups: max_groups and runs must be positive");
    BlockGraph bg(g);
    DetectResult result;
    if (bg.size() <= opt.exhaustive_up_to) {
        result.best = detail::exhaustive_minimum(bg, opt.max_groups);
        result.exhaustive = true;
        return result;
    }

    std::vector<std::vector<std::uint32_t>> assignments(opt.runs);
    result.runs.resize(opt.runs);
    std::uint32_t threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    {
        std::atomic<std::uint32_t> next{0};
        std::vector<std::jthread> pool;
        for (std::uint32_t t = 0; t < std::min(threads, opt.runs); ++t)
            pool.emplace_back([&] {
                for (std::uint32_t i = next++; i < opt.runs; i = next++)
                    result.runs[i] = detail::run_once(bg, opt, derive_seed(opt.seed, std::uint64_t{i}), assignments[i]);
            });
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < opt.runs; ++i) {
        double a = result.runs[i].final_dl, b = result.runs[best].final_dl;
        if (a < b - detail::dl_epsilon || (std::abs(a - b) <= detail::dl_epsilon && assignments[i] < assignments[best]))
            best = i;
    }
    result.best.assignment = assignments[best];
    result.best.blocks = result.runs[best].blocks;
    result.best.dl = result.runs[best].final_dl;
    return result;
}

inline nlohmann::ordered_json to_json(const DetectResult& r, const DetectOptions& opt) {
    nlohmann::ordered_json j;
    j["dl"] = r.best.dl;
    j["blocks"] = r.best.blocks;
    j["exhaustive"] = r.exhaustive;
    j["max_groups"] = opt.max_groups;
    j["runs_requested"] = opt.runs;
    j["iters"] = opt.iters;
    j["seed"] = opt.seed;
    auto& runs = j["runs"];
    runs = nlohmann::ordered_json::array();
    for (const auto& d : r.runs)
        runs.push_back({{"seed", d.seed},
                        {"initial_blocks", d.initial_blocks},
                        {"final_dl", d.final_dl},
                        {"blocks", d.blocks},
                        {"dl_trajectory", d.dl_trajectory}});
    return j;
}

/// node<TAB>block, one line per node in graph order.
inline void write_partition_tsv(std::ostream& out, const TopicNetwork& g, const Partition& p) {
    for (std::uint32_t v = 0; v < g.node_count(); ++v) out << g.name(v) << '\t' << p.assignment[v] << '\n';
}

} // namespace polarnet
