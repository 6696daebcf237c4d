#pragma once

// Graph generators and direct-summation reference implementations used by the tests.
// The references deliberately avoid the library's aggregated statistics: each one walks
// node pairs or edge lists the slow way.

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "polarnet/graph.hpp"

namespace testing_support {

using polarnet::TopicNetwork;

inline std::string node_name(std::size_t i) { return "did:plc:n" + std::to_string(i); }

inline TopicNetwork empty_graph(std::size_t n) {
    TopicNetwork g;
    g.topic = "synthetic";
    for (std::size_t i = 0; i < n; ++i) g.add_node(node_name(i));
    return g;
}

/// Directed graph with independent edges: p_in inside a block, p_out across.
inline TopicNetwork planted_graph(const std::vector<std::uint32_t>& labels, double p_in, double p_out,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto g = empty_graph(labels.size());
    for (std::uint32_t i = 0; i < labels.size(); ++i)
        for (std::uint32_t j = 0; j < labels.size(); ++j) {
            if (i == j) continue;
            double p = labels[i] == labels[j] ? p_in : p_out;
            if (u(rng) < p) g.add_edge(i, j);
        }
    return g;
}

inline std::vector<std::uint32_t> two_blocks(std::size_t n) {
    std::vector<std::uint32_t> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = i < n / 2 ? 0 : 1;
    return l;
}

/// Random multigraph with `m` edges drawn uniformly (self-loops and repeats allowed).
inline TopicNetwork random_multigraph(std::size_t n, std::size_t m, std::uint64_t seed, bool loops = true) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    auto g = empty_graph(n);
    while (g.edge_count() < m) {
        auto a = pick(rng), b = pick(rng);
        if (!loops && a == b) continue;
        g.add_edge(a, b);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Reference description length: Poisson log-likelihood summed over every ordered node pair.

inline double lfact(double n) { return std::lgamma(n + 1.0); }

inline double reference_dl(const TopicNetwork& g, const std::vector<std::uint32_t>& b) {
    std::size_t n = g.node_count();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> kout(n, 0), kin(n, 0);
    for (const auto& e : g.edges()) {
        a[e.source][e.target] += 1;
        kout[e.source] += 1;
        kin[e.target] += 1;
    }
    double e_total = double(g.edge_count());
    double m_in = 0, s_in = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (b[i] == b[j]) {
                m_in += a[i][j];
                s_in += kout[i] * kin[j];
            }
    double m_out = e_total - m_in, s_out = e_total * e_total - s_in;
    double w_in = s_in > 0 ? m_in / s_in : 0.0, w_out = s_out > 0 ? m_out / s_out : 0.0;
    double loglik = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double lambda = kout[i] * kin[j] * (b[i] == b[j] ? w_in : w_out);
            if (a[i][j] > 0) loglik += a[i][j] * std::log(lambda);
            loglik -= lambda;
            loglik -= lfact(a[i][j]);
        }
    std::map<std::uint32_t, double> sizes;
    for (auto x : b) sizes[x] += 1;
    double blocks = double(sizes.size());
    double model = lfact(double(n));
    for (const auto& [k, s] : sizes) model -= lfact(s);
    model += lfact(double(n) - 1) - lfact(blocks - 1) - lfact(double(n) - blocks);
    model += std::log(double(n));
    if (blocks > 1) model += std::log(e_total + 1);
    return -loglik + model;
}

// ---------------------------------------------------------------------------
// Reference NMI from an explicit contingency table built by nested loops.

inline double reference_nmi(const std::vector<int>& x, const std::vector<int>& y) {
    std::set<int> cx(x.begin(), x.end()), cy(y.begin(), y.end());
    double n = double(x.size());
    double hx = 0, hy = 0, mi = 0;
    for (int a : cx) {
        double na = 0;
        for (int v : x) na += v == a;
        hx -= na / n * std::log(na / n);
    }
    for (int b : cy) {
        double nb = 0;
        for (int v : y) nb += v == b;
        hy -= nb / n * std::log(nb / n);
    }
    if (hx == 0 || hy == 0) return 0.0;
    for (int a : cx)
        for (int b : cy) {
            double nab = 0, na = 0, nb = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                nab += x[i] == a && y[i] == b;
                na += x[i] == a;
                nb += y[i] == b;
            }
            if (nab > 0) mi += nab / n * std::log(n * nab / (na * nb));
        }
    return 2 * mi / (hx + hy);
}

// ---------------------------------------------------------------------------
// Reference group metrics. Labels are per node; -1 marks an unscored node.

inline std::vector<std::vector<double>> adjacency(const TopicNetwork& g) {
    std::vector<std::vector<double>> a(g.node_count(), std::vector<double>(g.node_count(), 0.0));
    for (const auto& e : g.edges()) a[e.source][e.target] += 1;
    return a;
}

/// Density contrast from ordered node pairs i != j.
inline double reference_aei(const TopicNetwork& g, const std::vector<int>& l, int x, int y) {
    auto a = adjacency(g);
    double in_e = 0, in_p = 0, ex_e = 0, ex_p = 0;
    for (std::size_t i = 0; i < l.size(); ++i)
        for (std::size_t j = 0; j < l.size(); ++j) {
            if (i == j) continue;
            bool ix = l[i] == x || l[i] == y, jx = l[j] == x || l[j] == y;
            if (!ix || !jx) continue;
            if (l[i] == l[j]) {
                in_e += a[i][j];
                in_p += 1;
            } else {
                ex_e += a[i][j];
                ex_p += 1;
            }
        }
    double di = in_p > 0 ? in_e / in_p : 0.0, de = ex_e / ex_p;
    return (di - de) / (di + de);
}

/// Modularity of the labeling divided by its maximum, from per-node degree sums.
inline double reference_assortativity(const TopicNetwork& g, const std::vector<int>& l) {
    std::vector<double> kout(l.size(), 0), kin(l.size(), 0);
    double m = 0, same = 0;
    for (const auto& e : g.edges()) {
        if (l[e.source] < 0 || l[e.target] < 0) continue;
        m += 1;
        kout[e.source] += 1;
        kin[e.target] += 1;
        same += l[e.source] == l[e.target];
    }
    double expected = 0;
    for (std::size_t i = 0; i < l.size(); ++i)
        for (std::size_t j = 0; j < l.size(); ++j)
            if (l[i] >= 0 && l[i] == l[j]) expected += kout[i] * kin[j] / (m * m);
    return (same / m - expected) / (1 - expected);
}

inline double reference_coleman(const TopicNetwork& g, const std::vector<int>& l, int group) {
    double out = 0, inside = 0, ng = 0, n = 0;
    for (int x : l) {
        n += x >= 0;
        ng += x == group;
    }
    for (const auto& e : g.edges()) {
        if (l[e.source] != group || l[e.target] < 0) continue;
        out += 1;
        inside += l[e.target] == group;
    }
    double w = inside / out, p = (ng - 1) / (n - 1);
    return w >= p ? (w - p) / (1 - p) : (w - p) / p;
}

/// Chance that two draws from the opposing camps disagree.
inline double reference_simpson(double a, double b) { return 2 * a * b / ((a + b) * (a + b)); }

} // namespace testing_support
