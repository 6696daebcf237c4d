#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polarnet/blockmodel.hpp"
#include "polarnet/core.hpp"
#include "polarnet/graph.hpp"
#include "polarnet/labels.hpp"
#include "polarnet/stance_groups.hpp"

namespace polarnet {

/// Symmetric topic-by-topic matrix; entries may be absent.
struct TopicMatrix {
    std::vector<std::string> topics;
    std::vector<std::vector<std::optional<double>>> values;

    explicit TopicMatrix(std::vector<std::string> t = {})
        : topics(std::move(t)), values(topics.size(), std::vector<std::optional<double>>(topics.size())) {}

    std::size_t size() const { return topics.size(); }
    std::optional<double> at(std::size_t i, std::size_t j) const { return values.at(i).at(j); }
    void set(std::size_t i, std::size_t j, std::optional<double> v) { values.at(i).at(j) = values.at(j).at(i) = v; }
};

using OverlapMatrix = TopicMatrix;
using AlignmentMatrix = TopicMatrix;

// ---------------------------------------------------------------------------
// User overlap

inline std::optional<double> jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return std::nullopt;
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib)
            ++ia;
        else if (*ib < *ia)
            ++ib;
        else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    return double(inter) / double(a.size() + b.size() - inter);
}

inline OverlapMatrix jaccard_matrix(const std::vector<std::string>& topics,
                                    const std::vector<std::set<std::string>>& node_sets) {
    if (topics.size() != node_sets.size()) throw ArgumentError("jaccard_matrix: one node set per topic");
    if (topics.size() < 2) throw ArgumentError("jaccard_matrix: at least two networks required");
    OverlapMatrix m(topics);
    for (std::size_t i = 0; i < topics.size(); ++i)
        for (std::size_t j = i; j < topics.size(); ++j) m.set(i, j, jaccard(node_sets[i], node_sets[j]));
    return m;
}

inline OverlapMatrix jaccard_matrix(const std::vector<const TopicNetwork*>& networks) {
    std::vector<std::string> topics;
    std::vector<std::set<std::string>> sets;
    for (const auto* g : networks) {
        topics.push_back(g->topic);
        sets.emplace_back(g->nodes().begin(), g->nodes().end());
    }
    return jaccard_matrix(topics, sets);
}

// ---------------------------------------------------------------------------
// Hypergraph

struct TopicHypergraph {
    std::vector<std::string> nodes;
    std::vector<std::vector<std::size_t>> hyperedges;  // sorted topic indices, sorted lexicographically
    double threshold = 0.2;
    bool inclusive = false;
};

namespace detail {

inline void bron_kerbosch(const std::vector<std::vector<bool>>& adj, std::vector<std::size_t>& r,
                          std::vector<std::size_t> p, std::vector<std::size_t> x,
                          std::vector<std::vector<std::size_t>>& out) {
    if (p.empty() && x.empty()) {
        out.push_back(r);
        return;
    }
    // Pivot with the most neighbours in P.
    std::size_t pivot = 0, best = 0;
    bool have = false;
    for (const auto* set : {&p, &x})
        for (auto u : *set) {
            std::size_t c = 0;
            for (auto v : p) c += adj[u][v];
            if (!have || c > best) {
                pivot = u;
                best = c;
                have = true;
            }
        }
    std::vector<std::size_t> candidates;
    for (auto v : p)
        if (!adj[pivot][v]) candidates.push_back(v);
    for (auto v : candidates) {
        std::vector<std::size_t> np, nx;
        for (auto u : p)
            if (adj[v][u]) np.push_back(u);
        for (auto u : x)
            if (adj[v][u]) nx.push_back(u);
        r.push_back(v);
        bron_kerbosch(adj, r, std::move(np), std::move(nx), out);
        r.pop_back();
        p.erase(std::find(p.begin(), p.end(), v));
        x.push_back(v);
    }
}

} // namespace detail

/// Maximal cliques (of two or more topics) in the graph that keeps pairs whose overlap
/// exceeds `threshold`, or reaches it when `inclusive`.
inline TopicHypergraph topic_hypergraph(const OverlapMatrix& m, double threshold = 0.2, bool inclusive = false) {
    if (!(threshold > 0 && threshold < 1)) throw ArgumentError("topic_hypergraph: threshold must lie in (0,1)");
    TopicHypergraph h;
    h.nodes = m.topics;
    h.threshold = threshold;
    h.inclusive = inclusive;
    std::size_t n = m.size();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto v = m.at(i, j);
            adj[i][j] = v && (inclusive ? *v >= threshold : *v > threshold);
        }
    std::vector<std::size_t> r, p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::vector<std::vector<std::size_t>> cliques;
    detail::bron_kerbosch(adj, r, std::move(p), {}, cliques);
    for (auto& c : cliques) {
        if (c.size() < 2) continue;
        std::sort(c.begin(), c.end());
        h.hyperedges.push_back(std::move(c));
    }
    std::sort(h.hyperedges.begin(), h.hyperedges.end());
    return h;
}

inline nlohmann::ordered_json to_json(const TopicHypergraph& h) {
    nlohmann::ordered_json j;
    j["threshold"] = h.threshold;
    j["comparison"] = h.inclusive ? ">=" : ">";
    j["nodes"] = h.nodes;
    j["hyperedges"] = nlohmann::ordered_json::array();
    for (const auto& e : h.hyperedges) {
        auto names = nlohmann::ordered_json::array();
        for (auto i : e) names.push_back(h.nodes[i]);
        j["hyperedges"].push_back(names);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Issue alignment

/// User → class label for one topic.
using UserGrouping = std::map<std::string, int>;

inline UserGrouping user_grouping(const TopicNetwork& g, const Partition& p) {
    UserGrouping u;
    for (std::uint32_t v = 0; v < g.node_count(); ++v) u[g.name(v)] = static_cast<int>(p.assignment.at(v));
    return u;
}

/// Labeled users only; neutral users are dropped when `exclude_neutral`.
inline UserGrouping user_grouping(const TopicNetwork& g, const StanceGrouping& s, bool exclude_neutral = false) {
    UserGrouping u;
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
        if (!s.stance.at(v)) continue;
        if (exclude_neutral && *s.stance[v] == Stance::neutral) continue;
        u[g.name(v)] = static_cast<int>(*s.stance[v]);
    }
    return u;
}

inline UserGrouping user_grouping(const std::map<std::string, Stance>& stances, bool exclude_neutral = false) {
    UserGrouping u;
    for (const auto& [user, s] : stances) {
        if (exclude_neutral && s == Stance::neutral) continue;
        u[user] = static_cast<int>(s);
    }
    return u;
}

enum class NmiNorm { arithmetic, min, max };

/// Normalized mutual information over users present in both groupings.
inline std::optional<double> nmi_alignment(const UserGrouping& gx, const UserGrouping& gy,
                                           NmiNorm norm = NmiNorm::arithmetic) {
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> px, py;
    double n = 0;
    for (const auto& [user, x] : gx) {
        auto it = gy.find(user);
        if (it == gy.end()) continue;
        joint[{x, it->second}] += 1;
        px[x] += 1;
        py[it->second] += 1;
        n += 1;
    }
    if (n < 2) return std::nullopt;
    auto entropy = [n](const std::map<int, double>& p) {
        double h = 0;
        for (const auto& [k, c] : p) h -= (c / n) * std::log(c / n);
        return h;
    };
    double hx = entropy(px), hy = entropy(py);
    if (hx <= 0 || hy <= 0) return 0.0;
    double mi = 0;
    for (const auto& [k, c] : joint) mi += (c / n) * std::log(c * n / (px[k.first] * py[k.second]));
    double denom = 0;
    switch (norm) {
    case NmiNorm::arithmetic: denom = 0.5 * (hx + hy); break;
    case NmiNorm::min: denom = std::min(hx, hy); break;
    case NmiNorm::max: denom = std::max(hx, hy); break;
    }
    return std::clamp(mi / denom, 0.0, 1.0);
}

inline AlignmentMatrix alignment_matrix(const std::vector<std::string>& topics,
                                        const std::vector<UserGrouping>& groupings,
                                        NmiNorm norm = NmiNorm::arithmetic) {
    if (topics.size() != groupings.size()) throw ArgumentError("alignment_matrix: one grouping per topic");
    AlignmentMatrix m(topics);
    for (std::size_t i = 0; i < topics.size(); ++i)
        for (std::size_t j = i; j < topics.size(); ++j) m.set(i, j, nmi_alignment(groupings[i], groupings[j], norm));
    return m;
}

// ---------------------------------------------------------------------------
// Joint stances

struct JointStanceTable {
    std::string topic_x, topic_y;
    std::array<std::array<double, 3>, 3> p{};  // [stance on x][stance on y]
    std::size_t users = 0;

    double cell(Stance x, Stance y) const { return p[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]; }
};

inline std::optional<JointStanceTable> joint_stance_table(const std::string& topic_x,
                                                          const std::map<std::string, Stance>& sx,
                                                          const std::string& topic_y,
                                                          const std::map<std::string, Stance>& sy) {
    JointStanceTable t;
    t.topic_x = topic_x;
    t.topic_y = topic_y;
    std::array<std::array<std::size_t, 3>, 3> counts{};
    for (const auto& [user, x] : sx) {
        auto it = sy.find(user);
        if (it == sy.end()) continue;
        ++counts[static_cast<std::size_t>(x)][static_cast<std::size_t>(it->second)];
        ++t.users;
    }
    if (t.users == 0) return std::nullopt;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) t.p[i][j] = double(counts[i][j]) / double(t.users);
    return t;
}

} // namespace polarnet
