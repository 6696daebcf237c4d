#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarnet/blockmodel.hpp"
#include "polarnet/graph.hpp"
#include "polarnet/labels.hpp"

namespace polarnet {

/// Content-based grouping of one topic network's nodes, in graph node order.
struct StanceGrouping {
    std::vector<std::optional<Stance>> stance;
    std::size_t labeled = 0;

    double coverage() const { return stance.empty() ? 0.0 : double(labeled) / double(stance.size()); }
    std::size_t unlabeled() const { return stance.size() - labeled; }

    std::array<std::size_t, 3> counts() const {
        std::array<std::size_t, 3> c{};
        for (const auto& s : stance)
            if (s) ++c[static_cast<std::size_t>(*s)];
        return c;
    }

    /// Fractions of labeled nodes per stance (for, neutral, against).
    std::array<double, 3> fractions() const {
        auto c = counts();
        std::array<double, 3> f{};
        if (labeled > 0)
            for (std::size_t i = 0; i < 3; ++i) f[i] = double(c[i]) / double(labeled);
        return f;
    }
};

/// Restricts topic stance labels to the nodes of `g`. Labels for users outside the
/// network are ignored.
inline StanceGrouping content_groups(const std::map<std::string, Stance>& stances, const TopicNetwork& g) {
    StanceGrouping s;
    s.stance.resize(g.node_count());
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
        auto it = stances.find(g.name(v));
        if (it != stances.end()) {
            s.stance[v] = it->second;
            ++s.labeled;
        }
    }
    return s;
}

/// Globally most frequent stance among labeled nodes; ties resolve in (for, neutral,
/// against) order. Absent when nothing is labeled.
inline std::optional<Stance> dominant_stance(const StanceGrouping& s) {
    if (s.labeled == 0) return std::nullopt;
    auto c = s.counts();
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (c[i] > c[best]) best = i;
    return static_cast<Stance>(best);
}

struct BlockComposition {
    std::size_t size = 0;
    std::array<std::size_t, 3> stance_counts{};
    std::size_t unlabeled = 0;
    std::optional<double> dominant_fraction;  // %DS; unlabeled members excluded from the denominator
};

struct GroupComposition {
    std::vector<BlockComposition> blocks;
    std::optional<Stance> dominant;
    std::optional<double> max_ds;
    std::optional<double> min_ds;
};

inline GroupComposition group_composition(const Partition& p, const StanceGrouping& s) {
    if (p.assignment.size() != s.stance.size())
        throw ArgumentError("group_composition: partition and stance grouping cover different node sets");
    GroupComposition gc;
    gc.blocks.resize(p.blocks);
    for (std::size_t v = 0; v < p.assignment.size(); ++v) {
        auto& b = gc.blocks.at(p.assignment[v]);
        ++b.size;
        if (s.stance[v])
            ++b.stance_counts[static_cast<std::size_t>(*s.stance[v])];
        else
            ++b.unlabeled;
    }
    gc.dominant = dominant_stance(s);
    if (!gc.dominant) return gc;
    for (auto& b : gc.blocks) {
        std::size_t labeled = b.size - b.unlabeled;
        if (labeled == 0) continue;
        double ds = double(b.stance_counts[static_cast<std::size_t>(*gc.dominant)]) / double(labeled);
        b.dominant_fraction = ds;
        gc.max_ds = gc.max_ds ? std::max(*gc.max_ds, ds) : ds;
        gc.min_ds = gc.min_ds ? std::min(*gc.min_ds, ds) : ds;
    }
    return gc;
}

/// Reads node<TAB>block lines and orders them by `g`'s nodes. Every node must appear.
inline Partition read_partition_tsv(std::istream& in, const TopicNetwork& g) {
    Partition p;
    p.assignment.assign(g.node_count(), 0);
    std::vector<bool> seen(g.node_count(), false);
    std::string line;
    std::uint32_t max_block = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("partition file: missing tab");
        auto v = g.find(line.substr(0, tab));
        if (!v) throw Error("partition file: node not in graph: " + line.substr(0, tab));
        auto b = static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1)));
        p.assignment[*v] = b;
        seen[*v] = true;
        max_block = std::max(max_block, b);
    }
    for (std::size_t v = 0; v < seen.size(); ++v)
        if (!seen[v]) throw Error("partition file: node missing: " + g.name(static_cast<std::uint32_t>(v)));
    p.blocks = canonicalize(p.assignment);
    return p;
}

} // namespace polarnet
