#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "polarnet/blockmodel.hpp"
#include "polarnet/graph.hpp"
#include "polarnet/labels.hpp"
#include "polarnet/stance_groups.hpp"

namespace polarnet {

/// A graph with a group label per node. Nodes labeled `unscored` and every edge touching
/// them are ignored by all metrics.
class GroupedGraphView {
public:
    static constexpr int unscored = -1;

    GroupedGraphView(const TopicNetwork& g, std::vector<int> labels, int groups)
        : g_(&g), labels_(std::move(labels)), groups_(groups), sizes_(groups, 0),
          mixing_(std::size_t(groups) * groups, 0) {
        if (labels_.size() != g.node_count()) throw ArgumentError("GroupedGraphView: one label per node required");
        for (int l : labels_) {
            if (l == unscored) continue;
            if (l < 0 || l >= groups_) throw ArgumentError("GroupedGraphView: label out of range");
            ++sizes_[l];
        }
        for (const auto& e : g.edges()) {
            int a = labels_[e.source], b = labels_[e.target];
            if (a == unscored || b == unscored) continue;
            ++mixing_[std::size_t(a) * groups_ + b];
        }
    }

    static GroupedGraphView from_partition(const TopicNetwork& g, const Partition& p) {
        std::vector<int> labels(p.assignment.begin(), p.assignment.end());
        return {g, std::move(labels), static_cast<int>(p.blocks)};
    }

    /// Stance groups: 0 = for, 1 = against, and 2 = neutral when `include_neutral`.
    /// Unlabeled nodes (and neutral ones by default) are unscored.
    static GroupedGraphView from_stances(const TopicNetwork& g, const StanceGrouping& s, bool include_neutral = false) {
        std::vector<int> labels(g.node_count(), unscored);
        for (std::size_t v = 0; v < labels.size(); ++v) {
            if (!s.stance[v]) continue;
            switch (*s.stance[v]) {
            case Stance::for_: labels[v] = 0; break;
            case Stance::against: labels[v] = 1; break;
            case Stance::neutral:
                if (include_neutral) labels[v] = 2;
                break;
            }
        }
        return {g, std::move(labels), include_neutral ? 3 : 2};
    }

    int groups() const noexcept { return groups_; }
    std::int64_t size(int group) const { return sizes_.at(group); }
    std::int64_t scored_nodes() const {
        std::int64_t n = 0;
        for (auto s : sizes_) n += s;
        return n;
    }
    /// Edges from group a to group b, multiplicities included.
    std::int64_t edges(int a, int b) const { return mixing_.at(std::size_t(a) * groups_ + b); }
    std::int64_t scored_edges() const {
        std::int64_t m = 0;
        for (auto x : mixing_) m += x;
        return m;
    }
    const TopicNetwork& graph() const { return *g_; }
    const std::vector<int>& labels() const { return labels_; }

private:
    const TopicNetwork* g_;
    std::vector<int> labels_;
    int groups_;
    std::vector<std::int64_t> sizes_;
    std::vector<std::int64_t> mixing_;
};

// ---------------------------------------------------------------------------
// Adaptive EI

namespace detail {

inline std::optional<double> aei_from_densities(double d_int, double d_ext) {
    if (d_int + d_ext <= 0) return std::nullopt;
    return (d_int - d_ext) / (d_int + d_ext);
}

} // namespace detail

/// Density-based EI between two groups: internal density over ordered pairs inside X and
/// inside Y against cross density over ordered pairs between them.
inline std::optional<double> aei(const GroupedGraphView& view, int x, int y) {
    if (x == y) throw ArgumentError("aei: groups must differ");
    double nx = double(view.size(x)), ny = double(view.size(y));
    if (nx == 0 || ny == 0) throw ArgumentError("aei: empty group");
    double int_pairs = nx * (nx - 1) + ny * (ny - 1);
    double d_int = int_pairs > 0 ? double(view.edges(x, x) + view.edges(y, y)) / int_pairs : 0.0;
    double d_ext = double(view.edges(x, y) + view.edges(y, x)) / (2 * nx * ny);
    return detail::aei_from_densities(d_int, d_ext);
}

/// Pooled AEI over all groups; equals aei(view, 0, 1) when there are two.
inline std::optional<double> aei(const GroupedGraphView& view) {
    double int_edges = 0, ext_edges = 0, int_pairs = 0, ext_pairs = 0;
    for (int a = 0; a < view.groups(); ++a) {
        double na = double(view.size(a));
        int_pairs += na * (na - 1);
        for (int b = 0; b < view.groups(); ++b) {
            if (a == b)
                int_edges += double(view.edges(a, a));
            else {
                ext_edges += double(view.edges(a, b));
                ext_pairs += na * double(view.size(b));
            }
        }
    }
    if (ext_pairs == 0) return std::nullopt;
    double d_int = int_pairs > 0 ? int_edges / int_pairs : 0.0;
    return detail::aei_from_densities(d_int, ext_edges / ext_pairs);
}

struct PairwiseAei {
    std::vector<std::vector<std::optional<double>>> matrix;  // symmetric, diagonal absent
    std::optional<double> mean, max, min;
};

inline PairwiseAei pairwise_aei(const GroupedGraphView& view) {
    PairwiseAei out;
    int b = view.groups();
    if (b < 2) return out;
    out.matrix.assign(b, std::vector<std::optional<double>>(b));
    double sum = 0;
    int count = 0;
    for (int r = 0; r < b; ++r)
        for (int s = r + 1; s < b; ++s) {
            if (view.size(r) == 0 || view.size(s) == 0) continue;
            auto v = aei(view, r, s);
            out.matrix[r][s] = out.matrix[s][r] = v;
            if (!v) continue;
            sum += *v;
            ++count;
            out.max = out.max ? std::max(*out.max, *v) : *v;
            out.min = out.min ? std::min(*out.min, *v) : *v;
        }
    if (count > 0) out.mean = sum / count;
    return out;
}

// ---------------------------------------------------------------------------
// Assortativity and homophily

/// Categorical assortativity of the directed mixing matrix.
inline std::optional<double> assortativity(const GroupedGraphView& view) {
    double total = double(view.scored_edges());
    if (total == 0) return std::nullopt;
    int k = view.groups();
    double trace = 0, ab = 0;
    for (int g = 0; g < k; ++g) {
        double a = 0, b = 0;
        for (int h = 0; h < k; ++h) {
            a += double(view.edges(g, h));
            b += double(view.edges(h, g));
        }
        trace += double(view.edges(g, g)) / total;
        ab += (a / total) * (b / total);
    }
    if (1.0 - ab == 0) return std::nullopt;
    return (trace - ab) / (1.0 - ab);
}

/// Coleman's index for one group against the random-mixing baseline (n_g - 1)/(N - 1).
inline std::optional<double> coleman(const GroupedGraphView& view, int group) {
    double ng = double(view.size(group));
    if (ng == 0) throw ArgumentError("coleman: empty group");
    double out_edges = 0;
    for (int h = 0; h < view.groups(); ++h) out_edges += double(view.edges(group, h));
    if (out_edges == 0) return std::nullopt;
    double n = double(view.scored_nodes());
    if (n <= 1) return std::nullopt;
    double w = double(view.edges(group, group)) / out_edges;
    double p = (ng - 1) / (n - 1);
    if (w >= p) {
        if (p >= 1) return std::nullopt;
        return (w - p) / (1 - p);
    }
    return (w - p) / p;
}

// ---------------------------------------------------------------------------
// Diversity

enum class SimpsonVariant { opposing_renormalized, three_group };

/// Simpson diversity over stance fractions (for, neutral, against). By default only the
/// two opposing camps count, renormalized to sum to one.
inline std::optional<double> simpson(double a, double neutral, double b,
                                     SimpsonVariant variant = SimpsonVariant::opposing_renormalized) {
    if (variant == SimpsonVariant::three_group) {
        double t = a + neutral + b;
        if (t <= 0) return std::nullopt;
        a /= t;
        neutral /= t;
        b /= t;
        return 1.0 - (a * a + neutral * neutral + b * b);
    }
    double t = a + b;
    if (t <= 0) return std::nullopt;
    double p = a / t, q = b / t;
    return 1.0 - (p * p + q * q);
}

// ---------------------------------------------------------------------------
// Reports

struct MetricFlags {
    SimpsonVariant simpson = SimpsonVariant::opposing_renormalized;
    bool include_neutral = false;
};

/// One row of the stance polarization table. "A" is the larger opposing camp.
struct MetricReport {
    std::string topic;
    Stance camp_a = Stance::for_;
    Stance camp_b = Stance::against;
    std::string camp_a_name, camp_b_name;
    double frac_a = 0, frac_neutral = 0, frac_b = 0;
    std::optional<double> simpson, assortativity, aei, coleman_a, coleman_b;
    std::optional<Stance> dominant;
    std::string dominant_name;
    double coverage = 0;
};

inline MetricReport stance_report(const std::string& topic, const TopicNetwork& g, const StanceGrouping& s,
                                  const StanceNames& names, const MetricFlags& flags = {}) {
    MetricReport r;
    r.topic = topic;
    r.coverage = s.coverage();
    auto f = s.fractions();
    double f_for = f[0], f_neu = f[1], f_against = f[2];
    if (f_against > f_for) {
        r.camp_a = Stance::against;
        r.camp_b = Stance::for_;
    }
    r.camp_a_name = names.display(r.camp_a);
    r.camp_b_name = names.display(r.camp_b);
    r.frac_a = f[static_cast<std::size_t>(r.camp_a)];
    r.frac_b = f[static_cast<std::size_t>(r.camp_b)];
    r.frac_neutral = f_neu;
    r.simpson = simpson(r.frac_a, r.frac_neutral, r.frac_b, flags.simpson);
    r.dominant = dominant_stance(s);
    r.dominant_name = r.dominant ? names.display(*r.dominant) : "";

    auto view = GroupedGraphView::from_stances(g, s, flags.include_neutral);
    r.assortativity = assortativity(view);
    if (view.size(0) > 0 && view.size(1) > 0) r.aei = aei(view);
    int ga = r.camp_a == Stance::for_ ? 0 : 1;
    if (view.size(ga) > 0) r.coleman_a = coleman(view, ga);
    if (view.size(1 - ga) > 0) r.coleman_b = coleman(view, 1 - ga);
    return r;
}

/// One row of the structural table.
struct StructuralReport {
    std::string topic;
    std::uint32_t groups = 0;
    PairwiseAei pairwise;
    GroupComposition composition;
};

inline StructuralReport structural_report(const std::string& topic, const TopicNetwork& g, const Partition& p,
                                          const StanceGrouping& s) {
    StructuralReport r;
    r.topic = topic;
    r.groups = p.blocks;
    r.pairwise = pairwise_aei(GroupedGraphView::from_partition(g, p));
    r.composition = group_composition(p, s);
    return r;
}

} // namespace polarnet
