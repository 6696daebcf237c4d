#pragma once

// Rendering of the report bundle. Indices use two decimals, counts use thousands
// separators, shares use one-decimal percentages, and absent values render as "--" in
// markdown and as empty cells in CSV.

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarnet/activity.hpp"
#include "polarnet/annotate.hpp"
#include "polarnet/crosstopic.hpp"
#include "polarnet/graph.hpp"
#include "polarnet/labels.hpp"
#include "polarnet/metrics.hpp"

namespace polarnet {

inline constexpr std::string_view absent_cell = "--";

// ---------------------------------------------------------------------------
// Number formatting

inline std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    // "-0.00" reads as a sign error in a table.
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

inline std::string fmt_index(std::optional<double> v) { return v ? fmt_fixed(*v, 2) : std::string(absent_cell); }

inline std::string fmt_count(std::uint64_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return out;
}

inline std::string fmt_percent(std::optional<double> share) {
    return share ? fmt_fixed(*share * 100.0, 1) + "%" : std::string(absent_cell);
}

inline std::string csv_number(std::optional<double> v) { return v ? fmt_fixed(*v, 6) : std::string(); }

/// "opposes_trump" -> "Opposes Trump".
inline std::string humanize_label(std::string_view label) {
    std::string out;
    bool start = true;
    for (char c : label) {
        if (c == '_') {
            out += ' ';
            start = true;
            continue;
        }
        out += start && c >= 'a' && c <= 'z' ? char(c - 'a' + 'A') : c;
        start = false;
    }
    return out;
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace detail {

inline void markdown_table(std::ostream& out, const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
    out << '|';
    for (const auto& h : header) out << ' ' << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
    out << '\n';
    for (const auto& r : rows) {
        out << '|';
        for (const auto& c : r) out << ' ' << c << " |";
        out << '\n';
    }
}

inline void csv_table(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_escape(header[i]);
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_escape(r[i]);
        out << '\n';
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Table rows

struct NetworkRow {
    Topic topic;
    NetworkStats stats;
    std::size_t dangling = 0;
    std::size_t self_reposts = 0;
    std::size_t follow_edges = 0;
    std::size_t block_edges = 0;
};

/// Flat form of a structural report row.
struct StructuralRow {
    std::string topic;
    std::uint32_t groups = 0;
    std::optional<double> mean_aei, max_aei, min_aei, max_ds, min_ds;
};

inline StructuralRow structural_row(const StructuralReport& r) {
    StructuralRow row{r.topic, r.groups, r.pairwise.mean, r.pairwise.max, r.pairwise.min, std::nullopt, std::nullopt};
    // A single group has no between-group comparison: every column is dashed.
    if (r.groups >= 2) {
        row.max_ds = r.composition.max_ds;
        row.min_ds = r.composition.min_ds;
    }
    return row;
}

namespace detail {

inline nlohmann::json opt_json(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline std::optional<double> json_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

} // namespace detail

inline nlohmann::ordered_json to_json(const MetricReport& r) {
    using detail::opt_json;
    return {{"topic", r.topic},
            {"camp_a", stance_key(r.camp_a)},
            {"camp_b", stance_key(r.camp_b)},
            {"camp_a_name", r.camp_a_name},
            {"camp_b_name", r.camp_b_name},
            {"frac_a", r.frac_a},
            {"frac_neutral", r.frac_neutral},
            {"frac_b", r.frac_b},
            {"simpson", opt_json(r.simpson)},
            {"assortativity", opt_json(r.assortativity)},
            {"aei", opt_json(r.aei)},
            {"coleman_a", opt_json(r.coleman_a)},
            {"coleman_b", opt_json(r.coleman_b)},
            {"dominant", r.dominant ? nlohmann::json(stance_key(*r.dominant)) : nlohmann::json(nullptr)},
            {"dominant_name", r.dominant_name},
            {"coverage", r.coverage}};
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.topic = j.at("topic").get<std::string>();
    r.camp_a = stance_from_key(j.at("camp_a").get<std::string>()).value_or(Stance::for_);
    r.camp_b = stance_from_key(j.at("camp_b").get<std::string>()).value_or(Stance::against);
    r.camp_a_name = j.at("camp_a_name").get<std::string>();
    r.camp_b_name = j.at("camp_b_name").get<std::string>();
    r.frac_a = j.at("frac_a").get<double>();
    r.frac_neutral = j.at("frac_neutral").get<double>();
    r.frac_b = j.at("frac_b").get<double>();
    r.simpson = detail::json_opt(j, "simpson");
    r.assortativity = detail::json_opt(j, "assortativity");
    r.aei = detail::json_opt(j, "aei");
    r.coleman_a = detail::json_opt(j, "coleman_a");
    r.coleman_b = detail::json_opt(j, "coleman_b");
    if (!j.at("dominant").is_null()) r.dominant = stance_from_key(j.at("dominant").get<std::string>());
    r.dominant_name = j.at("dominant_name").get<std::string>();
    r.coverage = j.at("coverage").get<double>();
    return r;
}

inline nlohmann::ordered_json to_json(const StructuralRow& r) {
    using detail::opt_json;
    return {{"topic", r.topic},          {"groups", r.groups},         {"mean_aei", opt_json(r.mean_aei)},
            {"max_aei", opt_json(r.max_aei)}, {"min_aei", opt_json(r.min_aei)}, {"max_ds", opt_json(r.max_ds)},
            {"min_ds", opt_json(r.min_ds)}};
}

inline StructuralRow structural_row_from_json(const nlohmann::json& j) {
    StructuralRow r;
    r.topic = j.at("topic").get<std::string>();
    r.groups = j.at("groups").get<std::uint32_t>();
    r.mean_aei = detail::json_opt(j, "mean_aei");
    r.max_aei = detail::json_opt(j, "max_aei");
    r.min_aei = detail::json_opt(j, "min_aei");
    r.max_ds = detail::json_opt(j, "max_ds");
    r.min_ds = detail::json_opt(j, "min_ds");
    return r;
}

// ---------------------------------------------------------------------------
// Individual tables. Each returns (header, rows) so the same cells feed markdown and CSV;
// the `csv` flag switches number formatting.

using TableCells = std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>>;

inline TableCells activity_table(const ActivityStats& s, bool csv = false) {
    TableCells t{{"Action Type", "Daily Average Actions", "Daily Average Authors", "Total Actions", "Total Authors"}, {}};
    for (Collection c : activity_collections) {
        const auto& a = s[c];
        std::string name = humanize_label(action_type_name(c));
        if (csv)
            t.second.push_back({name, fmt_fixed(a.daily_average_actions, 2), fmt_fixed(a.daily_average_authors, 2),
                                std::to_string(a.total_actions), std::to_string(a.total_author_days)});
        else
            t.second.push_back({name, fmt_count(std::uint64_t(std::llround(a.daily_average_actions))),
                                fmt_count(std::uint64_t(std::llround(a.daily_average_authors))),
                                fmt_count(a.total_actions), fmt_count(a.total_author_days)});
    }
    return t;
}

inline TableCells theme_table_cells(const ThemeDistribution& d, bool csv = false) {
    TableCells t{{"Category", "% of All Posts", "% of Political Posts", "Number of Posts"}, {}};
    auto share = [&](std::optional<double> v) { return csv ? csv_number(v) : fmt_percent(v); };
    auto count = [&](std::uint64_t n) { return csv ? std::to_string(n) : fmt_count(n); };
    double total = double(d.total);
    std::uint64_t apolitical = d.total - d.political;
    t.second.push_back({"Apolitical", share(double(apolitical) / total), share(std::nullopt), count(apolitical)});
    t.second.push_back({"Political", share(d.political_share()),
                        share(d.political ? std::optional<double>(1.0) : std::nullopt), count(d.political)});
    for (const auto& r : d.rows) {
        if (!is_political(r.theme)) continue;
        t.second.push_back({std::string(info(r.theme).display), share(r.share_of_all), share(r.share_of_political),
                            count(r.count)});
    }
    t.second.push_back({"Total", share(1.0), share(std::nullopt), count(d.total)});
    return t;
}

inline TableCells network_table(const std::vector<NetworkRow>& rows, bool csv = false) {
    TableCells t{{"Topic", "Number of Nodes", "Number of Edges", "Average Degree"}, {}};
    if (csv) t.first.insert(t.first.end(), {"Dangling Reposts", "Self Reposts", "Follow Edges", "Block Edges"});
    for (const auto& r : rows) {
        std::vector<std::string> row{std::string(info(r.topic).display),
                                     csv ? std::to_string(r.stats.nodes) : fmt_count(r.stats.nodes),
                                     csv ? std::to_string(r.stats.edges) : fmt_count(r.stats.edges),
                                     fmt_fixed(r.stats.average_degree, csv ? 6 : 2)};
        if (csv)
            row.insert(row.end(), {std::to_string(r.dangling), std::to_string(r.self_reposts),
                                   std::to_string(r.follow_edges), std::to_string(r.block_edges)});
        t.second.push_back(std::move(row));
    }
    return t;
}

inline std::string topic_display(const std::string& key) {
    auto t = topic_from_key(key);
    return t ? std::string(info(*t).display) : key;
}

inline TableCells polarization_table(const std::vector<MetricReport>& rows, bool csv = false) {
    TableCells t{{"Topic", "% A", "% Neutral", "% B", "Simpson", "Assort.", "AEI", "Col. A", "Col. B", "Dominant Stance"},
                 {}};
    auto num = [&](std::optional<double> v) { return csv ? csv_number(v) : fmt_index(v); };
    for (const auto& r : rows) {
        t.second.push_back({topic_display(r.topic), num(r.frac_a), num(r.frac_neutral), num(r.frac_b), num(r.simpson),
                            num(r.assortativity), num(r.aei), num(r.coleman_a), num(r.coleman_b),
                            r.dominant_name.empty() ? (csv ? std::string() : std::string(absent_cell))
                                                    : humanize_label(r.dominant_name)});
    }
    return t;
}

inline TableCells structural_table(const std::vector<StructuralRow>& rows, bool csv = false) {
    TableCells t{{"Topic", "Mean AEI", "Max. AEI", "Min. AEI", "Number of Groups", "Max. % DS", "Min. % DS"}, {}};
    auto num = [&](std::optional<double> v) { return csv ? csv_number(v) : fmt_index(v); };
    for (const auto& r : rows)
        t.second.push_back({topic_display(r.topic), num(r.mean_aei), num(r.max_aei), num(r.min_aei),
                            std::to_string(r.groups), num(r.max_ds), num(r.min_ds)});
    return t;
}

inline std::string short_topic(const std::string& key) {
    auto t = topic_from_key(key);
    return t ? std::string(info(*t).short_name) : key;
}

inline TableCells matrix_table(const TopicMatrix& m, bool csv = false) {
    TableCells t{{"topic"}, {}};
    for (const auto& k : m.topics) t.first.push_back(csv ? k : short_topic(k));
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::vector<std::string> row{csv ? m.topics[i] : short_topic(m.topics[i])};
        for (std::size_t j = 0; j < m.size(); ++j) row.push_back(csv ? csv_number(m.at(i, j)) : fmt_index(m.at(i, j)));
        t.second.push_back(std::move(row));
    }
    return t;
}

inline TableCells joint_table(const JointStanceTable& jt, const StanceNames& nx, const StanceNames& ny, bool csv = false) {
    TableCells t{{csv ? "stance_x" : short_topic(jt.topic_x) + " \\ " + short_topic(jt.topic_y)}, {}};
    auto label = [&](const StanceNames& n, Stance s) { return csv ? n.display(s) : humanize_label(n.display(s)); };
    for (Stance sy : all_stances) t.first.push_back(label(ny, sy));
    for (Stance sx : all_stances) {
        std::vector<std::string> row{label(nx, sx)};
        for (Stance sy : all_stances) row.push_back(csv ? csv_number(jt.cell(sx, sy)) : fmt_index(jt.cell(sx, sy)));
        t.second.push_back(std::move(row));
    }
    return t;
}

inline TableCells pairwise_table(const PairwiseAei& p, bool csv = false) {
    TableCells t{{"group"}, {}};
    for (std::size_t i = 0; i < p.matrix.size(); ++i) t.first.push_back(std::to_string(i));
    for (std::size_t i = 0; i < p.matrix.size(); ++i) {
        std::vector<std::string> row{std::to_string(i)};
        for (std::size_t j = 0; j < p.matrix.size(); ++j)
            row.push_back(csv ? csv_number(p.matrix[i][j]) : fmt_index(p.matrix[i][j]));
        t.second.push_back(std::move(row));
    }
    return t;
}

inline void write_csv(std::ostream& out, const TableCells& t) { detail::csv_table(out, t.first, t.second); }
inline void write_markdown(std::ostream& out, const TableCells& t) { detail::markdown_table(out, t.first, t.second); }

// ---------------------------------------------------------------------------
// Whole bundle

struct JointEntry {
    std::string topic_x, topic_y;
    StanceNames names_x, names_y;
    std::optional<JointStanceTable> table;
};

struct ReportBundle {
    std::optional<ActivityStats> activity;
    std::optional<ThemeDistribution> themes;
    std::optional<std::vector<NetworkRow>> networks;
    std::optional<std::vector<MetricReport>> polarization;
    std::optional<std::vector<StructuralRow>> structural;
    std::map<std::string, PairwiseAei> pairwise;  // topic key -> matrix
    std::optional<TopicMatrix> overlap;
    std::optional<TopicHypergraph> hypergraph;
    std::optional<TopicMatrix> alignment_content;
    std::optional<TopicMatrix> alignment_structural;
    std::vector<JointEntry> joint;
};

inline void render_markdown(std::ostream& out, const ReportBundle& b) {
    auto absent = [&](const char* what) { out << "_Section absent: " << what << " not available._\n\n"; };
    out << "# Polarization report\n\n";

    out << "## Activity\n\n";
    if (b.activity) {
        write_markdown(out, activity_table(*b.activity));
        out << "\nObserved days: " << fmt_fixed(b.activity->observed_days, 3)
            << ", downtime hours: " << fmt_fixed(b.activity->downtime_hours, 1) << "\n\n";
    } else {
        absent("activity statistics");
    }

    out << "## Political themes\n\n";
    if (b.themes) {
        write_markdown(out, theme_table_cells(*b.themes));
        out << '\n';
    } else {
        absent("theme labels");
    }

    out << "## Network properties\n\n";
    if (b.networks) {
        write_markdown(out, network_table(*b.networks));
        out << '\n';
    } else {
        absent("topic networks");
    }

    out << "## Stance polarization\n\n";
    if (b.polarization) {
        write_markdown(out, polarization_table(*b.polarization));
        out << '\n';
    } else {
        absent("stance metrics");
    }

    out << "## Structural groups\n\n";
    if (b.structural) {
        write_markdown(out, structural_table(*b.structural));
        out << '\n';
    } else {
        absent("structural metrics");
    }

    out << "## Pairwise group AEI\n\n";
    if (b.pairwise.empty()) absent("pairwise AEI matrices");
    for (const auto& [topic, p] : b.pairwise) {
        out << "### " << topic_display(topic) << "\n\n";
        if (p.matrix.empty())
            out << "Single group; no pairs.\n\n";
        else {
            write_markdown(out, pairwise_table(p));
            out << '\n';
        }
    }

    out << "## User overlap\n\n";
    if (b.overlap) {
        write_markdown(out, matrix_table(*b.overlap));
        out << '\n';
    } else {
        absent("overlap matrix");
    }

    out << "## Topic bundles\n\n";
    if (b.hypergraph) {
        out << "Threshold: J " << (b.hypergraph->inclusive ? ">=" : ">") << ' ' << fmt_index(b.hypergraph->threshold)
            << "\n\n";
        if (b.hypergraph->hyperedges.empty()) out << "No qualifying bundles.\n";
        for (const auto& e : b.hypergraph->hyperedges) {
            out << "- {";
            for (std::size_t i = 0; i < e.size(); ++i) out << (i ? ", " : "") << short_topic(b.hypergraph->nodes[e[i]]);
            out << "}\n";
        }
        out << '\n';
    } else {
        absent("hypergraph");
    }

    out << "## Issue alignment (content groups)\n\n";
    if (b.alignment_content) {
        write_markdown(out, matrix_table(*b.alignment_content));
        out << '\n';
    } else {
        absent("content alignment");
    }
    out << "## Issue alignment (structural groups)\n\n";
    if (b.alignment_structural) {
        write_markdown(out, matrix_table(*b.alignment_structural));
        out << '\n';
    } else {
        absent("structural alignment");
    }

    out << "## Joint stances\n\n";
    if (b.joint.empty()) absent("joint stance tables");
    for (const auto& j : b.joint) {
        out << "### " << topic_display(j.topic_x) << " x " << topic_display(j.topic_y) << "\n\n";
        if (!j.table) {
            out << "No shared users.\n\n";
            continue;
        }
        write_markdown(out, joint_table(*j.table, j.names_x, j.names_y));
        out << "\nShared users: " << fmt_count(j.table->users) << "\n\n";
    }
}

} // namespace polarnet
