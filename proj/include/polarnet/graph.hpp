#pragma once

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "polarnet/core.hpp"
#include "polarnet/corpus.hpp"
#include "polarnet/labels.hpp"

namespace polarnet {

// ---------------------------------------------------------------------------
// Time windows

/// Half-open UTC interval; unbounded sides are nullopt.
struct TimeWindow {
    std::optional<Instant> from;
    std::optional<Instant> to;
    std::string label = "all";

    bool contains(Instant t) const { return (!from || t >= *from) && (!to || t < *to); }

    /// "all" or "YYYY-MM:YYYY-MM" (inclusive months).
    static TimeWindow parse(std::string_view spec) {
        using namespace std::chrono;
        if (spec.empty() || spec == "all") return {};
        auto parse_month = [&](std::string_view s) -> year_month {
            int y, m;
            if (s.size() != 7 || s[4] != '-' || !detail::parse_digits(s, 0, 4, y) || !detail::parse_digits(s, 5, 2, m) ||
                m < 1 || m > 12)
                throw ArgumentError("invalid window month '" + std::string(s) + "', expected YYYY-MM");
            return year{y} / month{unsigned(m)};
        };
        auto colon = spec.find(':');
        if (colon == std::string_view::npos) throw ArgumentError("window must look like YYYY-MM:YYYY-MM");
        year_month a = parse_month(spec.substr(0, colon));
        year_month b = parse_month(spec.substr(colon + 1));
        if (b < a) throw ArgumentError("window end precedes start");
        TimeWindow w;
        w.from = Instant{sys_days{a / 1}};
        w.to = Instant{sys_days{(b + months{1}) / 1}};
        w.label = std::string(spec.substr(0, colon)) + "_" + std::string(spec.substr(colon + 1));
        return w;
    }
};

// ---------------------------------------------------------------------------
// Directed multigraph over user ids

struct Edge {
    std::uint32_t source;
    std::uint32_t target;
    Instant time{};

    bool operator==(const Edge&) const = default;
};

/// One interaction layer for a (topic, window): users as nodes, one edge per observed interaction. Parallel
/// edges are kept; node ids are dense and assigned in first-seen order.
class TopicNetwork {
public:
    std::string topic;
    std::string window = "all";
    std::string tau = "reposts";

    std::uint32_t add_node(const std::string& user) {
        auto [it, inserted] = index_.emplace(user, static_cast<std::uint32_t>(nodes_.size()));
        if (inserted) nodes_.push_back(user);
        return it->second;
    }

    void add_edge(const std::string& from, const std::string& to, Instant t = {}) {
        std::uint32_t a = add_node(from);
        std::uint32_t b = add_node(to);
        edges_.push_back({a, b, t});
    }

    void add_edge(std::uint32_t from, std::uint32_t to, Instant t = {}) {
        if (from >= nodes_.size() || to >= nodes_.size()) throw ArgumentError("edge endpoint out of range");
        edges_.push_back({from, to, t});
    }

    std::optional<std::uint32_t> find(const std::string& user) const {
        auto it = index_.find(user);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::string& name(std::uint32_t v) const { return nodes_.at(v); }

    /// Copy with parallel edges collapsed to one (first occurrence kept).
    TopicNetwork simplified() const {
        TopicNetwork g;
        g.topic = topic;
        g.window = window;
        g.tau = tau;
        for (const auto& n : nodes_) g.add_node(n);
        std::unordered_set<std::uint64_t> seen;
        for (const auto& e : edges_)
            if (seen.insert((std::uint64_t(e.source) << 32) | e.target).second) g.edges_.push_back(e);
        return g;
    }

private:
    std::vector<std::string> nodes_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<Edge> edges_;
};

struct NetworkStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    double average_degree = 0;
};

/// Average degree counts both endpoints of every directed edge: 2|E|/|V|.
inline NetworkStats network_stats(std::size_t nodes, std::size_t edges) {
    NetworkStats s{nodes, edges, 0.0};
    if (nodes > 0) s.average_degree = 2.0 * double(edges) / double(nodes);
    return s;
}

inline NetworkStats network_stats(const TopicNetwork& g) { return network_stats(g.node_count(), g.edge_count()); }

// ---------------------------------------------------------------------------
// Bipartite user-post structure

enum class BipartiteKind { authorship, repost, like };

struct BipartiteEdge {
    std::uint32_t user;
    std::uint32_t post;
    BipartiteKind kind;
    Instant time{};
};

struct BipartiteInteractions {
    std::vector<std::string> users;
    std::vector<std::string> posts;
    std::vector<std::uint32_t> post_author;  // user index of each post's author
    std::vector<BipartiteEdge> edges;
    std::size_t dangling = 0;  // interactions whose subject post carries no topic label

    std::size_t count(BipartiteKind k) const {
        return static_cast<std::size_t>(
            std::count_if(edges.begin(), edges.end(), [&](const BipartiteEdge& e) { return e.kind == k; }));
    }
};

/// Authorship, repost and like edges for posts labeled with `topic` inside `window`.
/// Interactions pointing at posts without any topic label (or not in the corpus) are
/// dropped and tallied; interactions on posts of other topics are ignored.
inline BipartiteInteractions build_bipartite(const std::vector<PostRecord>& posts,
                                             const std::vector<Interaction>& interactions, const TopicStore& topics,
                                             Topic topic, const TimeWindow& window = {}) {
    BipartiteInteractions b;
    std::unordered_map<std::string, std::uint32_t> user_index, post_index;
    auto user_id = [&](const std::string& u) {
        auto [it, inserted] = user_index.emplace(u, static_cast<std::uint32_t>(b.users.size()));
        if (inserted) b.users.push_back(u);
        return it->second;
    };
    for (const auto& p : posts) {
        if (topics.get(p.uri) != topic || !window.contains(p.created_at)) continue;
        if (post_index.count(p.uri)) continue;
        std::uint32_t u = user_id(p.author);
        std::uint32_t pid = static_cast<std::uint32_t>(b.posts.size());
        post_index.emplace(p.uri, pid);
        b.posts.push_back(p.uri);
        b.post_author.push_back(u);
        b.edges.push_back({u, pid, BipartiteKind::authorship, p.created_at});
    }
    for (const auto& it : interactions) {
        if (it.type != InteractionType::repost && it.type != InteractionType::like) continue;
        if (!window.contains(it.time)) continue;
        auto p = post_index.find(it.subject);
        if (p == post_index.end()) {
            if (!topics.get(it.subject)) ++b.dangling;
            continue;
        }
        auto kind = it.type == InteractionType::repost ? BipartiteKind::repost : BipartiteKind::like;
        b.edges.push_back({user_id(it.actor), p->second, kind, it.time});
    }
    return b;
}

struct ProjectionOptions {
    BipartiteKind kind = BipartiteKind::repost;
    bool include_isolated = false;  // keep topic participants without any inter-user edge
};

struct ProjectionTally {
    std::size_t source_edges = 0;
    std::size_t self_loops = 0;
};

/// One directed edge per interaction, from the acting user to the post's original author.
inline TopicNetwork project(const BipartiteInteractions& b, const ProjectionOptions& opt = {},
                           ProjectionTally* tally = nullptr) {
    TopicNetwork g;
    g.tau = opt.kind == BipartiteKind::like ? "likes" : "reposts";
    ProjectionTally t;
    for (const auto& e : b.edges) {
        if (e.kind != opt.kind) continue;
        ++t.source_edges;
        std::uint32_t author = b.post_author[e.post];
        if (author == e.user) {
            ++t.self_loops;
            continue;
        }
        g.add_edge(b.users[e.user], b.users[author], e.time);
    }
    if (opt.include_isolated) {
        for (const auto& e : b.edges)
            if (e.kind == BipartiteKind::authorship || e.kind == opt.kind) g.add_node(b.users[e.user]);
    }
    if (tally) *tally = t;
    return g;
}

inline TopicNetwork project_reposts(const BipartiteInteractions& b, ProjectionTally* tally = nullptr) {
    return project(b, {BipartiteKind::repost, false}, tally);
}

/// Follow and block layers induced on `nodes`. All given nodes are present in both layers.
inline std::pair<TopicNetwork, TopicNetwork> build_follow_block_layers(const std::vector<std::string>& nodes,
                                                                       const std::vector<Interaction>& records,
                                                                       const TimeWindow& window = {}) {
    TopicNetwork follows, blocks;
    follows.tau = "follows";
    blocks.tau = "blocks";
    for (const auto& n : nodes) {
        follows.add_node(n);
        blocks.add_node(n);
    }
    for (const auto& r : records) {
        if (r.type != InteractionType::follow && r.type != InteractionType::block) continue;
        if (!window.contains(r.time) || r.actor == r.subject) continue;
        auto& layer = r.type == InteractionType::follow ? follows : blocks;
        auto a = layer.find(r.actor);
        auto b = layer.find(r.subject);
        if (a && b) layer.add_edge(*a, *b, r.time);
    }
    return {std::move(follows), std::move(blocks)};
}

/// The (likes, reposts, follows, blocks) tuple for one (topic, window).
struct MultilayerBundle {
    TopicNetwork likes;
    TopicNetwork reposts;
    TopicNetwork follows;
    TopicNetwork blocks;

    /// V^likes ∪ V^reposts in first-seen order (reposts first).
    std::vector<std::string> union_nodes() const {
        std::vector<std::string> out = reposts.nodes();
        std::unordered_set<std::string> seen(out.begin(), out.end());
        for (const auto& n : likes.nodes())
            if (seen.insert(n).second) out.push_back(n);
        return out;
    }
};

inline MultilayerBundle build_bundle(const BipartiteInteractions& b, const std::vector<Interaction>& records,
                                     const TimeWindow& window = {}, bool include_isolated = false) {
    MultilayerBundle m;
    m.reposts = project(b, {BipartiteKind::repost, include_isolated});
    m.likes = project(b, {BipartiteKind::like, include_isolated});
    std::tie(m.follows, m.blocks) = build_follow_block_layers(m.union_nodes(), records, window);
    for (auto* g : {&m.likes, &m.reposts, &m.follows, &m.blocks}) g->window = window.label;
    return m;
}

// ---------------------------------------------------------------------------
// Persistence
//
// <name>.graph: "PNGRAPH1", u32 meta length, meta JSON, u64 node count, node ids into
// the shared nodes.tsv dictionary (u32 each), u64 edge count, then per edge
// u32 source, u32 target, i64 time in microseconds. All integers little-endian.

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    auto u = static_cast<std::make_unsigned_t<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw Error("graph file truncated");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    return static_cast<T>(u);
}

inline constexpr char graph_magic[8] = {'P', 'N', 'G', 'R', 'A', 'P', 'H', '1'};

} // namespace detail

/// Node dictionary shared by all layers of one (topic, window): line i is "i<TAB>user".
class NodeDictionary {
public:
    std::uint32_t id(const std::string& user) {
        auto [it, inserted] = index_.emplace(user, static_cast<std::uint32_t>(names_.size()));
        if (inserted) names_.push_back(user);
        return it->second;
    }
    const std::string& name(std::uint32_t id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }

    void write(std::ostream& out) const {
        for (std::size_t i = 0; i < names_.size(); ++i) out << i << '\t' << names_[i] << '\n';
    }

    static NodeDictionary read(std::istream& in) {
        NodeDictionary d;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) throw Error("nodes.tsv: missing tab");
            if (std::stoul(line.substr(0, tab)) != d.size()) throw Error("nodes.tsv: ids must be dense and ordered");
            d.id(line.substr(tab + 1));
        }
        return d;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

inline void write_graph(std::ostream& out, const TopicNetwork& g, NodeDictionary& dict) {
    out.write(detail::graph_magic, sizeof detail::graph_magic);
    std::string meta = nlohmann::ordered_json{{"topic", g.topic}, {"window", g.window}, {"tau", g.tau}}.dump();
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    detail::put_le<std::uint64_t>(out, g.node_count());
    for (const auto& n : g.nodes()) detail::put_le<std::uint32_t>(out, dict.id(n));
    detail::put_le<std::uint64_t>(out, g.edge_count());
    for (const auto& e : g.edges()) {
        detail::put_le<std::uint32_t>(out, e.source);
        detail::put_le<std::uint32_t>(out, e.target);
        detail::put_le<std::int64_t>(out, e.time.time_since_epoch().count());
    }
}

inline TopicNetwork read_graph(std::istream& in, const NodeDictionary& dict) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, detail::graph_magic, 8) != 0) throw Error("not a polarnet graph file");
    auto meta_len = detail::get_le<std::uint32_t>(in);
    std::string meta(meta_len, '\0');
    if (!in.read(meta.data(), meta_len)) throw Error("graph file truncated");
    auto j = nlohmann::json::parse(meta);
    TopicNetwork g;
    g.topic = j.value("topic", "");
    g.window = j.value("window", "all");
    g.tau = j.value("tau", "reposts");
    auto n = detail::get_le<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n; ++i) {
        auto id = detail::get_le<std::uint32_t>(in);
        if (g.add_node(dict.name(id)) != i) throw Error("graph file lists a node twice");
    }
    auto m = detail::get_le<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < m; ++i) {
        auto s = detail::get_le<std::uint32_t>(in);
        auto t = detail::get_le<std::uint32_t>(in);
        auto ts = detail::get_le<std::int64_t>(in);
        g.add_edge(s, t, Instant{std::chrono::microseconds{ts}});
    }
    return g;
}

/// source,target,timestamp
inline void write_graph_csv(std::ostream& out, const TopicNetwork& g) {
    out << "source,target,timestamp\n";
    for (const auto& e : g.edges()) out << g.name(e.source) << ',' << g.name(e.target) << ',' << format_rfc3339(e.time) << '\n';
}

} // namespace polarnet
