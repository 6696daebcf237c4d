#pragma once

// Stage orchestration. Artifacts live under <workdir>/<config hash>/<stage>/ next to a
// manifest.json that records the config hash, the sha256 of every input consumed and of
// every output written. A stage is skipped ("cached") when its manifest matches the
// current config and upstream outputs; a stage whose upstream artifacts were modified on
// disk refuses to run.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarnet/activity.hpp"
#include "polarnet/annotate.hpp"
#include "polarnet/blockmodel.hpp"
#include "polarnet/config.hpp"
#include "polarnet/corpus.hpp"
#include "polarnet/crosstopic.hpp"
#include "polarnet/event.hpp"
#include "polarnet/graph.hpp"
#include "polarnet/hash.hpp"
#include "polarnet/metrics.hpp"
#include "polarnet/provider.hpp"
#include "polarnet/report.hpp"
#include "polarnet/stance_groups.hpp"

namespace polarnet {

namespace fs = std::filesystem;

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> s{"ingest", "annotate", "graph", "groups", "metrics", "crosstopic", "report"};
    return s;
}

inline const std::vector<std::string>& stage_dependencies(const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> deps{
        {"ingest", {}},
        {"annotate", {"ingest"}},
        {"graph", {"ingest", "annotate"}},
        {"groups", {"graph", "annotate"}},
        {"metrics", {"graph", "groups", "annotate"}},
        {"crosstopic", {"graph", "groups", "annotate"}},
        {"report", {"ingest", "annotate", "graph", "metrics", "crosstopic"}},
    };
    auto it = deps.find(stage);
    if (it == deps.end()) throw ConfigError("unknown stage '" + stage + "'");
    return it->second;
}

/// Parses "a,b,c" (or "all"), validates names and returns them in pipeline order.
inline std::vector<std::string> parse_stage_list(std::string_view spec) {
    if (spec.empty() || spec == "all") return stage_names();
    std::set<std::string> wanted;
    for (auto& s : split(spec, ',')) {
        if (s.empty()) continue;
        stage_dependencies(s);  // validates
        wanted.insert(s);
    }
    std::vector<std::string> out;
    for (const auto& s : stage_names())
        if (wanted.count(s)) out.push_back(s);
    return out;
}

struct StageManifest {
    std::string stage;
    std::string config_hash;
    std::string tool_version;
    std::map<std::string, std::string> inputs;   // "<stage>/<path>" or "input:<path>" -> sha256
    std::map<std::string, std::string> outputs;  // path relative to the stage dir -> sha256
    double wall_ms = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["stage"] = stage;
        j["config_hash"] = config_hash;
        j["tool_version"] = tool_version;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["wall_ms"] = wall_ms;
        return j;
    }

    static StageManifest from_json(const nlohmann::json& j) {
        StageManifest m;
        m.stage = j.at("stage").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.tool_version = j.value("tool_version", "");
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.wall_ms = j.value("wall_ms", 0.0);
        return m;
    }
};

struct StageOutcome {
    std::string stage;
    bool cached = false;
    StageManifest manifest;
};

namespace detail {

inline std::map<std::string, std::string> hash_tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto rel = fs::relative(e.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        out[rel] = sha256_file(e.path());
    }
    return out;
}

/// Human-readable differences between recorded and actual hashes.
inline std::string hash_diff(const std::map<std::string, std::string>& expected,
                             const std::map<std::string, std::string>& actual) {
    std::ostringstream s;
    std::size_t n = 0;
    for (const auto& [path, h] : expected) {
        auto it = actual.find(path);
        if (it == actual.end())
            s << "\n  missing:  " << path;
        else if (it->second != h)
            s << "\n  modified: " << path << " (manifest " << h.substr(0, 12) << ", disk " << it->second.substr(0, 12)
              << ")";
        else
            continue;
        ++n;
    }
    for (const auto& [path, h] : actual)
        if (!expected.count(path)) {
            s << "\n  extra:    " << path;
            ++n;
        }
    return n ? std::to_string(n) + " file(s) differ:" + s.str() : std::string();
}

inline void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + p.string());
}

inline std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    return in;
}

inline nlohmann::json read_json(const fs::path& p) {
    auto in = open_in(p);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error("malformed JSON in " + p.string());
    return j;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

template <class F>
std::string render(F&& f) {
    std::ostringstream s;
    f(s);
    return s.str();
}

} // namespace detail

/// Writes every layer of each topic network under <dir>/<topic>/<window>/ and returns one
/// stats row per topic.
inline nlohmann::ordered_json write_topic_graphs(const fs::path& dir, const std::vector<PostRecord>& posts,
                                                 const std::vector<Interaction>& interactions, const TopicStore& topics,
                                                 const std::vector<Topic>& topic_list, const TimeWindow& window,
                                                 bool include_isolated = false) {
    auto rows = nlohmann::ordered_json::array();
    for (Topic t : topic_list) {
        auto b = build_bipartite(posts, interactions, topics, t, window);
        ProjectionTally tally;
        project_reposts(b, &tally);
        auto bundle = build_bundle(b, interactions, window, include_isolated);
        auto out = dir / info(t).key / window.label;
        NodeDictionary dict;
        std::vector<std::pair<TopicNetwork*, std::string>> layers{
            {&bundle.reposts, "reposts"}, {&bundle.likes, "likes"}, {&bundle.follows, "follows"}, {&bundle.blocks, "blocks"}};
        for (auto& [g, name] : layers) {
            g->topic = std::string(info(t).key);
            g->window = window.label;
            detail::write_text(out / (name + ".graph"), detail::render([&](std::ostream& o) { write_graph(o, *g, dict); }));
        }
        detail::write_text(out / "reposts.csv", detail::render([&](std::ostream& o) { write_graph_csv(o, bundle.reposts); }));
        detail::write_text(out / "nodes.tsv", detail::render([&](std::ostream& o) { dict.write(o); }));
        auto st = network_stats(bundle.reposts);
        rows.push_back({{"topic", info(t).key},
                        {"window", window.label},
                        {"nodes", st.nodes},
                        {"edges", st.edges},
                        {"average_degree", st.average_degree},
                        {"dangling", b.dangling},
                        {"self_reposts", tally.self_loops},
                        {"follow_edges", bundle.follows.edge_count()},
                        {"block_edges", bundle.blocks.edge_count()},
                        {"like_edges", bundle.likes.edge_count()}});
    }
    return rows;
}

/// Reads one layer of a topic network directory written by write_topic_graphs.
inline TopicNetwork read_topic_network(const fs::path& dir, const std::string& layer = "reposts") {
    auto nin = detail::open_in(dir / "nodes.tsv");
    auto dict = NodeDictionary::read(nin);
    auto gin = detail::open_in(dir / (layer + ".graph"));
    return read_graph(gin, dict);
}

using ProviderFactory = std::function<std::unique_ptr<AnnotationProvider>(const PipelineConfig&)>;

inline std::unique_ptr<AnnotationProvider> default_provider(const PipelineConfig& cfg) {
    if (cfg.provider == "mock") return std::make_unique<MockProvider>();
    return std::make_unique<HttpProvider>(cfg.provider, cfg.provider_token);
}

class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg, std::ostream* log = &std::cerr, ProviderFactory provider = default_provider)
        : cfg_(std::move(cfg)), hash_(cfg_.hash()), dir_(cfg_.run_dir()), log_(log), provider_(std::move(provider)) {}

    const fs::path& run_dir() const { return dir_; }
    const std::string& config_hash() const { return hash_; }
    fs::path stage_dir(const std::string& stage) const { return dir_ / stage; }

    std::vector<StageOutcome> run(const std::vector<std::string>& stages = stage_names()) {
        fs::create_directories(dir_);
        detail::write_text(dir_ / "config.json", detail::dump(cfg_.canonical()));
        std::vector<StageOutcome> out;
        for (const auto& s : stages) out.push_back(run_stage(s));
        return out;
    }

    /// Loads and verifies a stage's manifest against the files on disk.
    StageManifest verified_manifest(const std::string& stage, const std::string& consumer) const {
        auto path = stage_dir(stage) / "manifest.json";
        if (!fs::exists(path))
            throw StageError(stage, "missing upstream artifact: stage '" + stage + "' has not been run (needed by '" +
                                        consumer + "')");
        auto m = StageManifest::from_json(detail::read_json(path));
        if (m.config_hash != hash_)
            throw StageError(consumer, "hash mismatch: stage '" + stage + "' was produced under config " +
                                           m.config_hash.substr(0, 12) + ", current config is " + hash_.substr(0, 12));
        auto diff = detail::hash_diff(m.outputs, detail::hash_tree(stage_dir(stage)));
        if (!diff.empty())
            throw StageError(consumer, "hash mismatch in outputs of stage '" + stage + "': " + diff);
        return m;
    }

private:
    StageOutcome run_stage(const std::string& stage) {
        std::vector<std::string> missing;
        for (const auto& dep : stage_dependencies(stage))
            if (!fs::exists(stage_dir(dep) / "manifest.json")) missing.push_back("'" + dep + "'");
        if (!missing.empty()) {
            std::string names;
            for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
            bool many = missing.size() > 1;
            throw StageError(stage, std::string("missing upstream artifact: ") + (many ? "stages " : "stage ") + names +
                                        (many ? " have" : " has") + " not been run (needed by '" + stage + "')");
        }
        std::map<std::string, std::string> inputs;
        for (const auto& dep : stage_dependencies(stage)) {
            auto m = verified_manifest(dep, stage);
            for (const auto& [p, h] : m.outputs) inputs[dep + "/" + p] = h;
        }
        if (stage == "ingest") {
            for (const auto& f : cfg_.input_files()) inputs["input:" + f.generic_string()] = sha256_file(f);
        }

        auto dir = stage_dir(stage);
        auto manifest_path = dir / "manifest.json";
        if (fs::exists(manifest_path)) {
            auto m = StageManifest::from_json(detail::read_json(manifest_path));
            if (m.config_hash == hash_ && m.inputs == inputs &&
                detail::hash_diff(m.outputs, detail::hash_tree(dir)).empty()) {
                log("stage " + stage + ": cached");
                return {stage, true, m};
            }
        }

        fs::remove_all(dir);
        fs::create_directories(dir);
        auto t0 = std::chrono::steady_clock::now();
        try {
            if (stage == "ingest") run_ingest(dir);
            else if (stage == "annotate") run_annotate(dir);
            else if (stage == "graph") run_graph(dir);
            else if (stage == "groups") run_groups(dir);
            else if (stage == "metrics") run_metrics(dir);
            else if (stage == "crosstopic") run_crosstopic(dir);
            else if (stage == "report") run_report(dir);
        } catch (const StageError&) {
            throw;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
        StageManifest m;
        m.stage = stage;
        m.config_hash = hash_;
        m.tool_version = std::string(tool_version);
        m.inputs = std::move(inputs);
        m.outputs = detail::hash_tree(dir);
        m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        detail::write_text(manifest_path, detail::dump(m.to_json()));
        log("stage " + stage + ": done (" + std::to_string(m.outputs.size()) + " outputs)");
        return {stage, false, m};
    }

    void log(const std::string& s) const {
        if (log_) *log_ << s << '\n';
    }

    // -- shared loaders ------------------------------------------------------

    std::vector<PostRecord> load_posts() const {
        auto in = detail::open_in(stage_dir("ingest") / "posts.jsonl");
        return read_posts(in);
    }
    std::vector<Interaction> load_interactions() const {
        auto in = detail::open_in(stage_dir("ingest") / "interactions.jsonl");
        return read_interactions(in);
    }
    TopicStore load_topics() const {
        auto in = detail::open_in(stage_dir("annotate") / "topics.jsonl");
        return TopicStore::read(in);
    }
    StanceStore load_stances() const {
        auto in = detail::open_in(stage_dir("annotate") / "stances.jsonl");
        return StanceStore::read(in);
    }
    fs::path topic_graph_dir(Topic t) const { return stage_dir("graph") / info(t).key / cfg_.window.label; }
    TopicNetwork load_network(Topic t, const std::string& layer = "reposts") const {
        return read_topic_network(topic_graph_dir(t), layer);
    }
    std::optional<Partition> load_partition(Topic t, const TopicNetwork& g) const {
        auto p = stage_dir("groups") / info(t).key / "structural.tsv";
        if (!fs::exists(p)) return std::nullopt;
        auto in = detail::open_in(p);
        return read_partition_tsv(in, g);
    }

    // -- stages --------------------------------------------------------------

    void run_ingest(const fs::path& dir) {
        ActivityAccumulator acc;
        CorpusBuilder builder;
        StreamTally tally;
        std::ostringstream errors;
        for (const auto& f : cfg_.input_files()) {
            auto in = detail::open_in(f);
            std::size_t before = tally.errors.size();
            for_each_event(in, [&](RawEvent ev) {
                acc.add(ev);
                builder.add(ev);
            }, tally);
            for (std::size_t i = before; i < tally.errors.size(); ++i)
                errors << nlohmann::ordered_json{{"file", f.filename().string()},
                                                 {"line", tally.errors[i].offset},
                                                 {"error", tally.errors[i].message}}
                              .dump()
                       << '\n';
        }
        Coverage coverage = cfg_.coverage == "bluesky" ? bluesky_collection_coverage() : Coverage{};
        auto stats = acc.finalize(coverage);
        auto corpus = builder.finish();
        auto filtered = filter_corpus(corpus.posts, cfg_.filter);
        auto sampled = sample_corpus(filtered, cfg_.sample_fraction, derive_seed(cfg_.seed, "sample"), cfg_.sample_mode);

        detail::write_text(dir / "activity.json", detail::dump(to_json(stats)));
        detail::write_text(dir / "daily.csv", detail::render([&](std::ostream& o) { write_daily_csv(o, stats); }));
        detail::write_text(dir / "posts.jsonl", detail::render([&](std::ostream& o) { write_jsonl(o, sampled); }));
        detail::write_text(dir / "interactions.jsonl",
                           detail::render([&](std::ostream& o) { write_jsonl(o, corpus.interactions); }));
        detail::write_text(dir / "parse_errors.jsonl", errors.str());
        nlohmann::ordered_json summary{{"lines", tally.lines},
                                       {"parsed", tally.parsed},
                                       {"parse_errors", tally.errors.size()},
                                       {"non_create", tally.non_create},
                                       {"other_collection", tally.other_collection},
                                       {"posts", corpus.posts.size()},
                                       {"posts_filtered", filtered.size()},
                                       {"posts_sampled", sampled.size()},
                                       {"interactions", corpus.interactions.size()}};
        detail::write_text(dir / "summary.json", detail::dump(summary));
    }

    void run_annotate(const fs::path& dir) {
        auto posts = load_posts();
        auto interactions = load_interactions();
        auto provider = provider_(cfg_);
        AnnotateOptions opt;
        opt.retry.max_attempts = cfg_.max_attempts;
        opt.max_in_flight = static_cast<std::size_t>(cfg_.max_in_flight);
        opt.timestamp = cfg_.timestamp;

        auto themes = annotate_themes(posts, *provider, opt);
        detail::write_text(dir / "themes.jsonl", detail::render([&](std::ostream& o) { themes.write(o); }));
        detail::write_text(dir / "theme_failures.jsonl", detail::render([&](std::ostream& o) { themes.write_failures(o); }));
        nlohmann::ordered_json counts = nlohmann::ordered_json::object();
        for (const auto& t : theme_table) counts[std::string(t.key)] = 0;
        themes.for_each([&](const std::string&, Theme t) { counts[std::string(info(t).key)] = counts[std::string(info(t).key)].get<std::uint64_t>() + 1; });
        detail::write_text(dir / "theme_counts.json", detail::dump(counts));

        auto topics = annotate_topics(posts, themes, cfg_.topic_list(), *provider, opt);
        detail::write_text(dir / "topics.jsonl", detail::render([&](std::ostream& o) { topics.write(o); }));
        detail::write_text(dir / "topic_failures.jsonl", detail::render([&](std::ostream& o) { topics.write_failures(o); }));

        StanceStore stances;
        std::map<Topic, StanceNames> names;
        for (const auto& tc : cfg_.topics) {
            names[tc.topic] = tc.names;
            auto participants = topic_participants(posts, interactions, topics, tc.topic);
            annotate_stances(stances, participants, tc.topic, tc.names, *provider,
                             {cfg_.posts_per_user, derive_seed(cfg_.seed, "stances")}, opt);
        }
        detail::write_text(dir / "stances.jsonl", detail::render([&](std::ostream& o) { stances.write(o, names); }));
        detail::write_text(dir / "stance_failures.jsonl",
                           detail::render([&](std::ostream& o) { stances.write_failures(o); }));
    }

    void run_graph(const fs::path& dir) {
        auto rows = write_topic_graphs(dir, load_posts(), load_interactions(), load_topics(), cfg_.topic_list(), cfg_.window,
                                       cfg_.include_isolated);
        detail::write_text(dir / "stats.json", detail::dump(rows));
    }

    void run_groups(const fs::path& dir) {
        auto stances = load_stances();
        for (Topic t : cfg_.topic_list()) {
            auto g = load_network(t);
            auto out = dir / info(t).key;
            fs::create_directories(out);
            auto sg = content_groups(stances.for_topic(t), g);
            auto counts = sg.counts();
            const auto& names = cfg_.names(t);
            nlohmann::ordered_json content{{"nodes", g.node_count()},
                                           {"labeled", sg.labeled},
                                           {"coverage", sg.coverage()},
                                           {names.display(Stance::for_), counts[0]},
                                           {"neutral", counts[1]},
                                           {names.display(Stance::against), counts[2]}};
            detail::write_text(out / "content.json", detail::dump(content));
            if (g.node_count() == 0) continue;

            auto opt = cfg_.detect;
            opt.seed = derive_seed(cfg_.detect.seed, info(t).key);
            auto res = detect_structural_groups(cfg_.simple_graph ? g.simplified() : g, opt);
            detail::write_text(out / "structural.tsv",
                               detail::render([&](std::ostream& o) { write_partition_tsv(o, g, res.best); }));
            detail::write_text(out / "structural.json", detail::dump(to_json(res, opt)));

            auto comp = group_composition(res.best, sg);
            nlohmann::ordered_json cj;
            cj["dominant"] = comp.dominant ? nlohmann::ordered_json(names.display(*comp.dominant)) : nlohmann::ordered_json();
            cj["max_ds"] = detail::opt_json(comp.max_ds);
            cj["min_ds"] = detail::opt_json(comp.min_ds);
            auto& blocks = cj["blocks"] = nlohmann::ordered_json::array();
            for (const auto& b : comp.blocks)
                blocks.push_back({{"size", b.size},
                                  {names.display(Stance::for_), b.stance_counts[0]},
                                  {"neutral", b.stance_counts[1]},
                                  {names.display(Stance::against), b.stance_counts[2]},
                                  {"unlabeled", b.unlabeled},
                                  {"dominant_fraction", detail::opt_json(b.dominant_fraction)}});
            detail::write_text(out / "composition.json", detail::dump(cj));
        }
    }

    void run_metrics(const fs::path& dir) {
        auto stances = load_stances();
        auto polarization_rows = nlohmann::ordered_json::array();
        auto structural_rows = nlohmann::ordered_json::array();
        for (Topic t : cfg_.topic_list()) {
            auto g = load_network(t);
            if (g.node_count() == 0) continue;
            auto key = std::string(info(t).key);
            auto out = dir / key;
            auto sg = content_groups(stances.for_topic(t), g);
            auto mr = stance_report(key, g, sg, cfg_.names(t), cfg_.metric_flags);
            detail::write_text(out / "stance_report.json", detail::dump(to_json(mr)));
            polarization_rows.push_back(to_json(mr));
            auto p = load_partition(t, g);
            if (!p) continue;
            auto sr = structural_report(key, g, *p, sg);
            auto row = structural_row(sr);
            detail::write_text(out / "structural_report.json", detail::dump(to_json(row)));
            detail::write_text(out / "pairwise_aei.csv",
                               detail::render([&](std::ostream& o) { write_csv(o, pairwise_table(sr.pairwise, true)); }));
            structural_rows.push_back(to_json(row));
        }
        detail::write_text(dir / "polarization.json", detail::dump(polarization_rows));
        detail::write_text(dir / "structural_summary.json", detail::dump(structural_rows));
    }

    void run_crosstopic(const fs::path& dir) {
        auto stances = load_stances();
        std::vector<std::string> keys;
        std::vector<std::set<std::string>> node_sets;
        std::vector<UserGrouping> content, structural;
        std::vector<std::map<std::string, Stance>> restricted;
        for (Topic t : cfg_.topic_list()) {
            auto g = load_network(t);
            keys.emplace_back(info(t).key);
            node_sets.emplace_back(g.nodes().begin(), g.nodes().end());
            auto sg = content_groups(stances.for_topic(t), g);
            content.push_back(user_grouping(g, sg, cfg_.nmi_exclude_neutral));
            auto p = g.node_count() ? load_partition(t, g) : std::nullopt;
            structural.push_back(p ? user_grouping(g, *p) : UserGrouping{});
            std::map<std::string, Stance> r;
            for (std::uint32_t v = 0; v < g.node_count(); ++v)
                if (sg.stance[v]) r.emplace(g.name(v), *sg.stance[v]);
            restricted.push_back(std::move(r));
        }
        if (keys.size() < 2) {
            detail::write_text(dir / "absent.txt", "fewer than two topics configured\n");
            return;
        }
        auto overlap = jaccard_matrix(keys, node_sets);
        detail::write_text(dir / "overlap.csv", detail::render([&](std::ostream& o) { write_csv(o, matrix_table(overlap, true)); }));
        auto hg = topic_hypergraph(overlap, cfg_.overlap_threshold, cfg_.threshold_inclusive);
        detail::write_text(dir / "hypergraph.json", detail::dump(to_json(hg)));
        auto ac = alignment_matrix(keys, content, cfg_.nmi_norm);
        detail::write_text(dir / "alignment_content.csv", detail::render([&](std::ostream& o) { write_csv(o, matrix_table(ac, true)); }));
        auto as = alignment_matrix(keys, structural, cfg_.nmi_norm);
        detail::write_text(dir / "alignment_structural.csv",
                           detail::render([&](std::ostream& o) { write_csv(o, matrix_table(as, true)); }));
        auto index = nlohmann::ordered_json::array();
        auto topics = cfg_.topic_list();
        for (std::size_t i = 0; i < keys.size(); ++i)
            for (std::size_t j = i + 1; j < keys.size(); ++j) {
                auto jt = joint_stance_table(keys[i], restricted[i], keys[j], restricted[j]);
                std::string name = keys[i] + "__" + keys[j] + ".csv";
                index.push_back({{"x", keys[i]}, {"y", keys[j]}, {"users", jt ? jt->users : 0}, {"file", jt ? name : ""}});
                if (!jt) continue;
                detail::write_text(dir / "joint" / name, detail::render([&](std::ostream& o) {
                                       write_csv(o, joint_table(*jt, cfg_.names(topics[i]), cfg_.names(topics[j]), true));
                                   }));
            }
        detail::write_text(dir / "joint_index.json", detail::dump(index));
    }

    ReportBundle load_bundle() const {
        ReportBundle b;
        b.activity = activity_from_json(detail::read_json(stage_dir("ingest") / "activity.json"));
        {
            auto counts_json = detail::read_json(stage_dir("annotate") / "theme_counts.json");
            std::array<std::uint64_t, theme_count> counts{};
            for (const auto& t : theme_table) counts[static_cast<std::size_t>(t.theme)] = counts_json.value(std::string(t.key), std::uint64_t{0});
            std::uint64_t total = 0;
            for (auto c : counts) total += c;
            if (total > 0) b.themes = theme_distribution(counts);
        }
        {
            std::vector<NetworkRow> rows;
            for (const auto& r : detail::read_json(stage_dir("graph") / "stats.json")) {
                NetworkRow row;
                row.topic = *topic_from_key(r.at("topic").get<std::string>());
                row.stats = network_stats(r.at("nodes").get<std::size_t>(), r.at("edges").get<std::size_t>());
                row.dangling = r.at("dangling").get<std::size_t>();
                row.self_reposts = r.at("self_reposts").get<std::size_t>();
                row.follow_edges = r.at("follow_edges").get<std::size_t>();
                row.block_edges = r.at("block_edges").get<std::size_t>();
                rows.push_back(row);
            }
            b.networks = rows;
        }
        {
            std::vector<MetricReport> rows;
            for (const auto& r : detail::read_json(stage_dir("metrics") / "polarization.json")) rows.push_back(metric_report_from_json(r));
            if (!rows.empty()) b.polarization = rows;
            std::vector<StructuralRow> srows;
            for (const auto& r : detail::read_json(stage_dir("metrics") / "structural_summary.json")) srows.push_back(structural_row_from_json(r));
            if (!srows.empty()) b.structural = srows;
        }
        for (Topic t : cfg_.topic_list()) {
            auto p = stage_dir("metrics") / info(t).key / "pairwise_aei.csv";
            if (!fs::exists(p)) continue;
            b.pairwise[std::string(info(t).key)] = read_pairwise_csv(p);
        }
        auto cross = stage_dir("crosstopic");
        if (fs::exists(cross / "overlap.csv")) {
            b.overlap = read_matrix_csv(cross / "overlap.csv");
            auto hj = detail::read_json(cross / "hypergraph.json");
            TopicHypergraph h;
            h.nodes = hj.at("nodes").get<std::vector<std::string>>();
            h.threshold = hj.at("threshold").get<double>();
            h.inclusive = hj.at("comparison").get<std::string>() == ">=";
            for (const auto& e : hj.at("hyperedges")) {
                std::vector<std::size_t> idx;
                for (const auto& name : e)
                    idx.push_back(static_cast<std::size_t>(
                        std::find(h.nodes.begin(), h.nodes.end(), name.get<std::string>()) - h.nodes.begin()));
                h.hyperedges.push_back(idx);
            }
            b.hypergraph = h;
            b.alignment_content = read_matrix_csv(cross / "alignment_content.csv");
            b.alignment_structural = read_matrix_csv(cross / "alignment_structural.csv");
            for (const auto& e : detail::read_json(cross / "joint_index.json")) {
                JointEntry je;
                je.topic_x = e.at("x").get<std::string>();
                je.topic_y = e.at("y").get<std::string>();
                je.names_x = cfg_.names(*topic_from_key(je.topic_x));
                je.names_y = cfg_.names(*topic_from_key(je.topic_y));
                auto file = e.at("file").get<std::string>();
                if (!file.empty()) je.table = read_joint_csv(cross / "joint" / file, je, e.at("users").get<std::size_t>());
                b.joint.push_back(std::move(je));
            }
        }
        return b;
    }

    static std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
        auto in = detail::open_in(p);
        std::vector<std::vector<std::string>> rows;
        std::string line;
        while (std::getline(in, line)) rows.push_back(split(line, ','));
        return rows;
    }

    static std::optional<double> cell(const std::string& s) {
        if (s.empty()) return std::nullopt;
        return std::stod(s);
    }

    static TopicMatrix read_matrix_csv(const fs::path& p) {
        auto rows = read_csv_rows(p);
        std::vector<std::string> topics(rows.at(0).begin() + 1, rows.at(0).end());
        TopicMatrix m(topics);
        for (std::size_t i = 0; i < topics.size(); ++i)
            for (std::size_t j = 0; j < topics.size(); ++j) m.values[i][j] = cell(rows.at(i + 1).at(j + 1));
        return m;
    }

    static PairwiseAei read_pairwise_csv(const fs::path& p) {
        auto rows = read_csv_rows(p);
        PairwiseAei out;
        std::size_t n = rows.at(0).size() - 1;
        out.matrix.assign(n, std::vector<std::optional<double>>(n));
        double sum = 0;
        int count = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                out.matrix[i][j] = cell(rows.at(i + 1).at(j + 1));
                if (j <= i || !out.matrix[i][j]) continue;
                double v = *out.matrix[i][j];
                sum += v;
                ++count;
                out.max = out.max ? std::max(*out.max, v) : v;
                out.min = out.min ? std::min(*out.min, v) : v;
            }
        if (count) out.mean = sum / count;
        return out;
    }

    static JointStanceTable read_joint_csv(const fs::path& p, const JointEntry& je, std::size_t users) {
        auto rows = read_csv_rows(p);
        JointStanceTable t;
        t.topic_x = je.topic_x;
        t.topic_y = je.topic_y;
        t.users = users;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) t.p[i][j] = std::stod(rows.at(i + 1).at(j + 1));
        return t;
    }

    void run_report(const fs::path& dir) {
        auto bundle = load_bundle();
        detail::write_text(dir / "report.md", detail::render([&](std::ostream& o) { render_markdown(o, bundle); }));
        auto csv = [&](const std::string& name, const TableCells& t) {
            detail::write_text(dir / name, detail::render([&](std::ostream& o) { write_csv(o, t); }));
        };
        if (bundle.activity) csv("activity.csv", activity_table(*bundle.activity, true));
        if (bundle.themes) csv("themes.csv", theme_table_cells(*bundle.themes, true));
        if (bundle.networks) csv("networks.csv", network_table(*bundle.networks, true));
        if (bundle.polarization) csv("polarization.csv", polarization_table(*bundle.polarization, true));
        if (bundle.structural) csv("structural.csv", structural_table(*bundle.structural, true));
        for (const auto& [topic, p] : bundle.pairwise) csv("pairwise_aei_" + topic + ".csv", pairwise_table(p, true));
        auto cross = stage_dir("crosstopic");
        for (const char* f : {"overlap.csv", "hypergraph.json", "alignment_content.csv", "alignment_structural.csv"})
            if (fs::exists(cross / f)) fs::copy_file(cross / f, dir / f);
        if (fs::exists(cross / "joint"))
            for (const auto& e : fs::directory_iterator(cross / "joint"))
                fs::copy_file(e.path(), dir / ("joint_" + e.path().filename().string()));
    }

    PipelineConfig cfg_;
    std::string hash_;
    fs::path dir_;
    std::ostream* log_;
    ProviderFactory provider_;
};

/// Copies the verified report bundle of a completed run into `out`.
inline std::vector<fs::path> export_report(const Pipeline& p, const fs::path& out) {
    auto m = p.verified_manifest("report", "report");
    fs::create_directories(out);
    std::vector<fs::path> written;
    for (const auto& [rel, h] : m.outputs) {
        auto dst = out / rel;
        fs::create_directories(dst.parent_path());
        fs::copy_file(p.stage_dir("report") / rel, dst, fs::copy_options::overwrite_existing);
        written.push_back(dst);
    }
    return written;
}

} // namespace polarnet
