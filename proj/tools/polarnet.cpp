// polarnet command-line tool. Stage subcommands operate on explicit files; `run` drives the
// cached pipeline from a config file. Exit codes: 0 success, 2 config/usage error, 3 stage
// failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "polarnet/polarnet.hpp"

namespace fs = std::filesystem;
using namespace polarnet;

namespace {

std::ifstream open_input(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + p.string());
    return in;
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + p.string());
}

template <class F>
void write_with(const fs::path& p, F&& f) {
    std::ostringstream s;
    f(s);
    write_file(p, s.str());
}

std::vector<Topic> parse_topics(const std::string& spec) {
    std::vector<Topic> out;
    if (spec == "all") {
        for (const auto& t : topic_table)
            if (t.topic != Topic::other) out.push_back(t.topic);
        return out;
    }
    for (const auto& k : split(spec, ',')) {
        auto t = topic_from_key(k);
        if (!t || *t == Topic::other) throw ConfigError("unknown topic '" + k + "'");
        out.push_back(*t);
    }
    return out;
}

Topic parse_topic(const std::string& key) {
    auto t = parse_topics(key);
    if (t.size() != 1) throw ConfigError("expected a single topic, got '" + key + "'");
    return t[0];
}

std::vector<PostRecord> load_posts(const fs::path& p) {
    auto in = open_input(p);
    return read_posts(in);
}

std::vector<Interaction> load_interactions(const fs::path& p) {
    auto in = open_input(p);
    return read_interactions(in);
}

std::unique_ptr<AnnotationProvider> make_provider(std::string spec) {
    if (const char* url = std::getenv(env_provider_url); url && *url && spec != "mock") spec = url;
    if (spec == "mock") return std::make_unique<MockProvider>();
    const char* tok = std::getenv(env_provider_token);
    return std::make_unique<HttpProvider>(spec, tok ? tok : "");
}

struct ProviderArgs {
    std::string provider = "mock";
    int max_in_flight = 4;
    int max_attempts = 3;
    std::string timestamp = "1970-01-01T00:00:00Z";

    void attach(CLI::App* c) {
        c->add_option("--provider", provider, "mock or an http:// endpoint");
        c->add_option("--max-in-flight", max_in_flight)->check(CLI::PositiveNumber);
        c->add_option("--max-attempts", max_attempts)->check(CLI::PositiveNumber);
        c->add_option("--timestamp", timestamp, "RFC-3339 time stamped on label records");
    }
    AnnotateOptions options() const {
        AnnotateOptions o;
        o.retry.max_attempts = max_attempts;
        o.max_in_flight = static_cast<std::size_t>(max_in_flight);
        o.timestamp = timestamp;
        return o;
    }
};

StanceGrouping load_content(const fs::path& stances, Topic t, const TopicNetwork& g) {
    auto in = open_input(stances);
    return content_groups(StanceStore::read(in).for_topic(t), g);
}

Partition load_partition(const fs::path& p, const TopicNetwork& g) {
    auto in = open_input(p);
    return read_partition_tsv(in, g);
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << '\n'; }

// Cross-topic inputs: <graphs>/<key>/<window>/ for each topic, optional stance file and
// partitions under <partitions>/<key>/structural.tsv.
struct CrossArgs {
    fs::path graphs, stances, partitions, out = ".";
    std::string topics = "all", window = "all", grouping = "content", norm = "arithmetic";
    double threshold = 0.2;
    bool inclusive = false, exclude_neutral = false;

    void attach(CLI::App* c) {
        c->add_option("--graphs", graphs, "graph root written by `graph build`")->required();
        c->add_option("--topics", topics);
        c->add_option("--window", window, "window label directory");
        c->add_option("--grouping", grouping)->check(CLI::IsMember({"content", "structural"}));
        c->add_option("--stances", stances, "stance label file");
        c->add_option("--partitions", partitions, "root holding <topic>/structural.tsv");
        c->add_option("--threshold", threshold);
        c->add_flag("--inclusive", inclusive, "keep pairs with J >= threshold");
        c->add_option("--nmi-norm", norm)->check(CLI::IsMember({"arithmetic", "min", "max"}));
        c->add_flag("--exclude-neutral", exclude_neutral);
        c->add_option("--out", out);
    }

    struct Loaded {
        std::vector<Topic> topics;
        std::vector<std::string> keys;
        std::vector<TopicNetwork> graphs;
    };

    Loaded load() const {
        Loaded l;
        l.topics = parse_topics(topics);
        for (Topic t : l.topics) {
            auto dir = graphs / info(t).key / window;
            if (!fs::exists(dir / "nodes.tsv")) continue;
            l.keys.emplace_back(info(t).key);
            l.graphs.push_back(read_topic_network(dir));
        }
        if (l.keys.size() < 2) throw ConfigError("need at least two topic networks under " + graphs.string());
        l.topics.erase(std::remove_if(l.topics.begin(), l.topics.end(),
                                      [&](Topic t) {
                                          return std::find(l.keys.begin(), l.keys.end(), info(t).key) == l.keys.end();
                                      }),
                       l.topics.end());
        return l;
    }

    std::vector<UserGrouping> groupings(const Loaded& l) const {
        std::vector<UserGrouping> out;
        std::optional<StanceStore> store;
        if (grouping == "content") {
            if (stances.empty()) throw ConfigError("--grouping content needs --stances");
            auto in = open_input(stances);
            store = StanceStore::read(in);
        } else if (partitions.empty()) {
            throw ConfigError("--grouping structural needs --partitions");
        }
        for (std::size_t i = 0; i < l.graphs.size(); ++i) {
            const auto& g = l.graphs[i];
            if (store) {
                out.push_back(user_grouping(g, content_groups(store->for_topic(l.topics[i]), g), exclude_neutral));
            } else {
                auto p = partitions / l.keys[i] / "structural.tsv";
                out.push_back(fs::exists(p) ? user_grouping(g, load_partition(p, g)) : UserGrouping{});
            }
        }
        return out;
    }

    NmiNorm nmi_norm() const { return norm == "min" ? NmiNorm::min : norm == "max" ? NmiNorm::max : NmiNorm::arithmetic; }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polarnet: topic-conditioned polarization measurement on interaction event streams"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));
    std::function<void()> action;

    // ---------------------------------------------------------------- ingest
    auto* ingest = app.add_subcommand("ingest", "parse event dumps, activity statistics, corpus filtering");
    ingest->require_subcommand(1);

    std::vector<std::string> ingest_inputs;
    fs::path ingest_out;
    std::string coverage = "observed";
    auto* istats = ingest->add_subcommand("stats", "activity table and post/interaction extraction");
    istats->add_option("--input", ingest_inputs, "event dump glob(s)")->required();
    istats->add_option("--out", ingest_out)->required();
    istats->add_option("--coverage", coverage)->check(CLI::IsMember({"observed", "bluesky"}));
    istats->callback([&] {
        action = [&] {
            ActivityAccumulator acc;
            CorpusBuilder builder;
            StreamTally tally;
            for (const auto& f : expand_globs(".", ingest_inputs)) {
                auto in = open_input(f);
                for_each_event(in, [&](RawEvent ev) {
                    acc.add(ev);
                    builder.add(ev);
                }, tally);
            }
            auto stats = acc.finalize(coverage == "bluesky" ? bluesky_collection_coverage() : Coverage{});
            auto corpus = builder.finish();
            write_file(ingest_out / "activity.json", to_json(stats).dump(2) + "\n");
            write_with(ingest_out / "daily.csv", [&](std::ostream& o) { write_daily_csv(o, stats); });
            write_with(ingest_out / "posts.jsonl", [&](std::ostream& o) { write_jsonl(o, corpus.posts); });
            write_with(ingest_out / "interactions.jsonl", [&](std::ostream& o) { write_jsonl(o, corpus.interactions); });
            write_with(ingest_out / "parse_errors.jsonl", [&](std::ostream& o) {
                for (const auto& e : tally.errors)
                    o << nlohmann::ordered_json{{"line", e.offset}, {"error", e.message}}.dump() << '\n';
            });
            write_markdown(std::cout, activity_table(stats));
            std::cerr << tally.parsed << " events parsed, " << tally.errors.size() << " malformed lines\n";
        };
    });

    fs::path filter_in, filter_out;
    CorpusFilter filter;
    auto* ifilter = ingest->add_subcommand("filter", "keep posts by reposts, length and language");
    ifilter->add_option("--input", filter_in, "posts.jsonl")->required();
    ifilter->add_option("--out", filter_out)->required();
    ifilter->add_option("--min-reposts", filter.min_reposts);
    ifilter->add_option("--min-chars", filter.min_chars);
    ifilter->add_option("--lang", filter.lang);
    ifilter->callback([&] {
        action = [&] {
            auto posts = load_posts(filter_in);
            auto kept = filter_corpus(posts, filter);
            write_with(filter_out, [&](std::ostream& o) { write_jsonl(o, kept); });
            std::cerr << kept.size() << " of " << posts.size() << " posts kept\n";
        };
    });

    fs::path sample_in, sample_out;
    double fraction = 0.03;
    std::uint64_t sample_seed = 0;
    std::string sample_mode = "uniform";
    auto* isample = ingest->add_subcommand("sample", "seeded selection sample of a post corpus");
    isample->add_option("--input", sample_in)->required();
    isample->add_option("--out", sample_out)->required();
    isample->add_option("--fraction", fraction)->check(CLI::Range(0.0, 1.0));
    isample->add_option("--seed", sample_seed)->required();
    isample->add_option("--mode", sample_mode)->check(CLI::IsMember({"uniform", "by_day"}));
    isample->callback([&] {
        action = [&] {
            auto posts = load_posts(sample_in);
            auto s = sample_corpus(posts, fraction, sample_seed,
                                   sample_mode == "by_day" ? SampleMode::by_day : SampleMode::uniform);
            write_with(sample_out, [&](std::ostream& o) { write_jsonl(o, s); });
            std::cerr << s.size() << " of " << posts.size() << " posts sampled\n";
        };
    });

    // -------------------------------------------------------------- annotate
    auto* annotate = app.add_subcommand("annotate", "theme, topic and stance labels via a provider");
    annotate->require_subcommand(1);
    ProviderArgs pargs;
    fs::path ann_in, ann_out, ann_themes, ann_labels, ann_interactions;
    std::string ann_topics = "all";
    std::uint64_t ann_seed = 0;
    std::size_t posts_per_user = 10;

    auto* athemes = annotate->add_subcommand("themes", "label posts with a political theme");
    athemes->add_option("--input", ann_in, "posts.jsonl")->required();
    athemes->add_option("--out", ann_out)->required();
    pargs.attach(athemes);
    athemes->callback([&] {
        action = [&] {
            auto provider = make_provider(pargs.provider);
            auto store = annotate_themes(load_posts(ann_in), *provider, pargs.options());
            write_with(ann_out / "themes.jsonl", [&](std::ostream& o) { store.write(o); });
            write_with(ann_out / "theme_failures.jsonl", [&](std::ostream& o) { store.write_failures(o); });
            write_markdown(std::cout, theme_table_cells(theme_distribution(store)));
        };
    });

    auto* atopics = annotate->add_subcommand("topics", "assign political posts to topics");
    atopics->add_option("--input", ann_in, "posts.jsonl")->required();
    atopics->add_option("--themes", ann_themes, "themes.jsonl")->required();
    atopics->add_option("--topics", ann_topics);
    atopics->add_option("--out", ann_out)->required();
    pargs.attach(atopics);
    atopics->callback([&] {
        action = [&] {
            auto provider = make_provider(pargs.provider);
            auto tin = open_input(ann_themes);
            auto themes = ThemeStore::read(tin);
            auto store = annotate_topics(load_posts(ann_in), themes, parse_topics(ann_topics), *provider, pargs.options());
            write_with(ann_out / "topics.jsonl", [&](std::ostream& o) { store.write(o); });
            write_with(ann_out / "topic_failures.jsonl", [&](std::ostream& o) { store.write_failures(o); });
        };
    });

    auto* astances = annotate->add_subcommand("stances", "label each topic participant with a stance");
    astances->add_option("--input", ann_in, "posts.jsonl")->required();
    astances->add_option("--interactions", ann_interactions, "interactions.jsonl")->required();
    astances->add_option("--labels", ann_labels, "topics.jsonl")->required();
    astances->add_option("--topics", ann_topics);
    astances->add_option("--seed", ann_seed, "post sampling seed")->required();
    astances->add_option("--posts-per-user", posts_per_user);
    astances->add_option("--out", ann_out)->required();
    pargs.attach(astances);
    astances->callback([&] {
        action = [&] {
            auto provider = make_provider(pargs.provider);
            auto posts = load_posts(ann_in);
            auto interactions = load_interactions(ann_interactions);
            auto lin = open_input(ann_labels);
            auto topics = TopicStore::read(lin);
            StanceStore store;
            std::map<Topic, StanceNames> names;
            for (Topic t : parse_topics(ann_topics)) {
                names[t] = StanceNames::defaults(t);
                annotate_stances(store, topic_participants(posts, interactions, topics, t), t, names[t], *provider,
                                 {posts_per_user, ann_seed}, pargs.options());
            }
            write_with(ann_out / "stances.jsonl", [&](std::ostream& o) { store.write(o, names); });
            write_with(ann_out / "stance_failures.jsonl", [&](std::ostream& o) { store.write_failures(o); });
        };
    });

    // ----------------------------------------------------------------- graph
    auto* graph = app.add_subcommand("graph", "topic repost networks");
    graph->require_subcommand(1);
    fs::path g_posts, g_inter, g_labels, g_out, g_dir;
    std::string g_topics = "all", tau = "reposts", window_spec = "all";
    auto* gbuild = graph->add_subcommand("build", "build per-topic multilayer networks");
    gbuild->add_option("--posts", g_posts)->required();
    gbuild->add_option("--interactions", g_inter)->required();
    gbuild->add_option("--labels", g_labels, "topics.jsonl")->required();
    gbuild->add_option("--topics", g_topics);
    gbuild->add_option("--tau", tau)->check(CLI::IsMember({"reposts"}));
    gbuild->add_option("--window", window_spec, "all or YYYY-MM:YYYY-MM (inclusive months)");
    bool g_isolated = false;
    gbuild->add_flag("--include-isolated", g_isolated, "keep topic participants with no repost edge");
    gbuild->add_option("--out", g_out)->required();
    gbuild->callback([&] {
        action = [&] {
            TimeWindow window;
            try {
                window = TimeWindow::parse(window_spec);
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
            auto lin = open_input(g_labels);
            auto rows = write_topic_graphs(g_out, load_posts(g_posts), load_interactions(g_inter), TopicStore::read(lin),
                                           parse_topics(g_topics), window, g_isolated);
            write_file(g_out / "stats.json", rows.dump(2) + "\n");
            print_json(rows);
        };
    });

    std::string gs_window = "all";
    auto* gstats = graph->add_subcommand("stats", "Node, edge and average-degree summary per topic");
    gstats->add_option("--dir", g_dir, "graph root written by `graph build`")->required();
    gstats->add_option("--window", gs_window);
    gstats->callback([&] {
        action = [&] {
            std::vector<NetworkRow> rows;
            for (const auto& t : topic_table) {
                auto dir = g_dir / t.key / gs_window;
                if (!fs::exists(dir / "reposts.graph")) continue;
                auto g = read_topic_network(dir);
                NetworkRow r;
                r.topic = t.topic;
                r.stats = network_stats(g);
                r.follow_edges = read_topic_network(dir, "follows").edge_count();
                r.block_edges = read_topic_network(dir, "blocks").edge_count();
                rows.push_back(r);
            }
            write_markdown(std::cout, network_table(rows));
        };
    });

    // ---------------------------------------------------------------- groups
    auto* groups = app.add_subcommand("groups", "structural and content groupings");
    groups->require_subcommand(1);
    fs::path gr_graph, gr_out, gr_stances, gr_partition;
    std::string gr_topic;
    DetectOptions detect;
    auto* gstruct = groups->add_subcommand("structural", "minimum description length group detection");
    gstruct->add_option("--graph", gr_graph, "topic network directory")->required();
    gstruct->add_option("--max-groups", detect.max_groups)->check(CLI::PositiveNumber);
    gstruct->add_option("--runs", detect.runs)->check(CLI::PositiveNumber);
    gstruct->add_option("--iters", detect.iters);
    gstruct->add_option("--seed", detect.seed)->required();
    gstruct->add_option("--threads", detect.threads);
    bool gr_simple = false;
    gstruct->add_flag("--simple", gr_simple, "collapse parallel edges before detection");
    gstruct->add_option("--out", gr_out)->required();
    gstruct->callback([&] {
        action = [&] {
            auto g = read_topic_network(gr_graph);
            if (gr_simple) g = g.simplified();
            auto res = detect_structural_groups(g, detect);
            write_with(gr_out / "structural.tsv", [&](std::ostream& o) { write_partition_tsv(o, g, res.best); });
            write_file(gr_out / "structural.json", to_json(res, detect).dump(2) + "\n");
            std::cout << "blocks " << res.best.blocks << ", description length " << fmt_fixed(res.best.dl, 4) << '\n';
        };
    });

    auto* gcontent = groups->add_subcommand("content", "stance groups on a topic network");
    gcontent->add_option("--graph", gr_graph)->required();
    gcontent->add_option("--topic", gr_topic)->required();
    gcontent->add_option("--stances", gr_stances)->required();
    gcontent->callback([&] {
        action = [&] {
            Topic t = parse_topic(gr_topic);
            auto g = read_topic_network(gr_graph);
            auto sg = load_content(gr_stances, t, g);
            auto names = StanceNames::defaults(t);
            auto c = sg.counts();
            print_json({{"nodes", g.node_count()},
                        {"labeled", sg.labeled},
                        {"coverage", sg.coverage()},
                        {names.display(Stance::for_), c[0]},
                        {"neutral", c[1]},
                        {names.display(Stance::against), c[2]}});
        };
    });

    auto* gcomp = groups->add_subcommand("composition", "stance composition of structural groups");
    gcomp->add_option("--graph", gr_graph)->required();
    gcomp->add_option("--topic", gr_topic)->required();
    gcomp->add_option("--stances", gr_stances)->required();
    gcomp->add_option("--partition", gr_partition, "structural.tsv")->required();
    gcomp->callback([&] {
        action = [&] {
            Topic t = parse_topic(gr_topic);
            auto g = read_topic_network(gr_graph);
            auto comp = group_composition(load_partition(gr_partition, g), load_content(gr_stances, t, g));
            auto names = StanceNames::defaults(t);
            nlohmann::ordered_json j;
            j["dominant"] = comp.dominant ? nlohmann::ordered_json(names.display(*comp.dominant)) : nlohmann::ordered_json();
            j["max_ds"] = detail::opt_json(comp.max_ds);
            j["min_ds"] = detail::opt_json(comp.min_ds);
            auto& blocks = j["blocks"] = nlohmann::ordered_json::array();
            for (const auto& b : comp.blocks)
                blocks.push_back({{"size", b.size},
                                  {names.display(Stance::for_), b.stance_counts[0]},
                                  {"neutral", b.stance_counts[1]},
                                  {names.display(Stance::against), b.stance_counts[2]},
                                  {"unlabeled", b.unlabeled},
                                  {"dominant_fraction", detail::opt_json(b.dominant_fraction)}});
            print_json(j);
        };
    });

    // --------------------------------------------------------------- metrics
    auto* metrics = app.add_subcommand("metrics", "polarization metrics");
    metrics->require_subcommand(1);
    fs::path m_graph, m_stances, m_partition, m_out;
    std::string m_topic, m_grouping = "stance", m_simpson = "opposing";
    bool m_neutral = false;
    auto* mreport = metrics->add_subcommand("report", "Polarization row for stance groups or structural groups");
    mreport->add_option("--graph", m_graph)->required();
    mreport->add_option("--topic", m_topic)->required();
    mreport->add_option("--grouping", m_grouping)->check(CLI::IsMember({"stance", "structural"}));
    mreport->add_option("--stances", m_stances)->required();
    mreport->add_option("--partition", m_partition, "structural.tsv (structural grouping)");
    mreport->add_option("--simpson", m_simpson)->check(CLI::IsMember({"opposing", "three_group"}));
    mreport->add_flag("--include-neutral", m_neutral, "score neutral users as a third group");
    mreport->add_option("--out", m_out)->required();
    mreport->callback([&] {
        action = [&] {
            Topic t = parse_topic(m_topic);
            auto key = std::string(info(t).key);
            auto g = read_topic_network(m_graph);
            auto sg = load_content(m_stances, t, g);
            if (m_grouping == "stance") {
                MetricFlags flags{m_simpson == "three_group" ? SimpsonVariant::three_group
                                                             : SimpsonVariant::opposing_renormalized,
                                  m_neutral};
                auto r = stance_report(key, g, sg, StanceNames::defaults(t), flags);
                write_file(m_out / "stance_report.json", to_json(r).dump(2) + "\n");
                write_with(m_out / "stance_report.csv", [&](std::ostream& o) { write_csv(o, polarization_table({r}, true)); });
                write_markdown(std::cout, polarization_table({r}));
            } else {
                if (m_partition.empty()) throw ConfigError("--grouping structural needs --partition");
                auto sr = structural_report(key, g, load_partition(m_partition, g), sg);
                auto row = structural_row(sr);
                write_file(m_out / "structural_report.json", to_json(row).dump(2) + "\n");
                write_with(m_out / "structural_report.csv",
                           [&](std::ostream& o) { write_csv(o, structural_table({row}, true)); });
                write_with(m_out / "pairwise_aei.csv", [&](std::ostream& o) { write_csv(o, pairwise_table(sr.pairwise, true)); });
                write_markdown(std::cout, structural_table({row}));
            }
        };
    });

    // ------------------------------------------------------------ crosstopic
    auto* cross = app.add_subcommand("crosstopic", "overlap, hypergraph, alignment and joint stance tables");
    cross->require_subcommand(1);
    CrossArgs cargs;
    auto* coverlap = cross->add_subcommand("overlap", "Jaccard user overlap matrix");
    auto* chyper = cross->add_subcommand("hypergraph", "maximal cliques of the thresholded overlap graph");
    auto* calign = cross->add_subcommand("alignment", "NMI issue alignment matrix");
    auto* cjoint = cross->add_subcommand("joint", "joint stance probability tables");
    for (auto* c : {coverlap, chyper, calign, cjoint}) cargs.attach(c);
    coverlap->callback([&] {
        action = [&] {
            auto l = cargs.load();
            std::vector<std::set<std::string>> sets;
            for (const auto& g : l.graphs) sets.emplace_back(g.nodes().begin(), g.nodes().end());
            auto m = jaccard_matrix(l.keys, sets);
            write_with(cargs.out / "overlap.csv", [&](std::ostream& o) { write_csv(o, matrix_table(m, true)); });
            write_markdown(std::cout, matrix_table(m));
        };
    });
    chyper->callback([&] {
        action = [&] {
            auto l = cargs.load();
            std::vector<std::set<std::string>> sets;
            for (const auto& g : l.graphs) sets.emplace_back(g.nodes().begin(), g.nodes().end());
            if (!(cargs.threshold > 0 && cargs.threshold < 1)) throw ConfigError("--threshold must lie in (0,1)");
            auto h = topic_hypergraph(jaccard_matrix(l.keys, sets), cargs.threshold, cargs.inclusive);
            write_file(cargs.out / "hypergraph.json", to_json(h).dump(2) + "\n");
            print_json(to_json(h));
        };
    });
    calign->callback([&] {
        action = [&] {
            auto l = cargs.load();
            auto m = alignment_matrix(l.keys, cargs.groupings(l), cargs.nmi_norm());
            write_with(cargs.out / ("alignment_" + cargs.grouping + ".csv"),
                       [&](std::ostream& o) { write_csv(o, matrix_table(m, true)); });
            write_markdown(std::cout, matrix_table(m));
        };
    });
    cjoint->callback([&] {
        action = [&] {
            auto l = cargs.load();
            if (cargs.stances.empty()) throw ConfigError("joint tables need --stances");
            auto in = open_input(cargs.stances);
            auto store = StanceStore::read(in);
            std::vector<std::map<std::string, Stance>> restricted;
            for (std::size_t i = 0; i < l.graphs.size(); ++i) {
                auto sg = content_groups(store.for_topic(l.topics[i]), l.graphs[i]);
                std::map<std::string, Stance> r;
                for (std::uint32_t v = 0; v < l.graphs[i].node_count(); ++v)
                    if (sg.stance[v]) r.emplace(l.graphs[i].name(v), *sg.stance[v]);
                restricted.push_back(std::move(r));
            }
            for (std::size_t i = 0; i < l.keys.size(); ++i)
                for (std::size_t j = i + 1; j < l.keys.size(); ++j) {
                    auto jt = joint_stance_table(l.keys[i], restricted[i], l.keys[j], restricted[j]);
                    if (!jt) continue;
                    auto nx = StanceNames::defaults(l.topics[i]), ny = StanceNames::defaults(l.topics[j]);
                    write_with(cargs.out / "joint" / (l.keys[i] + "__" + l.keys[j] + ".csv"),
                               [&](std::ostream& o) { write_csv(o, joint_table(*jt, nx, ny, true)); });
                    std::cout << "### " << l.keys[i] << " x " << l.keys[j] << " (" << jt->users << " users)\n\n";
                    write_markdown(std::cout, joint_table(*jt, nx, ny));
                    std::cout << '\n';
                }
        };
    });

    // ------------------------------------------------------------ run/report
    fs::path config_path, report_out;
    std::string stages = "all";
    auto* run = app.add_subcommand("run", "run the cached pipeline from a config file");
    run->add_option("--config", config_path)->required();
    run->add_option("--stages", stages, "comma-separated subset, in any order");
    run->callback([&] {
        action = [&] {
            auto cfg = load_config(config_path);
            Pipeline p(cfg);
            auto list = parse_stage_list(stages);
            for (const auto& o : p.run(list))
                std::cout << o.stage << '\t' << (o.cached ? "cached" : "ran") << '\t' << p.stage_dir(o.stage).string()
                          << '\n';
        };
    });

    auto* report = app.add_subcommand("report", "copy the verified report bundle of a completed run");
    report->add_option("--config", config_path)->required();
    report->add_option("--out", report_out)->required();
    report->callback([&] {
        action = [&] {
            Pipeline p(load_config(config_path));
            for (const auto& f : export_report(p, report_out)) std::cout << f.string() << '\n';
        };
    });

    fs::path synth_out;
    SyntheticOptions synth;
    auto* syn = app.add_subcommand("synth", "write the synthetic event fixture");
    syn->add_option("--out", synth_out)->required();
    syn->add_option("--events", synth.events);
    syn->add_option("--users", synth.users);
    syn->add_option("--seed", synth.seed);
    syn->add_option("--within-camp", synth.within_camp)->check(CLI::Range(0.0, 1.0));
    syn->callback([&] {
        action = [&] {
            auto fx = generate_fixture(synth);
            write_with(synth_out, [&](std::ostream& o) {
                for (const auto& ev : fx.events) o << serialize_event(ev) << '\n';
            });
            std::cerr << fx.events.size() << " events written to " << synth_out.string() << '\n';
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (action) action();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "stage failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
