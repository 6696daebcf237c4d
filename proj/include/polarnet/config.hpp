#pragma once

// Pipeline configuration. The file is JSON; every key is optional except `inputs` and
// `seed`. Relative paths resolve against the directory holding the config file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <glob.h>

#include <json.hpp>

#include "polarnet/activity.hpp"
#include "polarnet/blockmodel.hpp"
#include "polarnet/core.hpp"
#include "polarnet/corpus.hpp"
#include "polarnet/crosstopic.hpp"
#include "polarnet/graph.hpp"
#include "polarnet/hash.hpp"
#include "polarnet/labels.hpp"
#include "polarnet/metrics.hpp"

namespace polarnet {

inline constexpr std::string_view tool_version = "polarnet 0.1.0";
inline constexpr const char* env_provider_url = "POLARNET_PROVIDER_URL";
inline constexpr const char* env_provider_token = "POLARNET_PROVIDER_TOKEN";

struct TopicConfig {
    Topic topic;
    StanceNames names;
};

struct PipelineConfig {
    std::filesystem::path base_dir = ".";
    std::vector<std::string> inputs;  // glob patterns
    std::filesystem::path workdir = "work";
    std::uint64_t seed = 0;
    std::string timestamp = "1970-01-01T00:00:00Z";  // stamped on every label record

    std::string coverage = "observed";  // "observed" (span of the data) or "bluesky"
    CorpusFilter filter;
    double sample_fraction = 1.0;
    SampleMode sample_mode = SampleMode::uniform;

    std::string provider = "mock";  // "mock" or an http:// endpoint
    std::string provider_token;     // never hashed or written out
    int max_in_flight = 4;
    int max_attempts = 3;
    std::size_t posts_per_user = 10;
    std::vector<TopicConfig> topics;

    TimeWindow window = TimeWindow::parse("all");
    std::string window_spec = "all";
    std::string tau = "reposts";
    bool include_isolated = false;  // keep topic participants with no repost edge

    DetectOptions detect;
    bool simple_graph = false;  // collapse parallel edges before group detection
    MetricFlags metric_flags;
    double overlap_threshold = 0.2;
    bool threshold_inclusive = false;
    NmiNorm nmi_norm = NmiNorm::arithmetic;
    bool nmi_exclude_neutral = false;

    std::vector<Topic> topic_list() const {
        std::vector<Topic> out;
        for (const auto& t : topics) out.push_back(t.topic);
        return out;
    }
    const StanceNames& names(Topic t) const {
        for (const auto& c : topics)
            if (c.topic == t) return c.names;
        throw ArgumentError("topic not configured: " + std::string(info(t).key));
    }

    /// Canonical form of every setting that influences outputs.
    nlohmann::ordered_json canonical() const {
        nlohmann::ordered_json j;
        j["inputs"] = inputs;
        j["seed"] = seed;
        j["timestamp"] = timestamp;
        j["coverage"] = coverage;
        j["corpus"] = {{"min_reposts", filter.min_reposts}, {"min_chars", filter.min_chars}, {"lang", filter.lang}};
        j["sample"] = {{"fraction", sample_fraction}, {"mode", sample_mode == SampleMode::by_day ? "by_day" : "uniform"}};
        j["provider"] = {{"endpoint", provider}, {"max_attempts", max_attempts}, {"posts_per_user", posts_per_user}};
        auto& t = j["topics"] = nlohmann::ordered_json::array();
        for (const auto& c : topics)
            t.push_back({{"key", info(c.topic).key}, {"for", c.names.for_name}, {"against", c.names.against_name}});
        j["window"] = window_spec;
        j["tau"] = tau;
        j["include_isolated"] = include_isolated;
        j["groups"] = {{"max_groups", detect.max_groups},
                       {"runs", detect.runs},
                       {"iters", detect.iters},
                       {"simple_graph", simple_graph}};
        j["metrics"] = {{"simpson", metric_flags.simpson == SimpsonVariant::three_group ? "three_group" : "opposing"},
                        {"include_neutral", metric_flags.include_neutral}};
        j["crosstopic"] = {{"threshold", overlap_threshold},
                           {"inclusive", threshold_inclusive},
                           {"nmi_norm", nmi_norm == NmiNorm::min ? "min" : nmi_norm == NmiNorm::max ? "max" : "arithmetic"},
                           {"exclude_neutral", nmi_exclude_neutral}};
        return j;
    }

    std::string hash() const { return sha256_hex(canonical().dump()); }
    std::filesystem::path run_dir() const { return workdir / hash().substr(0, 16); }

    std::vector<std::filesystem::path> input_files() const;
};

/// Expands glob patterns (relative to `base`) in sorted order; a pattern matching nothing
/// is a config error.
inline std::vector<std::filesystem::path> expand_globs(const std::filesystem::path& base,
                                                       const std::vector<std::string>& patterns) {
    std::vector<std::filesystem::path> out;
    for (const auto& pattern : patterns) {
        auto full = (base / pattern).string();
        glob_t g{};
        int rc = ::glob(full.c_str(), 0, nullptr, &g);
        if (rc != 0) {
            globfree(&g);
            throw ConfigError("input pattern matches no files: " + pattern);
        }
        std::vector<std::filesystem::path> matched;
        for (std::size_t i = 0; i < g.gl_pathc; ++i) matched.emplace_back(g.gl_pathv[i]);
        globfree(&g);
        std::sort(matched.begin(), matched.end());
        out.insert(out.end(), matched.begin(), matched.end());
    }
    return out;
}

inline std::vector<std::filesystem::path> PipelineConfig::input_files() const { return expand_globs(base_dir, inputs); }

namespace detail {

template <class T>
T config_value(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

inline const nlohmann::json& config_section(const nlohmann::json& j, const char* key) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
    return j.at(key);
}

} // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
    using detail::config_section;
    using detail::config_value;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c;
    c.base_dir = base_dir;
    if (!j.contains("inputs")) throw ConfigError("config: 'inputs' is required");
    if (j["inputs"].is_string())
        c.inputs = {j["inputs"].get<std::string>()};
    else
        c.inputs = config_value<std::vector<std::string>>(j, "inputs", {});
    if (c.inputs.empty()) throw ConfigError("config: 'inputs' is empty");
    if (!j.contains("seed")) throw ConfigError("config: 'seed' is required");
    c.seed = config_value<std::uint64_t>(j, "seed", 0);
    c.workdir = base_dir / config_value<std::string>(j, "workdir", "work");
    c.timestamp = config_value<std::string>(j, "timestamp", c.timestamp);
    if (!parse_rfc3339(c.timestamp)) throw ConfigError("config: 'timestamp' is not RFC-3339");
    c.coverage = config_value<std::string>(j, "coverage", c.coverage);
    if (c.coverage != "observed" && c.coverage != "bluesky") throw ConfigError("config: 'coverage' must be observed or bluesky");

    const auto& corpus = config_section(j, "corpus");
    c.filter.min_reposts = config_value<std::uint64_t>(corpus, "min_reposts", c.filter.min_reposts);
    c.filter.min_chars = config_value<std::size_t>(corpus, "min_chars", c.filter.min_chars);
    c.filter.lang = config_value<std::string>(corpus, "lang", c.filter.lang);

    const auto& sample = config_section(j, "sample");
    c.sample_fraction = config_value<double>(sample, "fraction", c.sample_fraction);
    if (!(c.sample_fraction > 0 && c.sample_fraction <= 1)) throw ConfigError("config: sample.fraction must lie in (0,1]");
    auto mode = config_value<std::string>(sample, "mode", "uniform");
    if (mode == "by_day")
        c.sample_mode = SampleMode::by_day;
    else if (mode != "uniform")
        throw ConfigError("config: sample.mode must be uniform or by_day");

    const auto& prov = config_section(j, "provider");
    c.provider = config_value<std::string>(prov, "endpoint", c.provider);
    c.max_in_flight = config_value<int>(prov, "max_in_flight", c.max_in_flight);
    c.max_attempts = config_value<int>(prov, "max_attempts", c.max_attempts);
    c.posts_per_user = config_value<std::size_t>(prov, "posts_per_user", c.posts_per_user);
    if (const char* url = std::getenv(env_provider_url); url && *url) c.provider = url;
    if (const char* tok = std::getenv(env_provider_token); tok) c.provider_token = tok;
    if (c.max_in_flight < 1 || c.max_attempts < 1) throw ConfigError("config: provider limits must be positive");

    if (!j.contains("topics") || j["topics"] == "all") {
        for (const auto& t : topic_table)
            if (t.topic != Topic::other) c.topics.push_back({t.topic, StanceNames::defaults(t.topic)});
    } else {
        if (!j["topics"].is_array()) throw ConfigError("config: 'topics' must be \"all\" or an array");
        for (const auto& item : j["topics"]) {
            std::string key = item.is_string() ? item.get<std::string>() : config_value<std::string>(item, "key", "");
            auto t = topic_from_key(key);
            if (!t || *t == Topic::other) throw ConfigError("config: unknown topic '" + key + "'");
            auto names = StanceNames::defaults(*t);
            if (item.is_object()) {
                names.for_name = config_value<std::string>(item, "for", names.for_name);
                names.against_name = config_value<std::string>(item, "against", names.against_name);
            }
            c.topics.push_back({*t, names});
        }
    }
    if (c.topics.empty()) throw ConfigError("config: no topics");

    c.window_spec = config_value<std::string>(j, "window", "all");
    try {
        c.window = TimeWindow::parse(c.window_spec);
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.tau = config_value<std::string>(j, "tau", c.tau);
    if (c.tau != "reposts") throw ConfigError("config: only tau = reposts builds topic networks");
    c.include_isolated = config_value<bool>(j, "include_isolated", false);

    const auto& groups = config_section(j, "groups");
    c.detect.max_groups = config_value<std::uint32_t>(groups, "max_groups", c.detect.max_groups);
    c.detect.runs = config_value<std::uint32_t>(groups, "runs", c.detect.runs);
    c.detect.iters = config_value<std::uint32_t>(groups, "iters", c.detect.iters);
    c.detect.threads = config_value<std::uint32_t>(groups, "threads", 0);
    c.simple_graph = config_value<bool>(groups, "simple_graph", false);
    if (c.detect.max_groups < 1 || c.detect.runs < 1) throw ConfigError("config: groups.max_groups and groups.runs must be positive");
    c.detect.seed = derive_seed(c.seed, "groups");

    const auto& metrics = config_section(j, "metrics");
    auto simpson = config_value<std::string>(metrics, "simpson", "opposing");
    if (simpson == "three_group")
        c.metric_flags.simpson = SimpsonVariant::three_group;
    else if (simpson != "opposing")
        throw ConfigError("config: metrics.simpson must be opposing or three_group");
    c.metric_flags.include_neutral = config_value<bool>(metrics, "include_neutral", false);

    const auto& cross = config_section(j, "crosstopic");
    c.overlap_threshold = config_value<double>(cross, "threshold", c.overlap_threshold);
    if (!(c.overlap_threshold > 0 && c.overlap_threshold < 1)) throw ConfigError("config: crosstopic.threshold must lie in (0,1)");
    c.threshold_inclusive = config_value<bool>(cross, "inclusive", false);
    auto norm = config_value<std::string>(cross, "nmi_norm", "arithmetic");
    if (norm == "min")
        c.nmi_norm = NmiNorm::min;
    else if (norm == "max")
        c.nmi_norm = NmiNorm::max;
    else if (norm != "arithmetic")
        throw ConfigError("config: crosstopic.nmi_norm must be arithmetic, min or max");
    c.nmi_exclude_neutral = config_value<bool>(cross, "exclude_neutral", false);
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false, true);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    auto base = path.parent_path();
    return parse_config(j, base.empty() ? std::filesystem::path(".") : base);
}

} // namespace polarnet
