#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "polarnet/core.hpp"
#include "polarnet/hash.hpp"
#include "polarnet/labels.hpp"

namespace polarnet {

/// The provider could not be reached or returned a non-success status.
class TransportError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Prompt templates. Versioned in their id; the hash of the text is recorded with
// every label produced from them.

struct PromptTemplate {
    std::string_view id;
    std::string_view text;

    std::string hash() const { return sha256_hex(text); }
};

inline constexpr PromptTemplate theme_template{"theme.v1", R"(You are annotating social media posts by political theme.
Categories:
{{categories}}
Assign the post below to the single most appropriate category. If the post does not fit any
political theme, answer "non_political". Reply with the category key only.

Post:
{{text}}
)"};

inline constexpr PromptTemplate topic_template{"topic.v1", R"(The post below was labeled as political.
Assign it to the single most appropriate political topic from this list:
{{labels}}
If it does not clearly fit any listed topic, answer "other". Reply with the topic key only.

Post:
{{text}}
)"};

inline constexpr PromptTemplate stance_template{"stance.v1", R"(Below are up to ten posts that one user authored or reposted about the topic "{{topic}}".
Based on this content, what is the user's position on the topic?
Answer with exactly one of: {{labels}}

Posts:
{{posts}}
)"};

inline std::string render_template(std::string_view text, const std::map<std::string, std::string>& vars) {
    std::string out(text);
    for (const auto& [k, v] : vars) {
        std::string needle = "{{" + k + "}}";
        for (std::size_t pos = out.find(needle); pos != std::string::npos; pos = out.find(needle, pos + v.size()))
            out.replace(pos, needle.size(), v);
    }
    return out;
}

struct AnnotationRequest {
    std::string template_id;
    std::string template_hash;
    nlohmann::json context;
    std::vector<std::string> label_set;

    bool allows(std::string_view label) const {
        return std::find(label_set.begin(), label_set.end(), label) != label_set.end();
    }
};

/// Returns one label for a request. Implementations must be safe to call concurrently.
class AnnotationProvider {
public:
    virtual ~AnnotationProvider() = default;
    virtual std::string annotate(const AnnotationRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic keyword provider

namespace detail {

inline bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '#' || c == '+';
}

/// Counts whole-word (phrase) occurrences of `needle` in already lower-cased `hay`.
inline std::size_t count_phrase(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (std::size_t pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
        bool left = pos == 0 || !is_word_char(hay[pos - 1]);
        std::size_t end = pos + needle.size();
        bool right = end == hay.size() || !is_word_char(hay[end]);
        if (left && right) ++n;
    }
    return n;
}

inline bool contains_any(std::string_view hay, const std::vector<std::string>& phrases) {
    return std::any_of(phrases.begin(), phrases.end(), [&](const auto& p) { return count_phrase(hay, p) > 0; });
}

} // namespace detail

/// Keyword tables driving the mock provider. All phrases are lower case.
struct MockRules {
    std::map<Theme, std::vector<std::string>> theme_keywords;
    std::map<Topic, std::vector<std::string>> topic_keywords;
    std::map<Topic, std::vector<std::string>> for_cues;
    std::map<Topic, std::vector<std::string>> against_cues;

    static MockRules defaults() {
        MockRules r;
        r.theme_keywords = {
            {Theme::civil_rights, {"rights", "equality", "discrimination", "dei", "diversity", "inclusion", "lgbtq", "lgbtq+", "trans", "pride", "civil liberties"}},
            {Theme::defense_international, {"war", "military", "ceasefire", "nato", "ukraine", "russia", "zelensky", "putin", "gaza", "israel", "palestine", "hamas", "invasion", "defense"}},
            {Theme::economy_trade_labor, {"tariff", "tariffs", "economy", "jobs", "wages", "trade", "labor", "inflation", "boycott", "canada"}},
            {Theme::government_operations, {"administration", "federal", "agency", "executive order", "congress", "government", "doge", "white house", "trump", "musk"}},
            {Theme::infrastructure_environment, {"wildfire", "wildfires", "climate", "transit", "infrastructure", "environment", "emissions"}},
            {Theme::law_crime_justice, {"court", "judge", "crime", "police", "lawsuit", "justice", "indictment"}},
            {Theme::science_technology_energy, {"ai", "science", "research", "technology", "tiktok", "energy", "chatgpt"}},
            {Theme::social_policy, {"health", "education", "welfare", "medicaid", "schools", "vaccine"}},
        };
        r.topic_keywords = {
            {Topic::trump_admin, {"trump", "maga", "white house"}},
            {Topic::elon_musk, {"musk", "elon", "doge", "tesla"}},
            {Topic::us_canada, {"canada", "trudeau", "carney", "51st state"}},
            {Topic::la_wildfires, {"wildfire", "wildfires", "los angeles", "palisades"}},
            {Topic::dei_programs, {"dei", "diversity", "inclusion"}},
            {Topic::tiktok_ban, {"tiktok"}},
            {Topic::israel_palestine, {"gaza", "israel", "palestine", "palestinian", "hamas"}},
            {Topic::russia_ukraine, {"ukraine", "russia", "zelensky", "putin", "kyiv"}},
            {Topic::lgbtq_rights, {"lgbtq", "lgbtq+", "trans", "pride"}},
            {Topic::ai, {"ai", "chatgpt", "artificial intelligence", "llm"}},
        };
        for (const auto& t : topic_table) {
            if (t.topic == Topic::other) continue;
            r.for_cues[t.topic] = {"#" + std::string(t.for_name)};
            r.against_cues[t.topic] = {"#" + std::string(t.against_name)};
        }
        r.for_cues[Topic::russia_ukraine].insert(r.for_cues[Topic::russia_ukraine].end(), {"slava ukraini", "stand with ukraine"});
        r.against_cues[Topic::russia_ukraine].push_back("stand with russia");
        r.for_cues[Topic::israel_palestine].push_back("free palestine");
        r.against_cues[Topic::israel_palestine].push_back("stand with israel");
        return r;
    }
};

/// Pure function of the request: themes and topics by keyword hit counts (ties go to
/// the earlier enum value), stances by majority of cue-bearing posts.
class MockProvider : public AnnotationProvider {
public:
    explicit MockProvider(MockRules rules = MockRules::defaults()) : rules_(std::move(rules)) {}

    std::string annotate(const AnnotationRequest& req) override {
        if (req.template_id == theme_template.id) return theme(req);
        if (req.template_id == topic_template.id) return topic(req);
        if (req.template_id == stance_template.id) return stance(req);
        throw ArgumentError("mock provider: unknown template " + req.template_id);
    }

private:
    std::string theme(const AnnotationRequest& req) const {
        std::string text = to_lower_ascii(req.context.value("text", ""));
        Theme best = Theme::non_political;
        std::size_t best_hits = 0;
        for (const auto& [theme, words] : rules_.theme_keywords) {
            std::size_t hits = 0;
            for (const auto& w : words) hits += detail::count_phrase(text, w);
            if (hits > best_hits) {
                best = theme;
                best_hits = hits;
            }
        }
        return std::string(info(best).key);
    }

    std::string topic(const AnnotationRequest& req) const {
        std::string text = to_lower_ascii(req.context.value("text", ""));
        Topic best = Topic::other;
        std::size_t best_hits = 0;
        for (const auto& [topic, words] : rules_.topic_keywords) {
            if (!req.allows(info(topic).key)) continue;
            std::size_t hits = 0;
            for (const auto& w : words) hits += detail::count_phrase(text, w);
            if (hits > best_hits) {
                best = topic;
                best_hits = hits;
            }
        }
        return std::string(info(best).key);
    }

    std::string stance(const AnnotationRequest& req) const {
        auto topic = topic_from_key(req.context.value("topic_key", ""));
        if (!topic) throw ArgumentError("mock provider: stance request without topic_key");
        StanceNames names{req.context.value("for_name", ""), req.context.value("against_name", "")};
        static const std::vector<std::string> none;
        auto cues = [&](const auto& table) -> const std::vector<std::string>& {
            auto it = table.find(*topic);
            return it == table.end() ? none : it->second;
        };
        std::size_t pro = 0, con = 0;
        for (const auto& post : req.context.value("posts", nlohmann::json::array())) {
            std::string text = to_lower_ascii(post.get<std::string>());
            bool p = detail::contains_any(text, cues(rules_.for_cues));
            bool c = detail::contains_any(text, cues(rules_.against_cues));
            if (p && !c) ++pro;
            if (c && !p) ++con;
        }
        if (pro > con) return names.display(Stance::for_);
        if (con > pro) return names.display(Stance::against);
        return "neutral";
    }

    MockRules rules_;
};

// ---------------------------------------------------------------------------
// HTTP provider
//
// POST <endpoint> with {"template_id", "context", "label_set"}; expects {"label": "..."}.

class HttpProvider : public AnnotationProvider {
public:
    HttpProvider(std::string endpoint, std::string token = {}, int timeout_seconds = 60)
        : token_(std::move(token)), timeout_(timeout_seconds) {
        auto scheme_end = endpoint.find("://");
        if (scheme_end == std::string::npos) throw ConfigError("provider endpoint must be an http:// URL: " + endpoint);
        auto path_start = endpoint.find('/', scheme_end + 3);
        base_ = endpoint.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
    }

    std::string annotate(const AnnotationRequest& req) override {
        httplib::Client client(base_);
        client.set_connection_timeout(timeout_, 0);
        client.set_read_timeout(timeout_, 0);
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        nlohmann::json body{{"template_id", req.template_id}, {"context", req.context}, {"label_set", req.label_set}};
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res) throw TransportError("provider unreachable at " + base_ + path_ + ": " + httplib::to_string(res.error()));
        if (res->status != 200) throw TransportError("provider returned HTTP " + std::to_string(res->status));
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("label") || !j["label"].is_string())
            return {};  // treated as an invalid label and retried
        return j["label"].get<std::string>();
    }

private:
    std::string base_;
    std::string path_;
    std::string token_;
    int timeout_;
};

// ---------------------------------------------------------------------------
// Closed-set labelling with bounded retries

struct RetryPolicy {
    int max_attempts = 3;
};

/// Asks the provider until it answers inside the label set. Returns nullopt after
/// `max_attempts` invalid answers. Transport errors propagate.
inline std::optional<std::string> request_label(AnnotationProvider& provider, const AnnotationRequest& req,
                                                RetryPolicy policy = {}) {
    for (int attempt = 0; attempt < std::max(1, policy.max_attempts); ++attempt) {
        std::string label = provider.annotate(req);
        if (req.allows(label)) return label;
    }
    return std::nullopt;
}

} // namespace polarnet
