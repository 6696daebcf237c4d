#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "polarnet/core.hpp"
#include "polarnet/event.hpp"

namespace polarnet {

struct PostRecord {
    std::string uri;
    std::string author;
    std::string text;
    std::vector<std::string> langs;
    Instant created_at{};
    std::uint64_t repost_count = 0;

    bool operator==(const PostRecord&) const = default;
};

enum class InteractionType { repost, like, follow, block };

inline std::string_view interaction_name(InteractionType t) {
    switch (t) {
    case InteractionType::repost: return "repost";
    case InteractionType::like: return "like";
    case InteractionType::follow: return "follow";
    case InteractionType::block: return "block";
    }
    return "repost";
}

inline std::optional<InteractionType> interaction_from_name(std::string_view s) {
    if (s == "repost") return InteractionType::repost;
    if (s == "like") return InteractionType::like;
    if (s == "follow") return InteractionType::follow;
    if (s == "block") return InteractionType::block;
    return std::nullopt;
}

/// A user action pointing at a post (repost, like) or at another user (follow, block).
struct Interaction {
    InteractionType type;
    std::string actor;
    std::string subject;
    Instant time{};

    bool operator==(const Interaction&) const = default;
};

/// Posts plus the interactions that reference them, both restricted to create actions.
struct Corpus {
    std::vector<PostRecord> posts;
    std::vector<Interaction> interactions;
};

/// Builds a corpus from a stream of events. Repost counts come only from repost events seen
/// in the same stream; a repost record appearing twice (same uri) is counted once.
class CorpusBuilder {
public:
    void add(const RawEvent& ev) {
        if (!ev.is_create()) return;
        switch (ev.collection) {
        case Collection::post:
            if (index_.emplace(ev.uri, posts_.size()).second)
                posts_.push_back({ev.uri, ev.author, ev.text, ev.langs, ev.time, 0});
            break;
        case Collection::repost:
            if (!ev.uri.empty() && !seen_reposts_.insert(ev.uri).second) break;
            ++repost_tally_[ev.subject];
            interactions_.push_back({InteractionType::repost, ev.author, ev.subject, ev.time});
            break;
        case Collection::like:
            interactions_.push_back({InteractionType::like, ev.author, ev.subject, ev.time});
            break;
        case Collection::follow:
            interactions_.push_back({InteractionType::follow, ev.author, ev.subject, ev.time});
            break;
        case Collection::block:
            interactions_.push_back({InteractionType::block, ev.author, ev.subject, ev.time});
            break;
        default: break;
        }
    }

    Corpus finish() {
        for (auto& p : posts_) {
            auto it = repost_tally_.find(p.uri);
            p.repost_count = it == repost_tally_.end() ? 0 : it->second;
        }
        Corpus c{std::move(posts_), std::move(interactions_)};
        posts_.clear();
        interactions_.clear();
        index_.clear();
        repost_tally_.clear();
        seen_reposts_.clear();
        return c;
    }

private:
    std::vector<PostRecord> posts_;
    std::vector<Interaction> interactions_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::uint64_t> repost_tally_;
    std::unordered_set<std::string> seen_reposts_;
};

struct CorpusFilter {
    std::uint64_t min_reposts = 1;
    std::size_t min_chars = 5;
    std::string lang = "en";

    bool accepts(const PostRecord& p) const {
        if (p.repost_count < min_reposts) return false;
        if (utf8_length(p.text) < min_chars) return false;
        if (lang.empty()) return true;
        return std::find(p.langs.begin(), p.langs.end(), lang) != p.langs.end();
    }
};

inline std::vector<PostRecord> filter_corpus(const std::vector<PostRecord>& posts, const CorpusFilter& f = {}) {
    std::vector<PostRecord> out;
    std::copy_if(posts.begin(), posts.end(), std::back_inserter(out), [&](const PostRecord& p) { return f.accepts(p); });
    return out;
}

/// round(fraction * n), the exact size every uniform sample has.
inline std::size_t sample_size(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("sample fraction must lie in (0, 1]");
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

/// Selection sampling (Knuth's Algorithm S): exactly `sample_size(n, fraction)` indices,
/// uniform without replacement, returned in increasing order.
inline std::vector<std::size_t> sample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    std::size_t k = sample_size(n, fraction);
    std::vector<std::size_t> out;
    out.reserve(k);
    if (k == n) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    Rng rng(seed);
    std::size_t needed = k;
    for (std::size_t i = 0; i < n && needed > 0; ++i) {
        if (uniform_below(rng, n - i) < needed) {
            out.push_back(i);
            --needed;
        }
    }
    return out;
}

enum class SampleMode { uniform, by_day };

/// Order-stable uniform sample of the filtered corpus. `by_day` samples each UTC day
/// independently at the same fraction, so the total can differ from round(fraction * n)
/// by at most the number of days.
inline std::vector<PostRecord> sample_corpus(const std::vector<PostRecord>& posts, double fraction,
                                             std::uint64_t seed, SampleMode mode = SampleMode::uniform) {
    std::vector<PostRecord> out;
    if (mode == SampleMode::uniform) {
        for (std::size_t i : sample_indices(posts.size(), fraction, seed)) out.push_back(posts[i]);
        return out;
    }
    std::map<Day, std::vector<std::size_t>> by_day;
    for (std::size_t i = 0; i < posts.size(); ++i) by_day[day_of(posts[i].created_at)].push_back(i);
    std::vector<std::size_t> chosen;
    for (const auto& [day, idx] : by_day) {
        auto seed_day = derive_seed(seed, static_cast<std::uint64_t>(day.time_since_epoch().count()));
        for (std::size_t j : sample_indices(idx.size(), fraction, seed_day)) chosen.push_back(idx[j]);
    }
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) out.push_back(posts[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Line-delimited JSON persistence

inline nlohmann::ordered_json to_json(const PostRecord& p) {
    return {{"uri", p.uri}, {"did", p.author}, {"text", p.text}, {"langs", p.langs},
            {"time", format_rfc3339(p.created_at)}, {"reposts", p.repost_count}};
}

inline PostRecord post_from_json(const nlohmann::json& j) {
    PostRecord p;
    p.uri = j.at("uri").get<std::string>();
    p.author = j.at("did").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.langs = j.value("langs", std::vector<std::string>{});
    auto t = parse_rfc3339(j.at("time").get<std::string>());
    if (!t) throw Error("post " + p.uri + ": invalid time");
    p.created_at = *t;
    p.repost_count = j.value("reposts", std::uint64_t{0});
    return p;
}

inline nlohmann::ordered_json to_json(const Interaction& i) {
    return {{"type", interaction_name(i.type)}, {"did", i.actor}, {"subject", i.subject},
            {"time", format_rfc3339(i.time)}};
}

inline Interaction interaction_from_json(const nlohmann::json& j) {
    auto type = interaction_from_name(j.at("type").get<std::string>());
    if (!type) throw Error("unknown interaction type");
    auto t = parse_rfc3339(j.at("time").get<std::string>());
    if (!t) throw Error("interaction: invalid time");
    return {*type, j.at("did").get<std::string>(), j.at("subject").get<std::string>(), *t};
}

template <class T>
void write_jsonl(std::ostream& out, const std::vector<T>& items) {
    for (const auto& item : items) out << to_json(item).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

template <class F>
void read_jsonl(std::istream& in, F&& on_record) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(n, "malformed JSON");
        on_record(j);
    }
}

inline std::vector<PostRecord> read_posts(std::istream& in) {
    std::vector<PostRecord> out;
    read_jsonl(in, [&](const nlohmann::json& j) { out.push_back(post_from_json(j)); });
    return out;
}

inline std::vector<Interaction> read_interactions(std::istream& in) {
    std::vector<Interaction> out;
    read_jsonl(in, [&](const nlohmann::json& j) { out.push_back(interaction_from_json(j)); });
    return out;
}

} // namespace polarnet
