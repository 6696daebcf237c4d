#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polarnet/core.hpp"

namespace polarnet {

enum class Action { create, update, del };

enum class Collection { post, repost, like, block, follow, profile, other };

inline constexpr std::string_view nsid_post = "app.bsky.feed.post";
inline constexpr std::string_view nsid_repost = "app.bsky.feed.repost";
inline constexpr std::string_view nsid_like = "app.bsky.feed.like";
inline constexpr std::string_view nsid_block = "app.bsky.graph.block";
inline constexpr std::string_view nsid_follow = "app.bsky.graph.follow";
inline constexpr std::string_view nsid_profile = "app.bsky.actor.profile";

inline Collection collection_from_nsid(std::string_view nsid) {
    if (nsid == nsid_post) return Collection::post;
    if (nsid == nsid_repost) return Collection::repost;
    if (nsid == nsid_like) return Collection::like;
    if (nsid == nsid_block) return Collection::block;
    if (nsid == nsid_follow) return Collection::follow;
    if (nsid == nsid_profile) return Collection::profile;
    return Collection::other;
}

inline std::string_view nsid_of(Collection c) {
    switch (c) {
    case Collection::post: return nsid_post;
    case Collection::repost: return nsid_repost;
    case Collection::like: return nsid_like;
    case Collection::block: return nsid_block;
    case Collection::follow: return nsid_follow;
    case Collection::profile: return nsid_profile;
    case Collection::other: break;
    }
    return "other";
}

/// Short name used in reports and CSV columns.
inline std::string_view action_type_name(Collection c) {
    switch (c) {
    case Collection::post: return "posts";
    case Collection::repost: return "reposts";
    case Collection::like: return "likes";
    case Collection::block: return "blocks";
    case Collection::follow: return "follows";
    case Collection::profile: return "signups";
    case Collection::other: break;
    }
    return "other";
}

inline std::string_view action_name(Action a) {
    switch (a) {
    case Action::create: return "create";
    case Action::update: return "update";
    case Action::del: return "delete";
    }
    return "create";
}

/// One firehose record. `nsid` keeps the original collection string so that events with
/// unknown collections round-trip unchanged.
struct RawEvent {
    Action action = Action::create;
    Collection collection = Collection::other;
    std::string nsid;
    std::string author;
    Instant time{};
    std::string uri;
    std::string text;
    std::vector<std::string> langs;
    std::string subject;

    bool is_create() const noexcept { return action == Action::create; }

    bool operator==(const RawEvent&) const = default;
};

namespace detail {

inline const std::string& required_string(const nlohmann::json& j, const char* key, std::size_t offset) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw ParseError(offset, std::string("missing or non-string field '") + key + "'");
    return it->get_ref<const std::string&>();
}

inline void optional_string(const nlohmann::json& j, const char* key, std::string& out, std::size_t offset) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    if (!it->is_string()) throw ParseError(offset, std::string("field '") + key + "' must be a string");
    out = it->get_ref<const std::string&>();
}

} // namespace detail

/// Parses one line of the event dump. Throws ParseError carrying `offset` on malformed
/// input. Unknown collections are kept with `Collection::other`.
inline RawEvent parse_event(std::string_view line, std::size_t offset = 0) {
    nlohmann::json j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded()) throw ParseError(offset, "malformed JSON");
    if (!j.is_object()) throw ParseError(offset, "event is not a JSON object");

    RawEvent ev;
    const auto& action = detail::required_string(j, "action", offset);
    if (action == "create")
        ev.action = Action::create;
    else if (action == "update")
        ev.action = Action::update;
    else if (action == "delete")
        ev.action = Action::del;
    else
        throw ParseError(offset, "unknown action '" + action + "'");

    ev.nsid = detail::required_string(j, "collection", offset);
    ev.collection = collection_from_nsid(ev.nsid);
    ev.author = detail::required_string(j, "did", offset);
    if (ev.author.empty()) throw ParseError(offset, "empty author did");
    auto t = parse_rfc3339(detail::required_string(j, "time", offset));
    if (!t) throw ParseError(offset, "invalid RFC-3339 time");
    ev.time = *t;

    detail::optional_string(j, "uri", ev.uri, offset);
    detail::optional_string(j, "text", ev.text, offset);
    detail::optional_string(j, "subject", ev.subject, offset);
    if (auto it = j.find("langs"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError(offset, "field 'langs' must be an array");
        for (const auto& l : *it) {
            if (!l.is_string()) throw ParseError(offset, "language tags must be strings");
            ev.langs.push_back(l.get<std::string>());
        }
    }

    // Payload requirements only bind create actions; deletes carry no record body.
    if (ev.is_create()) {
        switch (ev.collection) {
        case Collection::post:
            if (j.find("text") == j.end()) throw ParseError(offset, "post without 'text'");
            break;
        case Collection::repost:
        case Collection::like:
        case Collection::follow:
        case Collection::block:
            if (ev.subject.empty()) throw ParseError(offset, "missing 'subject'");
            break;
        default: break;
        }
    }
    return ev;
}

/// Canonical single-line serialization. Key order is fixed and empty payload fields are
/// omitted, so `parse_event(serialize_event(e)) == e` for every well-formed event.
inline std::string serialize_event(const RawEvent& ev) {
    nlohmann::ordered_json j;
    j["action"] = action_name(ev.action);
    j["collection"] = ev.nsid.empty() ? std::string(nsid_of(ev.collection)) : ev.nsid;
    j["did"] = ev.author;
    j["time"] = format_rfc3339(ev.time);
    if (!ev.uri.empty()) j["uri"] = ev.uri;
    if (ev.collection == Collection::post && ev.is_create())
        j["text"] = ev.text;
    else if (!ev.text.empty())
        j["text"] = ev.text;
    if (!ev.langs.empty()) j["langs"] = ev.langs;
    if (!ev.subject.empty()) j["subject"] = ev.subject;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

struct ParseErrorRecord {
    std::size_t offset;
    std::string message;
};

struct StreamTally {
    std::size_t lines = 0;
    std::size_t parsed = 0;
    std::size_t non_create = 0;
    std::size_t other_collection = 0;
    std::vector<ParseErrorRecord> errors;
};

/// Reads a line-delimited event stream, invoking `on_event` for every parsed event.
/// Malformed lines are recorded in the tally and skipped. Blank lines are ignored.
template <class F>
void for_each_event(std::istream& in, F&& on_event, StreamTally& tally, std::size_t first_offset = 1) {
    std::string line;
    std::size_t offset = first_offset - 1;
    while (std::getline(in, line)) {
        ++offset;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++tally.lines;
        try {
            RawEvent ev = parse_event(line, offset);
            ++tally.parsed;
            if (!ev.is_create()) ++tally.non_create;
            if (ev.collection == Collection::other) ++tally.other_collection;
            on_event(std::move(ev));
        } catch (const ParseError& e) {
            tally.errors.push_back({e.offset(), e.what()});
        }
    }
}

} // namespace polarnet
