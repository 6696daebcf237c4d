#pragma once

#include <array>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "polarnet/core.hpp"

namespace polarnet {

// ---------------------------------------------------------------------------
// Themes: eight political policy areas plus a catch-all non-political label.

enum class Theme {
    civil_rights,
    defense_international,
    economy_trade_labor,
    government_operations,
    infrastructure_environment,
    law_crime_justice,
    science_technology_energy,
    social_policy,
    non_political,
};

inline constexpr std::size_t theme_count = 9;

struct ThemeInfo {
    Theme theme;
    std::string_view key;
    std::string_view display;
    std::string_view description;
};

inline constexpr std::array<ThemeInfo, theme_count> theme_table{{
    {Theme::civil_rights, "civil_rights", "Civil Rights",
     "Discussions about civil liberties, equality, and rights of individuals or groups."},
    {Theme::defense_international, "defense_international_affairs", "Defense & International Affairs",
     "Issues about national defense, security, and international relations."},
    {Theme::economy_trade_labor, "economy_trade_labor", "Economy, Trade & Labor",
     "Issues related to economic policy, employment, labor markets, and trade agreements."},
    {Theme::government_operations, "government_operations", "Government Operations & Administration",
     "Posts related to the functioning, organization, or administration of government."},
    {Theme::infrastructure_environment, "infrastructure_environment", "Infrastructure & Environment",
     "Matters relating to public infrastructure, transportation, and environmental protection."},
    {Theme::law_crime_justice, "law_crime_justice", "Law, Crime & Justice",
     "Topics focused on legal systems, crime, law enforcement, and judicial matters."},
    {Theme::science_technology_energy, "science_technology_energy", "Science, Technology & Energy",
     "Content involving scientific research, technological development, and energy policy."},
    {Theme::social_policy, "social_policy", "Social Policy",
     "Topics concerning welfare, health, education, and other social services."},
    {Theme::non_political, "non_political", "Non-Political", "Content not related to politics or policy issues."},
}};

inline const ThemeInfo& info(Theme t) { return theme_table[static_cast<std::size_t>(t)]; }

inline std::optional<Theme> theme_from_key(std::string_view key) {
    for (const auto& t : theme_table)
        if (t.key == key) return t.theme;
    return std::nullopt;
}

inline bool is_political(Theme t) { return t != Theme::non_political; }

// ---------------------------------------------------------------------------
// Parent political topics

enum class Topic {
    trump_admin,
    elon_musk,
    us_canada,
    la_wildfires,
    dei_programs,
    tiktok_ban,
    israel_palestine,
    russia_ukraine,
    lgbtq_rights,
    ai,
    other,
};

inline constexpr std::size_t topic_count = 11;

struct TopicInfo {
    Topic topic;
    std::string_view key;
    std::string_view display;
    std::string_view short_name;
    std::string_view for_name;
    std::string_view against_name;
};

inline constexpr std::array<TopicInfo, topic_count> topic_table{{
    {Topic::trump_admin, "trump_admin", "Trump administration", "Trump", "supports_trump", "opposes_trump"},
    {Topic::elon_musk, "elon_musk", "Elon Musk", "Musk", "supports_musk", "opposes_musk"},
    {Topic::us_canada, "us_canada", "US-Canada relations", "Canada", "supports_canada", "opposes_canada"},
    {Topic::la_wildfires, "la_wildfires", "LA wildfires", "Fires", "supports_relief_efforts", "opposes_relief_efforts"},
    {Topic::dei_programs, "dei_programs", "DEI programs", "DEI", "supports_dei", "opposes_dei"},
    {Topic::tiktok_ban, "tiktok_ban", "TikTok ban", "TikTok", "supports_ban", "opposes_ban"},
    {Topic::israel_palestine, "israel_palestine", "Israel-Palestine", "ISR-PAL", "supports_palestine", "supports_israel"},
    {Topic::russia_ukraine, "russia_ukraine", "Russia-Ukraine", "RUS-UKR", "supports_ukraine", "supports_russia"},
    {Topic::lgbtq_rights, "lgbtq_rights", "LGBTQ+ rights", "LGBTQ", "supports_lgbtq", "opposes_lgbtq"},
    {Topic::ai, "ai", "AI", "AI", "supports_ai", "opposes_ai"},
    {Topic::other, "other", "Other", "Other", "", ""},
}};

inline const TopicInfo& info(Topic t) { return topic_table[static_cast<std::size_t>(t)]; }

inline std::optional<Topic> topic_from_key(std::string_view key) {
    for (const auto& t : topic_table)
        if (t.key == key) return t.topic;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Stances

enum class Stance { for_, neutral, against };

inline constexpr std::array<Stance, 3> all_stances{Stance::for_, Stance::neutral, Stance::against};

inline std::string_view stance_key(Stance s) {
    switch (s) {
    case Stance::for_: return "for";
    case Stance::neutral: return "neutral";
    case Stance::against: return "against";
    }
    return "neutral";
}

inline std::optional<Stance> stance_from_key(std::string_view s) {
    if (s == "for") return Stance::for_;
    if (s == "neutral") return Stance::neutral;
    if (s == "against") return Stance::against;
    return std::nullopt;
}

/// Topic-specific display names; configurable per run.
struct StanceNames {
    std::string for_name;
    std::string against_name;

    std::string display(Stance s) const {
        switch (s) {
        case Stance::for_: return for_name;
        case Stance::against: return against_name;
        case Stance::neutral: break;
        }
        return "neutral";
    }

    std::optional<Stance> parse(std::string_view name) const {
        if (name == for_name) return Stance::for_;
        if (name == against_name) return Stance::against;
        if (name == "neutral") return Stance::neutral;
        return stance_from_key(name);
    }

    static StanceNames defaults(Topic t) { return {std::string(info(t).for_name), std::string(info(t).against_name)}; }
};

// ---------------------------------------------------------------------------
// Label stores

struct LabelMeta {
    std::string template_hash;
    std::string timestamp;
};

/// Post-keyed labels over a closed vocabulary (`Theme` or `Topic`). Writes are
/// serialized; persisted order is sorted by key so files are reproducible.
template <class Label>
class PostLabelStore {
public:
    PostLabelStore() = default;
    PostLabelStore(PostLabelStore&& o) noexcept : entries_(std::move(o.entries_)), failures_(std::move(o.failures_)) {}
    PostLabelStore& operator=(PostLabelStore&& o) noexcept {
        entries_ = std::move(o.entries_);
        failures_ = std::move(o.failures_);
        return *this;
    }

    void put(const std::string& post_uri, Label label, LabelMeta meta = {}) {
        std::lock_guard lock(mu_);
        entries_[post_uri] = {label, std::move(meta)};
    }

    void put_failure(const std::string& post_uri, std::string reason) {
        std::lock_guard lock(mu_);
        failures_[post_uri] = std::move(reason);
    }

    std::optional<Label> get(const std::string& post_uri) const {
        std::lock_guard lock(mu_);
        auto it = entries_.find(post_uri);
        if (it == entries_.end()) return std::nullopt;
        return it->second.label;
    }

    std::size_t size() const { return entries_.size(); }
    const auto& failures() const { return failures_; }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [uri, e] : entries_) f(uri, e.label);
    }

    void write(std::ostream& out) const {
        for (const auto& [uri, e] : entries_) {
            nlohmann::ordered_json j{{"post_uri", uri}, {"label", key_of(e.label)},
                                     {"template_hash", e.meta.template_hash}, {"timestamp", e.meta.timestamp}};
            out << j.dump() << '\n';
        }
    }

    void write_failures(std::ostream& out) const {
        for (const auto& [uri, reason] : failures_)
            out << nlohmann::ordered_json{{"post_uri", uri}, {"label", nullptr}, {"error", reason}}.dump() << '\n';
    }

    /// Loads a label file; any out-of-vocabulary label rejects the whole file.
    static PostLabelStore read(std::istream& in) {
        PostLabelStore store;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) throw ParseError(n, "malformed label record");
            auto label = parse_label(j.value("label", ""));
            if (!label) throw ParseError(n, "label outside vocabulary: " + j.value("label", std::string("<null>")));
            store.put(j.at("post_uri").get<std::string>(), *label,
                      {j.value("template_hash", ""), j.value("timestamp", "")});
        }
        return store;
    }

private:
    struct Entry {
        Label label;
        LabelMeta meta;
    };

    static std::string key_of(Label l) { return std::string(info(l).key); }
    static std::optional<Label> parse_label(std::string_view s) {
        if constexpr (std::is_same_v<Label, Theme>)
            return theme_from_key(s);
        else
            return topic_from_key(s);
    }

    mutable std::mutex mu_;
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> failures_;
};

using ThemeStore = PostLabelStore<Theme>;
using TopicStore = PostLabelStore<Topic>;

struct StanceLabel {
    std::string user;
    Topic topic;
    Stance stance;
};

/// At most one stance per (user, topic).
class StanceStore {
public:
    StanceStore() = default;
    StanceStore(StanceStore&& o) noexcept : entries_(std::move(o.entries_)), failures_(std::move(o.failures_)) {}
    StanceStore& operator=(StanceStore&& o) noexcept {
        entries_ = std::move(o.entries_);
        failures_ = std::move(o.failures_);
        return *this;
    }

    void put(const std::string& user, Topic topic, Stance stance, LabelMeta meta = {}) {
        std::lock_guard lock(mu_);
        entries_[{topic, user}] = {stance, std::move(meta)};
    }

    void put_failure(const std::string& user, Topic topic, std::string reason) {
        std::lock_guard lock(mu_);
        failures_[{topic, user}] = std::move(reason);
    }

    std::optional<Stance> get(const std::string& user, Topic topic) const {
        std::lock_guard lock(mu_);
        auto it = entries_.find({topic, user});
        if (it == entries_.end()) return std::nullopt;
        return it->second.stance;
    }

    /// All labels of one topic, ordered by user id.
    std::map<std::string, Stance> for_topic(Topic topic) const {
        std::lock_guard lock(mu_);
        std::map<std::string, Stance> out;
        for (auto it = entries_.lower_bound({topic, std::string{}}); it != entries_.end() && it->first.first == topic; ++it)
            out.emplace(it->first.second, it->second.stance);
        return out;
    }

    std::size_t size() const { return entries_.size(); }
    const auto& failures() const { return failures_; }

    void write(std::ostream& out, const std::map<Topic, StanceNames>& names = {}) const {
        for (const auto& [key, e] : entries_) {
            auto it = names.find(key.first);
            StanceNames n = it != names.end() ? it->second : StanceNames::defaults(key.first);
            nlohmann::ordered_json j{{"user", key.second},
                                     {"topic", info(key.first).key},
                                     {"label", stance_key(e.stance)},
                                     {"display", n.display(e.stance)},
                                     {"template_hash", e.meta.template_hash},
                                     {"timestamp", e.meta.timestamp}};
            out << j.dump() << '\n';
        }
    }

    void write_failures(std::ostream& out) const {
        for (const auto& [key, reason] : failures_)
            out << nlohmann::ordered_json{{"user", key.second}, {"topic", info(key.first).key}, {"label", nullptr},
                                          {"error", reason}}
                       .dump()
                << '\n';
    }

    static StanceStore read(std::istream& in) {
        StanceStore store;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) throw ParseError(n, "malformed stance record");
            auto topic = topic_from_key(j.value("topic", ""));
            if (!topic || *topic == Topic::other) throw ParseError(n, "unknown topic");
            auto stance = stance_from_key(j.value("label", ""));
            if (!stance) throw ParseError(n, "stance outside vocabulary: " + j.value("label", std::string("<null>")));
            store.put(j.at("user").get<std::string>(), *topic, *stance,
                      {j.value("template_hash", ""), j.value("timestamp", "")});
        }
        return store;
    }

private:
    struct Entry {
        Stance stance;
        LabelMeta meta;
    };
    mutable std::mutex mu_;
    std::map<std::pair<Topic, std::string>, Entry> entries_;
    std::map<std::pair<Topic, std::string>, std::string> failures_;
};

} // namespace polarnet
