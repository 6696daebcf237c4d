#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "polarnet/core.hpp"
#include "polarnet/event.hpp"

namespace polarnet {

/// Collections that get a row in the activity table, in display order.
inline constexpr std::array<Collection, 6> activity_collections{
    Collection::like, Collection::post, Collection::repost,
    Collection::block, Collection::follow, Collection::profile};

/// A half-open interval with no collected events.
struct Downtime {
    Instant from;
    Instant to;
};

/// Collection window used to turn totals into daily averages. Days are UTC calendar days;
/// partially lost days contribute their observed fraction.
struct Coverage {
    std::optional<Day> first_day;
    std::optional<Day> last_day;
    std::vector<Downtime> downtime;

    double downtime_hours() const {
        double h = 0;
        for (const auto& d : downtime)
            h += std::chrono::duration<double, std::ratio<3600>>(d.to - d.from).count();
        return h;
    }

    /// Fraction of `day` that was observed, in [0, 1].
    double observed_fraction(Day day) const {
        using namespace std::chrono;
        Instant begin = day;
        Instant end = day + days{1};
        microseconds lost{0};
        for (const auto& d : downtime) {
            auto lo = std::max(begin, d.from);
            auto hi = std::min(end, d.to);
            if (hi > lo) lost += hi - lo;
        }
        return 1.0 - duration<double>(lost).count() / duration<double>(days{1}).count();
    }

    double observed_days(Day first, Day last) const {
        double total = 0;
        for (Day d = first; d <= last; d += std::chrono::days{1}) total += std::max(0.0, observed_fraction(d));
        return total;
    }
};

/// The archived collection: 2024-12-17 through 2025-05-31 with two recorded outages
/// (69 lost hours in total).
inline Coverage bluesky_collection_coverage() {
    using namespace std::chrono;
    Coverage c;
    c.first_day = sys_days{2024y / December / 17};
    c.last_day = sys_days{2025y / May / 31};
    c.downtime.push_back({sys_days{2025y / January / 16} + hours{16}, sys_days{2025y / January / 17}});
    c.downtime.push_back({sys_days{2025y / March / 31} + hours{11}, sys_days{2025y / April / 3}});
    return c;
}

struct ActionTotals {
    std::uint64_t total_actions = 0;
    std::uint64_t total_author_days = 0;
    double daily_average_actions = 0;
    double daily_average_authors = 0;
};

struct DailyRow {
    Day day;
    Collection collection;
    std::uint64_t actions;
    std::uint64_t distinct_authors;
};

struct ActivityStats {
    std::map<Collection, ActionTotals> per_type;
    std::vector<DailyRow> daily;
    std::optional<Day> first_day;
    std::optional<Day> last_day;
    double observed_days = 0;
    double downtime_hours = 0;
    std::uint64_t non_create_events = 0;

    const ActionTotals& operator[](Collection c) const {
        static const ActionTotals empty{};
        auto it = per_type.find(c);
        return it == per_type.end() ? empty : it->second;
    }
};

/// Mergeable partial aggregate of create actions. Each shard of a stream can fill its own
/// accumulator; `merge` is associative and commutative.
class ActivityAccumulator {
public:
    void add(const RawEvent& ev) {
        if (!ev.is_create()) {
            ++non_create_;
            return;
        }
        if (ev.collection == Collection::other) return;
        auto& b = buckets_[{day_of(ev.time), ev.collection}];
        ++b.actions;
        b.authors.insert(ev.author);
    }

    /// Adds counts that were already reduced per day elsewhere (for example a previous run
    /// over a disjoint set of days). Distinct-author counts for the same (day, type) are
    /// summed, so callers must not split one day's authors across calls.
    void add_daily(Day day, Collection c, std::uint64_t actions, std::uint64_t distinct_authors) {
        auto& b = buckets_[{day, c}];
        b.actions += actions;
        b.preaggregated_authors += distinct_authors;
    }

    void merge(const ActivityAccumulator& other) {
        for (const auto& [key, ob] : other.buckets_) {
            auto& b = buckets_[key];
            b.actions += ob.actions;
            b.preaggregated_authors += ob.preaggregated_authors;
            b.authors.insert(ob.authors.begin(), ob.authors.end());
        }
        non_create_ += other.non_create_;
    }

    ActivityStats finalize(const Coverage& coverage = {}) const {
        ActivityStats s;
        s.non_create_events = non_create_;
        s.downtime_hours = coverage.downtime_hours();
        std::optional<Day> lo = coverage.first_day, hi = coverage.last_day;
        for (const auto& [key, b] : buckets_) {
            if (!coverage.first_day && (!lo || key.first < *lo)) lo = key.first;
            if (!coverage.last_day && (!hi || key.first > *hi)) hi = key.first;
        }
        s.first_day = lo;
        s.last_day = hi;
        if (lo && hi && *lo <= *hi) s.observed_days = coverage.observed_days(*lo, *hi);

        for (Collection c : activity_collections) s.per_type[c] = {};
        for (const auto& [key, b] : buckets_) {
            std::uint64_t authors = b.authors.size() + b.preaggregated_authors;
            auto& t = s.per_type[key.second];
            t.total_actions += b.actions;
            t.total_author_days += authors;
            s.daily.push_back({key.first, key.second, b.actions, authors});
        }
        if (s.observed_days > 0)
            for (auto& [c, t] : s.per_type) {
                t.daily_average_actions = static_cast<double>(t.total_actions) / s.observed_days;
                t.daily_average_authors = static_cast<double>(t.total_author_days) / s.observed_days;
            }
        return s;
    }

private:
    struct Bucket {
        std::uint64_t actions = 0;
        std::uint64_t preaggregated_authors = 0;
        std::unordered_set<std::string> authors;
    };
    std::map<std::pair<Day, Collection>, Bucket> buckets_;
    std::uint64_t non_create_ = 0;
};

template <class Range>
ActivityStats accumulate_stats(const Range& events, const Coverage& coverage = {}) {
    ActivityAccumulator acc;
    for (const RawEvent& ev : events) acc.add(ev);
    return acc.finalize(coverage);
}

inline nlohmann::ordered_json to_json(const ActivityStats& s) {
    nlohmann::ordered_json j;
    j["first_day"] = s.first_day ? format_date(*s.first_day) : "";
    j["last_day"] = s.last_day ? format_date(*s.last_day) : "";
    j["observed_days"] = s.observed_days;
    j["downtime_hours"] = s.downtime_hours;
    j["non_create_events"] = s.non_create_events;
    auto& types = j["action_types"];
    types = nlohmann::ordered_json::object();
    for (Collection c : activity_collections) {
        const auto& t = s[c];
        types[std::string(action_type_name(c))] = {
            {"total_actions", t.total_actions},
            {"total_author_days", t.total_author_days},
            {"daily_average_actions", t.daily_average_actions},
            {"daily_average_authors", t.daily_average_authors}};
    }
    return j;
}

inline ActivityStats activity_from_json(const nlohmann::json& j) {
    ActivityStats s;
    if (auto d = parse_date(j.value("first_day", ""))) s.first_day = *d;
    if (auto d = parse_date(j.value("last_day", ""))) s.last_day = *d;
    s.observed_days = j.value("observed_days", 0.0);
    s.downtime_hours = j.value("downtime_hours", 0.0);
    s.non_create_events = j.value("non_create_events", std::uint64_t{0});
    for (Collection c : activity_collections) {
        const auto& t = j.at("action_types").at(std::string(action_type_name(c)));
        s.per_type[c] = {t.at("total_actions").get<std::uint64_t>(), t.at("total_author_days").get<std::uint64_t>(),
                         t.at("daily_average_actions").get<double>(), t.at("daily_average_authors").get<double>()};
    }
    return s;
}

/// date,action_type,actions,distinct_authors
inline void write_daily_csv(std::ostream& out, const ActivityStats& s) {
    out << "date,action_type,actions,distinct_authors\n";
    for (const auto& r : s.daily)
        out << format_date(r.day) << ',' << action_type_name(r.collection) << ',' << r.actions << ','
            << r.distinct_authors << '\n';
}

} // namespace polarnet
