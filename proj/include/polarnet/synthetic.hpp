#pragma once

// Deterministic synthetic event stream with planted stance camps, used as the bundled
// end-to-end fixture. Users split into two camps; reposts, follows and likes stay mostly
// inside a camp and blocks go across, so both content and structural groupings have a
// known answer.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "polarnet/activity.hpp"
#include "polarnet/core.hpp"
#include "polarnet/event.hpp"
#include "polarnet/labels.hpp"

namespace polarnet {

struct SyntheticOptions {
    std::uint64_t seed = 1;
    std::size_t events = 10000;
    std::size_t users = 200;
    double within_camp = 0.9;  // probability that a repost/follow/like stays inside the camp
};

struct SyntheticFixture {
    std::vector<RawEvent> events;                            // time ordered
    std::map<std::string, int> camp;                         // user -> 0 or 1
    std::map<Topic, std::map<std::string, Stance>> stances;  // intended stance per participant
    std::vector<Topic> topics;
};

inline std::vector<Topic> synthetic_topics() { return {Topic::trump_admin, Topic::russia_ukraine, Topic::israel_palestine}; }

namespace detail {

inline std::string synth_user(std::size_t i) {
    auto n = std::to_string(i);
    return "did:plc:synth" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

struct SynthPost {
    std::string uri;
    std::size_t author;
    Instant time;
    std::optional<Topic> topic;
    std::optional<Stance> stance;
};

inline const std::vector<std::string>& topic_phrases(Topic t) {
    static const std::map<Topic, std::vector<std::string>> phrases{
        {Topic::trump_admin,
         {"New executive order from the Trump White House today", "Trump administration announces federal agency cuts",
          "Trump signs another executive order on the government", "The Trump White House responds to congress"}},
        {Topic::russia_ukraine,
         {"Ukraine reports new Russia invasion attacks near Kyiv", "Zelensky meets NATO leaders about the war in Ukraine",
          "Putin claims Russia will continue the military campaign", "Ceasefire talks on Russia and Ukraine stall again"}},
        {Topic::israel_palestine,
         {"Ceasefire in Gaza remains fragile as Israel and Hamas talk", "Humanitarian aid reaches Gaza after long delays",
          "Israel and Palestine leaders trade statements on the war", "Protests about Gaza and Israel continue downtown"}},
    };
    return phrases.at(t);
}

inline const std::vector<std::string>& filler_phrases() {
    static const std::vector<std::string> p{
        "Lovely morning coffee with friends",     "Just finished a great book about birds",
        "My cat knocked the plant over again",    "Trying a new pasta recipe tonight",
        "Sunset walk along the river was calm",   "Anyone watching the game this weekend",
        "New photos from the mountain trip",      "Started learning the guitar this month",
    };
    return p;
}

} // namespace detail

inline SyntheticFixture generate_fixture(const SyntheticOptions& opt = {}) {
    using namespace std::chrono;
    SyntheticFixture fx;
    fx.topics = synthetic_topics();
    Rng rng(derive_seed(opt.seed, "synthetic"));
    const std::size_t n_users = std::max<std::size_t>(opt.users, 4);
    auto coverage = bluesky_collection_coverage();
    Instant start = *coverage.first_day + hours{1};
    Instant end = *coverage.last_day + hours{23};
    auto span_us = (end - start).count();

    auto random_time = [&](Instant lo) {
        for (;;) {
            auto lo_us = (lo - start).count();
            Instant t = start + microseconds(lo_us + std::int64_t(uniform_below(rng, std::uint64_t(span_us - lo_us))));
            bool down = false;
            for (const auto& d : coverage.downtime) down = down || (t >= d.from && t < d.to);
            if (!down) return t;
        }
    };
    auto chance = [&](double p) { return uniform01(rng) < p; };

    std::vector<std::string> users(n_users);
    std::vector<int> camp(n_users);
    for (std::size_t i = 0; i < n_users; ++i) {
        users[i] = detail::synth_user(i);
        camp[i] = i % 2 == 0 ? 0 : 1;
        fx.camp[users[i]] = camp[i];
    }

    // Intended stances. Camp 0 leans against the administration, for Ukraine, for
    // Palestine; camp 1 the reverse, with a neutral share on each topic.
    auto intended = [&](Topic t, std::size_t u) -> std::optional<Stance> {
        std::uint64_t h = derive_seed(opt.seed, std::string(info(t).key) + users[u]);
        double r = double(h >> 11) * 0x1.0p-53;
        double participate = t == Topic::trump_admin ? 1.0 : t == Topic::russia_ukraine ? 0.7 : 0.6;
        if (r >= participate) return std::nullopt;
        double x = r / participate;
        switch (t) {
        case Topic::trump_admin:
            if (x < 0.1) return Stance::neutral;
            return camp[u] == 0 ? Stance::against : Stance::for_;
        case Topic::russia_ukraine:
            if (camp[u] == 0) return x < 0.15 ? Stance::neutral : Stance::for_;
            return x < 0.5 ? Stance::neutral : Stance::against;
        default:
            if (camp[u] == 0) return x < 0.3 ? Stance::neutral : Stance::for_;
            return x < 0.2 ? Stance::neutral : Stance::against;
        }
    };

    std::vector<RawEvent> evs;
    std::vector<detail::SynthPost> posts;
    std::size_t post_seq = 0;
    auto add_post = [&](std::size_t author, std::string text, std::vector<std::string> langs, std::optional<Topic> topic,
                        std::optional<Stance> stance) {
        RawEvent ev;
        ev.action = Action::create;
        ev.collection = Collection::post;
        ev.nsid = std::string(nsid_post);
        ev.author = users[author];
        ev.time = random_time(start);
        ev.uri = "at://" + users[author] + "/app.bsky.feed.post/p" + std::to_string(post_seq++);
        ev.text = std::move(text);
        ev.langs = std::move(langs);
        posts.push_back({ev.uri, author, ev.time, topic, stance});
        evs.push_back(std::move(ev));
    };

    for (Topic t : fx.topics) {
        const auto& phrases = detail::topic_phrases(t);
        for (std::size_t u = 0; u < n_users; ++u) {
            auto s = intended(t, u);
            if (!s) continue;
            fx.stances[t][users[u]] = *s;
            auto names = StanceNames::defaults(t);
            for (int k = 0; k < 2; ++k) {
                std::string text = phrases[uniform_below(rng, phrases.size())];
                if (*s != Stance::neutral) text += " #" + names.display(*s);
                add_post(u, text, {"en"}, t, *s);
            }
        }
    }
    const auto& filler = detail::filler_phrases();
    for (std::size_t i = 0; i < n_users * 2; ++i)
        add_post(uniform_below(rng, n_users), filler[uniform_below(rng, filler.size())], {"en"}, std::nullopt, std::nullopt);
    for (std::size_t i = 0; i < n_users / 2; ++i)
        add_post(uniform_below(rng, n_users), "Guten Morgen aus Berlin, heute regnet es", {"de"}, std::nullopt, std::nullopt);
    for (std::size_t i = 0; i < n_users / 4; ++i)
        add_post(uniform_below(rng, n_users), "ok!", {"en"}, std::nullopt, std::nullopt);

    // Posts grouped by (topic, stance) for camp-consistent repost targets.
    std::map<std::pair<int, int>, std::vector<std::size_t>> pool;  // (topic or -1, stance or -1)
    for (std::size_t i = 0; i < posts.size(); ++i) {
        int t = posts[i].topic ? static_cast<int>(*posts[i].topic) : -1;
        int s = posts[i].stance ? static_cast<int>(*posts[i].stance) : -1;
        pool[{t, s}].push_back(i);
    }
    auto opposite = [](Stance s) { return s == Stance::for_ ? Stance::against : s == Stance::against ? Stance::for_ : s; };

    std::size_t interaction_seq = 0;
    auto add_interaction = [&](Collection c, std::size_t actor, std::string subject, Instant after) {
        RawEvent ev;
        ev.action = Action::create;
        ev.collection = c;
        ev.nsid = std::string(nsid_of(c));
        ev.author = users[actor];
        ev.time = random_time(after);
        ev.uri = "at://" + users[actor] + "/" + ev.nsid + "/i" + std::to_string(interaction_seq++);
        ev.subject = std::move(subject);
        evs.push_back(std::move(ev));
    };

    const std::size_t budget = opt.events;
    const std::size_t n_reposts = budget * 45 / 100;
    const std::size_t n_follows = budget * 9 / 100;
    const std::size_t n_blocks = budget * 2 / 100;
    const std::size_t n_profiles = budget * 2 / 100;
    const std::size_t n_updates = budget * 2 / 100;

    for (std::size_t i = 0; i < n_reposts; ++i) {
        std::size_t u = uniform_below(rng, n_users);
        std::optional<std::size_t> target;
        if (chance(0.8)) {
            Topic t = fx.topics[uniform_below(rng, fx.topics.size())];
            auto it = fx.stances[t].find(users[u]);
            if (it != fx.stances[t].end()) {
                Stance want = chance(opt.within_camp) ? it->second : opposite(it->second);
                const auto& cands = pool[{static_cast<int>(t), static_cast<int>(want)}];
                if (!cands.empty()) target = cands[uniform_below(rng, cands.size())];
            }
        }
        if (!target) {
            const auto& cands = pool[{-1, -1}];
            target = cands[uniform_below(rng, cands.size())];
        }
        if (i % 400 == 0) {
            add_interaction(Collection::repost, u, "at://did:plc:gone/app.bsky.feed.post/missing" + std::to_string(i),
                            start);
            continue;
        }
        add_interaction(Collection::repost, u, posts[*target].uri, posts[*target].time);
    }
    auto same_camp_user = [&](std::size_t u, bool same) {
        for (;;) {
            std::size_t v = uniform_below(rng, n_users);
            if (v != u && (camp[v] == camp[u]) == same) return v;
        }
    };
    for (std::size_t i = 0; i < n_follows; ++i) {
        std::size_t u = uniform_below(rng, n_users);
        add_interaction(Collection::follow, u, users[same_camp_user(u, chance(opt.within_camp))], start);
    }
    for (std::size_t i = 0; i < n_blocks; ++i) {
        std::size_t u = uniform_below(rng, n_users);
        add_interaction(Collection::block, u, users[same_camp_user(u, false)], start);
    }
    for (std::size_t i = 0; i < n_profiles; ++i) {
        RawEvent ev;
        ev.action = Action::create;
        ev.collection = Collection::profile;
        ev.nsid = std::string(nsid_profile);
        ev.author = detail::synth_user(n_users + i);  // signups
        ev.time = random_time(start);
        evs.push_back(std::move(ev));
    }
    for (std::size_t i = 0; i < n_updates; ++i) {
        RawEvent ev;
        ev.action = i % 2 == 0 ? Action::update : Action::del;
        ev.collection = Collection::post;
        ev.nsid = std::string(nsid_post);
        const auto& p = posts[uniform_below(rng, posts.size())];
        ev.author = users[p.author];
        ev.uri = p.uri;
        ev.time = random_time(p.time);
        evs.push_back(std::move(ev));
    }
    // Likes fill the remaining budget.
    while (evs.size() < budget) {
        std::size_t u = uniform_below(rng, n_users);
        const auto& p = posts[uniform_below(rng, posts.size())];
        if (camp[p.author] != camp[u] && !chance(1.0 - opt.within_camp)) continue;
        add_interaction(Collection::like, u, p.uri, p.time);
    }
    evs.resize(std::min(evs.size(), budget));
    std::stable_sort(evs.begin(), evs.end(), [](const RawEvent& a, const RawEvent& b) { return a.time < b.time; });
    fx.events = std::move(evs);
    return fx;
}

} // namespace polarnet
