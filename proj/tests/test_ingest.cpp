#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "polarnet/activity.hpp"
#include "polarnet/corpus.hpp"
#include "polarnet/event.hpp"
#include "polarnet/synthetic.hpp"

using namespace polarnet;
using namespace std::chrono;

namespace {

Instant at(const char* s) { return *parse_rfc3339(s); }

RawEvent make(Action a, Collection c, std::string author, const char* time, std::string subject = {}) {
    RawEvent e;
    e.action = a;
    e.collection = c;
    e.nsid = std::string(nsid_of(c));
    e.author = std::move(author);
    e.time = at(time);
    e.subject = std::move(subject);
    return e;
}

PostRecord post(std::string uri, std::string text, std::uint64_t reposts, std::vector<std::string> langs = {"en"},
                const char* time = "2025-01-01T00:00:00Z") {
    return {std::move(uri), "did:plc:a", std::move(text), std::move(langs), at(time), reposts};
}

} // namespace

// --- core ------------------------------------------------------------------

TEST(Time, ParsesOffsetsAndFractions) {
    EXPECT_EQ(format_rfc3339(at("2025-01-16T16:00:00Z")), "2025-01-16T16:00:00.000000Z");
    EXPECT_EQ(at("2025-01-16T18:30:00+02:30"), at("2025-01-16T16:00:00Z"));
    EXPECT_EQ(format_rfc3339(at("2024-12-17T01:02:03.5Z")), "2024-12-17T01:02:03.500000Z");
    EXPECT_FALSE(parse_rfc3339("2025-02-30T00:00:00Z"));
    EXPECT_FALSE(parse_rfc3339("2025-01-16 16:00:00"));
    EXPECT_FALSE(parse_rfc3339("2025-01-16T16:00:00"));
}

TEST(Time, DateRoundTrip) {
    auto d = parse_date("2025-05-31");
    ASSERT_TRUE(d);
    EXPECT_EQ(format_date(*d), "2025-05-31");
    EXPECT_FALSE(parse_date("2025-13-01"));
}

TEST(Seeds, DerivedSeedsAreStableAndDistinct) {
    EXPECT_EQ(derive_seed(1, "sample"), derive_seed(1, "sample"));
    EXPECT_NE(derive_seed(1, "sample"), derive_seed(1, "groups"));
    EXPECT_NE(derive_seed(1, "sample"), derive_seed(2, "sample"));
    EXPECT_NE(derive_seed(7, std::uint64_t{0}), derive_seed(7, std::uint64_t{1}));
}

TEST(Text, Utf8LengthCountsScalars) {
    EXPECT_EQ(utf8_length("hello"), 5u);
    EXPECT_EQ(utf8_length("h\xC3\xA9llo"), 5u);      // é
    EXPECT_EQ(utf8_length("\xF0\x9F\x98\x80!"), 2u);  // emoji + !
    EXPECT_EQ(utf8_length("\xFF"), 1u);
}

// --- parse_event -----------------------------------------------------------

TEST(ParseEvent, PostCreate) {
    auto ev = parse_event(R"({"action":"create","collection":"app.bsky.feed.post","did":"did:plc:x",)"
                          R"("time":"2025-01-01T00:00:00Z","uri":"at://x/p/1","text":"hello world","langs":["en"]})");
    EXPECT_EQ(ev.action, Action::create);
    EXPECT_EQ(ev.collection, Collection::post);
    EXPECT_EQ(ev.text, "hello world");
    EXPECT_EQ(ev.langs, std::vector<std::string>{"en"});
}

TEST(ParseEvent, DeleteIsNonCreate) {
    auto ev = parse_event(R"({"action":"delete","collection":"app.bsky.feed.post","did":"did:plc:x","time":"2025-01-01T00:00:00Z"})");
    EXPECT_FALSE(ev.is_create());
}

TEST(ParseEvent, UnknownCollectionRetained) {
    auto ev = parse_event(R"({"action":"create","collection":"app.bsky.graph.listitem","did":"did:plc:x","time":"2025-01-01T00:00:00Z"})");
    EXPECT_EQ(ev.collection, Collection::other);
    EXPECT_EQ(ev.nsid, "app.bsky.graph.listitem");
}

TEST(ParseEvent, MalformedCarriesOffset) {
    try {
        parse_event("{not json", 42);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 42u);
    }
    EXPECT_THROW(parse_event(R"({"action":"create","collection":"app.bsky.feed.like","did":"d","time":"2025-01-01T00:00:00Z"})"),
                 ParseError);  // like without subject
    EXPECT_THROW(parse_event(R"({"action":"create","collection":"app.bsky.feed.post","did":"","time":"2025-01-01T00:00:00Z","text":"x"})"),
                 ParseError);
    EXPECT_THROW(parse_event(R"({"action":"frobnicate","collection":"app.bsky.feed.post","did":"d","time":"2025-01-01T00:00:00Z"})"),
                 ParseError);
    EXPECT_THROW(parse_event(R"({"action":"create","collection":"app.bsky.feed.post","did":"d","time":"yesterday","text":"x"})"),
                 ParseError);
}

TEST(ParseEvent, SerializeRoundTripsFixture) {
    auto fx = generate_fixture({.events = 2000, .users = 40});
    for (const auto& ev : fx.events) EXPECT_EQ(parse_event(serialize_event(ev)), ev);
}

TEST(EventStream, TallyAndSkipsMalformed) {
    std::istringstream in(
        R"({"action":"create","collection":"app.bsky.feed.post","did":"a","time":"2025-01-01T00:00:00Z","text":"hi"})"
        "\n\n{broken\n"
        R"({"action":"update","collection":"app.bsky.feed.post","did":"a","time":"2025-01-01T00:00:00Z"})"
        "\n"
        R"({"action":"create","collection":"app.bsky.graph.listitem","did":"a","time":"2025-01-01T00:00:00Z"})"
        "\n");
    StreamTally tally;
    std::size_t seen = 0;
    for_each_event(in, [&](RawEvent) { ++seen; }, tally);
    EXPECT_EQ(seen, 3u);
    EXPECT_EQ(tally.lines, 4u);
    EXPECT_EQ(tally.parsed, 3u);
    EXPECT_EQ(tally.non_create, 1u);
    EXPECT_EQ(tally.other_collection, 1u);
    ASSERT_EQ(tally.errors.size(), 1u);
    EXPECT_EQ(tally.errors[0].offset, 3u);
}

// --- activity --------------------------------------------------------------

TEST(Activity, MatchesDirectCount) {
    auto fx = generate_fixture({.seed = 3, .events = 4000, .users = 60});
    auto stats = accumulate_stats(fx.events);
    // Oracle: totals and author-days computed from a flat set of (day, type, author).
    std::map<Collection, std::uint64_t> actions;
    std::map<Collection, std::set<std::pair<Day, std::string>>> author_days;
    std::set<Day> days;
    for (const auto& ev : fx.events) {
        if (!ev.is_create() || ev.collection == Collection::other) continue;
        ++actions[ev.collection];
        author_days[ev.collection].insert({day_of(ev.time), ev.author});
        days.insert(day_of(ev.time));
    }
    double span = double((*days.rbegin() - *days.begin()).count() + 1);
    EXPECT_DOUBLE_EQ(stats.observed_days, span);
    for (Collection c : activity_collections) {
        EXPECT_EQ(stats[c].total_actions, actions[c]);
        EXPECT_EQ(stats[c].total_author_days, author_days[c].size());
        EXPECT_DOUBLE_EQ(stats[c].daily_average_actions, double(actions[c]) / span);
    }
}

TEST(Activity, NonCreateExcluded) {
    ActivityAccumulator acc;
    acc.add(make(Action::create, Collection::like, "a", "2025-01-01T00:00:00Z", "s"));
    acc.add(make(Action::del, Collection::like, "a", "2025-01-01T00:00:00Z", "s"));
    auto s = acc.finalize();
    EXPECT_EQ(s[Collection::like].total_actions, 1u);
    EXPECT_EQ(s.non_create_events, 1u);
}

TEST(Activity, BlueskyCoverageSubtractsDowntime) {
    auto c = bluesky_collection_coverage();
    EXPECT_DOUBLE_EQ(c.downtime_hours(), 69.0);
    double days = c.observed_days(*c.first_day, *c.last_day);
    EXPECT_DOUBLE_EQ(days, 166.0 - 69.0 / 24.0);
    EXPECT_DOUBLE_EQ(c.observed_fraction(sys_days{2025y / January / 16}), 16.0 / 24.0);
}

TEST(Activity, MergeEqualsSingleStream) {
    auto fx = generate_fixture({.seed = 5, .events = 3000, .users = 50});
    ActivityAccumulator whole, left, right;
    for (std::size_t i = 0; i < fx.events.size(); ++i) {
        whole.add(fx.events[i]);
        (i % 3 == 0 ? left : right).add(fx.events[i]);
    }
    left.merge(right);
    auto a = whole.finalize(), b = left.finalize();
    for (Collection c : activity_collections) {
        EXPECT_EQ(a[c].total_actions, b[c].total_actions);
        EXPECT_EQ(a[c].total_author_days, b[c].total_author_days);
    }
}

TEST(Activity, JsonRoundTrip) {
    auto fx = generate_fixture({.events = 1500, .users = 30});
    auto s = accumulate_stats(fx.events, bluesky_collection_coverage());
    auto back = activity_from_json(to_json(s));
    EXPECT_EQ(back.observed_days, s.observed_days);
    for (Collection c : activity_collections) {
        EXPECT_EQ(back[c].total_actions, s[c].total_actions);
        EXPECT_DOUBLE_EQ(back[c].daily_average_authors, s[c].daily_average_authors);
    }
}

// --- corpus ----------------------------------------------------------------

TEST(Corpus, RepostCountsFromStreamDeduplicated) {
    CorpusBuilder b;
    auto p = make(Action::create, Collection::post, "a", "2025-01-01T00:00:00Z");
    p.uri = "at://a/post/1";
    p.text = "hello";
    b.add(p);
    auto r = make(Action::create, Collection::repost, "b", "2025-01-01T01:00:00Z", p.uri);
    r.uri = "at://b/repost/1";
    b.add(r);
    b.add(r);  // same repost record twice
    auto r2 = r;
    r2.uri = "at://c/repost/1";
    r2.author = "c";
    b.add(r2);
    auto del = r2;
    del.action = Action::del;
    del.uri = "at://c/repost/2";
    b.add(del);
    auto c = b.finish();
    ASSERT_EQ(c.posts.size(), 1u);
    EXPECT_EQ(c.posts[0].repost_count, 2u);
    EXPECT_EQ(c.interactions.size(), 2u);
}

TEST(Corpus, FilterBoundaries) {
    std::vector<PostRecord> posts{post("ok", "hello", 1),          post("short", "hell", 1),
                                  post("norepost", "hello", 0),   post("de", "hallo", 3, {"de"}),
                                  post("multi", "hello", 1, {"de", "en"}), post("utf8", "h\xC3\xA9llo", 1),
                                  post("nolang", "hello", 1, {})};
    auto kept = filter_corpus(posts);
    std::vector<std::string> uris;
    for (const auto& p : kept) uris.push_back(p.uri);
    EXPECT_EQ(uris, (std::vector<std::string>{"ok", "multi", "utf8"}));
}

TEST(Corpus, SampleSizeAndDeterminism) {
    std::vector<PostRecord> posts;
    for (int i = 0; i < 1000; ++i) posts.push_back(post("p" + std::to_string(i), "hello", 1));
    auto a = sample_corpus(posts, 0.03, 11);
    auto b = sample_corpus(posts, 0.03, 11);
    auto c = sample_corpus(posts, 0.03, 12);
    EXPECT_EQ(a.size(), 30u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    // Order-stable: a subsequence of the input.
    std::size_t j = 0;
    for (const auto& p : posts)
        if (j < a.size() && p.uri == a[j].uri) ++j;
    EXPECT_EQ(j, a.size());
    EXPECT_EQ(sample_corpus(posts, 1.0, 1).size(), 1000u);
    EXPECT_THROW(sample_corpus(posts, 0.0, 1), ArgumentError);
    EXPECT_THROW(sample_corpus(posts, 1.5, 1), ArgumentError);
}

TEST(Corpus, SampleUniformity) {
    // Each element is selected with probability `fraction`; check marginal counts over
    // many seeds against the binomial expectation.
    std::vector<PostRecord> posts;
    for (int i = 0; i < 50; ++i) posts.push_back(post("p" + std::to_string(i), "hello", 1));
    std::vector<int> hits(50, 0);
    const int trials = 4000;
    for (int s = 0; s < trials; ++s)
        for (const auto& p : sample_corpus(posts, 0.2, static_cast<std::uint64_t>(s))) ++hits[std::stoi(p.uri.substr(1))];
    for (int h : hits) EXPECT_NEAR(h / double(trials), 0.2, 0.03);
}

TEST(Corpus, SampleByDay) {
    std::vector<PostRecord> posts;
    for (int d = 1; d <= 5; ++d)
        for (int i = 0; i < 100; ++i) {
            std::string t = "2025-01-0" + std::to_string(d) + "T12:00:00Z";
            posts.push_back(post("d" + std::to_string(d) + "_" + std::to_string(i), "hello", 1, {"en"}, t.c_str()));
        }
    auto s = sample_corpus(posts, 0.1, 4, SampleMode::by_day);
    std::map<std::string, int> per_day;
    for (const auto& p : s) ++per_day[p.uri.substr(0, 2)];
    EXPECT_EQ(per_day.size(), 5u);
    for (const auto& [d, n] : per_day) EXPECT_EQ(n, 10);
}

TEST(Corpus, JsonlRoundTrip) {
    auto fx = generate_fixture({.events = 1500, .users = 30});
    CorpusBuilder b;
    for (const auto& ev : fx.events) b.add(ev);
    auto c = b.finish();
    std::stringstream sp, si;
    write_jsonl(sp, c.posts);
    write_jsonl(si, c.interactions);
    EXPECT_EQ(read_posts(sp), c.posts);
    EXPECT_EQ(read_interactions(si), c.interactions);
}
