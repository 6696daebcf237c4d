#include <gtest/gtest.h>

#include <atomic>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "polarnet/annotate.hpp"

using namespace polarnet;

namespace {

PostRecord post(std::string uri, std::string text, std::string author = "did:plc:a") {
    return {std::move(uri), std::move(author), std::move(text), {"en"}, {}, 1};
}

/// Replays a fixed list of answers, then repeats the last one.
class ScriptedProvider : public AnnotationProvider {
public:
    explicit ScriptedProvider(std::vector<std::string> answers) : answers_(std::move(answers)) {}
    std::string annotate(const AnnotationRequest&) override {
        std::size_t i = calls++;
        return answers_[std::min(i, answers_.size() - 1)];
    }
    std::atomic<std::size_t> calls{0};

private:
    std::vector<std::string> answers_;
};

class FailingProvider : public AnnotationProvider {
public:
    std::string annotate(const AnnotationRequest&) override { throw TransportError("connection refused"); }
};

} // namespace

TEST(Mock, ThemeByKeywordCount) {
    MockProvider m;
    EXPECT_EQ(m.annotate(theme_request(post("p", "The war in Ukraine and NATO"))), info(Theme::defense_international).key);
    EXPECT_EQ(m.annotate(theme_request(post("p", "Lovely morning coffee"))), "non_political");
    // Whole-word matching: "aid" does not contain the keyword "ai".
    EXPECT_EQ(m.annotate(theme_request(post("p", "First aid kit"))), "non_political");
}

TEST(Mock, TopicRestrictedToRequestedSet) {
    MockProvider m;
    auto p = post("p", "Trump and Putin talk about Ukraine and Russia");
    EXPECT_EQ(m.annotate(topic_request(p, {Topic::trump_admin, Topic::russia_ukraine})), "russia_ukraine");
    EXPECT_EQ(m.annotate(topic_request(p, {Topic::trump_admin})), "trump_admin");
    EXPECT_EQ(m.annotate(topic_request(p, {Topic::ai})), "other");
}

TEST(Mock, StanceByCueMajority) {
    MockProvider m;
    auto names = StanceNames::defaults(Topic::trump_admin);
    std::vector<PostRecord> s{post("1", "x #opposes_trump"), post("2", "y #opposes_trump"), post("3", "z #supports_trump")};
    EXPECT_EQ(m.annotate(stance_request(s, Topic::trump_admin, names)), "opposes_trump");
    s.pop_back();
    s.push_back(post("3", "z #supports_trump"));
    s.push_back(post("4", "w #supports_trump"));
    EXPECT_EQ(m.annotate(stance_request(s, Topic::trump_admin, names)), "neutral");
    // Custom display names are echoed back.
    StanceNames custom{"pro", "anti"};
    EXPECT_EQ(m.annotate(stance_request({post("1", "#opposes_trump")}, Topic::trump_admin, custom)), "anti");
}

TEST(Retry, InvalidAnswersRetriedThenGiveUp) {
    ScriptedProvider p({"bogus", "also_bogus", "civil_rights"});
    EXPECT_EQ(classify_theme(post("p", "text"), p, {3}), Theme::civil_rights);
    EXPECT_EQ(p.calls.load(), 3u);

    ScriptedProvider q({"bogus"});
    EXPECT_THROW(classify_theme(post("p", "text"), q, {2}), AnnotationError);
    EXPECT_EQ(q.calls.load(), 2u);
}

TEST(Retry, TransportErrorsPropagate) {
    FailingProvider f;
    EXPECT_THROW(annotate_themes({post("p", "text")}, f), TransportError);
}

TEST(Themes, PreconditionOnEmptyText) {
    MockProvider m;
    EXPECT_THROW(classify_theme(post("p", ""), m), PreconditionError);
}

TEST(Themes, FailuresRecordedAsUnlabeled) {
    ScriptedProvider p({"bogus"});
    auto store = annotate_themes({post("a", "text"), post("b", "")}, p, {.retry = {2}, .max_in_flight = 1, .timestamp = {}});
    EXPECT_EQ(store.size(), 0u);
    EXPECT_EQ(store.failures().size(), 2u);
    std::ostringstream out;
    store.write_failures(out);
    EXPECT_NE(out.str().find(R"("label":null)"), std::string::npos);
}

TEST(Themes, ParallelEqualsSerial) {
    std::vector<PostRecord> posts;
    const char* texts[] = {"war in gaza", "tariffs on canada", "coffee", "court ruling today", "AI research"};
    for (int i = 0; i < 200; ++i) posts.push_back(post("p" + std::to_string(i), texts[i % 5]));
    MockProvider m;
    auto a = annotate_themes(posts, m, {.max_in_flight = 1, .timestamp = "2025-06-01T00:00:00Z"});
    auto b = annotate_themes(posts, m, {.max_in_flight = 8, .timestamp = "2025-06-01T00:00:00Z"});
    std::ostringstream sa, sb;
    a.write(sa);
    b.write(sb);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_NE(sa.str().find(theme_template.hash()), std::string::npos);
}

TEST(Themes, DistributionReproducesPublishedShares) {
    // Counts from the published theme table; shares must match its percentages.
    std::array<std::uint64_t, theme_count> counts{};
    counts[static_cast<std::size_t>(Theme::non_political)] = 38129599;
    counts[static_cast<std::size_t>(Theme::civil_rights)] = 1509130;
    counts[static_cast<std::size_t>(Theme::defense_international)] = 1560553;
    counts[static_cast<std::size_t>(Theme::economy_trade_labor)] = 693207;
    counts[static_cast<std::size_t>(Theme::government_operations)] = 332586;
    counts[static_cast<std::size_t>(Theme::infrastructure_environment)] = 209171;
    counts[static_cast<std::size_t>(Theme::law_crime_justice)] = 891571;
    counts[static_cast<std::size_t>(Theme::science_technology_energy)] = 131114;
    counts[static_cast<std::size_t>(Theme::social_policy)] = 195648;
    auto d = theme_distribution(counts);
    EXPECT_EQ(d.total, 43652579u);
    EXPECT_EQ(d.political, 5522980u);
    EXPECT_NEAR(d.political_share(), 0.127, 0.0005);
    EXPECT_NEAR(*d[Theme::civil_rights].share_of_political, 0.273, 0.0005);
    EXPECT_NEAR(*d[Theme::defense_international].share_of_political, 0.283, 0.0005);
    EXPECT_NEAR(*d[Theme::law_crime_justice].share_of_political, 0.161, 0.0005);
    EXPECT_NEAR(d[Theme::defense_international].share_of_all, 0.036, 0.0005);
    EXPECT_FALSE(d[Theme::non_political].share_of_political);
}

TEST(Themes, DistributionWithoutPoliticalPosts) {
    auto d = theme_distribution(std::vector<Theme>{Theme::non_political, Theme::non_political});
    EXPECT_EQ(d.political, 0u);
    EXPECT_FALSE(d[Theme::civil_rights].share_of_political);
    EXPECT_THROW(theme_distribution(std::vector<Theme>{}), ArgumentError);
}

TEST(Clusters, SeventyFivePercentRule) {
    ClusterRecord c{"c", {}, {}};
    c.theme_histogram[static_cast<std::size_t>(Theme::non_political)] = 3;
    c.theme_histogram[static_cast<std::size_t>(Theme::civil_rights)] = 1;
    EXPECT_FALSE(classify_cluster(c));  // exactly 75% non-political: apolitical
    c.theme_histogram[static_cast<std::size_t>(Theme::civil_rights)] = 2;
    EXPECT_TRUE(classify_cluster(c));
    EXPECT_THROW(classify_cluster(ClusterRecord{"empty", {}, {}}), ArgumentError);
}

TEST(Clusters, BuiltFromAssignments) {
    ThemeStore themes;
    themes.put("a", Theme::non_political);
    themes.put("b", Theme::civil_rights);
    auto clusters = build_clusters({{"a", "k1"}, {"b", "k1"}, {"c", "k2"}}, themes);
    ASSERT_EQ(clusters.size(), 2u);
    EXPECT_EQ(clusters[0].labeled(), 2u);
    EXPECT_EQ(clusters[1].labeled(), 0u);
}

TEST(Topics, OnlyPoliticalPostsAssigned) {
    MockProvider m;
    ThemeStore themes;
    themes.put("p1", Theme::government_operations);
    themes.put("p2", Theme::non_political);
    EXPECT_THROW(assign_topic(post("p2", "trump"), themes.get("p2"), {Topic::trump_admin}, m), PreconditionError);
    EXPECT_THROW(assign_topic(post("p3", "trump"), std::nullopt, {Topic::trump_admin}, m), PreconditionError);
    auto store = annotate_topics({post("p1", "Trump again"), post("p2", "Trump again")}, themes, {Topic::trump_admin}, m);
    EXPECT_EQ(store.get("p1"), Topic::trump_admin);
    EXPECT_FALSE(store.get("p2"));
}

TEST(Stances, SampleAtMostKDeterministic) {
    std::vector<PostRecord> posts;
    for (int i = 0; i < 25; ++i) posts.push_back(post("p" + std::to_string(i), "t"));
    auto a = sample_user_posts("u", posts, 10, 3);
    EXPECT_EQ(a.size(), 10u);
    EXPECT_EQ(a, sample_user_posts("u", posts, 10, 3));
    EXPECT_NE(a, sample_user_posts("v", posts, 10, 3));
    EXPECT_EQ(sample_user_posts("u", {posts[0], posts[1]}, 10, 3).size(), 2u);
    EXPECT_THROW(sample_user_posts("u", {}, 10, 3), PreconditionError);
}

TEST(Stances, ParticipantsIncludeReposters) {
    TopicStore topics;
    topics.put("p1", Topic::trump_admin);
    std::vector<PostRecord> posts{post("p1", "trump #opposes_trump", "alice"), post("p2", "coffee", "bob")};
    std::vector<Interaction> inter{{InteractionType::repost, "carol", "p1", {}},
                                   {InteractionType::like, "dave", "p1", {}},
                                   {InteractionType::repost, "erin", "p2", {}}};
    auto parts = topic_participants(posts, inter, topics, Topic::trump_admin);
    std::vector<std::string> users;
    for (const auto& [u, _] : parts) users.push_back(u);
    EXPECT_EQ(users, (std::vector<std::string>{"alice", "carol"}));

    MockProvider m;
    StanceStore store;
    annotate_stances(store, parts, Topic::trump_admin, StanceNames::defaults(Topic::trump_admin), m, {10, 1});
    EXPECT_EQ(store.get("carol", Topic::trump_admin), Stance::against);
}

TEST(Stores, RoundTripAndVocabularyCheck) {
    ThemeStore s;
    s.put("p", Theme::civil_rights, {"h", "2025-01-01T00:00:00Z"});
    std::stringstream io;
    s.write(io);
    auto back = ThemeStore::read(io);
    EXPECT_EQ(back.get("p"), Theme::civil_rights);

    std::istringstream bad(R"({"post_uri":"p","label":"astrology"})");
    EXPECT_THROW(ThemeStore::read(bad), ParseError);

    StanceStore st;
    st.put("u", Topic::israel_palestine, Stance::against);
    std::stringstream sio;
    st.write(sio, {{Topic::israel_palestine, {"pro_pal", "pro_isr"}}});
    EXPECT_NE(sio.str().find("pro_isr"), std::string::npos);
    auto sback = StanceStore::read(sio);
    EXPECT_EQ(sback.get("u", Topic::israel_palestine), Stance::against);
}

// --- HTTP provider against a local server ----------------------------------

class LocalServer : public ::testing::Test {
protected:
    void SetUp() override {
        server_.Post("/label", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            auth_ = req.get_header_value("Authorization");
            auto body = nlohmann::json::parse(req.body);
            last_template_ = body.at("template_id").get<std::string>();
            auto labels = body.at("label_set");
            // First answer outside the set, then the last allowed label.
            std::string label = hits_ % 2 == 1 ? "nonsense" : labels.back().get<std::string>();
            res.set_content(nlohmann::json{{"label", label}}.dump(), "application/json");
        });
        server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }
    std::string url(const char* path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    std::string auth_, last_template_;
};

TEST_F(LocalServer, JsonContractWithRetryAndToken) {
    HttpProvider p(url("/label"), "secret-token", 5);
    auto names = StanceNames::defaults(Topic::tiktok_ban);
    auto s = classify_stance("u", {post("1", "tiktok")}, Topic::tiktok_ban, names, p, {3});
    EXPECT_EQ(s, Stance::against);
    EXPECT_EQ(hits_.load(), 2);
    EXPECT_EQ(auth_, "Bearer secret-token");
    EXPECT_EQ(last_template_, "stance.v1");
}

TEST_F(LocalServer, ServerErrorIsTransportError) {
    HttpProvider p(url("/broken"), "", 5);
    EXPECT_THROW(p.annotate(theme_request(post("p", "x"))), TransportError);
}

TEST(HttpProvider, RejectsNonUrl) { EXPECT_THROW(HttpProvider("localhost"), ConfigError); }

TEST(HttpProvider, UnreachableIsTransportError) {
    HttpProvider p("http://127.0.0.1:1/label", "", 1);
    EXPECT_THROW(p.annotate(theme_request(post("p", "x"))), TransportError);
}
