#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <unistd.h>

#include "polarnet/pipeline.hpp"
#include "polarnet/synthetic.hpp"

using namespace polarnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

/// Scratch directory holding a small synthetic dump, removed on teardown.
class PipelineTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("polarnet-test-" + std::to_string(::getpid()) + "-" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root_);
        fs::create_directories(root_ / "data");
        auto fx = generate_fixture({.seed = 3, .events = 3000, .users = 60, .within_camp = 0.9});
        std::ofstream out(root_ / "data" / "events.jsonl");
        for (const auto& e : fx.events) out << serialize_event(e) << '\n';
    }
    void TearDown() override { fs::remove_all(root_); }

    nlohmann::json config_json(const std::string& workdir = "work") const {
        return {{"inputs", {"data/*.jsonl"}},
                {"workdir", workdir},
                {"seed", 7},
                {"coverage", "observed"},
                {"topics", {"trump_admin", "russia_ukraine", "israel_palestine"}},
                {"groups", {{"max_groups", 4}, {"runs", 3}, {"iters", 10}}}};
    }
    PipelineConfig config(const std::string& workdir = "work") const { return parse_config(config_json(workdir), root_); }

    fs::path root_;
};

} // namespace

TEST(Config, RequiredKeysAndValidation) {
    EXPECT_THROW(parse_config(nlohmann::json::array()), ConfigError);
    EXPECT_THROW(parse_config({{"seed", 1}}), ConfigError);
    EXPECT_THROW(parse_config({{"inputs", "x"}}), ConfigError);
    nlohmann::json ok{{"inputs", "x"}, {"seed", 1}};
    EXPECT_NO_THROW(parse_config(ok));
    for (auto [key, bad] : std::vector<std::pair<std::string, nlohmann::json>>{
             {"window", "2025-01"}, {"tau", "likes"}, {"coverage", "moon"}, {"topics", {"astrology"}},
             {"sample", {{"fraction", 0}}}, {"crosstopic", {{"threshold", 1.5}}}, {"seed", "seven"}}) {
        auto j = ok;
        j[key] = bad;
        EXPECT_THROW(parse_config(j), ConfigError) << key;
    }
}

TEST(Config, PathsRelativeToConfigAndHashStable) {
    auto c = parse_config({{"inputs", "x"}, {"seed", 1}, {"workdir", "w"}}, "/srv/run");
    EXPECT_EQ(c.workdir, fs::path("/srv/run/w"));
    EXPECT_EQ(c.topics.size(), topic_count - 1);
    EXPECT_EQ(c.run_dir().filename().string().size(), 16u);
    auto d = parse_config({{"inputs", "x"}, {"seed", 1}, {"workdir", "w"}, {"groups", {{"threads", 8}}}}, "/srv/run");
    EXPECT_EQ(c.hash(), d.hash());  // thread count never changes results
    auto e = parse_config({{"inputs", "x"}, {"seed", 2}, {"workdir", "w"}}, "/srv/run");
    EXPECT_NE(c.hash(), e.hash());
}

TEST(Config, GraphVariantsChangeTheHash) {
    nlohmann::json j{{"inputs", "x"}, {"seed", 1}};
    auto base = parse_config(j);
    EXPECT_FALSE(base.include_isolated);
    EXPECT_FALSE(base.simple_graph);
    auto iso = j;
    iso["include_isolated"] = true;
    auto simple = j;
    simple["groups"] = {{"simple_graph", true}};
    EXPECT_TRUE(parse_config(iso).include_isolated);
    EXPECT_TRUE(parse_config(simple).simple_graph);
    EXPECT_NE(parse_config(iso).hash(), base.hash());
    EXPECT_NE(parse_config(simple).hash(), base.hash());
    simple["groups"]["simple_graph"] = "yes";
    EXPECT_THROW(parse_config(simple), ConfigError);
}

TEST(Config, TokenFromEnvironmentIsNotHashed) {
    nlohmann::json j{{"inputs", "x"}, {"seed", 1}};
    auto before = parse_config(j);
    ::setenv(env_provider_token, "s3cret", 1);
    auto after = parse_config(j);
    ::unsetenv(env_provider_token);
    EXPECT_EQ(after.provider_token, "s3cret");
    EXPECT_EQ(before.hash(), after.hash());
    EXPECT_EQ(after.canonical().dump().find("s3cret"), std::string::npos);
}

TEST(Stages, ParseList) {
    EXPECT_EQ(parse_stage_list("all"), stage_names());
    EXPECT_EQ(parse_stage_list("graph,groups"), (std::vector<std::string>{"graph", "groups"}));
    EXPECT_THROW(parse_stage_list("graph,bogus"), ConfigError);
}

TEST_F(PipelineTest, MissingInputGlobIsConfigError) {
    auto j = config_json();
    j["inputs"] = {"nothing/*.jsonl"};
    Pipeline p(parse_config(j, root_), nullptr);
    EXPECT_THROW(p.run({"ingest"}), ConfigError);
}

TEST_F(PipelineTest, FullRunCachedRerunAndDeterminism) {
    Pipeline a(config("work-a"), nullptr);
    for (const auto& o : a.run()) EXPECT_FALSE(o.cached) << o.stage;
    for (const auto& o : a.run()) EXPECT_TRUE(o.cached) << o.stage;

    Pipeline b(config("work-b"), nullptr);
    b.run();
    auto ma = a.verified_manifest("report", "test"), mb = b.verified_manifest("report", "test");
    EXPECT_EQ(ma.outputs, mb.outputs);
    for (const auto& stage : stage_names()) {
        auto x = a.verified_manifest(stage, "test"), y = b.verified_manifest(stage, "test");
        EXPECT_EQ(x.outputs, y.outputs) << stage;
        EXPECT_EQ(x.inputs.size(), y.inputs.size()) << stage;
    }
    auto report = slurp(a.stage_dir("report") / "report.md");
    EXPECT_NE(report.find("## Stance polarization"), std::string::npos);
    EXPECT_NE(report.find("Trump administration"), std::string::npos);

    auto out = root_ / "exported";
    auto files = export_report(a, out);
    EXPECT_EQ(files.size(), ma.outputs.size());
    EXPECT_EQ(slurp(out / "report.md"), report);
}

TEST_F(PipelineTest, MissingUpstreamNamesStages) {
    Pipeline p(config(), nullptr);
    p.run({"ingest", "annotate", "graph"});
    try {
        p.run({"metrics"});
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("missing upstream artifact"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'groups'"), std::string::npos) << msg;
        EXPECT_EQ(msg.find("'graph'"), std::string::npos) << msg;
    }
}

TEST_F(PipelineTest, TamperedOutputDetected) {
    Pipeline p(config(), nullptr);
    p.run({"ingest", "annotate", "graph"});
    {
        std::ofstream f(p.stage_dir("graph") / "stats.json", std::ios::app);
        f << " ";
    }
    try {
        p.run({"groups"});
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("hash mismatch"), std::string::npos) << msg;
        EXPECT_NE(msg.find("stats.json"), std::string::npos) << msg;
    }
    // Re-running the tampered stage itself regenerates it.
    auto o = p.run({"graph"});
    EXPECT_FALSE(o[0].cached);
    EXPECT_NO_THROW(p.run({"groups"}));
}

TEST_F(PipelineTest, ProviderFactoryIsUsed) {
    int made = 0;
    Pipeline p(config(), nullptr, [&](const PipelineConfig&) {
        ++made;
        return std::make_unique<MockProvider>();
    });
    p.run({"ingest", "annotate"});
    EXPECT_EQ(made, 1);
    EXPECT_TRUE(fs::exists(p.stage_dir("annotate") / "stances.jsonl"));
}
