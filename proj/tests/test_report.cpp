#include <gtest/gtest.h>

#include <sstream>

#include "polarnet/report.hpp"

using namespace polarnet;

TEST(Format, NumbersAndCounts) {
    EXPECT_EQ(fmt_fixed(-0.001, 2), "0.00");
    EXPECT_EQ(fmt_fixed(-0.0, 2), "0.00");
    EXPECT_EQ(fmt_fixed(-0.006, 2), "-0.01");
    EXPECT_EQ(fmt_index(0.125), "0.12");
    EXPECT_EQ(fmt_index(std::nullopt), "--");
    EXPECT_EQ(fmt_count(0), "0");
    EXPECT_EQ(fmt_count(999), "999");
    EXPECT_EQ(fmt_count(1000), "1,000");
    EXPECT_EQ(fmt_count(43652579), "43,652,579");
    EXPECT_EQ(fmt_percent(0.1265), "12.7%");
    EXPECT_EQ(csv_number(std::nullopt), "");
    EXPECT_EQ(csv_number(0.5), "0.500000");
    EXPECT_EQ(humanize_label("opposes_trump"), "Opposes Trump");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Tables, PolarizationHeaderAndDashes) {
    MetricReport r;
    r.topic = "us_canada";
    r.frac_a = 0.47;
    r.frac_neutral = 0.46;
    r.frac_b = 0.07;
    r.simpson = simpson(0.47, 0.46, 0.07);
    r.dominant_name = "supports_canada";
    auto t = polarization_table({r});
    EXPECT_EQ(t.first, (std::vector<std::string>{"Topic", "% A", "% Neutral", "% B", "Simpson", "Assort.", "AEI",
                                                 "Col. A", "Col. B", "Dominant Stance"}));
    EXPECT_EQ(t.second[0], (std::vector<std::string>{"US-Canada relations", "0.47", "0.46", "0.07", "0.23", "--", "--",
                                                     "--", "--", "Supports Canada"}));
    auto c = polarization_table({r}, true);
    EXPECT_EQ(c.second[0][5], "");
    EXPECT_EQ(c.second[0][4].substr(0, 4), "0.22");
}

TEST(Tables, SingleGroupRowFullyDashed) {
    StructuralReport rep;
    rep.topic = "tiktok_ban";
    rep.groups = 1;
    rep.composition.max_ds = 1.0;
    rep.composition.min_ds = 1.0;
    auto row = structural_row(rep);
    auto t = structural_table({row});
    EXPECT_EQ(t.second[0], (std::vector<std::string>{"TikTok ban", "--", "--", "--", "1", "--", "--"}));
    auto c = structural_table({row}, true);
    EXPECT_EQ(c.second[0], (std::vector<std::string>{"TikTok ban", "", "", "", "1", "", ""}));

    rep.groups = 2;
    EXPECT_EQ(structural_table({structural_row(rep)}).second[0][5], "1.00");
}

TEST(Tables, ThemeSharesAndCounts) {
    std::array<std::uint64_t, theme_count> counts{};
    counts[static_cast<std::size_t>(Theme::non_political)] = 873;
    counts[static_cast<std::size_t>(Theme::civil_rights)] = 127;
    auto t = theme_table_cells(theme_distribution(counts));
    EXPECT_EQ(t.second.front(), (std::vector<std::string>{"Apolitical", "87.3%", "--", "873"}));
    EXPECT_EQ(t.second[1], (std::vector<std::string>{"Political", "12.7%", "100.0%", "127"}));
    EXPECT_EQ(t.second[2][0], "Civil Rights");
    EXPECT_EQ(t.second.back(), (std::vector<std::string>{"Total", "100.0%", "--", "1,000"}));
}

TEST(Tables, JointTableLabels) {
    JointStanceTable jt;
    jt.topic_x = "trump_admin";
    jt.topic_y = "russia_ukraine";
    jt.p[0][2] = 1.0;
    auto nx = StanceNames::defaults(Topic::trump_admin), ny = StanceNames::defaults(Topic::russia_ukraine);
    auto md = joint_table(jt, nx, ny);
    EXPECT_EQ(md.first[0], "Trump \\ RUS-UKR");
    EXPECT_EQ(md.first[3], "Supports Russia");
    EXPECT_EQ(md.second[0][3], "1.00");
    auto csv = joint_table(jt, nx, ny, true);
    EXPECT_EQ(csv.first[3], "supports_russia");
    EXPECT_EQ(csv.second[0][0], "supports_trump");
}

TEST(Tables, MarkdownAndCsvShapes) {
    TableCells t{{"a", "b"}, {{"x", "1"}}};
    std::ostringstream md, csv;
    write_markdown(md, t);
    write_csv(csv, t);
    EXPECT_EQ(md.str(), "| a | b |\n| --- | ---: |\n| x | 1 |\n");
    EXPECT_EQ(csv.str(), "a,b\nx,1\n");
}

TEST(Bundle, AbsentSectionsMarked) {
    ReportBundle b;
    std::ostringstream out;
    render_markdown(out, b);
    auto s = out.str();
    for (const char* what : {"activity statistics", "theme labels", "topic networks", "stance metrics",
                             "structural metrics", "overlap matrix", "hypergraph", "joint stance tables"})
        EXPECT_NE(s.find(std::string("_Section absent: ") + what), std::string::npos) << what;

    b.pairwise["tiktok_ban"] = {};
    TopicHypergraph h;
    h.nodes = {"trump_admin", "elon_musk"};
    h.hyperedges = {{0, 1}};
    b.hypergraph = h;
    b.joint.push_back({"trump_admin", "ai", {}, {}, std::nullopt});
    std::ostringstream out2;
    render_markdown(out2, b);
    s = out2.str();
    EXPECT_NE(s.find("Single group; no pairs."), std::string::npos);
    EXPECT_NE(s.find("- {Trump, Musk}"), std::string::npos);
    EXPECT_NE(s.find("Threshold: J > 0.20"), std::string::npos);
    EXPECT_NE(s.find("No shared users."), std::string::npos);
}
