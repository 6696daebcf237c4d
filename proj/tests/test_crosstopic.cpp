#include <gtest/gtest.h>

#include "polarnet/crosstopic.hpp"
#include "support.hpp"

using namespace polarnet;
using namespace testing_support;

namespace {

using Cliques = std::vector<std::vector<std::size_t>>;

/// Every subset of at least two vertices that is a clique and cannot be extended.
Cliques brute_force_cliques(const TopicMatrix& m, double threshold, bool inclusive) {
    std::size_t n = m.size();
    auto adj = [&](std::size_t i, std::size_t j) {
        auto v = m.at(i, j);
        return v && (inclusive ? *v >= threshold : *v > threshold);
    };
    auto is_clique = [&](std::uint32_t mask) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if ((mask >> i & 1) && (mask >> j & 1) && !adj(i, j)) return false;
        return true;
    };
    Cliques out;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        if (std::popcount(mask) < 2 || !is_clique(mask)) continue;
        bool maximal = true;
        for (std::size_t v = 0; v < n && maximal; ++v)
            if (!(mask >> v & 1) && is_clique(mask | (1u << v))) maximal = false;
        if (!maximal) continue;
        std::vector<std::size_t> c;
        for (std::size_t v = 0; v < n; ++v)
            if (mask >> v & 1) c.push_back(v);
        out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

TopicMatrix random_matrix(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 0.45);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("t" + std::to_string(i));
    TopicMatrix m(names);
    for (std::size_t i = 0; i < n; ++i) {
        m.set(i, i, 1.0);
        for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, std::round(u(rng) * 100) / 100);
    }
    return m;
}

} // namespace

TEST(Overlap, JaccardAgainstCounting) {
    std::set<std::string> a{"u1", "u2", "u3", "u4"}, b{"u3", "u4", "u5"};
    EXPECT_DOUBLE_EQ(*jaccard(a, b), 2.0 / 5.0);
    EXPECT_DOUBLE_EQ(*jaccard(a, a), 1.0);
    EXPECT_DOUBLE_EQ(*jaccard(a, {}), 0.0);
    EXPECT_FALSE(jaccard({}, {}));

    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        std::set<std::string> x, y;
        for (int i = 0; i < 60; ++i) {
            if (rng() % 3 == 0) x.insert(node_name(i));
            if (rng() % 2 == 0) y.insert(node_name(i));
        }
        double inter = 0, uni = 0;
        for (int i = 0; i < 60; ++i) {
            bool in_x = x.count(node_name(i)), in_y = y.count(node_name(i));
            inter += in_x && in_y;
            uni += in_x || in_y;
        }
        EXPECT_DOUBLE_EQ(*jaccard(x, y), inter / uni);
    }
}

TEST(Overlap, MatrixFromNetworks) {
    TopicNetwork g1, g2;
    g1.topic = "a";
    g2.topic = "b";
    g1.add_edge("x", "y");
    g2.add_edge("y", "z");
    auto m = jaccard_matrix({&g1, &g2});
    EXPECT_DOUBLE_EQ(*m.at(0, 1), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(*m.at(1, 0), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(*m.at(0, 0), 1.0);
    EXPECT_THROW(jaccard_matrix({&g1}), ArgumentError);
}

TEST(Hypergraph, ChainGivesTwoEdges) {
    TopicMatrix m({"a", "b", "c"});
    m.set(0, 1, 0.3);
    m.set(1, 2, 0.3);
    m.set(0, 2, 0.1);
    auto h = topic_hypergraph(m);
    EXPECT_EQ(h.hyperedges, (Cliques{{0, 1}, {1, 2}}));
    auto j = to_json(h);
    EXPECT_EQ(j["comparison"], ">");
    EXPECT_EQ(j["hyperedges"][1][1], "c");
}

TEST(Hypergraph, ThresholdIsStrictByDefault) {
    TopicMatrix m({"a", "b"});
    m.set(0, 1, 0.2);
    EXPECT_TRUE(topic_hypergraph(m, 0.2).hyperedges.empty());
    EXPECT_EQ(topic_hypergraph(m, 0.2, true).hyperedges.size(), 1u);
    EXPECT_THROW(topic_hypergraph(m, 0.0), ArgumentError);
    EXPECT_THROW(topic_hypergraph(m, 1.0), ArgumentError);
}

TEST(Hypergraph, PublishedBundlesFromConstructedOverlaps) {
    std::vector<std::string> t{"Trump", "Musk", "Canada", "Fires", "DEI", "TikTok", "ISR-PAL", "RUS-UKR", "LGBTQ", "AI"};
    auto idx = [&](const std::string& s) { return std::size_t(std::find(t.begin(), t.end(), s) - t.begin()); };
    std::vector<std::vector<std::string>> bundles{{"DEI", "ISR-PAL", "Musk", "Trump", "LGBTQ"},
                                                  {"DEI", "ISR-PAL", "Musk", "Trump", "RUS-UKR"},
                                                  {"DEI", "ISR-PAL", "Musk", "RUS-UKR", "Fires", "Canada"},
                                                  {"DEI", "TikTok", "Canada", "Fires"}};
    TopicMatrix m(t);
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = i; j < t.size(); ++j) m.set(i, j, i == j ? 1.0 : 0.08);
    for (const auto& b : bundles)
        for (const auto& x : b)
            for (const auto& y : b)
                if (x != y) m.set(idx(x), idx(y), 0.25);
    m.set(idx("TikTok"), idx("Fires"), 0.23);
    m.set(idx("Trump"), idx("Musk"), 0.35);
    m.set(idx("Trump"), idx("RUS-UKR"), 0.32);
    m.set(idx("Musk"), idx("RUS-UKR"), 0.31);
    m.set(idx("AI"), idx("Trump"), 0.20);  // at the threshold: excluded

    Cliques expected;
    for (const auto& b : bundles) {
        std::vector<std::size_t> c;
        for (const auto& x : b) c.push_back(idx(x));
        std::sort(c.begin(), c.end());
        expected.push_back(c);
    }
    std::sort(expected.begin(), expected.end());
    auto h = topic_hypergraph(m, 0.2);
    EXPECT_EQ(h.hyperedges, expected);
    EXPECT_EQ(h.hyperedges, brute_force_cliques(m, 0.2, false));
    EXPECT_EQ(topic_hypergraph(m, 0.2, true).hyperedges.size(), 5u);
}

TEST(Hypergraph, RandomMatricesMatchBruteForce) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto m = random_matrix(4 + seed % 7, seed);
        for (bool inclusive : {false, true})
            EXPECT_EQ(topic_hypergraph(m, 0.2, inclusive).hyperedges, brute_force_cliques(m, 0.2, inclusive)) << seed;
    }
}

TEST(Alignment, NmiAgainstReference) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
        UserGrouping gx, gy;
        std::vector<int> x, y;
        for (int i = 0; i < 40; ++i) {
            int a = int(rng() % 3), b = int(rng() % 4);
            gx[node_name(i)] = a;
            if (i % 5 != 0) {
                gy[node_name(i)] = b;
                x.push_back(a);
                y.push_back(b);
            }
        }
        gy["only_in_y"] = 0;
        EXPECT_NEAR(*nmi_alignment(gx, gy), reference_nmi(x, y), 1e-12);
    }
}

TEST(Alignment, Boundaries) {
    UserGrouping a{{"u1", 0}, {"u2", 1}, {"u3", 1}};
    UserGrouping relabeled{{"u1", 7}, {"u2", 3}, {"u3", 3}};
    EXPECT_NEAR(*nmi_alignment(a, relabeled), 1.0, 1e-12);
    EXPECT_FALSE(nmi_alignment(a, {{"u1", 0}}));
    EXPECT_EQ(*nmi_alignment(a, {{"u1", 0}, {"u2", 0}, {"u3", 0}}), 0.0);

    UserGrouping b{{"u1", 0}, {"u2", 1}, {"u3", 2}};
    double hx = -(1.0 / 3 * std::log(1.0 / 3) + 2.0 / 3 * std::log(2.0 / 3)), hy = std::log(3.0);
    double mi = hx;  // b refines a
    EXPECT_NEAR(*nmi_alignment(a, b, NmiNorm::min), mi / std::min(hx, hy), 1e-12);
    EXPECT_NEAR(*nmi_alignment(a, b, NmiNorm::max), mi / std::max(hx, hy), 1e-12);
    EXPECT_NEAR(*nmi_alignment(a, b), 2 * mi / (hx + hy), 1e-12);
}

TEST(Alignment, StanceGroupingsDropNeutralOnRequest) {
    std::map<std::string, Stance> s{{"a", Stance::for_}, {"b", Stance::neutral}, {"c", Stance::against}};
    EXPECT_EQ(user_grouping(s).size(), 3u);
    EXPECT_EQ(user_grouping(s, true).size(), 2u);
    auto m = alignment_matrix({"x", "y"}, {user_grouping(s), user_grouping(s)});
    EXPECT_NEAR(*m.at(0, 1), 1.0, 1e-12);
}

TEST(Joint, TableSumsToOne) {
    std::map<std::string, Stance> sx{{"a", Stance::for_}, {"b", Stance::for_}, {"c", Stance::against}, {"d", Stance::neutral}};
    std::map<std::string, Stance> sy{{"a", Stance::against}, {"b", Stance::for_}, {"c", Stance::against}, {"z", Stance::for_}};
    auto t = joint_stance_table("x", sx, "y", sy);
    ASSERT_TRUE(t);
    EXPECT_EQ(t->users, 3u);
    double total = 0;
    for (auto r : all_stances)
        for (auto c : all_stances) total += t->cell(r, c);
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(t->cell(Stance::for_, Stance::against), 1.0 / 3, 1e-12);
    EXPECT_NEAR(t->cell(Stance::against, Stance::against), 1.0 / 3, 1e-12);
    EXPECT_EQ(t->cell(Stance::neutral, Stance::neutral), 0.0);
    EXPECT_FALSE(joint_stance_table("x", sx, "y", {{"q", Stance::for_}}));
}
