#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "polarnet/corpus.hpp"
#include "polarnet/labels.hpp"
#include "polarnet/provider.hpp"

namespace polarnet {

/// The provider kept answering outside the label set.
class AnnotationError : public Error {
public:
    using Error::Error;
};

struct AnnotateOptions {
    RetryPolicy retry{};
    std::size_t max_in_flight = 4;
    std::string timestamp;  // recorded with every label
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be written to
/// per-index slots by the caller so output order never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                        next = n;
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Themes

inline AnnotationRequest theme_request(const PostRecord& post) {
    std::string categories;
    std::vector<std::string> labels;
    for (const auto& t : theme_table) {
        categories += "- " + std::string(t.key) + ": " + std::string(t.display) + ". " + std::string(t.description) + "\n";
        labels.emplace_back(t.key);
    }
    AnnotationRequest req;
    req.template_id = theme_template.id;
    req.template_hash = theme_template.hash();
    req.context = {{"text", post.text},
                   {"prompt", render_template(theme_template.text, {{"categories", categories}, {"text", post.text}})}};
    req.label_set = std::move(labels);
    return req;
}

inline Theme classify_theme(const PostRecord& post, AnnotationProvider& provider, RetryPolicy retry = {}) {
    if (post.text.empty()) throw PreconditionError("classify_theme: post " + post.uri + " has empty text");
    auto label = request_label(provider, theme_request(post), retry);
    if (!label) throw AnnotationError("no valid theme for " + post.uri + " after " + std::to_string(retry.max_attempts) + " attempts");
    return *theme_from_key(*label);
}

struct ThemeRow {
    Theme theme{};
    std::uint64_t count = 0;
    double share_of_all = 0;
    std::optional<double> share_of_political;
};

struct ThemeDistribution {
    std::uint64_t total = 0;
    std::uint64_t political = 0;
    std::vector<ThemeRow> rows;  // one per theme, enum order

    double political_share() const { return total ? double(political) / double(total) : 0.0; }
    const ThemeRow& operator[](Theme t) const { return rows[static_cast<std::size_t>(t)]; }
};

/// Per-theme counts and shares. Political-conditional shares are absent when no post is
/// political.
inline ThemeDistribution theme_distribution(const std::array<std::uint64_t, theme_count>& counts) {
    ThemeDistribution d;
    d.total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (d.total == 0) throw ArgumentError("theme_distribution: no labels");
    d.political = d.total - counts[static_cast<std::size_t>(Theme::non_political)];
    for (const auto& t : theme_table) {
        ThemeRow r;
        r.theme = t.theme;
        r.count = counts[static_cast<std::size_t>(t.theme)];
        r.share_of_all = double(r.count) / double(d.total);
        if (d.political > 0 && is_political(t.theme)) r.share_of_political = double(r.count) / double(d.political);
        d.rows.push_back(r);
    }
    return d;
}

inline ThemeDistribution theme_distribution(const std::vector<Theme>& labels) {
    std::array<std::uint64_t, theme_count> counts{};
    for (Theme t : labels) ++counts[static_cast<std::size_t>(t)];
    return theme_distribution(counts);
}

inline ThemeDistribution theme_distribution(const ThemeStore& store) {
    std::array<std::uint64_t, theme_count> counts{};
    store.for_each([&](const std::string&, Theme t) { ++counts[static_cast<std::size_t>(t)]; });
    return theme_distribution(counts);
}

// ---------------------------------------------------------------------------
// Clusters

struct ClusterRecord {
    std::string cluster_id;
    std::vector<std::string> member_posts;
    std::array<std::uint64_t, theme_count> theme_histogram{};

    std::uint64_t labeled() const {
        return std::accumulate(theme_histogram.begin(), theme_histogram.end(), std::uint64_t{0});
    }
};

/// A cluster is apolitical when at least `threshold` of its posts are non-political.
inline bool classify_cluster(const ClusterRecord& c, double threshold = 0.75) {
    std::uint64_t n = c.labeled();
    if (n == 0) throw ArgumentError("classify_cluster: cluster '" + c.cluster_id + "' is empty");
    double non_political = double(c.theme_histogram[static_cast<std::size_t>(Theme::non_political)]) / double(n);
    return non_political < threshold;
}

/// Groups posts by an external cluster assignment and fills histograms from theme labels.
/// Posts without a theme label are left out of the histogram.
inline std::vector<ClusterRecord> build_clusters(const std::map<std::string, std::string>& post_to_cluster,
                                                 const ThemeStore& themes) {
    std::map<std::string, ClusterRecord> by_id;
    for (const auto& [uri, cid] : post_to_cluster) {
        auto& c = by_id[cid];
        c.cluster_id = cid;
        if (auto t = themes.get(uri)) {
            c.member_posts.push_back(uri);
            ++c.theme_histogram[static_cast<std::size_t>(*t)];
        }
    }
    std::vector<ClusterRecord> out;
    for (auto& [id, c] : by_id) out.push_back(std::move(c));
    return out;
}

// ---------------------------------------------------------------------------
// Topics

inline AnnotationRequest topic_request(const PostRecord& post, const std::vector<Topic>& topics) {
    std::string listing;
    std::vector<std::string> labels;
    for (Topic t : topics) {
        listing += "- " + std::string(info(t).key) + ": " + std::string(info(t).display) + "\n";
        labels.emplace_back(info(t).key);
    }
    listing += "- other: none of the above\n";
    labels.emplace_back(info(Topic::other).key);
    AnnotationRequest req;
    req.template_id = topic_template.id;
    req.template_hash = topic_template.hash();
    req.context = {{"text", post.text},
                   {"prompt", render_template(topic_template.text, {{"labels", listing}, {"text", post.text}})}};
    req.label_set = std::move(labels);
    return req;
}

inline Topic assign_topic(const PostRecord& post, std::optional<Theme> theme, const std::vector<Topic>& topics,
                          AnnotationProvider& provider, RetryPolicy retry = {}) {
    if (!theme || !is_political(*theme))
        throw PreconditionError("assign_topic: post " + post.uri + " is not labeled political");
    auto label = request_label(provider, topic_request(post, topics), retry);
    if (!label) throw AnnotationError("no valid topic for " + post.uri);
    return *topic_from_key(*label);
}

// ---------------------------------------------------------------------------
// Stances

/// Up to `k` posts drawn uniformly without replacement, kept in input order.
inline std::vector<PostRecord> sample_user_posts(const std::string& user, const std::vector<PostRecord>& topic_corpus,
                                                 std::size_t k, std::uint64_t seed) {
    if (topic_corpus.empty()) throw PreconditionError("user " + user + " has no posts in the topic");
    std::vector<std::size_t> idx(topic_corpus.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t take = std::min(k, idx.size());
    Rng rng(derive_seed(seed, user));
    for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + uniform_below(rng, idx.size() - i)]);
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    std::vector<PostRecord> out;
    for (std::size_t i : idx) out.push_back(topic_corpus[i]);
    return out;
}

inline AnnotationRequest stance_request(const std::vector<PostRecord>& sample, Topic topic, const StanceNames& names) {
    std::vector<std::string> texts;
    std::string listing;
    for (const auto& p : sample) {
        texts.push_back(p.text);
        listing += "- " + p.text + "\n";
    }
    AnnotationRequest req;
    req.template_id = stance_template.id;
    req.template_hash = stance_template.hash();
    req.label_set = {names.for_name, "neutral", names.against_name};
    std::string label_list = names.for_name + ", neutral, " + names.against_name;
    req.context = {{"topic", info(topic).display},
                   {"topic_key", info(topic).key},
                   {"for_name", names.for_name},
                   {"against_name", names.against_name},
                   {"posts", texts},
                   {"prompt", render_template(stance_template.text, {{"topic", std::string(info(topic).display)},
                                                                     {"labels", label_list},
                                                                     {"posts", listing}})}};
    return req;
}

inline Stance classify_stance(const std::string& user, const std::vector<PostRecord>& sample, Topic topic,
                              const StanceNames& names, AnnotationProvider& provider, RetryPolicy retry = {}) {
    if (sample.empty()) throw PreconditionError("classify_stance: empty sample for " + user);
    auto label = request_label(provider, stance_request(sample, topic, names), retry);
    if (!label) throw AnnotationError("no valid stance for " + user);
    return *names.parse(*label);
}

// ---------------------------------------------------------------------------
// Batch drivers

inline ThemeStore annotate_themes(const std::vector<PostRecord>& posts, AnnotationProvider& provider,
                                  const AnnotateOptions& opt = {}) {
    ThemeStore store;
    const LabelMeta meta{theme_template.hash(), opt.timestamp};
    parallel_for(posts.size(), opt.max_in_flight, [&](std::size_t i) {
        try {
            store.put(posts[i].uri, classify_theme(posts[i], provider, opt.retry), meta);
        } catch (const AnnotationError& e) {
            store.put_failure(posts[i].uri, e.what());
        } catch (const PreconditionError& e) {
            store.put_failure(posts[i].uri, e.what());
        }
    });
    return store;
}

inline TopicStore annotate_topics(const std::vector<PostRecord>& posts, const ThemeStore& themes,
                                  const std::vector<Topic>& topics, AnnotationProvider& provider,
                                  const AnnotateOptions& opt = {}) {
    std::vector<std::size_t> political;
    for (std::size_t i = 0; i < posts.size(); ++i)
        if (auto t = themes.get(posts[i].uri); t && is_political(*t)) political.push_back(i);
    TopicStore store;
    const LabelMeta meta{topic_template.hash(), opt.timestamp};
    parallel_for(political.size(), opt.max_in_flight, [&](std::size_t k) {
        const auto& p = posts[political[k]];
        try {
            store.put(p.uri, assign_topic(p, themes.get(p.uri), topics, provider, opt.retry), meta);
        } catch (const AnnotationError& e) {
            store.put_failure(p.uri, e.what());
        }
    });
    return store;
}

/// For one topic: every user who authored or reposted a topic post, with those posts in
/// corpus order (authored first, then reposted, deduplicated).
inline std::map<std::string, std::vector<PostRecord>> topic_participants(const std::vector<PostRecord>& posts,
                                                                         const std::vector<Interaction>& interactions,
                                                                         const TopicStore& topics, Topic topic) {
    std::unordered_map<std::string, std::size_t> by_uri;
    std::map<std::string, std::vector<std::size_t>> per_user;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (topics.get(posts[i].uri) != topic) continue;
        by_uri.emplace(posts[i].uri, i);
        per_user[posts[i].author].push_back(i);
    }
    for (const auto& it : interactions) {
        if (it.type != InteractionType::repost) continue;
        auto p = by_uri.find(it.subject);
        if (p == by_uri.end()) continue;
        auto& v = per_user[it.actor];
        if (std::find(v.begin(), v.end(), p->second) == v.end()) v.push_back(p->second);
    }
    std::map<std::string, std::vector<PostRecord>> out;
    for (auto& [user, idx] : per_user)
        for (std::size_t i : idx) out[user].push_back(posts[i]);
    return out;
}

struct StanceOptions {
    std::size_t posts_per_user = 10;
    std::uint64_t seed = 0;
};

inline void annotate_stances(StanceStore& store, const std::map<std::string, std::vector<PostRecord>>& participants,
                             Topic topic, const StanceNames& names, AnnotationProvider& provider,
                             const StanceOptions& sopt, const AnnotateOptions& opt = {}) {
    std::vector<const std::string*> users;
    for (const auto& [u, _] : participants) users.push_back(&u);
    const LabelMeta meta{stance_template.hash(), opt.timestamp};
    auto topic_seed = derive_seed(sopt.seed, info(topic).key);
    parallel_for(users.size(), opt.max_in_flight, [&](std::size_t i) {
        const auto& user = *users[i];
        try {
            auto sample = sample_user_posts(user, participants.at(user), sopt.posts_per_user, topic_seed);
            store.put(user, topic, classify_stance(user, sample, topic, names, provider, opt.retry), meta);
        } catch (const AnnotationError& e) {
            store.put_failure(user, topic, e.what());
        } catch (const PreconditionError& e) {
            store.put_failure(user, topic, e.what());
        }
    });
}

} // namespace polarnet
