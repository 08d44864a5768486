#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "ronfa/embedding_store.hpp"
#include "ronfa/episode_sampler.hpp"
#include "ronfa/random.hpp"

using namespace ronfa;

namespace {

// Reference SplitMix64 generator, written as in its public description.
struct SplitMix64Reference {
    std::uint64_t x;
    std::uint64_t next() {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

const EmbeddingSet& twenty_class_set() {
    static const auto syn = generate_synthetic({20, 30, 8, 10.0, 0.5}, 99);
    return syn.set;
}

bool same_points(const Episode& a, const Episode& b) {
    if (a.class_map != b.class_map || a.support.size() != b.support.size() || a.query.size() != b.query.size())
        return false;
    for (std::size_t i = 0; i < a.support.size(); ++i)
        if (a.support[i].features != b.support[i].features || a.support[i].given_label != b.support[i].given_label ||
            a.support[i].true_label != b.support[i].true_label)
            return false;
    for (std::size_t i = 0; i < a.query.size(); ++i)
        if (a.query[i].features != b.query[i].features || a.query[i].true_label != b.query[i].true_label) return false;
    return a.pair_map == b.pair_map;
}

}  // namespace

TEST(DeriveEpisodeSeed, MatchesSplitMix64Stream) {
    EXPECT_EQ(derive_episode_seed(0, 0), 0xE220A8397B1DCDAFULL);
    SplitMix64Reference ref{42};
    for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(derive_episode_seed(42, i), ref.next());
    EXPECT_NE(derive_episode_seed(42, 0), derive_episode_seed(42, 1));
    EXPECT_EQ(derive_episode_seed(42, 7), derive_episode_seed(42, 7));
}

TEST(SampleEpisode, FiveWayFiveShotShapes) {
    const auto ep = sample_episode(twenty_class_set(), {5, 5, 15}, 1);
    EXPECT_EQ(ep.support.size(), 25u);
    EXPECT_EQ(ep.query.size(), 75u);
    EXPECT_EQ(ep.class_map.size(), 5u);
    EXPECT_EQ(std::set<std::uint32_t>(ep.class_map.begin(), ep.class_map.end()).size(), 5u);
    for (std::size_t i = 0; i < ep.support.size(); ++i) {
        EXPECT_EQ(ep.support[i].given_label, static_cast<int>(i / 5));
        EXPECT_EQ(ep.support[i].true_label, ep.support[i].given_label);
        EXPECT_FALSE(ep.support[i].corrupted);
    }
    EXPECT_TRUE(ep.corrupted_indices().empty());
}

TEST(SampleEpisode, SupportAndQueryAreDisjointDraws) {
    const auto& set = twenty_class_set();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ep = sample_episode(set, {5, 5, 15}, seed);
        std::set<std::vector<double>> seen;
        for (const auto& s : ep.support) EXPECT_TRUE(seen.insert(s.features).second);
        for (const auto& q : ep.query) EXPECT_TRUE(seen.insert(q.features).second);
    }
}

TEST(SampleEpisode, ItemsComeFromTheirMappedClass) {
    const auto& set = twenty_class_set();
    std::map<std::vector<double>, std::uint32_t> owner;
    for (const auto& item : set.items()) owner[to_point(item.features)] = item.class_id;
    const auto ep = sample_episode(set, {4, 3, 6}, 5);
    for (const auto& s : ep.support) EXPECT_EQ(owner.at(s.features), ep.class_map[s.true_label]);
    for (const auto& q : ep.query) EXPECT_EQ(owner.at(q.features), ep.class_map[q.true_label]);
}

TEST(SampleEpisode, ExhaustingAllClassesGivesPermutation) {
    const auto syn = generate_synthetic({6, 10, 4, 5.0, 0.5}, 3);
    const auto ep = sample_episode(syn.set, {6, 2, 3}, 17);
    auto sorted = ep.class_map;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5}));
}

TEST(SampleEpisode, SameSeedSameEpisode) {
    const auto a = sample_episode(twenty_class_set(), {5, 5, 15}, 123);
    const auto b = sample_episode(twenty_class_set(), {5, 5, 15}, 123);
    const auto c = sample_episode(twenty_class_set(), {5, 5, 15}, 124);
    EXPECT_TRUE(same_points(a, b));
    EXPECT_FALSE(same_points(a, c));
}

TEST(SampleEpisode, CapacityErrors) {
    const auto syn = generate_synthetic({3, 5, 4, 5.0, 0.5}, 3);
    EXPECT_THROW(sample_episode(syn.set, {4, 1, 1}, 0), CapacityError);
    EXPECT_THROW(sample_episode(syn.set, {2, 3, 3}, 0), CapacityError);
    EXPECT_THROW(sample_episode(syn.set, {1, 1, 1}, 0), ConfigError);
    EXPECT_NO_THROW(sample_episode(syn.set, {3, 2, 3}, 0));
}

TEST(ApplyNoise, CorruptedCountIsRoundedRateTimesK) {
    EXPECT_EQ(corrupted_per_class({NoiseKind::symmetric, 0.4}, 5), 2u);
    EXPECT_EQ(corrupted_per_class({NoiseKind::symmetric, 0.1}, 5), 1u);  // 0.5 rounds away from zero
    EXPECT_EQ(corrupted_per_class({NoiseKind::symmetric, 0.3}, 5), 2u);  // 1.5 -> 2
    EXPECT_EQ(corrupted_per_class({NoiseKind::symmetric, 0.0}, 5), 0u);
    EXPECT_THROW(corrupted_per_class({NoiseKind::symmetric, 0.9}, 5), ConfigError);
    EXPECT_THROW(corrupted_per_class({NoiseKind::symmetric, 1.5}, 5), ConfigError);
    EXPECT_THROW(corrupted_per_class({NoiseKind::symmetric, -0.1}, 5), ConfigError);
}

TEST(ApplyNoise, SymmetricFortyPercent) {
    const auto clean = sample_episode(twenty_class_set(), {5, 5, 15}, 9);
    const auto ep = apply_noise(clean, {NoiseKind::symmetric, 0.4}, nullptr, 10);
    EXPECT_EQ(ep.corrupted_indices().size(), 10u);
    std::vector<int> per_class(5, 0);
    for (const auto& s : ep.support) {
        EXPECT_EQ(s.corrupted, s.given_label != s.true_label);
        EXPECT_GE(s.given_label, 0);
        EXPECT_LT(s.given_label, 5);
        if (s.corrupted) ++per_class[s.true_label];
    }
    EXPECT_EQ(per_class, std::vector<int>(5, 2));
    EXPECT_FALSE(ep.pair_map.has_value());
}

TEST(ApplyNoise, ZeroRateLeavesEpisodeUnchanged) {
    const auto clean = sample_episode(twenty_class_set(), {5, 5, 15}, 9);
    const auto ep = apply_noise(clean, {NoiseKind::symmetric, 0.0}, nullptr, 10);
    EXPECT_TRUE(same_points(clean, ep));
    EXPECT_TRUE(ep.corrupted_indices().empty());
}

TEST(ApplyNoise, PairNoiseUsesOneFixedPointFreeTarget) {
    const auto& set = twenty_class_set();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto clean = sample_episode(set, {5, 5, 15}, seed);
        const auto ep = apply_noise(clean, {NoiseKind::pair, 0.4}, nullptr, seed + 1000);
        ASSERT_TRUE(ep.pair_map.has_value());
        EXPECT_EQ(ep.corrupted_indices().size(), 10u);
        std::map<int, std::set<int>> targets;
        for (const auto& s : ep.support)
            if (s.corrupted) targets[s.true_label].insert(s.given_label);
        ASSERT_EQ(targets.size(), 5u);
        for (const auto& [c, given] : targets) {
            ASSERT_EQ(given.size(), 1u);
            EXPECT_NE(*given.begin(), c);
            EXPECT_EQ(*given.begin(), (*ep.pair_map)[c]);
        }
    }
}

TEST(ApplyNoise, OutlierReplacesFeaturesKeepsLabels) {
    const auto& set = twenty_class_set();
    const auto clean = sample_episode(set, {5, 5, 15}, 4);
    const auto pool = build_outlier_pool(set, clean.class_map);
    EXPECT_EQ(pool.items.size(), 15u * 30u);
    const auto ep = apply_noise(clean, {NoiseKind::outlier, 0.6}, &pool, 5);
    std::set<std::vector<double>> pool_points(pool.items.begin(), pool.items.end());
    std::set<std::vector<double>> used;
    int corrupted = 0;
    for (std::size_t i = 0; i < ep.support.size(); ++i) {
        const auto& s = ep.support[i];
        EXPECT_EQ(s.given_label, clean.support[i].given_label);
        if (s.corrupted) {
            ++corrupted;
            EXPECT_EQ(s.true_label, kOutlierLabel);
            EXPECT_TRUE(pool_points.count(s.features));
            EXPECT_TRUE(used.insert(s.features).second) << "pool vectors must be distinct";
        } else {
            EXPECT_EQ(s.features, clean.support[i].features);
        }
    }
    EXPECT_EQ(corrupted, 15);
}

TEST(ApplyNoise, OutlierPoolTooSmall) {
    const auto clean = sample_episode(twenty_class_set(), {5, 5, 15}, 4);
    OutlierPool tiny;
    tiny.items.assign(3, Point(8, 0.0));
    EXPECT_THROW(apply_noise(clean, {NoiseKind::outlier, 0.4}, &tiny, 1), CapacityError);
    EXPECT_THROW(apply_noise(clean, {NoiseKind::outlier, 0.4}, nullptr, 1), CapacityError);
}

TEST(ApplyNoise, QueryNeverModifiedAndDeterministic) {
    const auto& set = twenty_class_set();
    const auto clean = sample_episode(set, {5, 5, 15}, 77);
    const auto pool = build_outlier_pool(set, clean.class_map);
    for (auto kind : {NoiseKind::symmetric, NoiseKind::pair, NoiseKind::outlier}) {
        const auto a = apply_noise(clean, {kind, 0.4}, &pool, 3);
        const auto b = apply_noise(clean, {kind, 0.4}, &pool, 3);
        EXPECT_TRUE(same_points(a, b));
        ASSERT_EQ(a.query.size(), clean.query.size());
        for (std::size_t i = 0; i < a.query.size(); ++i) {
            EXPECT_EQ(a.query[i].features, clean.query[i].features);
            EXPECT_EQ(a.query[i].true_label, clean.query[i].true_label);
        }
    }
}

TEST(ApplyNoise, RejectsDoubleCorruption) {
    const auto clean = sample_episode(twenty_class_set(), {5, 5, 15}, 1);
    const auto noisy = apply_noise(clean, {NoiseKind::symmetric, 0.2}, nullptr, 2);
    EXPECT_THROW(apply_noise(noisy, {NoiseKind::symmetric, 0.2}, nullptr, 3), ConfigError);
}

// Exactness over every (K, rate) with a valid quota.
TEST(ApplyNoise, PropertyCorruptionCountExact) {
    const auto syn = generate_synthetic({8, 20, 3, 5.0, 0.5}, 8);
    for (std::size_t k = 1; k <= 8; ++k) {
        for (int pct = 0; pct < 100; pct += 7) {
            const NoiseSpec noise{NoiseKind::symmetric, pct / 100.0};
            const auto expected = static_cast<std::size_t>(std::round(noise.rate * static_cast<double>(k)));
            if (expected >= k) continue;
            const auto clean = sample_episode(syn.set, {4, k, 2}, k * 100 + pct);
            const auto ep = apply_noise(clean, noise, nullptr, pct);
            std::vector<std::size_t> per_class(4, 0);
            for (const auto& s : ep.support)
                if (s.corrupted) ++per_class[s.true_label];
            EXPECT_EQ(per_class, std::vector<std::size_t>(4, expected)) << "k=" << k << " rate=" << noise.rate;
        }
    }
}
