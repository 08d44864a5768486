#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ronfa/embedding_store.hpp"
#include "ronfa/errors.hpp"
#include "ronfa/geometry.hpp"
#include "ronfa/random.hpp"

namespace ronfa {

/// True label of a support item whose features came from outside the task.
inline constexpr int kOutlierLabel = -1;

struct EpisodeSpec {
    std::size_t n_way = 5;
    std::size_t k_shot = 5;
    std::size_t n_query = 15;
};

enum class NoiseKind { none, symmetric, pair, outlier };

inline std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::symmetric: return "sym";
        case NoiseKind::pair: return "pair";
        case NoiseKind::outlier: return "outlier";
    }
    return "none";
}

inline std::optional<NoiseKind> parse_noise_kind(std::string_view text) {
    if (text == "none") return NoiseKind::none;
    if (text == "sym" || text == "symmetric") return NoiseKind::symmetric;
    if (text == "pair") return NoiseKind::pair;
    if (text == "outlier") return NoiseKind::outlier;
    return std::nullopt;
}

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    double rate = 0.0;
};

struct SupportItem {
    Point features;
    int given_label = 0;
    int true_label = 0;  // kOutlierLabel for injected outliers
    bool corrupted = false;
};

struct QueryItem {
    Point features;
    int true_label = 0;
};

struct Episode {
    EpisodeSpec spec;
    NoiseSpec noise;
    std::vector<std::uint32_t> class_map;  // task class -> source class id
    std::vector<SupportItem> support;      // class-major: K items of task class 0, then 1, ...
    std::vector<QueryItem> query;
    std::optional<std::vector<int>> pair_map;  // present iff noise kind is pair
    std::uint64_t seed = 0;

    std::vector<std::size_t> corrupted_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < support.size(); ++i)
            if (support[i].corrupted) out.push_back(i);
        return out;
    }
};

/// Vectors from source classes outside an episode's class map.
struct OutlierPool {
    std::vector<Point> items;
};

/// Corrupted support items per class: round-half-away-from-zero of rate * K.
/// Throws unless the rate is in [0, 1) and leaves a clean majority-capable remainder (< K).
inline std::size_t corrupted_per_class(const NoiseSpec& noise, std::size_t k_shot) {
    if (!(noise.rate >= 0.0 && noise.rate < 1.0))
        throw ConfigError("noise rate must be in [0, 1), got " + std::to_string(noise.rate));
    if (noise.kind == NoiseKind::none) return 0;
    const auto count = static_cast<std::size_t>(std::round(noise.rate * static_cast<double>(k_shot)));
    if (count >= k_shot)
        throw ConfigError("noise rate " + std::to_string(noise.rate) + " corrupts " + std::to_string(count) +
                          " of " + std::to_string(k_shot) + " support items per class; at least one must stay clean");
    return count;
}

/// Draws an N-way K-shot episode: classes without replacement among those with
/// at least K + n_query items, then items without replacement within each class.
inline Episode sample_episode(const EmbeddingSet& set, const EpisodeSpec& spec, std::uint64_t seed) {
    if (spec.n_way < 2) throw ConfigError("n_way must be at least 2");
    if (spec.k_shot == 0 || spec.n_query == 0) throw ConfigError("k_shot and n_query must be positive");

    const std::size_t need = spec.k_shot + spec.n_query;
    const auto groups = set.indices_by_class();
    std::vector<std::uint32_t> eligible;
    for (std::size_t c = 0; c < groups.size(); ++c)
        if (groups[c].size() >= need) eligible.push_back(static_cast<std::uint32_t>(c));
    if (eligible.size() < spec.n_way)
        throw CapacityError("need " + std::to_string(spec.n_way) + " classes with at least " + std::to_string(need) +
                            " items each, set has " + std::to_string(eligible.size()));

    Rng rng(seed);
    rng.partial_shuffle(eligible, spec.n_way);

    Episode ep;
    ep.spec = spec;
    ep.seed = seed;
    ep.class_map.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(spec.n_way));
    ep.support.reserve(spec.n_way * spec.k_shot);
    ep.query.reserve(spec.n_way * spec.n_query);

    std::vector<std::vector<std::size_t>> drawn(spec.n_way);
    for (std::size_t t = 0; t < spec.n_way; ++t) {
        auto members = groups[ep.class_map[t]];
        rng.partial_shuffle(members, need);
        members.resize(need);
        drawn[t] = std::move(members);
    }
    for (std::size_t t = 0; t < spec.n_way; ++t)
        for (std::size_t j = 0; j < spec.k_shot; ++j)
            ep.support.push_back({to_point(set[drawn[t][j]].features), static_cast<int>(t), static_cast<int>(t), false});
    for (std::size_t t = 0; t < spec.n_way; ++t)
        for (std::size_t j = spec.k_shot; j < need; ++j)
            ep.query.push_back({to_point(set[drawn[t][j]].features), static_cast<int>(t)});
    return ep;
}

/// All items of classes not in `class_map`, in source order.
inline OutlierPool build_outlier_pool(const EmbeddingSet& set, const std::vector<std::uint32_t>& class_map) {
    std::vector<bool> in_task(set.class_count(), false);
    for (auto c : class_map) in_task[c] = true;
    OutlierPool pool;
    for (const auto& item : set.items())
        if (!in_task[item.class_id]) pool.items.push_back(to_point(item.features));
    return pool;
}

/// Corrupts exactly round(rate * K) support items of every task class.
///  - symmetric: given label drawn uniformly from the other N-1 task classes;
///  - pair: one fixed-point-free target p(c) drawn per class, shared by all of c's corrupted items;
///  - outlier: features replaced by distinct pool vectors, given label kept, true label = kOutlierLabel.
/// The query set is never touched.
inline Episode apply_noise(const Episode& ep, const NoiseSpec& noise, const OutlierPool* pool, std::uint64_t seed) {
    if (ep.noise.kind != NoiseKind::none) throw ConfigError("episode already carries noise");
    const std::size_t n_way = ep.spec.n_way;
    const std::size_t k_shot = ep.spec.k_shot;
    const std::size_t per_class = corrupted_per_class(noise, k_shot);

    Episode out = ep;
    out.noise = noise;
    if (noise.kind == NoiseKind::none) return out;
    if (n_way < 2) throw ConfigError("label noise needs at least two task classes");
    if (noise.kind == NoiseKind::outlier) {
        const std::size_t total = per_class * n_way;
        const std::size_t available = pool ? pool->items.size() : 0;
        if (available < total)
            throw CapacityError("outlier pool has " + std::to_string(available) + " vectors, " + std::to_string(total) +
                                " needed");
    }

    Rng rng(seed);
    if (noise.kind == NoiseKind::pair) {
        std::vector<int> map(n_way);
        for (std::size_t c = 0; c < n_way; ++c) {
            const std::size_t r = rng.uniform_index(n_way - 1);
            map[c] = static_cast<int>(r < c ? r : r + 1);
        }
        out.pair_map = map;
    }

    std::vector<std::size_t> pool_order;
    if (noise.kind == NoiseKind::outlier) {
        pool_order.resize(pool->items.size());
        for (std::size_t i = 0; i < pool_order.size(); ++i) pool_order[i] = i;
        rng.partial_shuffle(pool_order, per_class * n_way);
    }
    std::size_t next_pool = 0;

    std::vector<std::size_t> slots(k_shot);
    for (std::size_t c = 0; c < n_way; ++c) {
        for (std::size_t j = 0; j < k_shot; ++j) slots[j] = j;
        rng.partial_shuffle(slots, per_class);
        for (std::size_t j = 0; j < per_class; ++j) {
            auto& item = out.support[c * k_shot + slots[j]];
            item.corrupted = true;
            switch (noise.kind) {
                case NoiseKind::symmetric: {
                    const std::size_t r = rng.uniform_index(n_way - 1);
                    item.given_label = static_cast<int>(r < c ? r : r + 1);
                    break;
                }
                case NoiseKind::pair:
                    item.given_label = (*out.pair_map)[c];
                    break;
                case NoiseKind::outlier:
                    item.features = pool->items[pool_order[next_pool++]];
                    item.true_label = kOutlierLabel;
                    break;
                case NoiseKind::none:
                    break;
            }
        }
    }
    return out;
}

}  // namespace ronfa
