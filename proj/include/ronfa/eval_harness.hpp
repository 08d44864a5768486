#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ronfa/embedding_store.hpp"
#include "ronfa/episode_sampler.hpp"
#include "ronfa/errors.hpp"
#include "ronfa/neural_field.hpp"
#include "ronfa/prototype_builder.hpp"
#include "ronfa/random.hpp"

namespace ronfa {

inline constexpr const char* kEngineVersion = "0.1.0";

enum class OutlierPoolSource { heldout_classes, none };

struct RunConfig {
    EpisodeSpec episode;
    NoiseSpec noise;
    ClusterConfig cluster;
    FieldConfig field;
    std::size_t episodes = 600;
    std::uint64_t master_seed = 42;
    bool baseline_enabled = false;
    OutlierPoolSource outlier_pool_source = OutlierPoolSource::heldout_classes;
    /// Execution only; results do not depend on it.
    std::size_t workers = 1;
};

struct EpisodeResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
    std::optional<double> baseline_accuracy;
    std::size_t fallback_count = 0;
    // clustering diagnostics
    std::size_t iterations_used = 0;
    bool converged = false;
    double final_shift = 0.0;
    // audit trail
    std::vector<std::uint32_t> class_map;
    std::vector<std::size_t> corrupted_indices;
    std::optional<std::vector<int>> pair_map;
};

struct Interval {
    double mean = 0.0;
    double half_width = 0.0;
};

struct EvalReport {
    RunConfig config;
    std::vector<EpisodeResult> episodes;
    double mean_accuracy = 0.0;
    std::optional<double> ci_half_width;  // absent for a single episode
    std::optional<double> baseline_mean_accuracy;
    std::optional<double> baseline_ci_half_width;
    std::size_t fallback_total = 0;
    double wall_clock_seconds = 0.0;
};

inline double mean_of(std::span<const double> values) {
    if (values.empty()) throw DomainError("mean of an empty sequence");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

/// Mean and 95% normal-approximation half width, 1.96 s / sqrt(E), with the
/// E - 1 sample standard deviation.
inline Interval confidence_interval(std::span<const double> values) {
    if (values.size() < 2) throw DomainError("confidence half width needs at least two values");
    const double mean = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double n = static_cast<double>(values.size());
    const double sd = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * sd / std::sqrt(n)};
}

/// Plain class means of the given labels; queries go to the nearest mean.
inline double nearest_mean_baseline(const Episode& ep) {
    const auto means = init_centers(ep.support, ep.spec.n_way);
    if (ep.query.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& q : ep.query)
        if (static_cast<int>(nearest_center(q.features, means)) == q.true_label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ep.query.size());
}

/// Builds episode `index` of a run (sampled and corrupted), exactly as the
/// evaluation does.
inline Episode build_episode(const EmbeddingSet& set, const RunConfig& config, std::size_t index) {
    const std::uint64_t seed = derive_episode_seed(config.master_seed, index);
    Episode ep = sample_episode(set, config.episode, seed);
    if (config.noise.kind == NoiseKind::none) {
        ep.noise = config.noise;
        return ep;
    }
    std::optional<OutlierPool> pool;
    if (config.noise.kind == NoiseKind::outlier) pool = build_outlier_pool(set, ep.class_map);
    return apply_noise(ep, config.noise, pool ? &*pool : nullptr, derive_episode_seed(seed, 1));
}

inline EpisodeResult run_episode(const EmbeddingSet& set, const RunConfig& config, std::size_t index) {
    const Episode ep = build_episode(set, config, index);
    const PrototypeSet protos = run_clustering(ep.support, ep.spec.n_way, config.cluster);

    EpisodeResult r;
    r.index = index;
    r.seed = ep.seed;
    r.total = ep.query.size();
    for (const auto& q : ep.query) {
        const auto pred = predict(q.features, protos, config.field);
        if (pred.terminated == Termination::fallback_nearest) ++r.fallback_count;
        if (static_cast<int>(pred.predicted) == q.true_label) ++r.correct;
    }
    r.accuracy = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
    if (config.baseline_enabled) r.baseline_accuracy = nearest_mean_baseline(ep);
    r.iterations_used = protos.iterations_used;
    r.converged = protos.converged;
    r.final_shift = protos.final_shift;
    r.class_map = ep.class_map;
    r.corrupted_indices = ep.corrupted_indices();
    r.pair_map = ep.pair_map;
    return r;
}

inline void validate_run(const EmbeddingSet& set, const RunConfig& config) {
    if (config.episodes == 0) throw ConfigError("episode count must be positive");
    if (config.episode.n_way < 2) throw ConfigError("n_way must be at least 2");
    config.cluster.validate();
    config.field.validate();
    corrupted_per_class(config.noise, config.episode.k_shot);
    if (config.noise.kind == NoiseKind::outlier) {
        if (config.outlier_pool_source != OutlierPoolSource::heldout_classes)
            throw ConfigError("outlier noise needs held-out classes as the pool source");
        if (set.class_count() <= config.episode.n_way)
            throw ConfigError("outlier noise needs more than n_way classes in the source set");
    }
}

/// Runs E episodes; episode i is seeded by derive_episode_seed(master_seed, i).
/// Episodes are spread over `config.workers` threads and collected by index, so
/// the report does not depend on the worker count.
inline EvalReport run_evaluation(const EmbeddingSet& set, const RunConfig& config) {
    validate_run(set, config);
    const auto started = std::chrono::steady_clock::now();

    const std::size_t total = config.episodes;
    std::vector<EpisodeResult> results(total);
    std::vector<std::exception_ptr> errors(total);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
            try {
                results[i] = run_episode(set, config, i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, total);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    for (std::size_t i = 0; i < total; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const CapacityError& e) {
            throw CapacityError("episode " + std::to_string(i) + ": " + e.what());
        } catch (const DegenerateClassError& e) {
            throw DegenerateClassError("episode " + std::to_string(i) + ": " + e.what(), e.task_class());
        }
    }

    EvalReport report;
    report.config = config;
    std::vector<double> acc;
    std::vector<double> base;
    acc.reserve(total);
    for (const auto& r : results) {
        acc.push_back(r.accuracy);
        if (r.baseline_accuracy) base.push_back(*r.baseline_accuracy);
        report.fallback_total += r.fallback_count;
    }
    report.mean_accuracy = mean_of(acc);
    if (acc.size() >= 2) report.ci_half_width = confidence_interval(acc).half_width;
    if (!base.empty()) {
        report.baseline_mean_accuracy = mean_of(base);
        if (base.size() >= 2) report.baseline_ci_half_width = confidence_interval(base).half_width;
    }
    report.episodes = std::move(results);
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace ronfa
