#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "ronfa/episode_sampler.hpp"
#include "ronfa/errors.hpp"
#include "ronfa/geometry.hpp"

namespace ronfa {

enum class ClusterMode { soft, hard };

inline std::string_view to_string(ClusterMode mode) { return mode == ClusterMode::soft ? "soft" : "hard"; }

inline std::optional<ClusterMode> parse_cluster_mode(std::string_view text) {
    if (text == "soft") return ClusterMode::soft;
    if (text == "hard") return ClusterMode::hard;
    return std::nullopt;
}

struct ClusterConfig {
    ClusterMode mode = ClusterMode::soft;
    double epsilon = 1e-4;        // stop once the summed L2 center shift drops below this
    std::size_t max_iters = 100;  // iteration cap
    double temperature = 1.0;     // distances are divided by this inside the soft weight
    bool normalize_inputs = false;

    void validate() const {
        if (!(epsilon > 0.0)) throw ConfigError("cluster epsilon must be positive");
        if (max_iters < 1) throw ConfigError("cluster max_iters must be at least 1");
        if (!(temperature > 0.0)) throw ConfigError("cluster temperature must be positive");
    }
};

/// Row-major rows x cols matrix of assignment weights; rows are points, columns clusters.
class WeightMatrix {
public:
    WeightMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t c) { return data_[i * cols_ + c]; }
    double operator()(std::size_t i, std::size_t c) const { return data_[i * cols_ + c]; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

struct PrototypeSet {
    std::vector<Point> centers;  // one per task class, index = task class
    std::size_t iterations_used = 0;
    bool converged = false;
    double final_shift = 0.0;
    /// True when the centers live in L2-normalized space (queries must be normalized too).
    bool normalized = false;

    std::size_t size() const noexcept { return centers.size(); }
};

/// Mean of the features carrying each given label.
inline std::vector<Point> init_centers(std::span<const SupportItem> support, std::size_t n_way) {
    if (support.empty()) throw DegenerateClassError("support set is empty", 0);
    const std::size_t dim = support.front().features.size();
    std::vector<Point> centers(n_way, Point(dim, 0.0));
    std::vector<std::size_t> counts(n_way, 0);
    for (const auto& item : support) {
        if (item.given_label < 0 || static_cast<std::size_t>(item.given_label) >= n_way)
            throw ValidationError("support item has given label " + std::to_string(item.given_label) +
                                  " outside [0, " + std::to_string(n_way) + ")");
        const auto c = static_cast<std::size_t>(item.given_label);
        for (std::size_t k = 0; k < dim; ++k) centers[c][k] += item.features[k];
        ++counts[c];
    }
    for (std::size_t c = 0; c < n_way; ++c) {
        if (counts[c] == 0)
            throw DegenerateClassError("task class " + std::to_string(c) + " has no support item under its given label",
                                       c);
        for (double& v : centers[c]) v /= static_cast<double>(counts[c]);
    }
    return centers;
}

/// Row-wise softmax of -||x_i - mu_c||^2 / temperature, with the row maximum
/// subtracted so huge distances stay finite.
inline WeightMatrix soft_assign(const std::vector<Point>& features, const std::vector<Point>& centers,
                                double temperature = 1.0) {
    WeightMatrix w(features.size(), centers.size());
    std::vector<double> logits(centers.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
            logits[c] = -squared_distance(features[i], centers[c]) / temperature;
            top = std::max(top, logits[c]);
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            logits[c] = std::exp(logits[c] - top);
            sum += logits[c];
        }
        for (std::size_t c = 0; c < centers.size(); ++c) w(i, c) = logits[c] / sum;
    }
    return w;
}

/// One-hot weights at the nearest center (lowest index on ties).
inline WeightMatrix hard_assign(const std::vector<Point>& features, const std::vector<Point>& centers) {
    WeightMatrix w(features.size(), centers.size());
    for (std::size_t i = 0; i < features.size(); ++i) w(i, nearest_center(features[i], centers)) = 1.0;
    return w;
}

namespace detail {

/// Weighted means; a zero-weight column keeps `previous[c]` when given, else throws.
inline std::vector<Point> weighted_means(const std::vector<Point>& features, const WeightMatrix& weights,
                                         const std::vector<Point>* previous) {
    const std::size_t m = weights.cols();
    const std::size_t dim = features.empty() ? 0 : features.front().size();
    std::vector<Point> centers(m, Point(dim, 0.0));
    std::vector<double> mass(m, 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
        for (std::size_t c = 0; c < m; ++c) {
            const double w = weights(i, c);
            if (w == 0.0) continue;
            mass[c] += w;
            for (std::size_t k = 0; k < dim; ++k) centers[c][k] += w * features[i][k];
        }
    }
    for (std::size_t c = 0; c < m; ++c) {
        if (mass[c] > 0.0) {
            for (double& v : centers[c]) v /= mass[c];
        } else if (previous) {
            centers[c] = (*previous)[c];
        } else {
            throw DegenerateClusterError("cluster " + std::to_string(c) + " has zero total weight", c);
        }
    }
    return centers;
}

}  // namespace detail

/// mu_c = sum_i w_ic x_i / sum_i w_ic. Throws DegenerateClusterError on an empty column.
inline std::vector<Point> update_centers(const std::vector<Point>& features, const WeightMatrix& weights) {
    if (weights.rows() != features.size()) throw ValidationError("weight rows do not match feature count");
    return detail::weighted_means(features, weights, nullptr);
}

/// Class-mean-initialized K-means over all support features. Labels only seed
/// the centers; every later step is unsupervised. Each iteration assigns,
/// re-centers, and stops once sum_c ||mu_k - mu_{k-1}||_2 < epsilon or after
/// max_iters iterations. Empty clusters keep their previous center.
inline PrototypeSet run_clustering(std::span<const SupportItem> support, std::size_t n_way,
                                   const ClusterConfig& config = {}) {
    config.validate();
    if (n_way < 2) throw ConfigError("clustering needs at least two task classes");

    std::vector<SupportItem> items(support.begin(), support.end());
    if (config.normalize_inputs)
        for (auto& item : items) l2_normalize(item.features);

    std::vector<Point> features;
    features.reserve(items.size());
    for (const auto& item : items) features.push_back(item.features);

    PrototypeSet result;
    result.normalized = config.normalize_inputs;
    result.centers = init_centers(items, n_way);

    for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
        const WeightMatrix w = config.mode == ClusterMode::soft
                                   ? soft_assign(features, result.centers, config.temperature)
                                   : hard_assign(features, result.centers);
        auto next = detail::weighted_means(features, w, &result.centers);
        double shift = 0.0;
        for (std::size_t c = 0; c < n_way; ++c) shift += distance(next[c], result.centers[c]);
        result.centers = std::move(next);
        result.iterations_used = iter;
        result.final_shift = shift;
        if (shift < config.epsilon) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace ronfa
