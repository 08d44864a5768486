#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ronfa/errors.hpp"
#include "ronfa/geometry.hpp"
#include "ronfa/prototype_builder.hpp"

namespace ronfa {

enum class ScaleMode { adaptive, fixed };

inline std::string_view to_string(ScaleMode mode) { return mode == ScaleMode::adaptive ? "adaptive" : "fixed"; }

inline std::optional<ScaleMode> parse_scale_mode(std::string_view text) {
    if (text == "adaptive") return ScaleMode::adaptive;
    if (text == "fixed") return ScaleMode::fixed;
    return std::nullopt;
}

enum class Sigma0Policy { mean_distance, fixed };

struct FieldConfig {
    double A = 1.5;  // excitatory amplitude
    double B = 0.5;  // inhibitory amplitude (surround is 3x wider)
    double h_u = 0.5;     // resting level
    double lambda = 0.5;  // scale tuning ratio
    Sigma0Policy sigma0_policy = Sigma0Policy::mean_distance;
    double sigma0 = 1.0;  // used when sigma0_policy == fixed
    std::size_t max_adapt_iters = 100;
    ScaleMode scale_mode = ScaleMode::adaptive;

    void validate() const {
        if (!(B > 0.0 && A > B)) throw ConfigError("field amplitudes need A > B > 0");
        if (!(h_u > 0.0 && h_u < A - B)) throw ConfigError("resting level h_u must lie in (0, A - B)");
        if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("lambda must lie in (0, 1)");
        if (sigma0_policy == Sigma0Policy::fixed && !(sigma0 > 0.0 && std::isfinite(sigma0)))
            throw ConfigError("fixed sigma0 must be positive and finite");
        if (max_adapt_iters < 1) throw ConfigError("max_adapt_iters must be at least 1");
    }
};

/// Difference-of-Gaussians profile at distance rho:
///   A exp(-rho^2 / (2 sigma^2)) - B exp(-rho^2 / (2 (3 sigma)^2)).
inline double dog_profile(double rho, double sigma, double A = 1.5, double B = 0.5) {
    if (!(sigma > 0.0)) throw DomainError("receptive-field scale sigma must be positive");
    const double q = (rho / sigma) * (rho / sigma);
    return A * std::exp(-0.5 * q) - B * std::exp(-q / 18.0);
}

inline double dog_kernel(std::span<const double> x, std::span<const double> center, double sigma, double A = 1.5,
                         double B = 0.5) {
    return dog_profile(distance(x, center), sigma, A, B);
}

/// 1 - exp(-v) for v >= 0, else 0.
inline double activation(double v) { return v > 0.0 ? -std::expm1(-v) : 0.0; }

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
/// Runs until the bracket stops shrinking in double precision.
template <typename F>
double bisect_root(F&& f, double lo, double hi) {
    double f_lo = f(lo);
    if (f_lo == 0.0) return lo;
    if (f(hi) == 0.0) return hi;
    if ((f_lo > 0.0) == (f(hi) > 0.0)) throw DomainError("bisection bracket does not straddle a root");
    for (int i = 0; i < 2000; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Zero crossing of the unit-scale profile: rho* = (3/2) sqrt(ln(A/B)).
inline double zero_crossing(double A = 1.5, double B = 0.5) { return std::sqrt(9.0 * std::log(A / B) / 4.0); }

/// Unit-scale activation radius: the root of profile(r, 1) = h_u inside (0, rho*).
/// A class is active at scale sigma iff its distance is below sigma times this.
inline double activation_radius(double h_u = 0.5, double A = 1.5, double B = 0.5) {
    if (!(h_u > 0.0 && h_u < A - B)) throw DomainError("h_u must lie in (0, A - B)");
    return bisect_root([&](double r) { return dog_profile(r, 1.0, A, B) - h_u; }, 0.0, zero_crossing(A, B));
}

struct ActivationState {
    double sigma = 0.0;
    std::vector<double> u;
    std::size_t n_active = 0;
};

inline ActivationState field_response(std::span<const double> x, std::span<const Point> centers, double sigma,
                                      const FieldConfig& config = {}) {
    if (centers.empty()) throw ConfigError("field response needs at least one prototype");
    ActivationState state;
    state.sigma = sigma;
    state.u.resize(centers.size());
    for (std::size_t c = 0; c < centers.size(); ++c) {
        state.u[c] = activation(dog_kernel(x, centers[c], sigma, config.A, config.B) - config.h_u);
        if (state.u[c] > 0.0) ++state.n_active;
    }
    return state;
}

enum class Termination { single_activation, fallback_nearest, fixed_scale };

inline std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::single_activation: return "single_activation";
        case Termination::fallback_nearest: return "fallback_nearest";
        case Termination::fixed_scale: return "fixed_scale";
    }
    return "";
}

struct ScaleStep {
    double sigma;
    std::size_t n_active;
};

struct PredictionResult {
    std::size_t predicted = 0;
    std::optional<double> sigma_final;
    Termination terminated = Termination::single_activation;
    std::vector<ScaleStep> trace;
};

/// Starting scale: the configured constant, or the mean query-prototype distance
/// (1 when that mean is zero).
inline double initial_sigma(std::span<const double> x, std::span<const Point> centers, const FieldConfig& config) {
    if (config.sigma0_policy == Sigma0Policy::fixed) return config.sigma0;
    double sum = 0.0;
    for (const auto& c : centers) sum += distance(x, c);
    const double mean = sum / static_cast<double>(centers.size());
    return mean > 0.0 ? mean : 1.0;
}

/// Searches sigma until exactly one category neuron fires.
/// Too many active: the current sigma becomes the upper bound and sigma moves to
/// sigma_max - lambda (sigma_max - sigma_min). None active: grow by 1/lambda while
/// no upper bound is known, otherwise raise the lower bound and move the same way.
/// If the cap is hit (distance tie) the nearest prototype wins, lowest index first.
inline PredictionResult adapt_scale(std::span<const double> x, std::span<const Point> centers,
                                    const FieldConfig& config = {}) {
    config.validate();
    if (centers.size() < 2) throw ConfigError("scale adaptation needs at least two prototypes");

    PredictionResult result;
    double sigma = initial_sigma(x, centers, config);
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    for (std::size_t step = 0; step < config.max_adapt_iters; ++step) {
        const auto state = field_response(x, centers, sigma, config);
        result.trace.push_back({sigma, state.n_active});
        if (state.n_active == 1) {
            for (std::size_t c = 0; c < centers.size(); ++c)
                if (state.u[c] > 0.0) result.predicted = c;
            result.sigma_final = sigma;
            result.terminated = Termination::single_activation;
            return result;
        }
        const double previous = sigma;
        if (state.n_active > 1) {
            sigma_max = previous;
            sigma = sigma_max - config.lambda * (sigma_max - sigma_min);
        } else if (sigma_max == 0.0) {
            sigma = previous / config.lambda;
        } else {
            sigma_min = previous;
            sigma = sigma_max - config.lambda * (sigma_max - sigma_min);
        }
    }
    result.predicted = nearest_center(x, centers);
    result.terminated = Termination::fallback_nearest;
    return result;
}

/// Adaptive mode runs adapt_scale. Fixed mode evaluates the field once at sigma0
/// and takes the strongest response; when nothing fires it falls back to the
/// nearest prototype.
inline PredictionResult predict(std::span<const double> x, std::span<const Point> centers,
                                const FieldConfig& config = {}) {
    if (config.scale_mode == ScaleMode::adaptive) return adapt_scale(x, centers, config);

    config.validate();
    if (centers.size() < 2) throw ConfigError("prediction needs at least two prototypes");
    PredictionResult result;
    const double sigma = initial_sigma(x, centers, config);
    const auto state = field_response(x, centers, sigma, config);
    result.trace.push_back({sigma, state.n_active});
    if (state.n_active > 0) {
        result.predicted = argmax(state.u);
        result.sigma_final = sigma;
        result.terminated = Termination::fixed_scale;
    } else {
        result.predicted = nearest_center(x, centers);
        result.terminated = Termination::fallback_nearest;
    }
    return result;
}

/// Classifies `x` against a prototype set, normalizing it first when the set
/// was built from normalized support features.
inline PredictionResult predict(std::span<const double> x, const PrototypeSet& protos, const FieldConfig& config = {}) {
    if (!protos.normalized) return predict(x, std::span<const Point>(protos.centers), config);
    Point unit(x.begin(), x.end());
    l2_normalize(unit);
    return predict(unit, std::span<const Point>(protos.centers), config);
}

}  // namespace ronfa
