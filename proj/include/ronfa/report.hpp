#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ronfa/embedding_store.hpp"
#include "ronfa/eval_harness.hpp"

namespace ronfa {

enum class ReportFormat { json, csv };

inline constexpr const char* kCiConvention = "95% normal approximation: 1.96 * sample_std / sqrt(episodes)";

/// Noise condition as a table column label: "clean", "sym40", "pair40", "outlier60".
inline std::string condition_label(const NoiseSpec& noise) {
    if (noise.kind == NoiseKind::none || noise.rate == 0.0) return "clean";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", noise.rate * 100.0);
    return std::string(to_string(noise.kind)) + buf;
}

struct SummaryRow {
    std::string condition;
    double mean_accuracy = 0.0;
    std::optional<double> ci95;
};

inline std::vector<SummaryRow> summary_rows(const EvalReport& report) {
    const std::string label = condition_label(report.config.noise);
    std::vector<SummaryRow> rows{{"ronfa:" + label, report.mean_accuracy, report.ci_half_width}};
    if (report.baseline_mean_accuracy)
        rows.push_back({"baseline:" + label, *report.baseline_mean_accuracy, report.baseline_ci_half_width});
    return rows;
}

inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["episode"] = {{"n_way", c.episode.n_way}, {"k_shot", c.episode.k_shot}, {"n_query", c.episode.n_query}};
    j["noise"] = {{"kind", std::string(to_string(c.noise.kind))}, {"rate", c.noise.rate}};
    j["cluster"] = {{"mode", std::string(to_string(c.cluster.mode))},
                    {"epsilon", c.cluster.epsilon},
                    {"max_iters", c.cluster.max_iters},
                    {"temperature", c.cluster.temperature},
                    {"normalize_inputs", c.cluster.normalize_inputs}};
    nlohmann::ordered_json field = {{"A", c.field.A},
                                    {"B", c.field.B},
                                    {"h_u", c.field.h_u},
                                    {"lambda", c.field.lambda},
                                    {"scale_mode", std::string(to_string(c.field.scale_mode))},
                                    {"max_adapt_iters", c.field.max_adapt_iters}};
    if (c.field.sigma0_policy == Sigma0Policy::mean_distance)
        field["sigma0"] = "auto";
    else
        field["sigma0"] = c.field.sigma0;
    j["field"] = std::move(field);
    j["episodes"] = c.episodes;
    j["master_seed"] = c.master_seed;
    j["baseline"] = c.baseline_enabled;
    j["outlier_pool_source"] =
        c.outlier_pool_source == OutlierPoolSource::heldout_classes ? "heldout_classes" : "none";
    j["ci_convention"] = kCiConvention;
    return j;
}

inline nlohmann::ordered_json episode_to_json(const EpisodeResult& r, const RunConfig& c) {
    nlohmann::ordered_json j;
    j["index"] = r.index;
    j["accuracy"] = r.accuracy;
    j["correct"] = r.correct;
    j["total"] = r.total;
    if (r.baseline_accuracy) j["baseline_accuracy"] = *r.baseline_accuracy;
    j["fallback_count"] = r.fallback_count;
    j["prototypes"] = {{"iterations_used", r.iterations_used},
                       {"converged", r.converged},
                       {"final_shift", r.final_shift}};
    nlohmann::ordered_json ep;
    ep["spec"] = {{"n_way", c.episode.n_way}, {"k_shot", c.episode.k_shot}, {"n_query", c.episode.n_query}};
    ep["noise"] = {{"kind", std::string(to_string(c.noise.kind))}, {"rate", c.noise.rate}};
    ep["class_map"] = r.class_map;
    ep["corrupted_indices"] = r.corrupted_indices;
    if (r.pair_map) ep["pair_map"] = *r.pair_map;
    ep["seed"] = r.seed;
    j["episode"] = std::move(ep);
    return j;
}

/// Full report. The "runtime" object (wall clock, workers) is the only part
/// that may differ between identical runs; pass include_runtime = false to drop it.
inline nlohmann::ordered_json report_to_json(const EvalReport& report, bool include_runtime = true) {
    nlohmann::ordered_json j;
    j["config"] = config_to_json(report.config);
    j["engine_version"] = kEngineVersion;
    auto episodes = nlohmann::ordered_json::array();
    for (const auto& r : report.episodes) episodes.push_back(episode_to_json(r, report.config));
    j["episodes"] = std::move(episodes);

    nlohmann::ordered_json summary;
    summary["n_episodes"] = report.episodes.size();
    summary["mean_accuracy"] = report.mean_accuracy;
    summary["ci95"] = report.ci_half_width ? nlohmann::ordered_json(*report.ci_half_width) : nullptr;
    if (report.baseline_mean_accuracy) {
        summary["baseline_mean_accuracy"] = *report.baseline_mean_accuracy;
        summary["baseline_ci95"] =
            report.baseline_ci_half_width ? nlohmann::ordered_json(*report.baseline_ci_half_width) : nullptr;
    }
    summary["fallback_total"] = report.fallback_total;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : summary_rows(report))
        rows.push_back({{"condition", row.condition},
                        {"mean_accuracy", row.mean_accuracy},
                        {"ci95", row.ci95 ? nlohmann::ordered_json(*row.ci95) : nullptr}});
    summary["conditions"] = std::move(rows);
    j["summary"] = std::move(summary);
    if (include_runtime)
        j["runtime"] = {{"wall_clock_seconds", report.wall_clock_seconds}, {"workers", report.config.workers}};
    return j;
}

/// "condition,mean_accuracy,ci95" followed by one row per condition.
inline std::string report_to_csv(const EvalReport& report) {
    std::string out = "condition,mean_accuracy,ci95\n";
    char buf[64];
    for (const auto& row : summary_rows(report)) {
        out += row.condition;
        std::snprintf(buf, sizeof buf, ",%.17g,", row.mean_accuracy);
        out += buf;
        if (row.ci95) {
            std::snprintf(buf, sizeof buf, "%.17g", *row.ci95);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline void write_report(const EvalReport& report, const std::filesystem::path& path,
                         ReportFormat format = ReportFormat::json) {
    const std::string text =
        format == ReportFormat::json ? report_to_json(report).dump(2) + "\n" : report_to_csv(report);
    detail::write_file(path, text);
}

}  // namespace ronfa
