// ronfa: command-line driver for synthetic data generation, embedding file
// inspection and episodic few-shot evaluation under label noise.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "ronfa/ronfa.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ronfa::FileFormat resolve_format(const std::string& flag, const fs::path& path) {
    if (flag == "binary") return ronfa::FileFormat::binary;
    if (flag == "csv") return ronfa::FileFormat::csv;
    return ronfa::format_from_extension(path);
}

std::size_t default_workers() {
    if (const char* env = std::getenv("RONFA_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw UsageError("RONFA_WORKERS must be a positive integer, got '" + std::string(env) + "'");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

struct SynthArgs {
    ronfa::SynthSpec spec;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "auto";
};

struct InspectArgs {
    std::string path;
    std::string format = "auto";
};

struct EvalArgs {
    std::string data;
    std::string format = "auto";
    ronfa::RunConfig run;
    std::string noise = "none";
    std::string kmeans = "soft";
    std::string scale = "adaptive";
    std::string sigma0 = "auto";
    std::string report;
    std::size_t workers = 0;
};

int run_synth(const SynthArgs& args) {
    const auto syn = ronfa::generate_synthetic(args.spec, args.seed);
    ronfa::save_embeddings(syn.set, args.out, resolve_format(args.format, args.out));
    std::cout << "wrote " << args.out << ": n=" << syn.set.size() << ", d=" << syn.set.dim() << ", "
              << syn.set.class_count() << " classes\n";
    return 0;
}

int run_inspect(const InspectArgs& args) {
    const auto set = ronfa::load_embeddings(args.path, resolve_format(args.format, args.path));
    const auto diag = ronfa::validate_set(set);
    std::cout << "n=" << diag.size << ", d=" << diag.dim << ", " << set.class_count() << " classes\n";
    std::printf("norm min/mean/max: %.6g / %.6g / %.6g\n", diag.norm_min, diag.norm_mean, diag.norm_max);
    for (std::size_t c = 0; c < set.class_count(); ++c)
        std::cout << "  " << set.class_names()[c] << ": " << diag.class_counts[c] << "\n";
    if (diag.has_duplicates()) {
        std::size_t dup = 0;
        for (const auto& g : diag.duplicate_groups) dup += g.size();
        std::cerr << "warning: " << dup << " items in " << diag.duplicate_groups.size()
                  << " groups of identical vectors\n";
    }
    return 0;
}

int run_eval(EvalArgs args) {
    auto& run = args.run;
    run.noise.kind = *ronfa::parse_noise_kind(args.noise);
    run.cluster.mode = *ronfa::parse_cluster_mode(args.kmeans);
    run.field.scale_mode = *ronfa::parse_scale_mode(args.scale);
    if (args.sigma0 == "auto") {
        run.field.sigma0_policy = ronfa::Sigma0Policy::mean_distance;
    } else {
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(args.sigma0, &used);
            if (used != args.sigma0.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw UsageError("--sigma0: expected 'auto' or a positive number, got '" + args.sigma0 + "'");
        }
        if (!(v > 0.0)) throw UsageError("--sigma0: must be positive, got '" + args.sigma0 + "'");
        run.field.sigma0_policy = ronfa::Sigma0Policy::fixed;
        run.field.sigma0 = v;
    }
    run.workers = args.workers ? args.workers : default_workers();

    try {
        ronfa::corrupted_per_class(run.noise, run.episode.k_shot);
    } catch (const ronfa::ConfigError& e) {
        throw UsageError(std::string("--noise-rate: ") + e.what());
    }

    const auto set = ronfa::load_embeddings(args.data, resolve_format(args.format, args.data));
    if (run.noise.kind == ronfa::NoiseKind::outlier && set.class_count() <= run.episode.n_way)
        throw UsageError("--noise outlier: data set has " + std::to_string(set.class_count()) +
                         " classes, need more than --n-way " + std::to_string(run.episode.n_way));

    ronfa::EvalReport report;
    try {
        report = ronfa::run_evaluation(set, run);
    } catch (const ronfa::ConfigError& e) {
        throw UsageError(e.what());
    }

    std::printf("%-24s %8s   %s\n", "condition", "mean(%)", "ci95(%)");
    for (const auto& row : ronfa::summary_rows(report))
        std::printf("%-24s %8s +- %s\n", row.condition.c_str(), percent(row.mean_accuracy).c_str(),
                    row.ci95 ? percent(*row.ci95).c_str() : "n/a");
    if (report.fallback_total > 0)
        std::cerr << "note: " << report.fallback_total << " queries fell back to nearest prototype\n";

    if (!args.report.empty()) {
        const fs::path path = args.report;
        if (path.extension() == ".csv") {
            ronfa::write_report(report, path, ronfa::ReportFormat::csv);
        } else {
            auto j = ronfa::report_to_json(report);
            j["config"]["data"] = args.data;
            ronfa::detail::write_file(path, j.dump(2) + "\n");
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise-robust few-shot classification on embedding vectors", "ronfa"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ronfa::kEngineVersion);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic embedding set");
    synth_cmd->add_option("--classes", synth.spec.n_classes, "Number of classes")->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--per-class", synth.spec.per_class, "Items per class")->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--dim", synth.spec.dim, "Embedding dimension")->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--radius", synth.spec.center_radius, "Radius of the class-center sphere")
        ->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--std", synth.spec.within_std, "Within-class standard deviation")
        ->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output file")->required();
    synth_cmd->add_option("--format", synth.format, "binary, csv or auto (by extension)")
        ->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));

    InspectArgs inspect;
    auto* inspect_cmd = app.add_subcommand("inspect", "Validate an embedding file and print diagnostics");
    inspect_cmd->add_option("file", inspect.path, "Embedding file")->required();
    inspect_cmd->add_option("--format", inspect.format, "binary, csv or auto (by extension)")
        ->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));

    EvalArgs eval;
    auto& run = eval.run;
    auto* eval_cmd = app.add_subcommand("eval", "Run the episodic benchmark");
    eval_cmd->add_option("--data", eval.data, "Embedding file")->required();
    eval_cmd->add_option("--format", eval.format, "binary, csv or auto (by extension)")
        ->capture_default_str()->check(CLI::IsMember({"auto", "binary", "csv"}));
    eval_cmd->add_option("--n-way", run.episode.n_way, "Classes per episode")->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    eval_cmd->add_option("--k-shot", run.episode.k_shot, "Support items per class")->capture_default_str()
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--queries", run.episode.n_query, "Query items per class")->capture_default_str()
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--noise", eval.noise, "none, sym, pair or outlier")->capture_default_str()
        ->check(CLI::IsMember({"none", "sym", "pair", "outlier"}));
    eval_cmd->add_option("--noise-rate", run.noise.rate, "Corrupted fraction of each class's support, in [0, 1)")
        ->capture_default_str()
        ->check(CLI::Validator(
            [](std::string& s) -> std::string {
                try {
                    const double v = std::stod(s);
                    if (v >= 0.0 && v < 1.0) return {};
                } catch (const std::exception&) {
                }
                return "value " + s + " not in [0, 1)";
            },
            "in [0, 1)"));
    eval_cmd->add_option("--episodes", run.episodes, "Number of episodes")->capture_default_str()
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", run.master_seed, "Master seed")->capture_default_str();
    eval_cmd->add_option("--kmeans", eval.kmeans, "soft or hard")->capture_default_str()
        ->check(CLI::IsMember({"soft", "hard"}));
    eval_cmd->add_option("--scale", eval.scale, "adaptive or fixed")->capture_default_str()
        ->check(CLI::IsMember({"adaptive", "fixed"}));
    eval_cmd->add_option("--sigma0", eval.sigma0, "Initial scale: auto (mean prototype distance) or a number")
        ->capture_default_str();
    eval_cmd->add_option("--lambda", run.field.lambda, "Scale tuning ratio in (0, 1)")->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--h-u", run.field.h_u, "Resting level in (0, A - B)")->capture_default_str()
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--temperature", run.cluster.temperature, "Soft-assignment temperature")
        ->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--normalize", run.cluster.normalize_inputs, "L2-normalize features before clustering");
    eval_cmd->add_option("--epsilon", run.cluster.epsilon, "Clustering convergence threshold")
        ->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_option("--max-iters", run.cluster.max_iters, "Clustering iteration cap")->capture_default_str()
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--max-adapt-iters", run.field.max_adapt_iters, "Scale adaptation step cap")
        ->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--baseline", run.baseline_enabled, "Also score the nearest-mean baseline");
    eval_cmd->add_option("--report", eval.report, "Write the report here (.json, or .csv for the summary)");
    eval_cmd->add_option("--workers", eval.workers, "Worker threads (default: RONFA_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "ronfa: usage error: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        if (*synth_cmd) return run_synth(synth);
        if (*inspect_cmd) return run_inspect(inspect);
        return run_eval(eval);
    } catch (const UsageError& e) {
        std::cerr << "ronfa: usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ronfa::ConfigError& e) {
        std::cerr << "ronfa: usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "ronfa: error: " << e.what() << "\n";
        return 1;
    }
}
