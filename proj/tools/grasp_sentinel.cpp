// grasp-sentinel command-line tool: synth -> eval -> analyze -> classify.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grasp_sentinel/report.hpp"

namespace gs = gsentinel;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

gs::ErrorParams parse_params(const std::string& spec, const std::string& mode, const std::string& sign) {
    const auto parts = gs::detail::split(spec, ',');
    if (parts.size() != 5) throw UsageError("--params expects k,n,r,delta,phi");
    std::size_t k = 0, n = 0;
    double r = 0, delta = 0, phi = 0;
    if (!gs::detail::parse_size(parts[0], k) || !gs::detail::parse_size(parts[1], n) ||
        !gs::detail::parse_double(parts[2], r) || !gs::detail::parse_double(parts[3], delta) ||
        !gs::detail::parse_double(parts[4], phi))
        throw UsageError("--params: cannot parse '" + spec + "'");
    const auto m = gs::parse_context_mode(mode);
    if (!m) throw UsageError("--mode must be combined or rotation-only");
    const auto qs = sign == "literal" ? gs::QuaternionSign::literal : gs::QuaternionSign::absolute;
    try {
        return gs::derive_params(k, n, r, delta, phi, *m, qs);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--params: ") + e.what());
    }
}

void emit(const gs::json& report, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << report.dump(2) << '\n';
    } else {
        gs::write_json_file(report, out);
    }
}

std::string fmt(const gs::json& v) { return v.is_null() ? "n/a" : v.dump(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detects myocontrol failures by comparing hand activations with demonstrations in similar wrist contexts"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate synthetic training, success and failure datasets");
    std::string synth_config, synth_out = "data";
    std::optional<std::uint64_t> synth_seed;
    bool print_config = false;
    synth->add_option("--config", synth_config, "Generator config file (key = value)");
    synth->add_option("--seed", synth_seed, "Override the config seed");
    synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
    synth->add_flag("--print-config", print_config, "Print the effective config and exit");

    // eval
    auto* eval = app.add_subcommand("eval", "Compute per-state errors of a test dataset");
    std::string training_path, test_path, eval_out;
    std::string params_spec = "2,5,0.25,0.02,20", mode = "combined", scope = "full", sign = "absolute";
    std::size_t target_count = 20;
    unsigned threads = 0;
    eval->add_option("--training", training_path, "Training dataset")->required();
    eval->add_option("--test", test_path, "Test dataset")->required();
    eval->add_option("--params", params_spec, "k,n_min,r,delta_m,phi_deg")->capture_default_str();
    eval->add_option("--mode", mode, "Context similarity")
        ->check(CLI::IsMember({"combined", "rotation-only"}))
        ->capture_default_str();
    eval->add_option("--scope", scope, "Training states used")
        ->check(CLI::IsMember({"full", "target-area"}))
        ->capture_default_str();
    eval->add_option("--target-count", target_count, "States per trial in the target area")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eval->add_option("--quaternion-sign", sign, "Treat q and -q as equal (absolute) or not (literal)")
        ->check(CLI::IsMember({"absolute", "literal"}))
        ->capture_default_str();
    eval->add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();
    eval->add_option("--out", eval_out, "Report path (stdout if omitted)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Compare success and failure eval reports");
    std::string success_report, failure_report, analyze_out;
    std::size_t permutations = 5000;
    std::uint64_t perm_seed = 1;
    analyze->add_option("--success", success_report, "Eval report of the success condition")
        ->required();
    analyze->add_option("--failure", failure_report, "Eval report of the failure condition")
        ->required();
    analyze->add_option("--permutations", permutations, "Permutation count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    analyze->add_option("--seed", perm_seed, "Permutation seed")->capture_default_str();
    analyze->add_option("--out", analyze_out, "Report path (stdout if omitted)");

    // classify
    auto* classify = app.add_subcommand("classify", "Label trials of an analysis report");
    std::string analysis_report, classify_out, aggregate = "max";
    std::optional<double> threshold;
    bool tune = false;
    classify->add_option("--report", analysis_report, "Analysis report")->required();
    auto* thr = classify->add_option("--threshold", threshold, "Error threshold C_T");
    auto* tun = classify->add_flag("--tune", tune, "Pick the threshold maximising Youden's index");
    thr->excludes(tun);
    classify->add_option("--aggregate", aggregate, "Per-trial score")
        ->check(CLI::IsMember({"max", "mean"}))
        ->capture_default_str();
    classify->add_option("--out", classify_out, "Report path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*synth) {
            gs::SynthConfig config = synth_config.empty() ? gs::SynthConfig{} : gs::load_synth_config(synth_config);
            if (synth_seed) config.seed = *synth_seed;
            gs::validate(config);
            if (print_config) {
                gs::write_synth_config(config, std::cout);
                return 0;
            }
            const auto out = gs::cmd_synth(config, synth_out);
            std::cout << "wrote " << out.training.string() << ", " << out.success.string() << ", "
                      << out.failure.string() << '\n';
        } else if (*eval) {
            gs::EvalRequest req;
            req.training_path = training_path;
            req.test_path = test_path;
            req.params = parse_params(params_spec, mode, sign);
            req.options.scope = *gs::parse_scope(scope);
            req.options.target_count = target_count;
            req.options.threads = threads;
            emit(gs::cmd_eval(req), eval_out);
        } else if (*analyze) {
            const auto report = gs::cmd_analyze(gs::read_json_file(success_report),
                                                gs::read_json_file(failure_report), permutations, perm_seed);
            emit(report, analyze_out);
            if (!analyze_out.empty() && analyze_out != "-")
                std::cout << "p = " << fmt(report["permutation"]["p_value"])
                          << ", range ratio = " << fmt(report["range_ratio"]) << '\n';
        } else if (*classify) {
            if (!tune && !threshold) throw UsageError("classify needs --threshold or --tune");
            gs::ClassifyRequest req;
            req.threshold = threshold;
            req.tune = tune;
            req.aggregate = *gs::parse_aggregate(aggregate);
            const auto report = gs::cmd_classify(gs::read_json_file(analysis_report), req);
            emit(report, classify_out);
            if (!classify_out.empty() && classify_out != "-") {
                const auto& m = report["metrics"];
                std::cout << "threshold = " << fmt(report["threshold"]) << ", sensitivity = " << fmt(m["sensitivity"])
                          << ", specificity = " << fmt(m["specificity"]) << '\n';
            }
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
