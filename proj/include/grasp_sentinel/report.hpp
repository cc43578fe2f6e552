#pragma once

// JSON reports produced by the command-line workflow:
//
//   synth    -> training.csv, success.csv, failure.csv
//   eval     -> "grasp-sentinel/eval" report (per-state errors of one test set)
//   analyze  -> "grasp-sentinel/analysis" report (success vs failure statistics)
//   classify -> "grasp-sentinel/classification" report (per-trial labels)
//
// Each report embeds the parameters and inputs it was computed from.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grasp_sentinel/analysis.hpp"
#include "grasp_sentinel/dataset_io.hpp"
#include "grasp_sentinel/error_engine.hpp"
#include "grasp_sentinel/synth.hpp"
#include "grasp_sentinel/types.hpp"

namespace gsentinel {

using nlohmann::json;

inline constexpr std::string_view kEvalKind = "grasp-sentinel/eval";
inline constexpr std::string_view kAnalysisKind = "grasp-sentinel/analysis";
inline constexpr std::string_view kClassificationKind = "grasp-sentinel/classification";

namespace detail {

inline json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

inline const json& require(const json& j, std::string_view key, std::string_view what) {
    const auto it = j.find(key);
    if (it == j.end())
        throw DataError(std::string(what) + ": missing field '" + std::string(key) + "'");
    return *it;
}

inline void expect_kind(const json& j, std::string_view kind, std::string_view what) {
    if (!j.is_object() || j.value("kind", "") != kind)
        throw DataError(std::string(what) + ": expected a '" + std::string(kind) + "' report");
}

}  // namespace detail

inline json params_to_json(const ErrorParams& p) {
    return {{"k", p.k},
            {"n_min", p.n_min},
            {"r", p.r},
            {"delta_m", p.delta},
            {"phi_deg", p.phi},
            {"alpha", p.alpha},
            {"beta", p.beta},
            {"mode", to_string(p.mode)},
            {"quaternion_sign", p.sign == QuaternionSign::literal ? "literal" : "absolute"}};
}

inline json descriptives_to_json(const DescriptiveStats& d) {
    return {{"count", d.count},   {"mean", d.mean}, {"sd", d.sd_defined ? json(d.sd) : json(nullptr)},
            {"median", d.median}, {"min", d.min},   {"max", d.max},
            {"range", d.range}};
}

inline json trial_summary_to_json(const TrialSummary& s) {
    json j{{"trial_id", s.trial_id},
           {"condition", to_string(s.condition)},
           {"states", s.state_count},
           {"evaluable", s.evaluable_count},
           {"flagged", s.flagged()},
           {"corrected_mean", detail::optional_number(s.corrected_mean)}};
    if (s.flagged()) {
        j["range"] = nullptr;
        j["max_error"] = nullptr;
        j["max_states_from_end"] = nullptr;
    } else {
        j["range"] = s.range;
        j["max_error"] = s.max_error;
        j["max_states_from_end"] = s.max_states_from_end;
    }
    return j;
}

inline json condition_summary_to_json(const ConditionSummary& c) {
    return {{"trials", c.trials},
            {"flagged_trials", c.flagged_trials},
            {"mean_of_trial_means", c.mean_of_means},
            {"mean_trial_range", c.mean_range},
            {"mean_max_states_from_end", c.mean_max_states_from_end}};
}

inline json confusion_to_json(const ConfusionMetrics& m) {
    return {{"tp", m.tp},
            {"fp", m.fp},
            {"tn", m.tn},
            {"fn", m.fn},
            {"sensitivity", detail::optional_number(m.sensitivity)},
            {"specificity", detail::optional_number(m.specificity)}};
}

struct EvalRequest {
    std::filesystem::path training_path;
    std::filesystem::path test_path;
    ErrorParams params = default_params();
    EvaluationOptions options;
};

inline json eval_report(const EvaluationRun& run, const json& inputs) {
    json trials = json::array();
    for (const auto& t : run.trials) {
        json errors = json::array();
        json counts = json::array();
        std::size_t evaluable = 0;
        for (const auto& s : t.states) {
            errors.push_back(detail::optional_number(s.error));
            counts.push_back(s.neighbour_count);
            evaluable += s.evaluable() ? 1 : 0;
        }
        trials.push_back({{"trial_id", t.trial_id},
                          {"condition", to_string(t.condition)},
                          {"grasp_label", to_string(t.grasp)},
                          {"states", t.states.size()},
                          {"evaluable", evaluable},
                          {"errors", std::move(errors)},
                          {"neighbour_counts", std::move(counts)}});
    }
    json meta = inputs;
    meta["params"] = params_to_json(run.params);
    meta["scope"] = to_string(run.scope);
    meta["target_count"] = run.target_count;
    meta["training_states_used"] = run.training_states_used;
    meta["test_states"] = run.state_count();
    meta["evaluable_states"] = run.evaluable_count();
    return {{"kind", kEvalKind}, {"version", 1}, {"metadata", std::move(meta)}, {"trials", std::move(trials)}};
}

/// Loads both datasets, evaluates every test state and returns the report.
inline json cmd_eval(const EvalRequest& req) {
    const Dataset training = load_dataset(req.training_path);
    const Dataset test = load_dataset(req.test_path);
    if (training.k != req.params.k)
        throw DataError("training data has k=" + std::to_string(training.k) +
                        " but parameters specify k=" + std::to_string(req.params.k));
    if (test.k != training.k)
        throw DataError("k mismatch: training k=" + std::to_string(training.k) +
                        ", test k=" + std::to_string(test.k));
    const auto run = evaluate_dataset(test, training, req.params, req.options);
    return eval_report(run, {{"training", req.training_path.string()},
                             {"test", req.test_path.string()},
                             {"training_states", training.state_count()}});
}

/// Rebuilds the per-state view of an eval report. Only errors and neighbour
/// counts are restored; total weights are not serialised.
inline EvaluationRun run_from_report(const json& report) {
    detail::expect_kind(report, kEvalKind, "eval report");
    EvaluationRun run;
    const auto& meta = detail::require(report, "metadata", "eval report");
    run.scope = parse_scope(meta.value("scope", "full")).value_or(TrainingScope::full);
    run.target_count = meta.value("target_count", std::size_t{20});
    run.training_states_used = meta.value("training_states_used", std::size_t{0});
    for (const auto& t : detail::require(report, "trials", "eval report")) {
        TrialEvaluation te;
        te.trial_id = t.at("trial_id").get<std::string>();
        te.condition = parse_condition(t.at("condition").get<std::string>()).value_or(Condition::training);
        te.grasp = parse_grasp_label(t.at("grasp_label").get<std::string>()).value_or(GraspLabel::unknown);
        const auto& errors = t.at("errors");
        const auto& counts = t.at("neighbour_counts");
        if (errors.size() != counts.size()) throw DataError("eval report: trial '" + te.trial_id + "' is inconsistent");
        for (std::size_t i = 0; i < errors.size(); ++i) {
            StateEvaluation s;
            if (!errors[i].is_null()) s.error = errors[i].get<double>();
            s.neighbour_count = counts[i].get<std::size_t>();
            te.states.push_back(s);
        }
        run.trials.push_back(std::move(te));
    }
    return run;
}

inline json cmd_analyze(const json& success_report, const json& failure_report,
                        std::size_t permutations, std::uint64_t seed) {
    const EvaluationRun success = run_from_report(success_report);
    const EvaluationRun failure = run_from_report(failure_report);
    const auto success_errors = success.evaluable_errors();
    const auto failure_errors = failure.evaluable_errors();
    if (success_errors.empty()) throw DataError("success report has no evaluable states");
    if (failure_errors.empty()) throw DataError("failure report has no evaluable states");

    const auto ds = descriptives(success_errors);
    const auto df = descriptives(failure_errors);
    const auto ts = trial_summaries(success);
    const auto tf = trial_summaries(failure);
    const auto perm = permutation_test(success_errors, failure_errors, permutations, seed);

    auto side = [](const DescriptiveStats& d, const std::vector<TrialSummary>& trials) {
        json list = json::array();
        for (const auto& t : trials) list.push_back(trial_summary_to_json(t));
        return json{{"descriptives", descriptives_to_json(d)},
                    {"condition_summary", condition_summary_to_json(summarise_condition(trials))},
                    {"trials", std::move(list)}};
    };

    return {{"kind", kAnalysisKind},
            {"version", 1},
            {"metadata",
             {{"permutations", permutations},
              {"seed", seed},
              {"success_source", success_report.at("metadata")},
              {"failure_source", failure_report.at("metadata")}}},
            {"success", side(ds, ts)},
            {"failure", side(df, tf)},
            {"range_ratio", ds.range > 0.0 ? json(range_ratio(ds, df)) : json(nullptr)},
            {"permutation",
             {{"statistic", "mean(failure) - mean(success)"},
              {"p_value", perm.p_value},
              {"observed", perm.observed},
              {"at_least_observed", perm.at_least},
              {"permutations", perm.permutations}}},
            {"runs", {{"success", success_report}, {"failure", failure_report}}}};
}

/// Sensitivity / specificity at every candidate threshold: below all scores,
/// between each pair of adjacent distinct scores, and at the maximum.
inline json roc_points(std::span<const double> success_scores, std::span<const double> failure_scores) {
    std::vector<double> pooled(success_scores.begin(), success_scores.end());
    pooled.insert(pooled.end(), failure_scores.begin(), failure_scores.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    std::vector<double> cuts;
    if (!pooled.empty()) cuts.push_back(pooled.front() - 1.0);
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i)
        cuts.push_back(pooled[i] + 0.5 * (pooled[i + 1] - pooled[i]));
    if (!pooled.empty()) cuts.push_back(pooled.back());
    json points = json::array();
    for (double t : cuts) {
        const auto tp = std::count_if(failure_scores.begin(), failure_scores.end(), [t](double v) { return v > t; });
        const auto tn = std::count_if(success_scores.begin(), success_scores.end(), [t](double v) { return v <= t; });
        points.push_back(
            {{"threshold", t},
             {"sensitivity", failure_scores.empty() ? json(nullptr)
                                                    : json(static_cast<double>(tp) / static_cast<double>(failure_scores.size()))},
             {"specificity", success_scores.empty() ? json(nullptr)
                                                    : json(static_cast<double>(tn) / static_cast<double>(success_scores.size()))}});
    }
    return points;
}

struct ClassifyRequest {
    std::optional<double> threshold;
    bool tune = false;
    Aggregate aggregate = Aggregate::max;
};

/// Labels every trial of an analysis report as failure / non_failure using a
/// fixed or tuned threshold on its aggregated error.
inline json cmd_classify(const json& analysis, const ClassifyRequest& req) {
    detail::expect_kind(analysis, kAnalysisKind, "analysis report");
    if (req.tune == req.threshold.has_value())
        throw std::invalid_argument("classify needs exactly one of a threshold or tuning");
    const auto& runs = detail::require(analysis, "runs", "analysis report");

    struct Scored {
        std::string id;
        Condition truth;
        std::optional<double> score;
    };
    std::vector<Scored> trials;
    for (const char* key : {"success", "failure"}) {
        const EvaluationRun run = run_from_report(detail::require(runs, key, "analysis report"));
        const Condition truth = std::string_view(key) == "failure" ? Condition::failure : Condition::success;
        for (const auto& t : run.trials) {
            std::vector<double> errors;
            for (const auto& s : t.states)
                if (s.error) errors.push_back(*s.error);
            trials.push_back({t.trial_id, truth, aggregate_errors(errors, req.aggregate)});
        }
    }

    std::vector<double> s, f;
    for (const auto& t : trials)
        if (t.score) (t.truth == Condition::failure ? f : s).push_back(*t.score);
    json tuning = nullptr;
    double threshold = 0.0;
    if (req.tune) {
        if (s.empty() || f.empty())
            throw DataError("tuning needs classifiable trials in both conditions");
        const auto choice = tune_threshold(s, f);
        threshold = choice.threshold;
        // rates over classifiable trials only
        tuning = {{"youden", choice.youden},
                  {"sensitivity", choice.sensitivity},
                  {"specificity", choice.specificity},
                  {"fallback", choice.fallback}};
    } else {
        threshold = *req.threshold;
    }

    std::vector<TrialClass> predictions;
    std::vector<Condition> truth;
    json labels = json::array();
    json unclassifiable = json::array();
    for (const auto& t : trials) {
        const TrialClass c = !t.score ? TrialClass::unclassifiable
                             : *t.score > threshold ? TrialClass::failure
                                                    : TrialClass::non_failure;
        predictions.push_back(c);
        truth.push_back(t.truth);
        labels.push_back({{"trial_id", t.id},
                          {"condition", to_string(t.truth)},
                          {"score", detail::optional_number(t.score)},
                          {"label", to_string(c)}});
        if (c == TrialClass::unclassifiable) unclassifiable.push_back(t.id);
    }

    return {{"kind", kClassificationKind},
            {"version", 1},
            {"metadata", {{"aggregate", to_string(req.aggregate)}, {"analysis", analysis.at("metadata")}}},
            {"threshold", threshold},
            {"tuned", req.tune},
            {"tuning", std::move(tuning)},
            {"trials", std::move(labels)},
            {"unclassifiable", std::move(unclassifiable)},
            {"roc", roc_points(s, f)},
            {"metrics", confusion_to_json(confusion_metrics(predictions, truth))}};
}

struct SynthOutputs {
    std::filesystem::path training;
    std::filesystem::path success;
    std::filesystem::path failure;
};

inline SynthOutputs cmd_synth(const SynthConfig& config, const std::filesystem::path& out_dir) {
    const Experiment e = generate_experiment(config);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    SynthOutputs out{out_dir / "training.csv", out_dir / "success.csv", out_dir / "failure.csv"};
    save_dataset(e.training, out.training);
    save_dataset(e.success, out.success);
    save_dataset(e.failure, out.failure);
    return out;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace gsentinel
