#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "grasp_sentinel/error_engine.hpp"
#include "grasp_sentinel/random.hpp"
#include "grasp_sentinel/types.hpp"

namespace gsentinel {

struct DescriptiveStats {
    double mean = 0.0;
    double sd = 0.0;  // sample SD (n-1); 0 with sd_defined=false for n=1
    bool sd_defined = false;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;
    std::size_t count = 0;
};

inline DescriptiveStats descriptives(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("descriptives: empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());

    DescriptiveStats d;
    d.count = v.size();
    d.min = v.front();
    d.max = v.back();
    d.range = d.max - d.min;
    const std::size_t mid = v.size() / 2;
    d.median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    d.mean = detail::pairwise_sum(values) / static_cast<double>(d.count);
    if (d.count > 1) {
        std::vector<double> sq(values.size());
        std::transform(values.begin(), values.end(), sq.begin(),
                       [&](double x) { return (x - d.mean) * (x - d.mean); });
        d.sd = std::sqrt(detail::pairwise_sum(sq) / static_cast<double>(d.count - 1));
        d.sd_defined = true;
    }
    return d;
}

struct PermutationResult {
    double p_value = 1.0;
    double observed = 0.0;       // mean(b) - mean(a)
    std::size_t at_least = 0;    // permuted statistics >= observed
    std::size_t permutations = 0;
};

/// One-sided two-sample permutation test that `b` has the larger mean.
///
/// Statistic T = mean(b) - mean(a). The pooled sample is reshuffled
/// `permutations` times (Fisher-Yates, Rng seeded with `seed`) and
///   p = (#{T* >= T} + 1) / (permutations + 1),
/// so p is never below 1 / (permutations + 1). Permuted statistics that tie
/// the observed one up to rounding noise count as exceedances.
inline PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                          std::size_t permutations, std::uint64_t seed) {
    if (a.empty() || b.empty()) throw std::invalid_argument("permutation_test: empty sample");
    if (permutations < 1) throw std::invalid_argument("permutation_test: need at least one permutation");

    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());

    double scale = 1.0;
    for (double x : pooled) scale = std::max(scale, std::abs(x));
    const double tie_tolerance = 1e-12 * scale;

    auto statistic = [&](std::span<const double> v) {
        const double sa = detail::pairwise_sum(v.first(a.size()));
        const double sb = detail::pairwise_sum(v.subspan(a.size()));
        return sb / nb - sa / na;
    };

    PermutationResult res;
    res.permutations = permutations;
    res.observed = statistic(pooled);

    Rng rng(seed);
    for (std::size_t i = 0; i < permutations; ++i) {
        rng.shuffle(std::span<double>(pooled));
        if (statistic(pooled) >= res.observed - tie_tolerance) ++res.at_least;
    }
    res.p_value = static_cast<double>(res.at_least + 1) / static_cast<double>(permutations + 1);
    return res;
}

/// Ratio of sample ranges, b over a.
inline double range_ratio(const DescriptiveStats& a, const DescriptiveStats& b) {
    if (!(a.range > 0.0)) throw std::invalid_argument("range_ratio: reference range is zero");
    return b.range / a.range;
}

struct TrialSummary {
    std::string trial_id;
    Condition condition = Condition::training;
    std::size_t state_count = 0;
    std::size_t evaluable_count = 0;
    /// Mean over the trial's evaluable states; empty when none are evaluable.
    std::optional<double> corrected_mean;
    double range = 0.0;
    double max_error = 0.0;
    /// Distance, in states, of the maximum error from the final state.
    std::size_t max_states_from_end = 0;

    bool flagged() const { return evaluable_count == 0; }
};

inline std::vector<TrialSummary> trial_summaries(const EvaluationRun& run) {
    std::vector<TrialSummary> out;
    out.reserve(run.trials.size());
    for (const auto& t : run.trials) {
        TrialSummary s;
        s.trial_id = t.trial_id;
        s.condition = t.condition;
        s.state_count = t.states.size();
        double lo = 0.0, hi = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < t.states.size(); ++i) {
            if (!t.states[i].error) continue;
            const double e = *t.states[i].error;
            if (s.evaluable_count == 0 || e < lo) lo = e;
            // >= keeps the latest state on ties, i.e. the one nearest the grasp
            if (s.evaluable_count == 0 || e >= hi) {
                hi = e;
                s.max_states_from_end = t.states.size() - 1 - i;
            }
            sum += e;
            ++s.evaluable_count;
        }
        if (s.evaluable_count > 0) {
            s.corrected_mean = sum / static_cast<double>(s.evaluable_count);
            s.range = hi - lo;
            s.max_error = hi;
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Condition-level view over trial summaries; trials without evaluable states
/// are excluded rather than averaged as zero.
struct ConditionSummary {
    std::size_t trials = 0;
    std::size_t flagged_trials = 0;
    double mean_of_means = 0.0;
    double mean_range = 0.0;
    double mean_max_states_from_end = 0.0;
};

inline ConditionSummary summarise_condition(std::span<const TrialSummary> summaries) {
    ConditionSummary c;
    c.trials = summaries.size();
    std::size_t used = 0;
    for (const auto& s : summaries) {
        if (s.flagged()) {
            ++c.flagged_trials;
            continue;
        }
        c.mean_of_means += *s.corrected_mean;
        c.mean_range += s.range;
        c.mean_max_states_from_end += static_cast<double>(s.max_states_from_end);
        ++used;
    }
    if (used > 0) {
        c.mean_of_means /= static_cast<double>(used);
        c.mean_range /= static_cast<double>(used);
        c.mean_max_states_from_end /= static_cast<double>(used);
    }
    return c;
}

enum class TrialClass { failure, non_failure, unclassifiable };
enum class Aggregate { max, mean };

inline std::string_view to_string(TrialClass c) {
    switch (c) {
        case TrialClass::failure: return "failure";
        case TrialClass::non_failure: return "non_failure";
        case TrialClass::unclassifiable: break;
    }
    return "unclassifiable";
}

inline std::string_view to_string(Aggregate a) { return a == Aggregate::mean ? "mean" : "max"; }

inline std::optional<Aggregate> parse_aggregate(std::string_view s) {
    if (s == "max") return Aggregate::max;
    if (s == "mean") return Aggregate::mean;
    return std::nullopt;
}

/// Collapses a trial's evaluable errors to one score (max by default).
inline std::optional<double> aggregate_errors(std::span<const double> errors,
                                              Aggregate agg = Aggregate::max) {
    if (errors.empty()) return std::nullopt;
    if (agg == Aggregate::mean)
        return detail::pairwise_sum(errors) / static_cast<double>(errors.size());
    return *std::max_element(errors.begin(), errors.end());
}

/// A trial is a failure iff its aggregated error strictly exceeds the threshold.
inline TrialClass classify_trial(std::span<const double> errors, double threshold,
                                 Aggregate agg = Aggregate::max) {
    const auto score = aggregate_errors(errors, agg);
    if (!score) return TrialClass::unclassifiable;
    return *score > threshold ? TrialClass::failure : TrialClass::non_failure;
}

struct ConfusionMetrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> sensitivity;  // TP / (TP + FN)
    std::optional<double> specificity;  // TN / (TN + FP)
};

/// Failure-condition trials are the positive class. A trial that could not be
/// classified raised no alarm and counts as a negative prediction.
inline ConfusionMetrics confusion_metrics(std::span<const TrialClass> predictions,
                                          std::span<const Condition> truth) {
    if (predictions.size() != truth.size())
        throw std::invalid_argument("confusion_metrics: length mismatch");
    ConfusionMetrics m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool predicted = predictions[i] == TrialClass::failure;
        const bool actual = truth[i] == Condition::failure;
        if (actual) (predicted ? m.tp : m.fn)++;
        else (predicted ? m.fp : m.tn)++;
    }
    if (m.tp + m.fn > 0) m.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    if (m.tn + m.fp > 0) m.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
    return m;
}

struct ThresholdChoice {
    double threshold = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double youden = 0.0;
    bool fallback = false;  // no candidate beat Youden 0; threshold is the pooled median
};

/// Picks a threshold from per-trial scores.
///
/// Candidates are midpoints between adjacent distinct pooled scores. The one
/// with the largest Youden index (sensitivity + specificity - 1) wins, ties
/// going to the higher specificity and then to the lower threshold. When no
/// candidate reaches a positive index the pooled median is returned.
inline ThresholdChoice tune_threshold(std::span<const double> success_scores,
                                      std::span<const double> failure_scores) {
    if (success_scores.empty() || failure_scores.empty())
        throw std::invalid_argument("tune_threshold: both score lists must be nonempty");

    std::vector<double> pooled(success_scores.begin(), success_scores.end());
    pooled.insert(pooled.end(), failure_scores.begin(), failure_scores.end());
    std::sort(pooled.begin(), pooled.end());

    auto rates = [&](double t) {
        const auto fails = static_cast<double>(
            std::count_if(failure_scores.begin(), failure_scores.end(), [t](double v) { return v > t; }));
        const auto passes = static_cast<double>(
            std::count_if(success_scores.begin(), success_scores.end(), [t](double v) { return v <= t; }));
        return std::pair{fails / static_cast<double>(failure_scores.size()),
                         passes / static_cast<double>(success_scores.size())};
    };

    std::optional<ThresholdChoice> best;
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
        if (!(pooled[i] < pooled[i + 1])) continue;
        const double t = pooled[i] + 0.5 * (pooled[i + 1] - pooled[i]);
        const auto [sens, spec] = rates(t);
        const double j = sens + spec - 1.0;
        if (!best || j > best->youden || (j == best->youden && spec > best->specificity))
            best = ThresholdChoice{t, sens, spec, j, false};
    }
    if (best && best->youden > 0.0) return *best;

    const std::size_t mid = pooled.size() / 2;
    ThresholdChoice fb;
    fb.threshold = pooled.size() % 2 ? pooled[mid] : 0.5 * (pooled[mid - 1] + pooled[mid]);
    std::tie(fb.sensitivity, fb.specificity) = rates(fb.threshold);
    fb.youden = fb.sensitivity + fb.specificity - 1.0;
    fb.fallback = true;
    return fb;
}

}  // namespace gsentinel
