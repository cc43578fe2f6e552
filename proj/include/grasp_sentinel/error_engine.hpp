#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "grasp_sentinel/geometry.hpp"
#include "grasp_sentinel/types.hpp"

namespace gsentinel {

enum class TrainingScope { full, target_area };

inline std::string_view to_string(TrainingScope s) {
    return s == TrainingScope::target_area ? "target-area" : "full";
}

inline std::optional<TrainingScope> parse_scope(std::string_view s) {
    if (s == "full") return TrainingScope::full;
    if (s == "target-area" || s == "target_area") return TrainingScope::target_area;
    return std::nullopt;
}

namespace detail {

/// Pairwise (cascade) summation; O(log n) error growth.
inline double pairwise_sum(std::span<const double> v) {
    constexpr std::size_t kBlock = 16;
    if (v.size() <= kBlock) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace detail

/// Mean squared difference between two activation vectors: <a-b, a-b> / k.
inline double activation_mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("activation_mse: length mismatch");
    if (a.empty()) throw std::invalid_argument("activation_mse: empty activation vector");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

/// Scores one state against the training data.
///
/// Every training state receives a context weight w_j. If fewer than
/// params.n_min states have w_j > 0 the state is not evaluable; otherwise the
/// error is the weighted mean of activation_mse over those states:
///
///   C(x, D) = sum_j MSE(M_x, M_j) w_j / sum_j w_j
///
/// Numerator and denominator use pairwise summation.
inline StateEvaluation evaluate_state(const WristState& x, const Dataset& training,
                                      const ErrorParams& params) {
    if (x.activation.size() != training.k)
        throw std::invalid_argument("evaluate_state: activation length " +
                                    std::to_string(x.activation.size()) +
                                    " does not match training k=" + std::to_string(training.k));

    std::vector<double> weights;
    std::vector<double> weighted;
    for (const auto& trial : training.trials) {
        for (const auto& s : trial.states) {
            const double w = combined_weight(x, s, params);
            if (w > 0.0) {
                weights.push_back(w);
                weighted.push_back(activation_mse(x.activation, s.activation) * w);
            }
        }
    }

    StateEvaluation out;
    out.neighbour_count = weights.size();
    out.total_weight = detail::pairwise_sum(weights);
    if (out.neighbour_count >= params.n_min && out.total_weight > 0.0) {
        const double c = detail::pairwise_sum(weighted) / out.total_weight;
        out.error = std::clamp(c, 0.0, 1.0);
    }
    return out;
}

/// Keeps the final `count` states of every trial (fewer when a trial is
/// shorter). Trial order and metadata are preserved.
inline Dataset extract_target_area(const Dataset& training, std::size_t count = 20) {
    if (count < 1) throw std::invalid_argument("extract_target_area: count must be at least 1");
    Dataset out;
    out.k = training.k;
    out.trials.reserve(training.trials.size());
    for (const auto& trial : training.trials) {
        Trial t;
        t.id = trial.id;
        t.grasp = trial.grasp;
        t.condition = trial.condition;
        const std::size_t keep = std::min(count, trial.states.size());
        t.states.assign(trial.states.end() - static_cast<std::ptrdiff_t>(keep),
                        trial.states.end());
        out.trials.push_back(std::move(t));
    }
    return out;
}

struct TrialEvaluation {
    std::string trial_id;
    GraspLabel grasp = GraspLabel::unknown;
    Condition condition = Condition::training;
    std::vector<StateEvaluation> states;
};

struct EvaluationRun {
    ErrorParams params;
    TrainingScope scope = TrainingScope::full;
    std::size_t target_count = 20;
    std::size_t training_states_used = 0;
    std::vector<TrialEvaluation> trials;

    std::size_t state_count() const {
        std::size_t n = 0;
        for (const auto& t : trials) n += t.states.size();
        return n;
    }

    std::size_t evaluable_count() const {
        std::size_t n = 0;
        for (const auto& t : trials)
            for (const auto& s : t.states) n += s.evaluable() ? 1 : 0;
        return n;
    }

    /// All evaluable errors in trial/state order.
    std::vector<double> evaluable_errors() const {
        std::vector<double> v;
        for (const auto& t : trials)
            for (const auto& s : t.states)
                if (s.error) v.push_back(*s.error);
        return v;
    }
};

struct EvaluationOptions {
    TrainingScope scope = TrainingScope::full;
    std::size_t target_count = 20;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned threads = 0;
};

/// Scores every state of every test trial against the full training data or
/// against its target area. Output trials and states align with the input.
inline EvaluationRun evaluate_dataset(const Dataset& test, const Dataset& training,
                                      const ErrorParams& params,
                                      const EvaluationOptions& opts = {}) {
    if (test.k != training.k)
        throw std::invalid_argument("evaluate_dataset: test k=" + std::to_string(test.k) +
                                    " does not match training k=" + std::to_string(training.k));

    EvaluationRun run;
    run.params = params;
    run.scope = opts.scope;
    run.target_count = opts.target_count;

    const Dataset reference = opts.scope == TrainingScope::target_area
                                  ? extract_target_area(training, opts.target_count)
                                  : training;
    run.training_states_used = reference.state_count();

    // Flat list of (trial, state) slots so the work can be split evenly.
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    run.trials.reserve(test.trials.size());
    for (std::size_t ti = 0; ti < test.trials.size(); ++ti) {
        const auto& trial = test.trials[ti];
        run.trials.push_back({trial.id, trial.grasp, trial.condition,
                              std::vector<StateEvaluation>(trial.states.size())});
        for (std::size_t si = 0; si < trial.states.size(); ++si) slots.emplace_back(ti, si);
    }
    if (slots.empty()) return run;

    for (const auto& trial : test.trials)
        for (const auto& s : trial.states)
            if (s.activation.size() != training.k)
                throw std::invalid_argument("evaluate_dataset: trial '" + trial.id +
                                            "' has a state with the wrong activation length");

    unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, slots.size()));

    std::vector<std::exception_ptr> failures(workers);
    auto work = [&](unsigned worker, std::size_t begin, std::size_t end) {
        try {
            for (std::size_t i = begin; i < end; ++i) {
                const auto [ti, si] = slots[i];
                run.trials[ti].states[si] =
                    evaluate_state(test.trials[ti].states[si], reference, params);
            }
        } catch (...) {
            failures[worker] = std::current_exception();
        }
    };

    if (workers <= 1) {
        work(0, 0, slots.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (slots.size() + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(slots.size(), b + chunk);
            if (b < e) pool.emplace_back(work, w, b, e);
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return run;
}

}  // namespace gsentinel
