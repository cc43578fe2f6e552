#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsentinel {

/// Raised for malformed input data (files, configs, inconsistent datasets).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vec3 = std::array<double, 3>;

/// Unit quaternion stored as (w, x, y, z).
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Quaternion operator-() const { return {-w, -x, -y, -z}; }
    bool operator==(const Quaternion&) const = default;
};

enum class GraspLabel { rest, power, tridigital, unknown };
enum class Condition { training, success, failure };

inline std::string_view to_string(GraspLabel g) {
    switch (g) {
        case GraspLabel::rest: return "rest";
        case GraspLabel::power: return "power";
        case GraspLabel::tridigital: return "tridigital";
        case GraspLabel::unknown: break;
    }
    return "unknown";
}

inline std::string_view to_string(Condition c) {
    switch (c) {
        case Condition::training: return "training";
        case Condition::success: return "success";
        case Condition::failure: break;
    }
    return "failure";
}

inline std::optional<GraspLabel> parse_grasp_label(std::string_view s) {
    if (s == "rest") return GraspLabel::rest;
    if (s == "power") return GraspLabel::power;
    if (s == "tridigital") return GraspLabel::tridigital;
    if (s == "unknown") return GraspLabel::unknown;
    return std::nullopt;
}

inline std::optional<Condition> parse_condition(std::string_view s) {
    if (s == "training") return Condition::training;
    if (s == "success") return Condition::success;
    if (s == "failure") return Condition::failure;
    return std::nullopt;
}

/// One sampled instant of the wrist: position in metres, orientation, and the
/// commanded activation of each degree of control.
struct WristState {
    double t_ms = 0.0;
    Vec3 position{};
    Quaternion orientation{};
    std::vector<double> activation;

    bool operator==(const WristState&) const = default;
};

struct Trial {
    std::string id;
    GraspLabel grasp = GraspLabel::unknown;
    Condition condition = Condition::training;
    std::vector<WristState> states;

    bool operator==(const Trial&) const = default;
};

struct Dataset {
    std::size_t k = 1;
    std::vector<Trial> trials;

    std::size_t state_count() const {
        std::size_t n = 0;
        for (const auto& t : trials) n += t.states.size();
        return n;
    }

    bool operator==(const Dataset&) const = default;
};

/// How the context weight of a training state is formed.
enum class ContextMode { position_and_rotation, rotation_only };

/// Whether the quaternion angle folds q and -q onto the same rotation
/// (`absolute`) or uses the raw inner product (`literal`, up to 180 deg).
enum class QuaternionSign { absolute, literal };

inline std::string_view to_string(ContextMode m) {
    return m == ContextMode::rotation_only ? "rotation-only" : "combined";
}

inline std::optional<ContextMode> parse_context_mode(std::string_view s) {
    if (s == "combined" || s == "position_and_rotation") return ContextMode::position_and_rotation;
    if (s == "rotation-only" || s == "rotation_only") return ContextMode::rotation_only;
    return std::nullopt;
}

/// Error-function parameters. `phi` is in degrees and `beta` in 1/deg^2.
struct ErrorParams {
    std::size_t k = 2;
    std::size_t n_min = 5;
    double r = 0.25;
    double delta = 0.02;
    double phi = 20.0;
    double alpha = 0.0;
    double beta = 0.0;
    ContextMode mode = ContextMode::position_and_rotation;
    QuaternionSign sign = QuaternionSign::absolute;
};

/// Builds ErrorParams, deriving the sharpness terms so that a training state
/// sitting exactly on a cutoff gets factor sqrt(r):
///   alpha = -ln(sqrt(r)) / delta^2,  beta = -ln(sqrt(r)) / phi^2.
/// Throws std::invalid_argument when r is outside (0,1), a cutoff is not
/// positive, or k / n_min is zero.
inline ErrorParams derive_params(std::size_t k, std::size_t n_min, double r, double delta,
                                 double phi,
                                 ContextMode mode = ContextMode::position_and_rotation,
                                 QuaternionSign sign = QuaternionSign::absolute) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("r must lie in (0, 1)");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(phi > 0.0)) throw std::invalid_argument("phi must be positive");
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    if (n_min == 0) throw std::invalid_argument("n_min must be at least 1");

    const double edge = -std::log(std::sqrt(r));
    ErrorParams p;
    p.k = k;
    p.n_min = n_min;
    p.r = r;
    p.delta = delta;
    p.phi = phi;
    p.alpha = edge / (delta * delta);
    p.beta = edge / (phi * phi);
    p.mode = mode;
    p.sign = sign;
    return p;
}

/// Parameter set used for the reach-to-grasp experiment.
inline ErrorParams default_params() { return derive_params(2, 5, 0.25, 0.02, 20.0); }

/// Result of scoring one state. `error` is empty when fewer than n_min
/// training states fall inside the focal area.
struct StateEvaluation {
    std::optional<double> error;
    std::size_t neighbour_count = 0;
    double total_weight = 0.0;

    bool evaluable() const { return error.has_value(); }
};

struct Violation {
    std::string trial_id;
    std::size_t state_index = 0;  // index within the trial; 0 for trial-level issues
    std::string message;
};

inline constexpr double kUnitTolerance = 1e-6;
// Norms closer than this to 1 are left bit-for-bit untouched so that
// save/load cycles are lossless.
inline constexpr double kExactUnitTolerance = 1e-12;

/// Checks every dataset invariant. Quaternions whose norm is within 1e-6 of
/// one are renormalised in place; anything farther is reported.
inline std::vector<Violation> validate_dataset(Dataset& ds) {
    std::vector<Violation> out;
    if (ds.k < 1) out.push_back({"", 0, "k must be at least 1"});

    for (auto& trial : ds.trials) {
        if (trial.states.empty()) {
            out.push_back({trial.id, 0, "trial has no states"});
            continue;
        }
        for (std::size_t i = 0; i < trial.states.size(); ++i) {
            auto& s = trial.states[i];
            if (i > 0 && !(s.t_ms > trial.states[i - 1].t_ms))
                out.push_back({trial.id, i, "timestamps not strictly increasing"});
            if (s.activation.size() != ds.k)
                out.push_back({trial.id, i,
                               "activation length " + std::to_string(s.activation.size()) +
                                   " does not match k=" + std::to_string(ds.k)});
            for (double a : s.activation) {
                if (!(a >= 0.0 && a <= 1.0)) {
                    out.push_back({trial.id, i, "activation out of [0,1]"});
                    break;
                }
            }
            for (double c : s.position) {
                if (!std::isfinite(c)) {
                    out.push_back({trial.id, i, "non-finite position"});
                    break;
                }
            }
            const double n = s.orientation.norm();
            if (!(std::abs(n - 1.0) <= kUnitTolerance)) {
                out.push_back({trial.id, i, "non-unit quaternion"});
            } else if (std::abs(n - 1.0) > kExactUnitTolerance) {
                s.orientation = {s.orientation.w / n, s.orientation.x / n, s.orientation.y / n,
                                 s.orientation.z / n};
            }
        }
    }
    return out;
}

inline std::string describe(const Violation& v) {
    if (v.trial_id.empty()) return v.message;
    return "trial '" + v.trial_id + "' state " + std::to_string(v.state_index) + ": " + v.message;
}

}  // namespace gsentinel
