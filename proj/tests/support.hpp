#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "grasp_sentinel/random.hpp"
#include "grasp_sentinel/types.hpp"

namespace gstest {

using namespace gsentinel;

inline WristState make_state(Vec3 p, Quaternion q, std::vector<double> a, double t = 0.0) {
    WristState s;
    s.t_ms = t;
    s.position = p;
    s.orientation = q;
    s.activation = std::move(a);
    return s;
}

inline Dataset single_trial(std::size_t k, std::vector<WristState> states) {
    Dataset ds;
    ds.k = k;
    Trial t{"t", GraspLabel::power, Condition::training, std::move(states)};
    for (std::size_t i = 0; i < t.states.size(); ++i) t.states[i].t_ms = 12.0 * static_cast<double>(i);
    ds.trials.push_back(std::move(t));
    return ds;
}

inline Quaternion random_unit_quaternion(Rng& rng) {
    Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Unit quaternion rotated away from `q` by a random rotation of up to
/// `max_deg` (3D angle), with a random overall sign.
inline Quaternion perturb(Rng& rng, const Quaternion& q, double max_deg) {
    Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    const double h = 0.5 * rng.uniform(0.0, max_deg) * std::numbers::pi / 180.0;
    const Quaternion r{std::cos(h), std::sin(h) * axis[0] / n, std::sin(h) * axis[1] / n,
                       std::sin(h) * axis[2] / n};
    Quaternion out{r.w * q.w - r.x * q.x - r.y * q.y - r.z * q.z,
                   r.w * q.x + r.x * q.w + r.y * q.z - r.z * q.y,
                   r.w * q.y - r.x * q.z + r.y * q.w + r.z * q.x,
                   r.w * q.z + r.x * q.y - r.y * q.x + r.z * q.w};
    const double m = std::sqrt(out.w * out.w + out.x * out.x + out.y * out.y + out.z * out.z);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return {sign * out.w / m, sign * out.x / m, sign * out.y / m, sign * out.z / m};
}

inline std::vector<double> random_activation(Rng& rng, std::size_t k) {
    std::vector<double> a(k);
    for (auto& v : a) v = rng.uniform();
    return a;
}

/// Random valid dataset whose states scatter around a few poses so that
/// weights are a mix of zero and nonzero.
inline Dataset random_dataset(Rng& rng, std::size_t k, std::size_t trials, std::size_t max_states) {
    Dataset ds;
    ds.k = k;
    const std::vector<std::string> conds{"training", "success", "failure"};
    for (std::size_t t = 0; t < trials; ++t) {
        Trial tr;
        tr.id = "trial-" + std::to_string(t);
        tr.grasp = static_cast<GraspLabel>(rng.below(4));
        tr.condition = static_cast<Condition>(rng.below(3));
        const std::size_t n = 1 + rng.below(max_states);
        double clock = rng.uniform(0.0, 5.0);
        for (std::size_t i = 0; i < n; ++i) {
            clock += rng.uniform(0.5, 20.0);
            Vec3 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.0, 2.0)};
            tr.states.push_back(make_state(p, random_unit_quaternion(rng), random_activation(rng, k), clock));
        }
        ds.trials.push_back(std::move(tr));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Reference implementations, written from the formulas without reusing any
// library code path.

inline double oracle_angle_deg(const Quaternion& a, const Quaternion& b, bool absolute = true) {
    double c = (a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z) /
               (std::sqrt(a.w * a.w + a.x * a.x + a.y * a.y + a.z * a.z) *
                std::sqrt(b.w * b.w + b.x * b.x + b.y * b.y + b.z * b.z));
    if (absolute) c = std::fabs(c);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return std::acos(c) * 180.0 / std::numbers::pi;
}

/// Rotation matrix of a unit quaternion, row major.
inline std::array<double, 9> rotation_matrix(const Quaternion& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
            2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

/// Geodesic distance on SO(3) in degrees: acos((trace(Ra^T Rb) - 1) / 2).
inline double geodesic_deg(const Quaternion& a, const Quaternion& b) {
    const auto ra = rotation_matrix(a);
    const auto rb = rotation_matrix(b);
    double trace = 0.0;
    for (int i = 0; i < 9; ++i) trace += ra[i] * rb[i];
    double c = 0.5 * (trace - 1.0);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return std::acos(c) * 180.0 / std::numbers::pi;
}

struct OracleResult {
    bool evaluable = false;
    double error = 0.0;
    std::size_t count = 0;
};

/// Straight-line weighted mean error over every training state.
inline OracleResult oracle_evaluate(const WristState& x, const Dataset& training, double r, double delta,
                                    double phi, std::size_t n_min, bool rotation_only) {
    const double alpha = -std::log(std::sqrt(r)) / (delta * delta);
    const double beta = -std::log(std::sqrt(r)) / (phi * phi);
    double num = 0.0, den = 0.0;
    OracleResult out;
    for (const auto& t : training.trials) {
        for (const auto& s : t.states) {
            const double dx = x.position[0] - s.position[0];
            const double dy = x.position[1] - s.position[1];
            const double dz = x.position[2] - s.position[2];
            const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
            const double theta = oracle_angle_deg(x.orientation, s.orientation);
            const double wp = d <= delta ? std::exp(-alpha * d * d) : 0.0;
            const double wr = theta <= phi ? std::exp(-beta * theta * theta) : 0.0;
            const double w = rotation_only ? wr : wp * wr;
            if (w <= 0.0) continue;
            double mse = 0.0;
            for (std::size_t i = 0; i < x.activation.size(); ++i) {
                const double e = x.activation[i] - s.activation[i];
                mse += e * e;
            }
            mse /= static_cast<double>(x.activation.size());
            num += mse * w;
            den += w;
            ++out.count;
        }
    }
    if (out.count >= n_min && den > 0.0) {
        out.evaluable = true;
        out.error = num / den;
    }
    return out;
}

/// Random query plus a training set of up to `max_n` states scattered
/// around it so that some fall inside the focal area and some outside.
struct OracleInstance {
    WristState x;
    Dataset training;
};

inline OracleInstance random_oracle_instance(Rng& rng, std::size_t k, std::size_t max_n) {
    OracleInstance inst;
    inst.x = make_state({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.0)},
                        random_unit_quaternion(rng), random_activation(rng, k));
    inst.training.k = k;
    const std::size_t n = 1 + rng.below(max_n);
    Trial t{"train", GraspLabel::power, Condition::training, {}};
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 p = inst.x.position;
        for (auto& c : p) c += rng.uniform(-0.025, 0.025);
        t.states.push_back(make_state(p, perturb(rng, inst.x.orientation, 50.0), random_activation(rng, k),
                                      12.0 * static_cast<double>(i)));
    }
    inst.training.trials.push_back(std::move(t));
    return inst;
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against U(0,1).
inline double ks_uniform_statistic(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        d = std::max(d, static_cast<double>(i + 1) / n - v[i]);
        d = std::max(d, v[i] - static_cast<double>(i) / n);
    }
    return d;
}

}  // namespace gstest
