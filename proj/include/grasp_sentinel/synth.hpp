#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "grasp_sentinel/dataset_io.hpp"
#include "grasp_sentinel/geometry.hpp"
#include "grasp_sentinel/random.hpp"
#include "grasp_sentinel/types.hpp"

namespace gsentinel {

/// Parameters of the synthetic reach-to-grasp experiment.
///
/// World frame: x points away from the subject, y to the left, z up. The
/// object is an upright capsule standing on the table at `object_position`.
/// Each trial reaches from a rest pose near the body to one of two contact
/// contexts: the cap (wrist above the object, fingers down, tridigital grasp)
/// or the body (wrist beside the object, palm facing it, power grasp).
/// Lengths are metres, angles degrees, times milliseconds.
struct SynthConfig {
    std::uint64_t seed = 7;

    std::size_t training_trials = 22;
    std::size_t success_trials = 8;
    std::size_t failure_trials = 20;

    Vec3 object_position{0.45, 0.0, 0.75};
    double object_height = 0.22;
    double object_radius = 0.04;

    Vec3 start_position{0.15, -0.20, 0.85};
    double start_position_sd = 0.08;
    double start_roll_deg = -30.0;
    double start_orientation_sd_deg = 8.0;

    double duration_min_ms = 1200.0;
    double duration_max_ms = 1800.0;
    double sample_interval_ms = 12.0;
    /// Reach progress (fraction of the path covered) at which the hand starts
    /// and finishes closing. 0.80..0.92 is roughly 500 ms to 330 ms before the
    /// grasp, so the hand is closed across the whole target area.
    double closing_start = 0.80;
    double closing_end = 0.92;
    /// Fraction of the reach duration before the wrist starts rotating.
    double orientation_delay = 0.55;

    std::vector<double> grasp_power{0.9, 0.9};
    std::vector<double> grasp_tridigital{0.9, 0.0};

    double activation_noise_sd = 0.03;
    double pose_noise_m = 0.002;
    double pose_noise_deg = 2.0;

    /// Fraction of trials whose contact is on the cap.
    double cap_fraction = 0.5;
    /// Wrist distance from the contact surface.
    double wrist_clearance = 0.09;
    /// Length of the final approach along the contact normal; the path bends
    /// so that the wrist arrives moving straight toward the surface.
    double approach_distance = 0.2;
    double body_height_fraction = 0.45;
    /// Approach variation around each contact context.
    double contact_jitter_m = 0.01;
    double contact_jitter_deg = 10.0;
};

/// Every key accepted by the configuration file, with its meaning.
inline const std::map<std::string, std::string, std::less<>>& synth_config_keys() {
    static const std::map<std::string, std::string, std::less<>> keys{
        {"seed", "unsigned 64-bit seed for all random draws"},
        {"training_trials", "number of demonstration trials"},
        {"success_trials", "number of success-condition test trials"},
        {"failure_trials", "number of failure-condition test trials"},
        {"object_position", "x,y,z of the capsule base centre (m)"},
        {"object_height", "capsule height (m)"},
        {"object_radius", "capsule radius (m)"},
        {"start_position", "mean x,y,z of the rest pose (m)"},
        {"start_position_sd", "per-axis sd of the rest position (m)"},
        {"start_roll_deg", "roll of the rest orientation about x (deg)"},
        {"start_orientation_sd_deg", "sd of the rest orientation perturbation (deg)"},
        {"trial_duration_ms", "min,max reach duration (ms)"},
        {"sample_interval_ms", "state sampling interval (ms)"},
        {"closing_progress", "start,end reach progress (0..1) of the hand closing"},
        {"orientation_delay", "fraction of the reach time before the wrist rotates"},
        {"grasp.power", "activation vector of the power grasp"},
        {"grasp.tridigital", "activation vector of the tridigital grasp"},
        {"activation_noise_sd", "sd of additive activation noise"},
        {"pose_noise_m", "per-axis sd of position noise (m)"},
        {"pose_noise_deg", "rms angle of orientation noise (deg)"},
        {"cap_fraction", "fraction of trials that grasp the cap"},
        {"wrist_clearance", "wrist distance from the contact surface (m)"},
        {"approach_distance", "length of the final approach along the contact normal (m)"},
        {"body_height_fraction", "mean body-contact height as a fraction of object height"},
        {"contact_jitter_m", "sd of contact-point jitter (m)"},
        {"contact_jitter_deg", "sd of approach-direction jitter (deg)"},
    };
    return keys;
}

namespace detail {

inline std::vector<double> parse_list(std::string_view key, std::string_view value) {
    std::vector<double> out;
    for (auto part : split(value, ',')) {
        double v;
        if (!parse_double(part, v))
            throw DataError("config key '" + std::string(key) + "': '" + std::string(value) +
                            "' is not a number list");
        out.push_back(v);
    }
    return out;
}

inline double parse_scalar(std::string_view key, std::string_view value) {
    const auto v = parse_list(key, value);
    if (v.size() != 1)
        throw DataError("config key '" + std::string(key) + "' expects a single number");
    return v[0];
}

inline std::size_t parse_count(std::string_view key, std::string_view value) {
    std::size_t v;
    if (!parse_size(value, v))
        throw DataError("config key '" + std::string(key) + "' expects a nonnegative integer");
    return v;
}

inline Vec3 parse_vec3(std::string_view key, std::string_view value) {
    const auto v = parse_list(key, value);
    if (v.size() != 3) throw DataError("config key '" + std::string(key) + "' expects x,y,z");
    return {v[0], v[1], v[2]};
}

}  // namespace detail

/// Throws DataError when the configuration cannot produce a valid experiment.
inline void validate(const SynthConfig& c) {
    auto bad = [](const std::string& m) { throw DataError("invalid synth config: " + m); };
    if (!(c.sample_interval_ms > 0.0)) bad("sample_interval_ms must be positive");
    if (!(c.duration_min_ms > 0.0) || !(c.duration_max_ms >= c.duration_min_ms))
        bad("trial_duration_ms must satisfy 0 < min <= max");
    if (c.duration_min_ms < c.sample_interval_ms) bad("trial duration shorter than one sample");
    if (c.grasp_power.empty() || c.grasp_power.size() != c.grasp_tridigital.size())
        bad("grasp vectors must be nonempty and of equal length");
    for (const auto* g : {&c.grasp_power, &c.grasp_tridigital})
        for (double a : *g)
            if (!(a >= 0.0 && a <= 1.0)) bad("grasp vector components must lie in [0,1]");
    if (!(c.cap_fraction >= 0.0 && c.cap_fraction <= 1.0)) bad("cap_fraction must lie in [0,1]");
    for (double sd : {c.start_position_sd, c.start_orientation_sd_deg, c.activation_noise_sd,
                      c.pose_noise_m, c.pose_noise_deg, c.contact_jitter_m, c.contact_jitter_deg})
        if (!(sd >= 0.0)) bad("spreads and noise levels must be nonnegative");
    if (!(c.closing_start >= 0.0 && c.closing_start < c.closing_end && c.closing_end <= 1.0))
        bad("closing_progress must satisfy 0 <= start < end <= 1");
    if (!(c.orientation_delay >= 0.0 && c.orientation_delay < 1.0))
        bad("orientation_delay must lie in [0,1)");
    if (!(c.object_height > 0.0) || !(c.object_radius > 0.0)) bad("object size must be positive");
    if (!(c.approach_distance >= 0.0)) bad("approach_distance must be nonnegative");
}

/// Reads a flat `key = value` file; `#` starts a comment. Unknown keys and
/// malformed values throw DataError naming the key.
inline SynthConfig read_synth_config(std::istream& is) {
    SynthConfig c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos)
            body = body.substr(0, hash);
        body = detail::trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = detail::trim(body.substr(0, eq));
        const auto value = detail::trim(body.substr(eq + 1));
        if (!synth_config_keys().contains(key))
            throw DataError("unknown config key '" + std::string(key) + "' on line " +
                            std::to_string(line_no));

        if (key == "seed") {
            if (!detail::parse_size(value, c.seed))
                throw DataError("config key 'seed' expects an unsigned integer");
        } else if (key == "training_trials") c.training_trials = detail::parse_count(key, value);
        else if (key == "success_trials") c.success_trials = detail::parse_count(key, value);
        else if (key == "failure_trials") c.failure_trials = detail::parse_count(key, value);
        else if (key == "object_position") c.object_position = detail::parse_vec3(key, value);
        else if (key == "object_height") c.object_height = detail::parse_scalar(key, value);
        else if (key == "object_radius") c.object_radius = detail::parse_scalar(key, value);
        else if (key == "start_position") c.start_position = detail::parse_vec3(key, value);
        else if (key == "start_position_sd") c.start_position_sd = detail::parse_scalar(key, value);
        else if (key == "start_roll_deg") c.start_roll_deg = detail::parse_scalar(key, value);
        else if (key == "start_orientation_sd_deg") c.start_orientation_sd_deg = detail::parse_scalar(key, value);
        else if (key == "trial_duration_ms") {
            const auto v = detail::parse_list(key, value);
            if (v.size() != 2) throw DataError("config key 'trial_duration_ms' expects min,max");
            c.duration_min_ms = v[0];
            c.duration_max_ms = v[1];
        } else if (key == "sample_interval_ms") c.sample_interval_ms = detail::parse_scalar(key, value);
        else if (key == "closing_progress") {
            const auto v = detail::parse_list(key, value);
            if (v.size() != 2) throw DataError("config key 'closing_progress' expects start,end");
            c.closing_start = v[0];
            c.closing_end = v[1];
        } else if (key == "orientation_delay") c.orientation_delay = detail::parse_scalar(key, value);
        else if (key == "grasp.power") c.grasp_power = detail::parse_list(key, value);
        else if (key == "grasp.tridigital") c.grasp_tridigital = detail::parse_list(key, value);
        else if (key == "activation_noise_sd") c.activation_noise_sd = detail::parse_scalar(key, value);
        else if (key == "pose_noise_m") c.pose_noise_m = detail::parse_scalar(key, value);
        else if (key == "pose_noise_deg") c.pose_noise_deg = detail::parse_scalar(key, value);
        else if (key == "cap_fraction") c.cap_fraction = detail::parse_scalar(key, value);
        else if (key == "wrist_clearance") c.wrist_clearance = detail::parse_scalar(key, value);
        else if (key == "approach_distance") c.approach_distance = detail::parse_scalar(key, value);
        else if (key == "body_height_fraction") c.body_height_fraction = detail::parse_scalar(key, value);
        else if (key == "contact_jitter_m") c.contact_jitter_m = detail::parse_scalar(key, value);
        else if (key == "contact_jitter_deg") c.contact_jitter_deg = detail::parse_scalar(key, value);
    }
    validate(c);
    return c;
}

inline SynthConfig load_synth_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path.string() + "'");
    return read_synth_config(in);
}

/// Writes every key with its current value; the output reads back unchanged.
inline void write_synth_config(const SynthConfig& c, std::ostream& os) {
    // shortest representation that parses back to the same double
    auto num = [](double v) {
        char buf[64];
        const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, end);
    };
    auto vec = [&](const auto& v) {
        std::string s;
        for (double x : v) {
            if (!s.empty()) s += ',';
            s += num(x);
        }
        return s;
    };
    auto list = [&](std::initializer_list<double> v) { return vec(v); };
    const auto& keys = synth_config_keys();
    auto put = [&](std::string_view key, const std::string& value) {
        os << "# " << keys.find(key)->second << '\n' << key << " = " << value << '\n';
    };
    put("seed", std::to_string(c.seed));
    put("training_trials", std::to_string(c.training_trials));
    put("success_trials", std::to_string(c.success_trials));
    put("failure_trials", std::to_string(c.failure_trials));
    put("object_position", list({c.object_position[0], c.object_position[1], c.object_position[2]}));
    put("object_height", num(c.object_height));
    put("object_radius", num(c.object_radius));
    put("start_position", list({c.start_position[0], c.start_position[1], c.start_position[2]}));
    put("start_position_sd", num(c.start_position_sd));
    put("start_roll_deg", num(c.start_roll_deg));
    put("start_orientation_sd_deg", num(c.start_orientation_sd_deg));
    put("trial_duration_ms", list({c.duration_min_ms, c.duration_max_ms}));
    put("sample_interval_ms", num(c.sample_interval_ms));
    put("closing_progress", list({c.closing_start, c.closing_end}));
    put("orientation_delay", num(c.orientation_delay));
    put("grasp.power", vec(c.grasp_power));
    put("grasp.tridigital", vec(c.grasp_tridigital));
    put("activation_noise_sd", num(c.activation_noise_sd));
    put("pose_noise_m", num(c.pose_noise_m));
    put("pose_noise_deg", num(c.pose_noise_deg));
    put("cap_fraction", num(c.cap_fraction));
    put("wrist_clearance", num(c.wrist_clearance));
    put("approach_distance", num(c.approach_distance));
    put("body_height_fraction", num(c.body_height_fraction));
    put("contact_jitter_m", num(c.contact_jitter_m));
    put("contact_jitter_deg", num(c.contact_jitter_deg));
}

/// Normalised minimum-jerk profile 10u^3 - 15u^4 + 6u^5 on [0, 1].
inline double minimum_jerk(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

struct ContactPose {
    Vec3 position{};
    Vec3 normal{};  // outward surface normal at the contact
    Quaternion orientation{};
    GraspLabel grasp = GraspLabel::unknown;  // grasp the context calls for
};

struct Experiment {
    Dataset training;
    Dataset success;
    Dataset failure;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Small random rotation whose rms angle is `rms_deg`.
inline Quaternion jitter_rotation(Rng& rng, double rms_deg) {
    if (rms_deg <= 0.0) return {};
    const double per_axis = rms_deg / std::sqrt(3.0);
    const Vec3 v{rng.normal(0.0, per_axis), rng.normal(0.0, per_axis), rng.normal(0.0, per_axis)};
    const double angle = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return axis_angle(v, angle);
}

inline ContactPose sample_contact(const SynthConfig& c, Rng& rng, bool cap) {
    ContactPose pose;
    const Vec3& o = c.object_position;
    if (cap) {
        // Wrist above the cap, fingers pointing down (+x rotated onto -z).
        pose.grasp = GraspLabel::tridigital;
        pose.position = {o[0] + rng.normal(0.0, c.contact_jitter_m),
                         o[1] + rng.normal(0.0, c.contact_jitter_m),
                         o[2] + c.object_height + c.wrist_clearance};
        pose.normal = {0.0, 0.0, 1.0};
        const double yaw = rng.normal(0.0, c.contact_jitter_deg);
        pose.orientation = axis_angle({0, 0, 1}, yaw) * axis_angle({0, 1, 0}, 90.0);
    } else {
        // Wrist beside the body on the subject's side, palm facing the object.
        pose.grasp = GraspLabel::power;
        const double azimuth = rng.normal(0.0, c.contact_jitter_deg);
        const double reach = c.object_radius + c.wrist_clearance;
        const double a = deg_to_rad(azimuth);
        const double h = c.body_height_fraction * c.object_height + rng.normal(0.0, c.contact_jitter_m);
        pose.position = {o[0] - reach * std::cos(a), o[1] - reach * std::sin(a), o[2] + h};
        pose.normal = {-std::cos(a), -std::sin(a), 0.0};
        pose.orientation = axis_angle({0, 0, 1}, azimuth) * axis_angle({1, 0, 0}, 90.0);
    }
    return pose;
}

inline std::vector<double> ramp_activation(const std::vector<double>& target, double level) {
    std::vector<double> a(target.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = target[i] * level;
    return a;
}

}  // namespace detail

/// Generates one reach-to-grasp trial.
///
/// Position follows a quadratic Bezier path from the start to the contact
/// pose, bent through a via point `approach_distance` out along the contact
/// normal, and traversed with minimum-jerk timing.
/// The wrist holds its rest orientation for the first `orientation_delay` of
/// the reach, then slerps to the contact orientation on its own minimum-jerk
/// clock. The hand stays at rest (zero activation) until the reach progress
/// passes `closing_start` and is fully closed at `closing_end`. Noise is
/// applied per state; activations are clipped to [0, 1].
inline Trial generate_trial(const SynthConfig& c, Rng& rng, std::string id, Condition condition,
                            bool cap, bool swap_grasp) {
    const ContactPose contact = detail::sample_contact(c, rng, cap);

    Vec3 start;
    for (int i = 0; i < 3; ++i) start[i] = rng.normal(c.start_position[i], c.start_position_sd);
    const Quaternion start_q = detail::jitter_rotation(rng, c.start_orientation_sd_deg) *
                               axis_angle({1, 0, 0}, c.start_roll_deg);
    const double duration = rng.uniform(c.duration_min_ms, c.duration_max_ms);

    const GraspLabel produced =
        swap_grasp ? (contact.grasp == GraspLabel::power ? GraspLabel::tridigital : GraspLabel::power)
                   : contact.grasp;
    const auto& grasp_vector = produced == GraspLabel::power ? c.grasp_power : c.grasp_tridigital;

    Trial trial;
    trial.id = std::move(id);
    trial.condition = condition;
    trial.grasp = contact.grasp;

    Vec3 via;
    for (int a = 0; a < 3; ++a) via[a] = contact.position[a] + c.approach_distance * contact.normal[a];

    const auto samples = static_cast<std::size_t>(std::floor(duration / c.sample_interval_ms)) + 1;
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) * c.sample_interval_ms;
        const double u = t / duration;
        const double s = minimum_jerk(u);
        const double s_rot = minimum_jerk((u - c.orientation_delay) / (1.0 - c.orientation_delay));

        WristState st;
        st.t_ms = t;
        const double e = 1.0 - s;
        for (int a = 0; a < 3; ++a)
            st.position[a] = e * e * start[a] + 2.0 * e * s * via[a] + s * s * contact.position[a] +
                             rng.normal(0.0, c.pose_noise_m);
        st.orientation = normalized(detail::jitter_rotation(rng, c.pose_noise_deg) *
                                    slerp(start_q, contact.orientation, s_rot));

        const double level =
            minimum_jerk((s - c.closing_start) / (c.closing_end - c.closing_start));
        st.activation = detail::ramp_activation(grasp_vector, level);
        for (double& a : st.activation)
            a = std::clamp(a + rng.normal(0.0, c.activation_noise_sd), 0.0, 1.0);
        trial.states.push_back(std::move(st));
    }
    return trial;
}

/// Generates a dataset of `trials` reaches with an exactly balanced split of
/// cap and body contexts (rounded by cap_fraction).
inline Dataset generate_condition(const SynthConfig& c, std::uint64_t seed, Condition condition,
                                  std::size_t trials) {
    Rng rng(seed);
    Dataset ds;
    ds.k = c.grasp_power.size();

    const auto caps = static_cast<std::size_t>(std::llround(c.cap_fraction * static_cast<double>(trials)));
    std::vector<char> is_cap(trials, 0);
    std::fill_n(is_cap.begin(), std::min(caps, trials), 1);
    rng.shuffle(std::span<char>(is_cap));

    const std::string prefix(to_string(condition));
    for (std::size_t i = 0; i < trials; ++i) {
        std::string id = prefix + "-" + (i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
        ds.trials.push_back(generate_trial(c, rng, std::move(id), condition, is_cap[i] != 0,
                                           condition == Condition::failure));
    }
    return ds;
}

/// Builds the training, success and failure datasets. Failure trials reach
/// exactly like success trials but carry the other grasp's activation vector.
inline Experiment generate_experiment(const SynthConfig& c) {
    validate(c);
    Experiment e;
    e.training = generate_condition(c, detail::splitmix64(c.seed ^ 0x1), Condition::training,
                                    c.training_trials);
    e.success = generate_condition(c, detail::splitmix64(c.seed ^ 0x2), Condition::success,
                                   c.success_trials);
    e.failure = generate_condition(c, detail::splitmix64(c.seed ^ 0x3), Condition::failure,
                                   c.failure_trials);
    return e;
}

}  // namespace gsentinel
