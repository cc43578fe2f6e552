#include <cmath>

#include <gtest/gtest.h>

#include "grasp_sentinel/types.hpp"
#include "support.hpp"

using namespace gsentinel;
using gstest::make_state;
using gstest::single_trial;

namespace {

bool has_message(const std::vector<Violation>& v, std::string_view text) {
    for (const auto& x : v)
        if (x.message.find(text) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(DeriveParams, DefaultSetSharpness) {
    const auto p = derive_params(2, 5, 0.25, 0.02, 20.0);
    EXPECT_NEAR(p.alpha / 1733.0, 1.0, 1e-3);
    EXPECT_NEAR(p.beta / 0.001733, 1.0, 1e-3);
    EXPECT_EQ(p.k, 2u);
    EXPECT_EQ(p.n_min, 5u);
    EXPECT_EQ(p.mode, ContextMode::position_and_rotation);
}

TEST(DeriveParams, WiderCutoffHandComputed) {
    // -ln(0.5) / 0.04^2 = 0.693147... / 0.0016
    const auto p = derive_params(2, 5, 0.25, 0.04, 20.0);
    EXPECT_NEAR(p.alpha, 433.2, 0.05);
}

TEST(DeriveParams, RatioNearOneFlattensWeights) {
    const auto p = derive_params(2, 5, 1.0 - 1e-12, 0.02, 20.0);
    EXPECT_LT(p.alpha, 1e-6);
    EXPECT_LT(p.beta, 1e-12);
}

TEST(DeriveParams, RejectsInvalidInput) {
    EXPECT_THROW(derive_params(2, 5, 0.0, 0.02, 20.0), std::invalid_argument);
    EXPECT_THROW(derive_params(2, 5, 1.0, 0.02, 20.0), std::invalid_argument);
    EXPECT_THROW(derive_params(2, 5, -0.3, 0.02, 20.0), std::invalid_argument);
    EXPECT_THROW(derive_params(2, 5, 0.25, 0.0, 20.0), std::invalid_argument);
    EXPECT_THROW(derive_params(2, 5, 0.25, 0.02, -1.0), std::invalid_argument);
    EXPECT_THROW(derive_params(2, 0, 0.25, 0.02, 20.0), std::invalid_argument);
    EXPECT_THROW(derive_params(0, 5, 0.25, 0.02, 20.0), std::invalid_argument);
}

TEST(DeriveParams, ResidualsVanishForRandomInputs) {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double r = rng.uniform(1e-6, 1.0 - 1e-6);
        const double delta = rng.uniform(1e-4, 1.0);
        const double phi = rng.uniform(0.1, 90.0);
        const auto p = derive_params(2, 5, r, delta, phi);
        const double edge = -std::log(std::sqrt(r));
        EXPECT_NEAR(p.alpha * delta * delta / edge, 1.0, 1e-9);
        EXPECT_NEAR(p.beta * phi * phi / edge, 1.0, 1e-9);
    }
}

TEST(DeriveParams, SharpnessDecreasesWithCutoff) {
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        const double r = rng.uniform(0.01, 0.99);
        const double d1 = rng.uniform(0.001, 0.5);
        const double d2 = d1 * rng.uniform(1.01, 3.0);
        EXPECT_GT(derive_params(1, 1, r, d1, 10.0).alpha, derive_params(1, 1, r, d2, 10.0).alpha);
        EXPECT_GT(derive_params(1, 1, r, 0.02, d1 * 100).beta, derive_params(1, 1, r, 0.02, d2 * 100).beta);
    }
}

TEST(ValidateDataset, IdentityQuaternionIsValid) {
    auto ds = single_trial(2, {make_state({0, 0, 0}, {1, 0, 0, 0}, {0.2, 0.4})});
    EXPECT_TRUE(validate_dataset(ds).empty());
}

TEST(ValidateDataset, ActivationAboveOneIsReported) {
    auto ds = single_trial(2, {make_state({0, 0, 0}, {1, 0, 0, 0}, {1.3, 0.4})});
    const auto v = validate_dataset(ds);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_TRUE(has_message(v, "activation out of [0,1]"));
}

TEST(ValidateDataset, NonUnitQuaternionIsReported) {
    auto ds = single_trial(2, {make_state({0, 0, 0}, {0.9, 0, 0, 0}, {0.2, 0.4})});
    EXPECT_TRUE(has_message(validate_dataset(ds), "non-unit quaternion"));
}

TEST(ValidateDataset, NearUnitQuaternionIsRenormalised) {
    auto ds = single_trial(1, {make_state({0, 0, 0}, {1.0 + 5e-7, 0, 0, 0}, {0.5})});
    EXPECT_TRUE(validate_dataset(ds).empty());
    EXPECT_DOUBLE_EQ(ds.trials[0].states[0].orientation.norm(), 1.0);
}

TEST(ValidateDataset, ExactUnitQuaternionIsUntouched) {
    const Quaternion q{0.5, 0.5, 0.5, 0.5000000000000001};
    auto ds = single_trial(1, {make_state({0, 0, 0}, q, {0.5})});
    EXPECT_TRUE(validate_dataset(ds).empty());
    EXPECT_EQ(ds.trials[0].states[0].orientation, q);
}

TEST(ValidateDataset, StructuralViolations) {
    auto ds = single_trial(2, {make_state({0, 0, 0}, {1, 0, 0, 0}, {0.2, 0.4}),
                               make_state({0, 0, 0}, {1, 0, 0, 0}, {0.2})});
    EXPECT_TRUE(has_message(validate_dataset(ds), "activation"));

    auto clock = single_trial(1, {make_state({0, 0, 0}, {1, 0, 0, 0}, {0.2}),
                                  make_state({0, 0, 0}, {1, 0, 0, 0}, {0.2})});
    clock.trials[0].states[1].t_ms = clock.trials[0].states[0].t_ms;
    EXPECT_TRUE(has_message(validate_dataset(clock), "timestamp"));

    auto empty = single_trial(1, {});
    EXPECT_TRUE(has_message(validate_dataset(empty), "no states"));

    auto nan = single_trial(1, {make_state({std::nan(""), 0, 0}, {1, 0, 0, 0}, {0.2})});
    EXPECT_FALSE(validate_dataset(nan).empty());

    auto zero_k = single_trial(1, {make_state({0, 0, 0}, {1, 0, 0, 0}, {0.2})});
    zero_k.k = 0;
    EXPECT_FALSE(validate_dataset(zero_k).empty());
}

TEST(Dataset, StateCountSumsTrials) {
    Rng rng(3);
    const auto ds = gstest::random_dataset(rng, 2, 7, 30);
    std::size_t n = 0;
    for (const auto& t : ds.trials) n += t.states.size();
    EXPECT_EQ(ds.state_count(), n);
}

TEST(Enums, RoundTripThroughStrings) {
    for (auto g : {GraspLabel::rest, GraspLabel::power, GraspLabel::tridigital, GraspLabel::unknown})
        EXPECT_EQ(parse_grasp_label(to_string(g)), g);
    for (auto c : {Condition::training, Condition::success, Condition::failure})
        EXPECT_EQ(parse_condition(to_string(c)), c);
    for (auto m : {ContextMode::position_and_rotation, ContextMode::rotation_only})
        EXPECT_EQ(parse_context_mode(to_string(m)), m);
    EXPECT_FALSE(parse_grasp_label("pinch"));
    EXPECT_FALSE(parse_condition("test"));
}
