#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dermprep/balancer.hpp"
#include "dermprep/errors.hpp"

using namespace dermprep;

namespace {

// ISIC 2018 training counts in canonical class order
// (MEL, NV, BCC, AKIEC, BKL, DF, VASC).
constexpr ClassCounts kIsicCounts = {1113, 6705, 514, 327, 1099, 115, 142};

// Rotation factors that balance the ISIC 2018 class sizes
// (after_rotation / after_flip for each class).
constexpr FactorList kDerivedFactors = {6, 1, 13, 22, 6, 60, 52};

std::int64_t at(const AugmentationPlan& plan, ClassLabel c,
                std::int64_t ClassPlan::*field) {
    return plan.for_class(c).*field;
}

}  // namespace

TEST_CASE("rotation_angles matches the factor-10 schedule") {
    const std::vector<double> expected = {36,  72,  108, 144, 180,
                                          216, 252, 288, 324};
    CHECK(rotation_angles(10) == expected);
}

TEST_CASE("rotation_angles degenerate factors") {
    CHECK(rotation_angles(0).empty());
    CHECK(rotation_angles(1).empty());
    CHECK(rotation_angles(4) == std::vector<double>{90, 180, 270});
    CHECK_THROWS_AS(rotation_angles(-1), DataError);
}

TEST_CASE("rotation_angles properties") {
    for (std::int64_t i = 0; i <= 60; ++i) {
        const auto angles = rotation_angles(i);
        CHECK(angles.size() ==
              static_cast<std::size_t>(std::max<std::int64_t>(i, 1) - 1));
        const bool has_180 =
            std::find(angles.begin(), angles.end(), 180.0) != angles.end();
        CHECK(has_180 == (i >= 2 && i % 2 == 0));
        for (std::size_t j = 0; j < angles.size(); ++j) {
            CHECK(angles[j] > 0.0);
            CHECK(angles[j] < 360.0);
            if (j > 0) CHECK(angles[j] > angles[j - 1]);
        }
    }
}

TEST_CASE("plan_from_factors reproduces the ISIC 2018 balancing arithmetic") {
    const AugmentationPlan plan = plan_from_factors(kIsicCounts, kDerivedFactors, true);

    // After flipping: class size doubles.
    CHECK(plan.for_class(ClassLabel::AKIEC).after_flip() == 654);
    CHECK(plan.for_class(ClassLabel::BCC).after_flip() == 1028);
    CHECK(plan.for_class(ClassLabel::BKL).after_flip() == 2198);
    CHECK(plan.for_class(ClassLabel::DF).after_flip() == 230);
    CHECK(plan.for_class(ClassLabel::MEL).after_flip() == 2226);
    CHECK(plan.for_class(ClassLabel::NV).after_flip() == 13410);
    CHECK(plan.for_class(ClassLabel::VASC).after_flip() == 284);

    // After rotation.
    CHECK(at(plan, ClassLabel::AKIEC, &ClassPlan::expected_output) == 14388);
    CHECK(at(plan, ClassLabel::BCC, &ClassPlan::expected_output) == 13364);
    CHECK(at(plan, ClassLabel::BKL, &ClassPlan::expected_output) == 13188);
    CHECK(at(plan, ClassLabel::DF, &ClassPlan::expected_output) == 13800);
    CHECK(at(plan, ClassLabel::MEL, &ClassPlan::expected_output) == 13356);
    CHECK(at(plan, ClassLabel::NV, &ClassPlan::expected_output) == 13410);
    CHECK(at(plan, ClassLabel::VASC, &ClassPlan::expected_output) == 14768);

    CHECK(plan.total_expected() == 96274);
}

TEST_CASE("plan_from_factors degenerate cases") {
    const AugmentationPlan zero = plan_from_factors({}, kDerivedFactors, true);
    CHECK(zero.total_expected() == 0);

    ClassCounts counts{};
    counts[0] = 10;
    FactorList factors{};
    factors[0] = 3;
    const AugmentationPlan plan = plan_from_factors(counts, factors, false);
    CHECK(plan.for_class(ClassLabel::MEL).expected_output == 30);

    CHECK_THROWS_AS(plan_from_factors(counts, FactorList{-1}, false), DataError);
}

TEST_CASE("factors of one without flip make the identity plan") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        ClassCounts counts{};
        for (auto& c : counts) c = rng() % 100;
        FactorList ones;
        ones.fill(1);
        const AugmentationPlan plan = plan_from_factors(counts, ones, false);
        for (const ClassLabel c : all_classes()) {
            CHECK(plan.for_class(c).expected_output ==
                  counts[static_cast<std::size_t>(c)]);
            CHECK(plan.for_class(c).angles.empty());
        }
    }
}

TEST_CASE("total expected output is invariant under class permutation") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        ClassCounts counts{};
        FactorList factors{};
        for (int c = 0; c < kClassCount; ++c) {
            counts[c] = rng() % 200;
            factors[c] = rng() % 8;
        }
        const std::int64_t total = plan_from_factors(counts, factors, true).total_expected();

        std::array<int, kClassCount> perm;
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ClassCounts pcounts{};
        FactorList pfactors{};
        for (int c = 0; c < kClassCount; ++c) {
            pcounts[c] = counts[perm[c]];
            pfactors[c] = factors[perm[c]];
        }
        CHECK(plan_from_factors(pcounts, pfactors, true).total_expected() == total);
    }
}

TEST_CASE("plan_auto on exact-division examples") {
    ClassCounts counts{};
    counts[0] = 100;
    counts[1] = 400;
    const AugmentationPlan plan =
        plan_auto(counts, false, PlanTarget::count(400));
    CHECK(plan.for_class(ClassLabel::MEL).rotation_factor == 4);
    CHECK(plan.for_class(ClassLabel::NV).rotation_factor == 1);
    CHECK(plan.for_class(ClassLabel::MEL).expected_output == 400);
    CHECK(plan.for_class(ClassLabel::NV).expected_output == 400);
    CHECK(plan.for_class(ClassLabel::BCC).rotation_factor == 0);
    CHECK(plan.for_class(ClassLabel::BCC).expected_output == 0);
}

TEST_CASE("plan_auto with flip doubles before dividing") {
    ClassCounts counts{};
    counts[0] = 300;
    const AugmentationPlan plan =
        plan_auto(counts, true, PlanTarget::count(1200));
    CHECK(plan.for_class(ClassLabel::MEL).after_flip() == 600);
    CHECK(plan.for_class(ClassLabel::MEL).rotation_factor == 2);
    CHECK(plan.for_class(ClassLabel::MEL).expected_output == 1200);
}

TEST_CASE("plan_auto largest-class on the ISIC counts") {
    // Independent oracle: round-half-up(13410 / after_flip) per class,
    // computed with integer arithmetic.
    const std::int64_t target = 13410;
    FactorList oracle{};
    for (int c = 0; c < kClassCount; ++c) {
        const std::int64_t af = kIsicCounts[c] * 2;
        oracle[c] = std::max<std::int64_t>(1, (2 * target + af) / (2 * af));
    }
    // Frozen values, canonical order (MEL, NV, BCC, AKIEC, BKL, DF, VASC).
    CHECK(oracle == FactorList{6, 1, 13, 21, 6, 58, 47});

    const AugmentationPlan plan = plan_auto(kIsicCounts, true, PlanTarget::largest());
    for (int c = 0; c < kClassCount; ++c) {
        CHECK(plan.per_class[c].rotation_factor == oracle[c]);
    }
}

TEST_CASE("plan_auto rejects bad targets") {
    ClassCounts counts{};
    counts[0] = 1;
    CHECK_THROWS_AS(plan_auto(counts, true, PlanTarget::count(0)), DataError);
    CHECK_THROWS_AS(plan_auto(ClassCounts{}, true, PlanTarget::largest()),
                    DataError);
}

TEST_CASE("plan serialize -> parse round trip") {
    const AugmentationPlan plan = plan_from_factors(kIsicCounts, kDerivedFactors, true);
    CHECK(parse_plan(serialize_plan(plan)) == plan);

    const AugmentationPlan no_flip =
        plan_auto(kIsicCounts, false, PlanTarget::count(5000));
    CHECK(parse_plan(serialize_plan(no_flip)) == no_flip);
}

TEST_CASE("parse_plan rejects tampered files") {
    const AugmentationPlan plan = plan_from_factors(kIsicCounts, kDerivedFactors, true);
    const std::string good = serialize_plan(plan);

    CHECK_THROWS_AS(parse_plan("bogus header\n"), DataError);

    // Inconsistent expected_output.
    std::string bad = good;
    const auto pos = bad.find("MEL,1113,1,6,13356");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 18, "MEL,1113,1,6,13357");
    CHECK_THROWS_AS(parse_plan(bad), DataError);

    // Angles that do not match the factor.
    std::string bad_angles = good;
    const auto apos = bad_angles.find("angles,60;120;180;240;300");
    REQUIRE(apos != std::string::npos);
    bad_angles.replace(apos, 25, "angles,60;120;180;240;301");
    CHECK_THROWS_AS(parse_plan(bad_angles), DataError);

    // A class missing entirely.
    std::string missing = good;
    const auto vpos = missing.find("VASC");
    REQUIRE(vpos != std::string::npos);
    missing.resize(vpos);
    CHECK_THROWS_AS(parse_plan(missing), DataError);
}
