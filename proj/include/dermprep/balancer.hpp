#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dermprep/manifest.hpp"

namespace dermprep {

/// Flip/rotation schedule for one class.
///
/// A rotation factor i >= 2 yields the i-1 extra angles (360/i)*j for
/// j = 1..i-1; factors 0 and 1 both mean "no rotation". The expected
/// output count is input_count * (2 if flip else 1) * max(i, 1).
struct ClassPlan {
    std::int64_t input_count = 0;
    bool flip = false;
    std::int64_t rotation_factor = 0;
    std::vector<double> angles;
    std::int64_t expected_output = 0;

    bool operator==(const ClassPlan&) const = default;

    std::int64_t after_flip() const { return input_count * (flip ? 2 : 1); }
};

struct AugmentationPlan {
    std::array<ClassPlan, kClassCount> per_class;

    bool operator==(const AugmentationPlan&) const = default;

    const ClassPlan& for_class(ClassLabel c) const {
        return per_class[static_cast<std::size_t>(c)];
    }
    std::int64_t total_expected() const;
};

/// Extra rotation angles for factor i: [(360/i)*j for j = 1..i-1],
/// strictly increasing, all in (0, 360). Empty for i in {0, 1}.
std::vector<double> rotation_angles(std::int64_t factor);

using FactorList = std::array<std::int64_t, kClassCount>;

AugmentationPlan plan_from_factors(const ClassCounts& counts,
                                   const FactorList& factors, bool flip);

/// Target for automatic factor selection: either a fixed per-class output
/// count or the largest after-flip class count.
struct PlanTarget {
    bool largest_class = false;
    std::int64_t value = 0;

    static PlanTarget largest() { return {true, 0}; }
    static PlanTarget count(std::int64_t v) { return {false, v}; }
};

/// Picks factor[c] = max(1, round-half-up(target / after_flip[c])) for
/// non-empty classes; empty classes get factor 0. Throws DataError when
/// the effective target is below 1.
AugmentationPlan plan_auto(const ClassCounts& counts, bool flip,
                           const PlanTarget& target);

/// Plan CSV: a `class,input_count,flip,factor,expected_output` row per
/// class, each followed by an `angles,<a1;a2;...>` sidecar line.
std::string serialize_plan(const AugmentationPlan& plan);
AugmentationPlan parse_plan(std::string_view csv_text);

}  // namespace dermprep
