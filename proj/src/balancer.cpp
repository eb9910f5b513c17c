#include "dermprep/balancer.hpp"

#include <algorithm>

#include "dermprep/csv.hpp"
#include "dermprep/errors.hpp"

namespace dermprep {

std::int64_t AugmentationPlan::total_expected() const {
    std::int64_t total = 0;
    for (const auto& cp : per_class) total += cp.expected_output;
    return total;
}

std::vector<double> rotation_angles(std::int64_t factor) {
    if (factor < 0) throw DataError("rotation factor must be >= 0");
    std::vector<double> angles;
    if (factor < 2) return angles;
    angles.reserve(static_cast<std::size_t>(factor - 1));
    for (std::int64_t j = 1; j < factor; ++j) {
        angles.push_back(360.0 * static_cast<double>(j) /
                         static_cast<double>(factor));
    }
    return angles;
}

namespace {

ClassPlan make_class_plan(std::int64_t count, std::int64_t factor, bool flip) {
    ClassPlan cp;
    cp.input_count = count;
    cp.flip = flip;
    cp.rotation_factor = factor;
    cp.angles = rotation_angles(factor);
    cp.expected_output = cp.after_flip() * std::max<std::int64_t>(factor, 1);
    return cp;
}

// floor(n/d + 1/2) for positive d, exact in integers.
std::int64_t round_half_up(std::int64_t n, std::int64_t d) {
    return (2 * n + d) / (2 * d);
}

}  // namespace

AugmentationPlan plan_from_factors(const ClassCounts& counts,
                                   const FactorList& factors, bool flip) {
    AugmentationPlan plan;
    for (int c = 0; c < kClassCount; ++c) {
        const std::size_t i = static_cast<std::size_t>(c);
        if (counts[i] < 0) throw DataError("negative class count");
        if (factors[i] < 0) throw DataError("rotation factor must be >= 0");
        plan.per_class[i] = make_class_plan(counts[i], factors[i], flip);
    }
    return plan;
}

AugmentationPlan plan_auto(const ClassCounts& counts, bool flip,
                           const PlanTarget& target) {
    std::array<std::int64_t, kClassCount> after_flip{};
    for (int c = 0; c < kClassCount; ++c) {
        const std::size_t i = static_cast<std::size_t>(c);
        if (counts[i] < 0) throw DataError("negative class count");
        after_flip[i] = counts[i] * (flip ? 2 : 1);
    }
    std::int64_t goal = target.value;
    if (target.largest_class) {
        goal = *std::max_element(after_flip.begin(), after_flip.end());
    }
    if (goal < 1) throw DataError("plan target must be >= 1");

    FactorList factors{};
    for (int c = 0; c < kClassCount; ++c) {
        const std::size_t i = static_cast<std::size_t>(c);
        factors[i] = (counts[i] == 0)
                         ? 0
                         : std::max<std::int64_t>(1, round_half_up(goal, after_flip[i]));
    }
    return plan_from_factors(counts, factors, flip);
}

std::string serialize_plan(const AugmentationPlan& plan) {
    std::string out = "class,input_count,flip,factor,expected_output\n";
    for (const ClassLabel c : all_classes()) {
        const ClassPlan& cp = plan.for_class(c);
        out += std::string(to_string(c)) + "," + std::to_string(cp.input_count) +
               "," + (cp.flip ? "1" : "0") + "," +
               std::to_string(cp.rotation_factor) + "," +
               std::to_string(cp.expected_output) + "\n";
        out += "angles,";
        for (std::size_t j = 0; j < cp.angles.size(); ++j) {
            if (j > 0) out += ';';
            out += csv::format_double(cp.angles[j]);
        }
        out += '\n';
    }
    return out;
}

AugmentationPlan parse_plan(std::string_view csv_text) {
    const auto lines = csv::split_lines(csv_text);
    if (lines.empty() || lines[0] != "class,input_count,flip,factor,expected_output") {
        throw DataError("bad plan header, row 1");
    }

    AugmentationPlan plan;
    std::array<bool, kClassCount> seen{};
    std::size_t i = 1;
    while (i < lines.size()) {
        if (lines[i].empty()) {
            ++i;
            continue;
        }
        const std::size_t row = i + 1;
        const auto fields = csv::split_fields(lines[i]);
        if (fields.size() != 5) {
            throw DataError("wrong column count in plan, row " + std::to_string(row));
        }
        const auto label = parse_label(fields[0]);
        if (!label) {
            throw DataError("unknown class '" + std::string(fields[0]) +
                            "' in plan, row " + std::to_string(row));
        }
        const std::size_t ci = static_cast<std::size_t>(*label);
        if (seen[ci]) {
            throw DataError("duplicate class '" + std::string(fields[0]) +
                            "' in plan, row " + std::to_string(row));
        }
        const std::string ctx = "row " + std::to_string(row);
        const std::int64_t count = csv::parse_int(fields[1], ctx);
        const std::string_view flip_field = fields[2];
        if (flip_field != "0" && flip_field != "1") {
            throw DataError("flip cell must be 0 or 1, " + ctx);
        }
        const bool flip = flip_field == "1";
        const std::int64_t factor = csv::parse_int(fields[3], ctx);
        const std::int64_t expected = csv::parse_int(fields[4], ctx);

        ClassPlan cp = make_class_plan(count, factor, flip);
        if (cp.expected_output != expected) {
            throw DataError("inconsistent expected_output for class " +
                            std::string(fields[0]) + ": stated " +
                            std::to_string(expected) + ", formula gives " +
                            std::to_string(cp.expected_output));
        }

        // Mandatory angles sidecar line.
        ++i;
        if (i >= lines.size()) {
            throw DataError("missing angles line for class " + std::string(fields[0]));
        }
        const auto angle_fields = csv::split_fields(lines[i]);
        if (angle_fields.size() != 2 || angle_fields[0] != "angles") {
            throw DataError("expected angles line, row " + std::to_string(i + 1));
        }
        std::vector<double> stated_angles;
        std::string_view rest = angle_fields[1];
        if (!rest.empty()) {
            std::size_t pos = 0;
            while (pos <= rest.size()) {
                std::size_t sep = rest.find(';', pos);
                std::string_view tok = (sep == std::string_view::npos)
                                           ? rest.substr(pos)
                                           : rest.substr(pos, sep - pos);
                stated_angles.push_back(
                    csv::parse_double(tok, "row " + std::to_string(i + 1)));
                if (sep == std::string_view::npos) break;
                pos = sep + 1;
            }
        }
        if (stated_angles != cp.angles) {
            throw DataError("angles for class " + std::string(fields[0]) +
                            " do not match rotation factor " +
                            std::to_string(factor));
        }

        plan.per_class[ci] = std::move(cp);
        seen[ci] = true;
        ++i;
    }

    for (int c = 0; c < kClassCount; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
            throw DataError("plan is missing class " +
                            std::string(to_string(static_cast<ClassLabel>(c))));
        }
    }
    return plan;
}

}  // namespace dermprep
