#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dermprep/manifest.hpp"

namespace dermprep {

struct ProbabilityRow {
    std::string image_id;
    std::array<double, kClassCount> p{};

    bool operator==(const ProbabilityRow&) const = default;
};

/// Per-image class probabilities, rows sorted by image_id, ids unique.
struct ProbabilityMatrix {
    std::vector<ProbabilityRow> rows;

    bool operator==(const ProbabilityMatrix&) const = default;
};

/// Parses a probability CSV (header `image,MEL,NV,...`). Cells must be
/// non-negative; a row is divided by its sum when the sum is at least
/// 1e-9 and differs from 1 by more than 1e-6. All-zero rows, negative
/// cells, duplicate ids and malformed numbers raise DataError.
ProbabilityMatrix load_probabilities(std::string_view csv_text);

/// Full-precision probability CSV (values round-trip through double).
std::string serialize_probabilities(const ProbabilityMatrix& matrix);

struct EnsembleConfig {
    std::vector<double> weights;  // non-negative, at least one positive
};

/// Weighted average of per-model probabilities, normalized by the weight
/// sum: fused(id, c) = sum_m w_m p_m(id, c) / sum_m w_m. All matrices
/// must share the identical image id set.
ProbabilityMatrix fuse(const std::vector<ProbabilityMatrix>& matrices,
                       const EnsembleConfig& config);

/// Decision-level alternative: each model casts its weight as a vote for
/// its argmax class; fused rows are the normalized vote shares.
ProbabilityMatrix fuse_vote(const std::vector<ProbabilityMatrix>& matrices,
                            const EnsembleConfig& config);

struct Prediction {
    std::string image_id;
    ClassLabel label = ClassLabel::MEL;

    bool operator==(const Prediction&) const = default;
};

/// Argmax per row; ties go to the lowest canonical class index.
std::vector<Prediction> predict(const ProbabilityMatrix& matrix);

/// counts[t][p] = number of images of true class t predicted as p.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kClassCount>, kClassCount> counts{};

    std::int64_t total() const;
    std::int64_t true_count(ClassLabel c) const;
};

/// Builds the confusion matrix over the prediction set. Every prediction
/// id must be present in the truth manifest; truth entries without a
/// prediction are ignored.
ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const DatasetManifest& truth);

/// Mean recall over classes with at least one true sample. Throws
/// DataError on an empty matrix.
double balanced_accuracy(const ConfusionMatrix& cm);

struct EvaluationReport {
    std::array<double, kClassCount> per_class_recall{};  // 0 for absent classes
    std::array<std::int64_t, kClassCount> support{};     // true samples per class
    double balanced_accuracy = 0.0;
    double overall_accuracy = 0.0;
    std::int64_t evaluated_images = 0;
};

EvaluationReport evaluate(const ConfusionMatrix& cm);

/// Machine-readable report pieces: `metric,value` and `class,recall`
/// (recall left empty for classes absent from the ground truth).
std::string serialize_metrics(const EvaluationReport& report);
std::string serialize_recalls(const EvaluationReport& report);

/// Human-readable report table.
std::string format_report(const EvaluationReport& report);

}  // namespace dermprep
