#include "dermprep/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "dermprep/csv.hpp"
#include "dermprep/errors.hpp"

namespace dermprep {

ProbabilityMatrix load_probabilities(std::string_view csv_text) {
    const auto lines = csv::split_lines(csv_text);
    if (lines.empty() || lines[0] != kImageClassHeader) {
        throw DataError("missing or misordered header, row 1 (expected '" +
                        std::string(kImageClassHeader) + "')");
    }
    ProbabilityMatrix matrix;
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string ctx = "row " + std::to_string(i + 1);
        const auto fields = csv::split_fields(lines[i]);
        if (fields.size() != 1 + kClassCount) {
            throw DataError("wrong column count, " + ctx);
        }
        if (fields[0].empty()) throw DataError("empty image id, " + ctx);
        if (!seen.insert(fields[0]).second) {
            throw DataError("duplicate image_id '" + std::string(fields[0]) +
                            "', " + ctx);
        }
        ProbabilityRow row;
        row.image_id = std::string(fields[0]);
        double sum = 0.0;
        for (int c = 0; c < kClassCount; ++c) {
            const double v =
                csv::parse_double(fields[static_cast<std::size_t>(c) + 1], ctx);
            if (!std::isfinite(v) || v < 0.0) {
                throw DataError("probability cells must be finite and >= 0, " +
                                ctx);
            }
            row.p[static_cast<std::size_t>(c)] = v;
            sum += v;
        }
        if (sum < 1e-9) throw DataError("all-zero probability row, " + ctx);
        if (std::abs(sum - 1.0) > 1e-6) {
            for (auto& v : row.p) v /= sum;
        }
        matrix.rows.push_back(std::move(row));
    }
    std::sort(matrix.rows.begin(), matrix.rows.end(),
              [](const ProbabilityRow& a, const ProbabilityRow& b) {
                  return a.image_id < b.image_id;
              });
    return matrix;
}

std::string serialize_probabilities(const ProbabilityMatrix& matrix) {
    std::string out(kImageClassHeader);
    out += '\n';
    for (const auto& row : matrix.rows) {
        out += row.image_id;
        for (const double v : row.p) {
            out += ',';
            out += csv::format_double(v);
        }
        out += '\n';
    }
    return out;
}

namespace {

void check_fusable(const std::vector<ProbabilityMatrix>& matrices,
                   const EnsembleConfig& config) {
    if (matrices.empty()) throw DataError("no probability matrices to fuse");
    if (config.weights.size() != matrices.size()) {
        throw DataError("weight count (" + std::to_string(config.weights.size()) +
                        ") does not match matrix count (" +
                        std::to_string(matrices.size()) + ")");
    }
    double weight_sum = 0.0;
    for (const double w : config.weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw DataError("ensemble weights must be finite and non-negative");
        }
        weight_sum += w;
    }
    if (weight_sum <= 0.0) {
        throw DataError("at least one ensemble weight must be positive");
    }
    const auto& base = matrices.front();
    for (std::size_t m = 1; m < matrices.size(); ++m) {
        const auto& other = matrices[m];
        const std::size_t n = std::min(base.rows.size(), other.rows.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (base.rows[i].image_id != other.rows[i].image_id) {
                throw DataError("image id sets differ between models: '" +
                                base.rows[i].image_id + "' vs '" +
                                other.rows[i].image_id + "'");
            }
        }
        if (base.rows.size() != other.rows.size()) {
            const auto& longer =
                base.rows.size() > other.rows.size() ? base : other;
            throw DataError("image id sets differ between models: extra id '" +
                            longer.rows[n].image_id + "'");
        }
    }
}

int argmax_class(const std::array<double, kClassCount>& p) {
    int best = 0;
    for (int c = 1; c < kClassCount; ++c) {
        if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) {
            best = c;
        }
    }
    return best;
}

}  // namespace

ProbabilityMatrix fuse(const std::vector<ProbabilityMatrix>& matrices,
                       const EnsembleConfig& config) {
    check_fusable(matrices, config);
    double weight_sum = 0.0;
    for (const double w : config.weights) weight_sum += w;

    ProbabilityMatrix fused;
    fused.rows.resize(matrices.front().rows.size());
    for (std::size_t i = 0; i < fused.rows.size(); ++i) {
        fused.rows[i].image_id = matrices.front().rows[i].image_id;
        for (int c = 0; c < kClassCount; ++c) {
            const std::size_t ci = static_cast<std::size_t>(c);
            double acc = 0.0;
            for (std::size_t m = 0; m < matrices.size(); ++m) {
                acc += config.weights[m] * matrices[m].rows[i].p[ci];
            }
            fused.rows[i].p[ci] = acc / weight_sum;
        }
    }
    return fused;
}

ProbabilityMatrix fuse_vote(const std::vector<ProbabilityMatrix>& matrices,
                            const EnsembleConfig& config) {
    check_fusable(matrices, config);
    double weight_sum = 0.0;
    for (const double w : config.weights) weight_sum += w;

    ProbabilityMatrix fused;
    fused.rows.resize(matrices.front().rows.size());
    for (std::size_t i = 0; i < fused.rows.size(); ++i) {
        fused.rows[i].image_id = matrices.front().rows[i].image_id;
        auto& p = fused.rows[i].p;
        p.fill(0.0);
        for (std::size_t m = 0; m < matrices.size(); ++m) {
            const int winner = argmax_class(matrices[m].rows[i].p);
            p[static_cast<std::size_t>(winner)] += config.weights[m];
        }
        for (auto& v : p) v /= weight_sum;
    }
    return fused;
}

std::vector<Prediction> predict(const ProbabilityMatrix& matrix) {
    std::vector<Prediction> predictions;
    predictions.reserve(matrix.rows.size());
    for (const auto& row : matrix.rows) {
        predictions.push_back(
            {row.image_id, static_cast<ClassLabel>(argmax_class(row.p))});
    }
    return predictions;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t n = 0;
    for (const auto& row : counts) {
        for (const auto c : row) n += c;
    }
    return n;
}

std::int64_t ConfusionMatrix::true_count(ClassLabel c) const {
    std::int64_t n = 0;
    for (const auto v : counts[static_cast<std::size_t>(c)]) n += v;
    return n;
}

ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const DatasetManifest& truth) {
    std::unordered_map<std::string_view, ClassLabel> truth_by_id;
    truth_by_id.reserve(truth.entries.size());
    for (const auto& entry : truth.entries) {
        truth_by_id.emplace(entry.image_id, entry.label);
    }
    ConfusionMatrix cm;
    for (const auto& pred : predictions) {
        const auto it = truth_by_id.find(pred.image_id);
        if (it == truth_by_id.end()) {
            throw DataError("prediction for unknown image_id '" + pred.image_id +
                            "'");
        }
        ++cm.counts[static_cast<std::size_t>(it->second)]
                   [static_cast<std::size_t>(pred.label)];
    }
    return cm;
}

double balanced_accuracy(const ConfusionMatrix& cm) {
    double recall_sum = 0.0;
    int present = 0;
    for (int t = 0; t < kClassCount; ++t) {
        const std::size_t ti = static_cast<std::size_t>(t);
        std::int64_t row_total = 0;
        for (const auto v : cm.counts[ti]) row_total += v;
        if (row_total == 0) continue;
        recall_sum +=
            static_cast<double>(cm.counts[ti][ti]) / static_cast<double>(row_total);
        ++present;
    }
    if (present == 0) throw DataError("empty confusion matrix");
    return recall_sum / present;
}

EvaluationReport evaluate(const ConfusionMatrix& cm) {
    EvaluationReport report;
    report.balanced_accuracy = balanced_accuracy(cm);
    std::int64_t correct = 0;
    for (int t = 0; t < kClassCount; ++t) {
        const std::size_t ti = static_cast<std::size_t>(t);
        const std::int64_t row_total = cm.true_count(static_cast<ClassLabel>(t));
        report.support[ti] = row_total;
        report.per_class_recall[ti] =
            row_total == 0 ? 0.0
                           : static_cast<double>(cm.counts[ti][ti]) /
                                 static_cast<double>(row_total);
        correct += cm.counts[ti][ti];
        report.evaluated_images += row_total;
    }
    report.overall_accuracy =
        static_cast<double>(correct) / static_cast<double>(report.evaluated_images);
    return report;
}

std::string serialize_metrics(const EvaluationReport& report) {
    std::string out = "metric,value\n";
    out += "balanced_accuracy," + csv::format_double(report.balanced_accuracy) + "\n";
    out += "overall_accuracy," + csv::format_double(report.overall_accuracy) + "\n";
    out += "evaluated_images," + std::to_string(report.evaluated_images) + "\n";
    return out;
}

std::string serialize_recalls(const EvaluationReport& report) {
    std::string out = "class,recall\n";
    for (const ClassLabel c : all_classes()) {
        const std::size_t i = static_cast<std::size_t>(c);
        out += std::string(to_string(c)) + ",";
        if (report.support[i] > 0) {
            out += csv::format_double(report.per_class_recall[i]);
        }
        out += '\n';
    }
    return out;
}

std::string format_report(const EvaluationReport& report) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-6s %8s  %s\n", "class", "support",
                  "recall");
    out += line;
    for (const ClassLabel c : all_classes()) {
        const std::size_t i = static_cast<std::size_t>(c);
        if (report.support[i] > 0) {
            std::snprintf(line, sizeof(line), "%-6s %8lld  %.6f\n",
                          std::string(to_string(c)).c_str(),
                          static_cast<long long>(report.support[i]),
                          report.per_class_recall[i]);
        } else {
            std::snprintf(line, sizeof(line),
                          "%-6s %8lld  (absent from ground truth, excluded)\n",
                          std::string(to_string(c)).c_str(), 0LL);
        }
        out += line;
    }
    std::snprintf(line, sizeof(line), "balanced_accuracy  %.10f\n",
                  report.balanced_accuracy);
    out += line;
    std::snprintf(line, sizeof(line), "overall_accuracy   %.10f\n",
                  report.overall_accuracy);
    out += line;
    std::snprintf(line, sizeof(line), "evaluated_images   %lld\n",
                  static_cast<long long>(report.evaluated_images));
    out += line;
    return out;
}

}  // namespace dermprep
