#include "dermprep/baseline.hpp"

#include <cmath>

#include "dermprep/codec.hpp"
#include "dermprep/csv.hpp"
#include "dermprep/errors.hpp"
#include "dermprep/parallel.hpp"

namespace dermprep {

std::vector<double> color_histogram(const ImageBuffer& img, int bins) {
    if (bins < 2) throw DataError("histogram bins must be >= 2");
    if (!img.valid()) throw DataError("invalid image buffer");
    std::vector<double> hist(static_cast<std::size_t>(3 * bins), 0.0);
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        for (int c = 0; c < 3; ++c) {
            const int bin = img.data[i + static_cast<std::size_t>(c)] * bins / 256;
            hist[static_cast<std::size_t>(c * bins + bin)] += 1.0;
        }
    }
    const double pixels = static_cast<double>(img.width) * img.height;
    for (auto& v : hist) v /= pixels;
    return hist;
}

CentroidModel train_centroids(const DatasetManifest& manifest,
                              const std::filesystem::path& images_dir, int bins,
                              double temperature, int workers) {
    if (manifest.entries.empty()) throw DataError("empty manifest");
    if (bins < 2) throw DataError("histogram bins must be >= 2");
    if (temperature <= 0.0) throw DataError("temperature must be positive");

    // Per-image histograms computed in parallel into fixed slots.
    std::vector<std::vector<double>> histograms(manifest.entries.size());
    parallel_for_index(manifest.entries.size(), workers, [&](std::size_t i) {
        const auto& entry = manifest.entries[i];
        const std::string rel = entry.path.empty()
                                    ? resolve_image_path(images_dir, entry.image_id)
                                    : entry.path;
        histograms[i] = color_histogram(load_image(images_dir / rel), bins);
    });

    CentroidModel model;
    model.bins = bins;
    model.temperature = temperature;
    std::array<std::int64_t, kClassCount> counts{};
    const std::size_t dim = static_cast<std::size_t>(3 * bins);
    std::array<std::vector<double>, kClassCount> sums;

    // Fixed-order reduction (manifest order) keeps training deterministic.
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const std::size_t ci =
            static_cast<std::size_t>(manifest.entries[i].label);
        if (sums[ci].empty()) sums[ci].assign(dim, 0.0);
        for (std::size_t d = 0; d < dim; ++d) sums[ci][d] += histograms[i][d];
        ++counts[ci];
    }
    for (int c = 0; c < kClassCount; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        if (counts[ci] == 0) continue;
        model.centroids[ci] = std::move(sums[ci]);
        for (auto& v : model.centroids[ci]) v /= static_cast<double>(counts[ci]);
    }
    return model;
}

std::array<double, kClassCount> predict_baseline(const CentroidModel& model,
                                                 const ImageBuffer& img) {
    const auto hist = color_histogram(img, model.bins);
    std::array<double, kClassCount> distance{};
    std::array<bool, kClassCount> present{};
    double min_distance = 0.0;
    bool any = false;
    for (int c = 0; c < kClassCount; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        const auto& centroid = model.centroids[ci];
        if (centroid.empty()) continue;
        if (centroid.size() != hist.size()) {
            throw DataError("model dimension does not match bins");
        }
        double sq = 0.0;
        for (std::size_t d = 0; d < hist.size(); ++d) {
            const double diff = hist[d] - centroid[d];
            sq += diff * diff;
        }
        distance[ci] = std::sqrt(sq);
        present[ci] = true;
        if (!any || distance[ci] < min_distance) min_distance = distance[ci];
        any = true;
    }
    if (!any) throw DataError("model has no trained classes");

    // Shift by the minimum distance before exponentiating; the softmax is
    // unchanged and cannot underflow to all zeros.
    std::array<double, kClassCount> p{};
    double sum = 0.0;
    for (int c = 0; c < kClassCount; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        if (!present[ci]) continue;
        p[ci] = std::exp(-(distance[ci] - min_distance) / model.temperature);
        sum += p[ci];
    }
    for (auto& v : p) v /= sum;
    return p;
}

std::string serialize_model(const CentroidModel& model) {
    std::string out = "bins," + std::to_string(model.bins) + "\n";
    out += "temperature," + csv::format_double(model.temperature) + "\n";
    for (const ClassLabel c : all_classes()) {
        const auto& centroid = model.centroids[static_cast<std::size_t>(c)];
        out += std::string(to_string(c));
        if (centroid.empty()) {
            out += ",absent\n";
            continue;
        }
        out += ",present";
        for (const double v : centroid) {
            out += ',';
            out += csv::format_double(v);
        }
        out += '\n';
    }
    return out;
}

CentroidModel parse_model(std::string_view csv_text) {
    const auto lines = csv::split_lines(csv_text);
    if (lines.size() < 2 + kClassCount) {
        throw DataError("truncated model file");
    }
    const auto bins_fields = csv::split_fields(lines[0]);
    if (bins_fields.size() != 2 || bins_fields[0] != "bins") {
        throw DataError("model file must start with a bins line");
    }
    const auto temp_fields = csv::split_fields(lines[1]);
    if (temp_fields.size() != 2 || temp_fields[0] != "temperature") {
        throw DataError("model file must have a temperature line");
    }
    CentroidModel model;
    model.bins = static_cast<int>(csv::parse_int(bins_fields[1], "row 1"));
    model.temperature = csv::parse_double(temp_fields[1], "row 2");
    if (model.bins < 2) throw DataError("histogram bins must be >= 2");
    if (model.temperature <= 0.0) throw DataError("temperature must be positive");

    const std::size_t dim = static_cast<std::size_t>(3 * model.bins);
    std::array<bool, kClassCount> seen{};
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string ctx = "row " + std::to_string(i + 1);
        const auto fields = csv::split_fields(lines[i]);
        if (fields.size() < 2) throw DataError("malformed model line, " + ctx);
        const auto label = parse_label(fields[0]);
        if (!label) {
            throw DataError("unknown class '" + std::string(fields[0]) + "', " + ctx);
        }
        const std::size_t ci = static_cast<std::size_t>(*label);
        if (seen[ci]) {
            throw DataError("duplicate class '" + std::string(fields[0]) + "', " + ctx);
        }
        seen[ci] = true;
        if (fields[1] == "absent") {
            if (fields.size() != 2) throw DataError("malformed model line, " + ctx);
            continue;
        }
        if (fields[1] != "present" || fields.size() != 2 + dim) {
            throw DataError("malformed model line, " + ctx);
        }
        auto& centroid = model.centroids[ci];
        centroid.reserve(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = csv::parse_double(fields[d + 2], ctx);
            if (!std::isfinite(v)) {
                throw DataError("centroid values must be finite, " + ctx);
            }
            centroid.push_back(v);
        }
    }
    for (int c = 0; c < kClassCount; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
            throw DataError("model is missing class " +
                            std::string(to_string(static_cast<ClassLabel>(c))));
        }
    }
    return model;
}

}  // namespace dermprep
