#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dermprep/imgops.hpp"
#include "dermprep/manifest.hpp"

namespace dermprep {

/// Nearest-centroid colour-histogram classifier. A deliberately simple
/// stand-in model so the full pipeline -> prediction -> fusion ->
/// evaluation path runs without any external network.
struct CentroidModel {
    int bins = 8;               // histogram bins per channel
    double temperature = 0.05;  // softmax temperature over distances
    // One centroid per class: concatenated per-channel histograms of
    // dimension 3*bins. Empty vector = class absent from training data.
    std::array<std::vector<double>, kClassCount> centroids;
};

/// Concatenated per-channel histogram, each channel block L1-normalized.
std::vector<double> color_histogram(const ImageBuffer& img, int bins);

/// Mean per-class histogram over the manifest. Histograms may be
/// computed in parallel; the reduction runs in manifest order so the
/// result does not depend on the worker count.
CentroidModel train_centroids(const DatasetManifest& manifest,
                              const std::filesystem::path& images_dir, int bins,
                              double temperature = 0.05, int workers = 1);

/// softmax(-distance / temperature) over classes present in the model;
/// absent classes get probability 0.
std::array<double, kClassCount> predict_baseline(const CentroidModel& model,
                                                 const ImageBuffer& img);

/// Model file: `bins` and `temperature` header lines, then one line per
/// class (`<class>,present,<values...>` or `<class>,absent`).
std::string serialize_model(const CentroidModel& model);
CentroidModel parse_model(std::string_view csv_text);

}  // namespace dermprep
