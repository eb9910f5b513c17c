#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dermprep {

/// The seven ISIC 2018 Task 3 diagnosis categories, in canonical order.
/// The enum value doubles as the canonical index 0..6.
enum class ClassLabel : int { MEL = 0, NV, BCC, AKIEC, BKL, DF, VASC };

inline constexpr int kClassCount = 7;

std::string_view to_string(ClassLabel label);
std::optional<ClassLabel> parse_label(std::string_view name);
const std::array<ClassLabel, kClassCount>& all_classes();

inline int class_index(ClassLabel label) { return static_cast<int>(label); }

/// Shared header of the one-hot ground-truth CSV and of probability CSVs.
/// Column order equals the canonical class order.
inline constexpr std::string_view kImageClassHeader =
    "image,MEL,NV,BCC,AKIEC,BKL,DF,VASC";

inline constexpr std::string_view kManifestHeader = "image_id,path,label";

struct ManifestEntry {
    std::string image_id;
    std::string path;  // relative to the images directory; empty until resolved
    ClassLabel label = ClassLabel::MEL;

    bool operator==(const ManifestEntry&) const = default;
};

/// Ground truth for a dataset. Entries are sorted ascending by image_id
/// and ids are unique; both are established by the parsers.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    bool operator==(const DatasetManifest&) const = default;
};

using ClassCounts = std::array<std::int64_t, kClassCount>;

/// Parses the one-hot ground-truth CSV (header `image,MEL,NV,...`).
/// Each data row must contain exactly one cell equal to 1; cells accept
/// only the spellings 0, 0.0, 1 and 1.0. Throws DataError naming the
/// offending row (1-based file line, header is row 1).
DatasetManifest parse_ground_truth(std::string_view csv_text);

ClassCounts class_counts(const DatasetManifest& manifest);

/// Canonical manifest CSV (`image_id,path,label`) for downstream stages.
std::string serialize_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view csv_text);

/// Resolves an image id to a file name relative to images_dir, probing
/// extensions in the order jpg, jpeg, png. Throws IoError when no
/// candidate file exists.
std::string resolve_image_path(const std::filesystem::path& images_dir,
                               const std::string& image_id);

/// Fills every empty `path` in place by probing under images_dir.
void resolve_manifest_paths(DatasetManifest& manifest,
                            const std::filesystem::path& images_dir);

}  // namespace dermprep
