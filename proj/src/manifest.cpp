#include "dermprep/manifest.hpp"

#include <algorithm>
#include <unordered_set>

#include "dermprep/csv.hpp"
#include "dermprep/errors.hpp"

namespace dermprep {

namespace {

constexpr std::array<std::string_view, kClassCount> kClassNames = {
    "MEL", "NV", "BCC", "AKIEC", "BKL", "DF", "VASC"};

std::string row_context(std::size_t line_number) {
    return "row " + std::to_string(line_number);
}

void sort_by_image_id(std::vector<ManifestEntry>& entries) {
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                  return a.image_id < b.image_id;
              });
}

}  // namespace

std::string_view to_string(ClassLabel label) {
    return kClassNames[static_cast<std::size_t>(label)];
}

std::optional<ClassLabel> parse_label(std::string_view name) {
    for (int i = 0; i < kClassCount; ++i) {
        if (kClassNames[static_cast<std::size_t>(i)] == name) {
            return static_cast<ClassLabel>(i);
        }
    }
    return std::nullopt;
}

const std::array<ClassLabel, kClassCount>& all_classes() {
    static const std::array<ClassLabel, kClassCount> classes = {
        ClassLabel::MEL, ClassLabel::NV,  ClassLabel::BCC, ClassLabel::AKIEC,
        ClassLabel::BKL, ClassLabel::DF,  ClassLabel::VASC};
    return classes;
}

DatasetManifest parse_ground_truth(std::string_view csv_text) {
    const auto lines = csv::split_lines(csv_text);
    if (lines.empty() || lines[0] != kImageClassHeader) {
        throw DataError("missing or misordered header, row 1 (expected '" +
                        std::string(kImageClassHeader) + "')");
    }

    DatasetManifest manifest;
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        if (line.empty()) continue;
        const std::size_t row = i + 1;
        const auto fields = csv::split_fields(line);
        if (fields.size() != 1 + kClassCount) {
            throw DataError("wrong column count, " + row_context(row));
        }
        if (fields[0].empty()) {
            throw DataError("empty image id, " + row_context(row));
        }
        int ones = 0;
        int one_column = -1;
        for (int c = 0; c < kClassCount; ++c) {
            const std::string_view cell = fields[static_cast<std::size_t>(c) + 1];
            if (cell == "1" || cell == "1.0") {
                ++ones;
                one_column = c;
            } else if (cell != "0" && cell != "0.0") {
                throw DataError("invalid cell '" + std::string(cell) + "', " +
                                row_context(row) + " (cells must be 0, 0.0, 1 or 1.0)");
            }
        }
        if (ones != 1) {
            throw DataError("not one-hot, " + row_context(row));
        }
        if (!seen.insert(fields[0]).second) {
            throw DataError("duplicate image_id '" + std::string(fields[0]) + "', " +
                            row_context(row));
        }
        manifest.entries.push_back(
            {std::string(fields[0]), "", static_cast<ClassLabel>(one_column)});
    }
    sort_by_image_id(manifest.entries);
    return manifest;
}

ClassCounts class_counts(const DatasetManifest& manifest) {
    ClassCounts counts{};
    for (const auto& entry : manifest.entries) {
        ++counts[static_cast<std::size_t>(entry.label)];
    }
    return counts;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
    std::string out(kManifestHeader);
    out += '\n';
    for (const auto& entry : manifest.entries) {
        out += entry.image_id;
        out += ',';
        out += entry.path;
        out += ',';
        out += to_string(entry.label);
        out += '\n';
    }
    return out;
}

DatasetManifest parse_manifest(std::string_view csv_text) {
    const auto lines = csv::split_lines(csv_text);
    if (lines.empty() || lines[0] != kManifestHeader) {
        throw DataError("missing or misordered header, row 1 (expected '" +
                        std::string(kManifestHeader) + "')");
    }
    DatasetManifest manifest;
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        if (line.empty()) continue;
        const std::size_t row = i + 1;
        const auto fields = csv::split_fields(line);
        if (fields.size() != 3) {
            throw DataError("wrong column count, " + row_context(row));
        }
        if (fields[0].empty()) {
            throw DataError("empty image id, " + row_context(row));
        }
        const auto label = parse_label(fields[2]);
        if (!label) {
            throw DataError("unknown class '" + std::string(fields[2]) + "', " +
                            row_context(row));
        }
        if (!seen.insert(fields[0]).second) {
            throw DataError("duplicate image_id '" + std::string(fields[0]) + "', " +
                            row_context(row));
        }
        manifest.entries.push_back(
            {std::string(fields[0]), std::string(fields[1]), *label});
    }
    sort_by_image_id(manifest.entries);
    return manifest;
}

std::string resolve_image_path(const std::filesystem::path& images_dir,
                               const std::string& image_id) {
    static constexpr std::array<std::string_view, 3> kExtensions = {"jpg", "jpeg",
                                                                    "png"};
    for (const auto ext : kExtensions) {
        std::string name = image_id + "." + std::string(ext);
        std::error_code ec;
        if (std::filesystem::exists(images_dir / name, ec)) return name;
    }
    throw IoError("no image file for '" + image_id + "' under " +
                  images_dir.string() + " (tried .jpg, .jpeg, .png)");
}

void resolve_manifest_paths(DatasetManifest& manifest,
                            const std::filesystem::path& images_dir) {
    for (auto& entry : manifest.entries) {
        if (entry.path.empty()) {
            entry.path = resolve_image_path(images_dir, entry.image_id);
        }
    }
}

}  // namespace dermprep
