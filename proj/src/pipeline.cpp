#include "dermprep/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <optional>
#include <thread>

#include "dermprep/codec.hpp"
#include "dermprep/csv.hpp"
#include "dermprep/errors.hpp"
#include "dermprep/imgops.hpp"

namespace dermprep {

namespace {

std::string millideg_token(double angle) {
    double a = std::fmod(angle, 360.0);
    if (a < 0) a += 360.0;
    const long long md = std::llround(a * 1000.0);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06lld", md);
    return buf;
}

}  // namespace

std::string output_name(const std::string& source_id, OpKind kind, double angle) {
    switch (kind) {
        case OpKind::Copy:
            return source_id + "__o";
        case OpKind::Flip:
            return source_id + "__f";
        case OpKind::Rotate:
            return source_id + "__r" + millideg_token(angle);
        case OpKind::FlipRotate:
            return source_id + "__f_r" + millideg_token(angle);
    }
    throw DataError("unknown operation kind");
}

std::string op_descriptor(OpKind kind, double angle) {
    switch (kind) {
        case OpKind::Copy:
            return "copy";
        case OpKind::Flip:
            return "flip";
        case OpKind::Rotate:
            return "rotate(" + csv::format_double(angle) + ")";
        case OpKind::FlipRotate:
            return "flip+rotate(" + csv::format_double(angle) + ")";
    }
    throw DataError("unknown operation kind");
}

std::string serialize_output_manifest(const OutputManifest& manifest) {
    std::string out = "output_name,source_id,label,operation\n";
    for (const auto& row : manifest.rows) {
        out += row.output_name;
        out += ',';
        out += row.source_id;
        out += ',';
        out += to_string(row.label);
        out += ',';
        out += row.operation;
        out += '\n';
    }
    return out;
}

std::vector<WorkItem> expand(const AugmentationPlan& plan,
                             const DatasetManifest& manifest, bool normalize) {
    const ClassCounts counts = class_counts(manifest);
    for (const ClassLabel c : all_classes()) {
        const std::size_t i = static_cast<std::size_t>(c);
        if (counts[i] != plan.per_class[i].input_count) {
            throw DataError("plan does not cover class " +
                            std::string(to_string(c)) + ": manifest has " +
                            std::to_string(counts[i]) + " images, plan expects " +
                            std::to_string(plan.per_class[i].input_count));
        }
    }

    std::vector<WorkItem> items;
    items.reserve(static_cast<std::size_t>(plan.total_expected()));
    for (const auto& entry : manifest.entries) {
        const ClassPlan& cp = plan.for_class(entry.label);
        auto emit = [&](OpKind kind, double angle) {
            WorkItem item;
            item.source_id = entry.image_id;
            item.source_path = entry.path;
            item.label = entry.label;
            item.kind = kind;
            item.angle = angle;
            item.normalize = normalize;
            item.output_name = output_name(entry.image_id, kind, angle);
            items.push_back(std::move(item));
        };
        emit(OpKind::Copy, 0.0);
        if (cp.flip) emit(OpKind::Flip, 0.0);
        for (const double angle : cp.angles) {
            emit(OpKind::Rotate, angle);
            if (cp.flip) emit(OpKind::FlipRotate, angle);
        }
    }
    return items;
}

namespace {

// Contiguous run of items sharing one source image.
struct SourceGroup {
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<SourceGroup> group_by_source(const std::vector<WorkItem>& items) {
    std::vector<SourceGroup> groups;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i + 1;
        while (j < items.size() && items[j].source_id == items[i].source_id) ++j;
        groups.push_back({i, j});
        i = j;
    }
    return groups;
}

ImageBuffer apply_item(const WorkItem& item, const ImageBuffer& base,
                       const ImageBuffer* flipped_base, bool normalize_last) {
    ImageBuffer result;
    switch (item.kind) {
        case OpKind::Copy:
            result = base;
            break;
        case OpKind::Flip:
            result = *flipped_base;
            break;
        case OpKind::Rotate:
            result = rotate(base, item.angle);
            break;
        case OpKind::FlipRotate:
            result = rotate(*flipped_base, item.angle);
            break;
    }
    if (normalize_last && item.normalize) result = max_rgb_normalize(result);
    return result;
}

}  // namespace

ExecuteResult execute(const std::vector<WorkItem>& items,
                      const std::filesystem::path& images_dir,
                      const std::filesystem::path& out_dir,
                      const ExecuteOptions& options) {
    if (options.workers < 1) throw DataError("workers must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir.string());

    const auto groups = group_by_source(items);
    std::vector<std::optional<OutputRow>> rows(items.size());

    std::atomic<std::size_t> next_group{0};
    std::atomic<bool> abort{false};
    std::mutex failure_mutex;
    std::vector<ItemFailure> failures;

    auto record_failure = [&](const WorkItem& item, const std::string& message) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failures.push_back({item.source_id, item.output_name, message});
        if (!options.keep_going) abort.store(true);
    };

    auto worker = [&]() {
        for (;;) {
            if (abort.load()) return;
            const std::size_t g = next_group.fetch_add(1);
            if (g >= groups.size()) return;
            const SourceGroup& group = groups[g];
            const WorkItem& first = items[group.begin];

            ImageBuffer source;
            try {
                std::string rel = first.source_path.empty()
                                      ? resolve_image_path(images_dir, first.source_id)
                                      : first.source_path;
                source = load_image(images_dir / rel);
                if (first.normalize && options.normalize_first) {
                    source = max_rgb_normalize(source);
                }
            } catch (const std::exception& e) {
                // The whole group shares the source; every item fails.
                for (std::size_t i = group.begin; i < group.end; ++i) {
                    record_failure(items[i], e.what());
                    if (abort.load()) return;
                }
                continue;
            }

            std::optional<ImageBuffer> flipped;
            for (std::size_t i = group.begin; i < group.end; ++i) {
                const WorkItem& item = items[i];
                try {
                    if ((item.kind == OpKind::Flip || item.kind == OpKind::FlipRotate) &&
                        !flipped) {
                        flipped = hflip(source);
                    }
                    const ImageBuffer produced =
                        apply_item(item, source, flipped ? &*flipped : nullptr,
                                   !options.normalize_first);
                    save_png(produced, out_dir / (item.output_name + ".png"));
                    rows[i] = OutputRow{item.output_name, item.source_id, item.label,
                                        op_descriptor(item.kind, item.angle)};
                } catch (const std::exception& e) {
                    record_failure(item, e.what());
                    if (abort.load()) return;
                }
            }
        }
    };

    if (options.workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(options.workers));
        for (int i = 0; i < options.workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    if (!failures.empty() && !options.keep_going) {
        const ItemFailure& f = failures.front();
        std::string msg = "augmentation aborted: item " + f.output_name +
                          " (source " + f.source_id + "): " + f.message;
        if (failures.size() > 1) {
            msg += " (+" + std::to_string(failures.size() - 1) + " more)";
        }
        throw IoError(msg);
    }

    ExecuteResult result;
    result.manifest.rows.reserve(items.size());
    for (auto& row : rows) {
        if (row) result.manifest.rows.push_back(std::move(*row));
    }
    std::sort(result.manifest.rows.begin(), result.manifest.rows.end(),
              [](const OutputRow& a, const OutputRow& b) {
                  return a.output_name < b.output_name;
              });
    std::sort(failures.begin(), failures.end(),
              [](const ItemFailure& a, const ItemFailure& b) {
                  return a.output_name < b.output_name;
              });
    result.failures = std::move(failures);
    return result;
}

}  // namespace dermprep
