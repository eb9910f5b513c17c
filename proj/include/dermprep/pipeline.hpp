#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dermprep/balancer.hpp"
#include "dermprep/manifest.hpp"

namespace dermprep {

enum class OpKind { Copy, Flip, Rotate, FlipRotate };

/// One output image to produce. Items for the same source are emitted
/// contiguously so the executor can decode each source once.
struct WorkItem {
    std::string source_id;
    std::string source_path;  // relative to images_dir; probed when empty
    ClassLabel label = ClassLabel::MEL;
    OpKind kind = OpKind::Copy;
    double angle = 0.0;  // rotation kinds only
    bool normalize = true;
    std::string output_name;
};

/// Deterministic file name for (source_id, operation):
///   copy            -> <id>__o
///   flip            -> <id>__f
///   rotate(a)       -> <id>__r<millideg>
///   flip+rotate(a)  -> <id>__f_r<millideg>
/// where millideg is the angle in thousandths of a degree, rounded half
/// up and zero-padded to six digits (36 degrees -> r036000).
std::string output_name(const std::string& source_id, OpKind kind,
                        double angle = 0.0);

/// Human-readable operation tag used in the output manifest.
std::string op_descriptor(OpKind kind, double angle = 0.0);

struct OutputRow {
    std::string output_name;
    std::string source_id;
    ClassLabel label = ClassLabel::MEL;
    std::string operation;

    bool operator==(const OutputRow&) const = default;
};

/// One row per produced file, sorted by output_name.
struct OutputManifest {
    std::vector<OutputRow> rows;
};

std::string serialize_output_manifest(const OutputManifest& manifest);

/// Expands a plan over a manifest into the full work list: per source of
/// class c one copy item, one flip item when the class plan flips, and a
/// rotate (plus flip+rotate) item per scheduled angle. The per-class
/// manifest counts must equal the plan's input counts.
std::vector<WorkItem> expand(const AugmentationPlan& plan,
                             const DatasetManifest& manifest,
                             bool normalize = true);

struct ExecuteOptions {
    int workers = 1;
    bool normalize_first = false;  // normalize before flip/rotate instead of after
    bool keep_going = false;       // skip failing items instead of aborting
};

struct ItemFailure {
    std::string source_id;
    std::string output_name;
    std::string message;
};

struct ExecuteResult {
    OutputManifest manifest;
    std::vector<ItemFailure> failures;  // non-empty only with keep_going
};

/// Decodes, processes and PNG-encodes every item into out_dir. Operation
/// order is flip, then rotate, then max-RGB normalization (reversed by
/// normalize_first). Output bytes are a pure function of the inputs and
/// do not depend on the worker count. Without keep_going the first
/// failing item aborts the run via IoError; with it, failures are
/// collected and the remaining items still execute.
ExecuteResult execute(const std::vector<WorkItem>& items,
                      const std::filesystem::path& images_dir,
                      const std::filesystem::path& out_dir,
                      const ExecuteOptions& options);

}  // namespace dermprep
