// dermprep: dataset balancing, augmentation, colour normalization and
// ensemble evaluation for dermoscopic image classification.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dermprep/balancer.hpp"
#include "dermprep/baseline.hpp"
#include "dermprep/codec.hpp"
#include "dermprep/csv.hpp"
#include "dermprep/errors.hpp"
#include "dermprep/evalkit.hpp"
#include "dermprep/imgops.hpp"
#include "dermprep/manifest.hpp"
#include "dermprep/parallel.hpp"
#include "dermprep/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dermprep;

namespace {

// Bad flag combinations that CLI11 cannot express; exit code 1.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// The effective configuration is echoed to `<output>.run-config` beside
// the output file or directory. Contents are a pure function of the
// flags, so re-runs stay byte-identical.
void write_run_config(const fs::path& output, const KeyValues& config) {
    fs::path base = output;
    if (base.filename().empty()) base = base.parent_path();
    fs::path path = base;
    path += ".run-config";
    std::string text;
    for (const auto& [key, value] : config) {
        text += key + "=" + value + "\n";
    }
    csv::write_text_file(path, text);
}

// Accepts either the one-hot ground-truth CSV or the canonical manifest
// CSV, distinguished by header.
DatasetManifest load_dataset_csv(const fs::path& path) {
    const std::string text = csv::read_text_file(path);
    const auto lines = csv::split_lines(text);
    if (!lines.empty() && lines[0] == kImageClassHeader) {
        return parse_ground_truth(text);
    }
    if (!lines.empty() && lines[0] == kManifestHeader) {
        return parse_manifest(text);
    }
    throw DataError("unrecognized dataset CSV header in " + path.string() +
                    " (expected '" + std::string(kImageClassHeader) + "' or '" +
                    std::string(kManifestHeader) + "')");
}

std::vector<std::string_view> split_on(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t at = text.find(sep, pos);
        if (at == std::string_view::npos) {
            parts.push_back(text.substr(pos));
            return parts;
        }
        parts.push_back(text.substr(pos, at - pos));
        pos = at + 1;
    }
}

FactorList parse_factor_list(const std::string& text) {
    const auto parts = split_on(text, ',');
    if (parts.size() != kClassCount) {
        throw UsageError("--factors needs exactly 7 values (MEL,NV,BCC,AKIEC,"
                         "BKL,DF,VASC order), got " + std::to_string(parts.size()));
    }
    FactorList factors{};
    for (int c = 0; c < kClassCount; ++c) {
        const std::size_t i = static_cast<std::size_t>(c);
        factors[i] = csv::parse_int(parts[i], "--factors");
        if (factors[i] < 0) throw UsageError("--factors values must be >= 0");
    }
    return factors;
}

std::vector<double> parse_weight_list(const std::string& text) {
    std::vector<double> weights;
    for (const auto part : split_on(text, ',')) {
        weights.push_back(csv::parse_double(part, "--weights"));
    }
    return weights;
}

void print_class_count_table(const ClassCounts& counts) {
    std::int64_t total = 0;
    for (const ClassLabel c : all_classes()) {
        const std::int64_t n = counts[static_cast<std::size_t>(c)];
        std::printf("%-6s %8lld\n", std::string(to_string(c)).c_str(),
                    static_cast<long long>(n));
        total += n;
    }
    std::printf("%-6s %8lld\n", "total", static_cast<long long>(total));
}

void print_plan_table(const AugmentationPlan& plan) {
    std::printf("%-6s %8s %11s %7s %15s\n", "class", "input", "after_flip",
                "factor", "after_rotation");
    std::int64_t input_total = 0;
    std::int64_t flip_total = 0;
    for (const ClassLabel c : all_classes()) {
        const ClassPlan& cp = plan.for_class(c);
        std::printf("%-6s %8lld %11lld %7lld %15lld\n",
                    std::string(to_string(c)).c_str(),
                    static_cast<long long>(cp.input_count),
                    static_cast<long long>(cp.after_flip()),
                    static_cast<long long>(cp.rotation_factor),
                    static_cast<long long>(cp.expected_output));
        input_total += cp.input_count;
        flip_total += cp.after_flip();
    }
    std::printf("%-6s %8lld %11lld %7s %15lld\n", "total",
                static_cast<long long>(input_total),
                static_cast<long long>(flip_total), "",
                static_cast<long long>(plan.total_expected()));
}

// ---- subcommand runners ----

struct StatsArgs {
    std::string dataset_csv;
    std::string emit_manifest;
    std::string images_dir;
};

void run_stats(const StatsArgs& args) {
    DatasetManifest manifest = load_dataset_csv(args.dataset_csv);
    print_class_count_table(class_counts(manifest));
    if (!args.emit_manifest.empty()) {
        if (!args.images_dir.empty()) {
            resolve_manifest_paths(manifest, args.images_dir);
        }
        csv::write_text_file(args.emit_manifest, serialize_manifest(manifest));
        write_run_config(args.emit_manifest,
                         {{"command", "stats"},
                          {"dataset", args.dataset_csv},
                          {"images_dir", args.images_dir},
                          {"emit_manifest", args.emit_manifest}});
    }
}

struct PlanArgs {
    std::string dataset_csv;
    std::string factors;
    std::string target;
    bool flip = true;
    std::string output;
};

void run_plan(const PlanArgs& args) {
    if (args.factors.empty() == args.target.empty()) {
        throw UsageError("plan needs exactly one of --factors or --target");
    }
    const DatasetManifest manifest = load_dataset_csv(args.dataset_csv);
    const ClassCounts counts = class_counts(manifest);

    AugmentationPlan plan;
    if (!args.factors.empty()) {
        plan = plan_from_factors(counts, parse_factor_list(args.factors), args.flip);
    } else if (args.target == "largest-class") {
        plan = plan_auto(counts, args.flip, PlanTarget::largest());
    } else {
        plan = plan_auto(counts, args.flip,
                         PlanTarget::count(csv::parse_int(args.target, "--target")));
    }

    print_plan_table(plan);
    if (!args.output.empty()) {
        csv::write_text_file(args.output, serialize_plan(plan));
        write_run_config(args.output,
                         {{"command", "plan"},
                          {"dataset", args.dataset_csv},
                          {"factors", args.factors},
                          {"target", args.target},
                          {"flip", args.flip ? "1" : "0"},
                          {"output", args.output}});
    }
}

struct AugmentArgs {
    std::string plan_csv;
    std::string dataset_csv;
    std::string images_dir;
    std::string out_dir;
    int workers = 1;
    bool normalize = true;
    bool normalize_first = false;
    bool keep_going = false;
};

int run_augment(const AugmentArgs& args) {
    const AugmentationPlan plan = parse_plan(csv::read_text_file(args.plan_csv));
    DatasetManifest manifest = load_dataset_csv(args.dataset_csv);

    // Path resolution happens inside the executor, per source, so that
    // --keep-going can skip sources whose files are missing.
    const auto items = expand(plan, manifest, args.normalize);
    std::printf("augment: %zu items from %zu sources, %d worker%s\n", items.size(),
                manifest.entries.size(), args.workers,
                args.workers == 1 ? "" : "s");

    ExecuteOptions options;
    options.workers = args.workers;
    options.normalize_first = args.normalize_first;
    options.keep_going = args.keep_going;
    const ExecuteResult result =
        execute(items, args.images_dir, args.out_dir, options);

    csv::write_text_file(fs::path(args.out_dir) / "output-manifest.csv",
                         serialize_output_manifest(result.manifest));
    write_run_config(args.out_dir,
                     {{"command", "augment"},
                      {"plan", args.plan_csv},
                      {"dataset", args.dataset_csv},
                      {"images_dir", args.images_dir},
                      {"out_dir", args.out_dir},
                      {"workers", std::to_string(args.workers)},
                      {"normalize", args.normalize ? "1" : "0"},
                      {"normalize_first", args.normalize_first ? "1" : "0"},
                      {"keep_going", args.keep_going ? "1" : "0"}});

    std::printf("augment: wrote %zu files to %s\n", result.manifest.rows.size(),
                args.out_dir.c_str());
    if (!result.failures.empty()) {
        std::size_t shown = 0;
        for (const auto& f : result.failures) {
            if (shown++ == 10) {
                std::fprintf(stderr, "  ... and %zu more failures\n",
                             result.failures.size() - 10);
                break;
            }
            std::fprintf(stderr, "  failed %s (source %s): %s\n",
                         f.output_name.c_str(), f.source_id.c_str(),
                         f.message.c_str());
        }
        std::fprintf(stderr, "augment: %zu of %zu items failed\n",
                     result.failures.size(), items.size());
        return 3;
    }
    return 0;
}

struct NormalizeArgs {
    std::string in_dir;
    std::string out_dir;
    int workers = 1;
};

void run_normalize(const NormalizeArgs& args) {
    if (!fs::is_directory(args.in_dir)) {
        throw IoError("input directory not found: " + args.in_dir);
    }
    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(args.in_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".jpg" || ext == ".jpeg" || ext == ".png") {
            inputs.push_back(entry.path());
        }
    }
    std::sort(inputs.begin(), inputs.end());

    // Distinct inputs may not collapse onto one output stem.
    for (std::size_t i = 1; i < inputs.size(); ++i) {
        if (inputs[i].stem() == inputs[i - 1].stem()) {
            throw DataError("output name collision for stem '" +
                            inputs[i].stem().string() + "'");
        }
    }

    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + args.out_dir);

    parallel_for_index(inputs.size(), args.workers, [&](std::size_t i) {
        const ImageBuffer img = load_image(inputs[i]);
        save_png(max_rgb_normalize(img),
                 fs::path(args.out_dir) / (inputs[i].stem().string() + ".png"));
    });

    write_run_config(args.out_dir, {{"command", "normalize"},
                                    {"in_dir", args.in_dir},
                                    {"out_dir", args.out_dir},
                                    {"workers", std::to_string(args.workers)}});
    std::printf("normalize: wrote %zu files to %s\n", inputs.size(),
                args.out_dir.c_str());
}

struct FuseArgs {
    std::vector<std::string> prediction_csvs;
    std::string weights;
    bool vote = false;
    std::string output;
};

void run_fuse(const FuseArgs& args) {
    std::vector<ProbabilityMatrix> matrices;
    matrices.reserve(args.prediction_csvs.size());
    for (const auto& path : args.prediction_csvs) {
        matrices.push_back(load_probabilities(csv::read_text_file(path)));
    }
    EnsembleConfig config;
    config.weights = args.weights.empty()
                         ? std::vector<double>(matrices.size(), 0.5)
                         : parse_weight_list(args.weights);

    const ProbabilityMatrix fused =
        args.vote ? fuse_vote(matrices, config) : fuse(matrices, config);
    csv::write_text_file(args.output, serialize_probabilities(fused));

    KeyValues config_echo = {{"command", "fuse"},
                             {"weights", args.weights.empty() ? "(default 0.5)"
                                                              : args.weights},
                             {"vote", args.vote ? "1" : "0"},
                             {"output", args.output}};
    for (const auto& path : args.prediction_csvs) {
        config_echo.emplace_back("predictions", path);
    }
    write_run_config(args.output, config_echo);
    std::printf("fuse: wrote %zu rows to %s\n", fused.rows.size(),
                args.output.c_str());
}

struct EvaluateArgs {
    std::string prediction_csv;
    std::string dataset_csv;
    std::string output_prefix;
};

void run_evaluate(const EvaluateArgs& args) {
    const ProbabilityMatrix matrix =
        load_probabilities(csv::read_text_file(args.prediction_csv));
    const DatasetManifest truth = load_dataset_csv(args.dataset_csv);
    const ConfusionMatrix cm = confusion(predict(matrix), truth);
    const EvaluationReport report = evaluate(cm);

    std::fputs(format_report(report).c_str(), stdout);
    if (!args.output_prefix.empty()) {
        const fs::path metrics_path = args.output_prefix + "metrics.csv";
        const fs::path recalls_path = args.output_prefix + "recalls.csv";
        csv::write_text_file(metrics_path, serialize_metrics(report));
        csv::write_text_file(recalls_path, serialize_recalls(report));
        write_run_config(metrics_path, {{"command", "evaluate"},
                                        {"predictions", args.prediction_csv},
                                        {"dataset", args.dataset_csv},
                                        {"output_prefix", args.output_prefix}});
    }
}

struct BaselineTrainArgs {
    std::string dataset_csv;
    std::string images_dir;
    std::string output;
    int bins = 8;
    double temperature = 0.05;
    int workers = 1;
};

void run_baseline_train(const BaselineTrainArgs& args) {
    DatasetManifest manifest = load_dataset_csv(args.dataset_csv);
    resolve_manifest_paths(manifest, args.images_dir);
    const CentroidModel model = train_centroids(
        manifest, args.images_dir, args.bins, args.temperature, args.workers);
    csv::write_text_file(args.output, serialize_model(model));
    write_run_config(args.output,
                     {{"command", "baseline train"},
                      {"dataset", args.dataset_csv},
                      {"images_dir", args.images_dir},
                      {"bins", std::to_string(args.bins)},
                      {"temperature", csv::format_double(args.temperature)},
                      {"workers", std::to_string(args.workers)},
                      {"output", args.output}});
    std::printf("baseline train: wrote model to %s\n", args.output.c_str());
}

struct BaselinePredictArgs {
    std::string model_csv;
    std::string dataset_csv;
    std::string images_dir;
    std::string output;
};

void run_baseline_predict(const BaselinePredictArgs& args) {
    const CentroidModel model = parse_model(csv::read_text_file(args.model_csv));
    DatasetManifest manifest = load_dataset_csv(args.dataset_csv);
    resolve_manifest_paths(manifest, args.images_dir);

    ProbabilityMatrix matrix;
    matrix.rows.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries) {
        const ImageBuffer img = load_image(fs::path(args.images_dir) / entry.path);
        matrix.rows.push_back({entry.image_id, predict_baseline(model, img)});
    }
    csv::write_text_file(args.output, serialize_probabilities(matrix));
    write_run_config(args.output, {{"command", "baseline predict"},
                                   {"model", args.model_csv},
                                   {"dataset", args.dataset_csv},
                                   {"images_dir", args.images_dir},
                                   {"output", args.output}});
    std::printf("baseline predict: wrote %zu rows to %s\n", matrix.rows.size(),
                args.output.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dermoscopy dataset balancing, augmentation and ensemble "
                 "evaluation"};
    app.require_subcommand(1);
    int exit_code = 0;

    // stats
    auto* stats = app.add_subcommand("stats", "Per-class image counts");
    auto stats_args = std::make_shared<StatsArgs>();
    stats->add_option("dataset_csv", stats_args->dataset_csv,
                      "Ground-truth or manifest CSV")
        ->required();
    stats->add_option("--emit-manifest", stats_args->emit_manifest,
                      "Write the canonical manifest CSV here");
    stats->add_option("--images-dir", stats_args->images_dir,
                      "Resolve image paths for the emitted manifest");
    stats->callback([stats_args]() { run_stats(*stats_args); });

    // plan
    auto* plan = app.add_subcommand("plan", "Compute a flip/rotation plan");
    auto plan_args = std::make_shared<PlanArgs>();
    plan->add_option("dataset_csv", plan_args->dataset_csv,
                     "Ground-truth or manifest CSV")
        ->required();
    plan->add_option("--factors", plan_args->factors,
                     "7 rotation factors, canonical class order "
                     "MEL,NV,BCC,AKIEC,BKL,DF,VASC");
    plan->add_option("--target", plan_args->target,
                     "Per-class output target: a count or 'largest-class'");
    plan->add_flag("--flip,!--no-flip", plan_args->flip,
                   "Double each class by horizontal flipping (default on)");
    plan->add_option("-o,--output", plan_args->output, "Plan CSV path");
    plan->callback([plan_args]() { run_plan(*plan_args); });

    // augment
    auto* augment = app.add_subcommand("augment", "Execute a plan over a dataset");
    auto augment_args = std::make_shared<AugmentArgs>();
    augment->add_option("plan_csv", augment_args->plan_csv, "Plan CSV")->required();
    augment
        ->add_option("dataset_csv", augment_args->dataset_csv,
                     "Ground-truth or manifest CSV")
        ->required();
    augment->add_option("--images-dir", augment_args->images_dir,
                        "Directory with the source images")
        ->required();
    augment->add_option("--out-dir", augment_args->out_dir,
                        "Directory for the produced PNGs")
        ->required();
    augment->add_option("--workers", augment_args->workers, "Worker threads")
        ->check(CLI::PositiveNumber);
    augment->add_flag("--normalize,!--no-normalize", augment_args->normalize,
                      "Apply max-RGB colour normalization (default on)");
    augment->add_flag("--normalize-first", augment_args->normalize_first,
                      "Normalize before flip/rotation instead of after");
    augment->add_flag("--keep-going", augment_args->keep_going,
                      "Skip failing items instead of aborting");
    augment->callback(
        [augment_args, &exit_code]() { exit_code = run_augment(*augment_args); });

    // normalize
    auto* normalize =
        app.add_subcommand("normalize", "Standalone max-RGB pass over a directory");
    auto normalize_args = std::make_shared<NormalizeArgs>();
    normalize->add_option("--in-dir", normalize_args->in_dir, "Input directory")
        ->required();
    normalize->add_option("--out-dir", normalize_args->out_dir, "Output directory")
        ->required();
    normalize->add_option("--workers", normalize_args->workers, "Worker threads")
        ->check(CLI::PositiveNumber);
    normalize->callback([normalize_args]() { run_normalize(*normalize_args); });

    // fuse
    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse prediction CSVs");
    auto fuse_args = std::make_shared<FuseArgs>();
    fuse_cmd
        ->add_option("predictions", fuse_args->prediction_csvs,
                     "Prediction CSVs (one per model)")
        ->required()
        ->expected(-1);
    fuse_cmd->add_option("--weights", fuse_args->weights,
                         "Comma-separated per-model weights (default 0.5 each)");
    fuse_cmd->add_flag("--vote", fuse_args->vote,
                       "Decision-level voting instead of probability averaging");
    fuse_cmd->add_option("-o,--output", fuse_args->output, "Fused CSV path")
        ->required();
    fuse_cmd->callback([fuse_args]() { run_fuse(*fuse_args); });

    // evaluate
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "Score predictions against ground truth");
    auto evaluate_args = std::make_shared<EvaluateArgs>();
    evaluate_cmd
        ->add_option("prediction_csv", evaluate_args->prediction_csv,
                     "Prediction CSV")
        ->required();
    evaluate_cmd
        ->add_option("dataset_csv", evaluate_args->dataset_csv,
                     "Ground-truth or manifest CSV")
        ->required();
    evaluate_cmd->add_option("-o,--output-prefix", evaluate_args->output_prefix,
                             "Prefix for metrics.csv and recalls.csv");
    evaluate_cmd->callback([evaluate_args]() { run_evaluate(*evaluate_args); });

    // baseline train/predict
    auto* baseline = app.add_subcommand("baseline", "Colour-histogram classifier");
    baseline->require_subcommand(1);

    auto* train = baseline->add_subcommand("train", "Train centroids");
    auto train_args = std::make_shared<BaselineTrainArgs>();
    train
        ->add_option("dataset_csv", train_args->dataset_csv,
                     "Ground-truth or manifest CSV")
        ->required();
    train->add_option("--images-dir", train_args->images_dir, "Image directory")
        ->required();
    train->add_option("-o,--output", train_args->output, "Model CSV path")
        ->required();
    train->add_option("--bins", train_args->bins, "Histogram bins per channel")
        ->check(CLI::Range(2, 256));
    train->add_option("--temperature", train_args->temperature,
                      "Softmax temperature");
    train->add_option("--workers", train_args->workers, "Worker threads")
        ->check(CLI::PositiveNumber);
    train->callback([train_args]() { run_baseline_train(*train_args); });

    auto* predict_cmd = baseline->add_subcommand("predict", "Predict a dataset");
    auto predict_args = std::make_shared<BaselinePredictArgs>();
    predict_cmd->add_option("model_csv", predict_args->model_csv, "Model CSV")
        ->required();
    predict_cmd
        ->add_option("dataset_csv", predict_args->dataset_csv,
                     "Ground-truth or manifest CSV")
        ->required();
    predict_cmd
        ->add_option("--images-dir", predict_args->images_dir, "Image directory")
        ->required();
    predict_cmd->add_option("-o,--output", predict_args->output,
                            "Prediction CSV path")
        ->required();
    predict_cmd->callback(
        [predict_args]() { run_baseline_predict(*predict_args); });

    try {
        app.parse(argc, argv);
        return exit_code;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
