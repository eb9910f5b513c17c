#include <doctest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <sstream>
#include <string>

#include "dermprep/balancer.hpp"
#include "dermprep/codec.hpp"
#include "dermprep/csv.hpp"
#include "dermprep/evalkit.hpp"
#include "dermprep/imgops.hpp"
#include "dermprep/manifest.hpp"
#include "testutil.hpp"

using namespace dermprep;
using testutil::run_cli;

namespace {

const char* kGtHeader = "image,MEL,NV,BCC,AKIEC,BKL,DF,VASC\n";

std::string one_hot_row(const std::string& id, ClassLabel label) {
    std::string row = id;
    for (int c = 0; c < kClassCount; ++c) {
        row += (c == static_cast<int>(label)) ? ",1.0" : ",0.0";
    }
    return row + "\n";
}

// Small dataset: `per_class` images for each of the 7 classes, each a
// distinct random PNG. Returns the ground-truth CSV path.
std::filesystem::path make_dataset(const testutil::TempDir& dir, int per_class,
                                   int size = 16) {
    std::string gt = kGtHeader;
    std::uint32_t seed = 0;
    for (const ClassLabel c : all_classes()) {
        for (int i = 0; i < per_class; ++i) {
            char id[32];
            std::snprintf(id, sizeof(id), "IMG_%s_%03d",
                          std::string(to_string(c)).c_str(), i);
            save_png(testutil::random_image(size, size, seed++),
                     dir / (std::string(id) + ".png"));
            gt += one_hot_row(id, c);
        }
    }
    const auto path = dir / "gt.csv";
    testutil::write_file(path, gt);
    return path;
}

}  // namespace

TEST_CASE("stats prints per-class counts and the total") {
    testutil::TempDir dir;
    std::string gt = kGtHeader;
    gt += one_hot_row("a", ClassLabel::NV);
    gt += one_hot_row("b", ClassLabel::NV);
    gt += one_hot_row("c", ClassLabel::DF);
    testutil::write_file(dir / "gt.csv", gt);

    const auto result = run_cli("stats " + (dir / "gt.csv").string());
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("NV") != std::string::npos);
    CHECK(result.output.find("total") != std::string::npos);
    CHECK(result.output.find("3") != std::string::npos);
}

TEST_CASE("stats on a header-only ground truth prints zeros") {
    testutil::TempDir dir;
    testutil::write_file(dir / "empty.csv", kGtHeader);
    const auto r = run_cli("stats " + (dir / "empty.csv").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("total") != std::string::npos);
    CHECK(r.output.find("1") == std::string::npos);  // every count is 0
}

TEST_CASE("stats exit codes for bad inputs") {
    testutil::TempDir dir;
    testutil::write_file(dir / "bad.csv",
                         std::string(kGtHeader) + "x,1.0,1.0,0,0,0,0,0\n");
    const auto data_err = run_cli("stats " + (dir / "bad.csv").string());
    CHECK(data_err.exit_code == 2);
    CHECK(data_err.output.find("row 2") != std::string::npos);

    const auto io_err = run_cli("stats " + (dir / "missing.csv").string());
    CHECK(io_err.exit_code == 3);

    const auto usage_err = run_cli("stats");
    CHECK(usage_err.exit_code == 1);
}

TEST_CASE("plan rejects malformed factor lists with a usage error") {
    testutil::TempDir dir;
    testutil::write_file(dir / "gt.csv",
                         std::string(kGtHeader) + one_hot_row("a", ClassLabel::MEL));
    const auto r = run_cli("plan " + (dir / "gt.csv").string() +
                           " --factors 1,2,3,4,5,6");
    CHECK(r.exit_code == 1);

    const auto both = run_cli("plan " + (dir / "gt.csv").string() +
                              " --factors 1,1,1,1,1,1,1 --target 5");
    CHECK(both.exit_code == 1);

    const auto neither = run_cli("plan " + (dir / "gt.csv").string());
    CHECK(neither.exit_code == 1);
}

TEST_CASE("plan writes a parseable plan CSV and a run-config echo") {
    testutil::TempDir dir;
    const auto gt = make_dataset(dir, 2, 8);
    const auto plan_path = dir / "plan.csv";
    const auto r = run_cli("plan " + gt.string() + " --factors 2,1,2,1,2,1,2 -o " +
                           plan_path.string());
    REQUIRE(r.exit_code == 0);

    const AugmentationPlan plan = parse_plan(testutil::read_file(plan_path));
    CHECK(plan.for_class(ClassLabel::MEL).rotation_factor == 2);
    CHECK(plan.for_class(ClassLabel::MEL).expected_output == 8);  // 2*2*2
    CHECK(std::filesystem::exists(dir / "plan.csv.run-config"));
    const std::string echo = testutil::read_file(dir / "plan.csv.run-config");
    CHECK(echo.find("command=plan") != std::string::npos);
    CHECK(echo.find("factors=2,1,2,1,2,1,2") != std::string::npos);
}

TEST_CASE("plan --target largest-class balances toward the biggest class") {
    testutil::TempDir dir;
    std::string gt = kGtHeader;
    for (int i = 0; i < 6; ++i) {
        gt += one_hot_row("nv" + std::to_string(i), ClassLabel::NV);
    }
    gt += one_hot_row("mel0", ClassLabel::MEL);
    gt += one_hot_row("mel1", ClassLabel::MEL);
    testutil::write_file(dir / "gt.csv", gt);

    const auto r = run_cli("plan " + (dir / "gt.csv").string() +
                           " --target largest-class -o " +
                           (dir / "plan.csv").string());
    REQUIRE(r.exit_code == 0);
    const AugmentationPlan plan = parse_plan(testutil::read_file(dir / "plan.csv"));
    // After flip: MEL 4, NV 12; factor for MEL = round(12/4) = 3.
    CHECK(plan.for_class(ClassLabel::MEL).rotation_factor == 3);
    CHECK(plan.for_class(ClassLabel::NV).rotation_factor == 1);
    CHECK(plan.for_class(ClassLabel::MEL).expected_output == 12);
    CHECK(plan.for_class(ClassLabel::BCC).rotation_factor == 0);
}

TEST_CASE("augment executes a plan and accounts for every file") {
    testutil::TempDir dir;
    const auto gt = make_dataset(dir, 1, 12);
    const auto plan_path = dir / "plan.csv";
    REQUIRE(run_cli("plan " + gt.string() + " --factors 3,3,3,3,3,3,3 -o " +
                    plan_path.string())
                .exit_code == 0);

    const auto out_dir = dir / "out";
    const auto r = run_cli("augment " + plan_path.string() + " " + gt.string() +
                           " --images-dir " + dir.path().string() +
                           " --out-dir " + out_dir.string() + " --workers 2");
    REQUIRE(r.exit_code == 0);

    // 7 sources * 2 (flip) * 3 (factor) = 42 PNGs + the output manifest.
    std::size_t pngs = 0;
    for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
        if (entry.path().extension() == ".png") ++pngs;
    }
    CHECK(pngs == 42);
    CHECK(std::filesystem::exists(out_dir / "output-manifest.csv"));
    const std::string manifest_csv =
        testutil::read_file(out_dir / "output-manifest.csv");
    CHECK(std::count(manifest_csv.begin(), manifest_csv.end(), '\n') == 43);
    // run-config lives beside the output dir, not inside it.
    CHECK(std::filesystem::exists(dir / "out.run-config"));

    // Per-class file counts equal the plan's expected output exactly.
    const AugmentationPlan plan = parse_plan(testutil::read_file(plan_path));
    std::array<std::int64_t, kClassCount> produced{};
    std::istringstream rows(manifest_csv);
    std::string line;
    std::getline(rows, line);  // header
    while (std::getline(rows, line)) {
        // output_name,source_id,label,operation
        const auto fields = csv::split_fields(line);
        REQUIRE(fields.size() == 4);
        const auto label = parse_label(fields[2]);
        REQUIRE(label.has_value());
        ++produced[static_cast<std::size_t>(*label)];
    }
    for (const ClassLabel c : all_classes()) {
        CHECK(produced[static_cast<std::size_t>(c)] ==
              plan.for_class(c).expected_output);
    }
}

TEST_CASE("augment --keep-going skips bad sources but exits nonzero") {
    testutil::TempDir dir;
    const auto gt = make_dataset(dir, 1, 8);
    std::string gt_text = testutil::read_file(gt);
    gt_text += one_hot_row("GHOST", ClassLabel::MEL);
    testutil::write_file(gt, gt_text);

    const auto plan_path = dir / "plan.csv";
    REQUIRE(run_cli("plan " + gt.string() + " --factors 1,1,1,1,1,1,1 -o " +
                    plan_path.string())
                .exit_code == 0);
    const auto r = run_cli("augment " + plan_path.string() + " " + gt.string() +
                           " --images-dir " + dir.path().string() +
                           " --out-dir " + (dir / "out").string() +
                           " --keep-going");
    CHECK(r.exit_code == 3);
    // The 14 good items (7 sources * copy+flip) were still produced.
    std::size_t pngs = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(dir / "out")) {
        if (entry.path().extension() == ".png") ++pngs;
    }
    CHECK(pngs == 14);
}

TEST_CASE("stats --emit-manifest writes the canonical manifest") {
    testutil::TempDir dir;
    const auto gt = make_dataset(dir, 1, 8);
    const auto out = dir / "manifest.csv";
    const auto r = run_cli("stats " + gt.string() + " --emit-manifest " +
                           out.string() + " --images-dir " + dir.path().string());
    REQUIRE(r.exit_code == 0);
    const DatasetManifest m = parse_manifest(testutil::read_file(out));
    CHECK(m.entries.size() == 7);
    for (const auto& entry : m.entries) {
        CHECK(entry.path == entry.image_id + ".png");
    }
    // The emitted manifest is itself a valid augment/train input.
    const auto r2 = run_cli("stats " + out.string());
    CHECK(r2.exit_code == 0);
}

TEST_CASE("augment is deterministic across workers and reruns") {
    testutil::TempDir dir;
    const auto gt = make_dataset(dir, 1, 10);
    const auto plan_path = dir / "plan.csv";
    REQUIRE(run_cli("plan " + gt.string() + " --factors 2,2,2,2,2,2,2 -o " +
                    plan_path.string())
                .exit_code == 0);

    auto augment = [&](const std::string& out, int workers) {
        const auto r = run_cli("augment " + plan_path.string() + " " + gt.string() +
                               " --images-dir " + dir.path().string() +
                               " --out-dir " + (dir / out).string() +
                               " --workers " + std::to_string(workers));
        REQUIRE(r.exit_code == 0);
        return testutil::dir_digest(dir / out);
    };

    const auto d1 = augment("out1", 1);
    const auto d4 = augment("out4", 4);
    CHECK(d1 == d4);

    // Re-running over the same directory reproduces identical bytes.
    const auto d1_again = augment("out1", 3);
    CHECK(d1_again == d1);
}

TEST_CASE("augment fails with exit 3 when a source image is missing") {
    testutil::TempDir dir;
    const auto gt = make_dataset(dir, 1, 8);
    std::string gt_text = testutil::read_file(gt);
    gt_text += one_hot_row("GHOST", ClassLabel::MEL);
    testutil::write_file(gt, gt_text);

    const auto plan_path = dir / "plan.csv";
    REQUIRE(run_cli("plan " + gt.string() + " --factors 1,1,1,1,1,1,1 -o " +
                    plan_path.string())
                .exit_code == 0);
    const auto r = run_cli("augment " + plan_path.string() + " " + gt.string() +
                           " --images-dir " + dir.path().string() +
                           " --out-dir " + (dir / "out").string());
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("GHOST") != std::string::npos);
}

TEST_CASE("normalize runs a standalone max-RGB pass") {
    testutil::TempDir dir;
    const auto in_dir = dir / "in";
    std::filesystem::create_directories(in_dir);
    const ImageBuffer img = ImageBuffer::filled(6, 6, 100, 150, 200);
    save_png(img, in_dir / "x.png");

    const auto r = run_cli("normalize --in-dir " + in_dir.string() +
                           " --out-dir " + (dir / "norm").string());
    REQUIRE(r.exit_code == 0);
    CHECK(load_image(dir / "norm" / "x.png") ==
          ImageBuffer::filled(6, 6, 255, 255, 255));
}

TEST_CASE("fuse averages prediction files with the default 0.5 weights") {
    testutil::TempDir dir;
    testutil::write_file(dir / "p1.csv", std::string(kGtHeader) +
                                             "a,0.6,0.4,0,0,0,0,0\n");
    testutil::write_file(dir / "p2.csv", std::string(kGtHeader) +
                                             "a,0.2,0.8,0,0,0,0,0\n");
    const auto r = run_cli("fuse " + (dir / "p1.csv").string() + " " +
                           (dir / "p2.csv").string() + " -o " +
                           (dir / "fused.csv").string());
    REQUIRE(r.exit_code == 0);
    const ProbabilityMatrix fused =
        load_probabilities(testutil::read_file(dir / "fused.csv"));
    CHECK(fused.rows[0].p[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(fused.rows[0].p[1] == doctest::Approx(0.6).epsilon(1e-12));

    // Mismatched id sets are a data error.
    testutil::write_file(dir / "p3.csv", std::string(kGtHeader) +
                                             "zz,1,0,0,0,0,0,0\n");
    const auto bad = run_cli("fuse " + (dir / "p1.csv").string() + " " +
                             (dir / "p3.csv").string() + " -o " +
                             (dir / "f2.csv").string());
    CHECK(bad.exit_code == 2);

    // Decision-level voting: both models vote for different classes.
    const auto vote = run_cli("fuse " + (dir / "p1.csv").string() + " " +
                              (dir / "p2.csv").string() + " --vote -o " +
                              (dir / "voted.csv").string());
    REQUIRE(vote.exit_code == 0);
    const ProbabilityMatrix voted =
        load_probabilities(testutil::read_file(dir / "voted.csv"));
    CHECK(voted.rows[0].p[0] == 0.5);
    CHECK(voted.rows[0].p[1] == 0.5);
}

TEST_CASE("evaluate reports balanced accuracy and writes report CSVs") {
    testutil::TempDir dir;
    // Two MEL images, one NV; predictions get one MEL wrong.
    std::string gt = kGtHeader;
    gt += one_hot_row("a", ClassLabel::MEL);
    gt += one_hot_row("b", ClassLabel::MEL);
    gt += one_hot_row("c", ClassLabel::NV);
    testutil::write_file(dir / "gt.csv", gt);
    testutil::write_file(dir / "pred.csv", std::string(kGtHeader) +
                                               "a,0.9,0.1,0,0,0,0,0\n"
                                               "b,0.2,0.8,0,0,0,0,0\n"
                                               "c,0.1,0.9,0,0,0,0,0\n");

    const auto r = run_cli("evaluate " + (dir / "pred.csv").string() + " " +
                           (dir / "gt.csv").string() + " -o " +
                           (dir / "report-").string());
    REQUIRE(r.exit_code == 0);
    // balanced accuracy = (0.5 + 1.0) / 2 = 0.75
    CHECK(r.output.find("0.75") != std::string::npos);
    const std::string metrics = testutil::read_file(dir / "report-metrics.csv");
    CHECK(metrics.find("balanced_accuracy,0.75\n") != std::string::npos);
    const std::string recalls = testutil::read_file(dir / "report-recalls.csv");
    CHECK(recalls.find("MEL,0.5\n") != std::string::npos);
    CHECK(recalls.find("NV,1\n") != std::string::npos);
}

TEST_CASE("baseline train and predict round trip through files") {
    testutil::TempDir dir;
    const auto gt = make_dataset(dir, 2, 10);
    const auto model_path = dir / "model.csv";
    const auto train = run_cli("baseline train " + gt.string() + " --images-dir " +
                               dir.path().string() + " --bins 4 -o " +
                               model_path.string());
    REQUIRE(train.exit_code == 0);
    REQUIRE(std::filesystem::exists(model_path));

    const auto pred_path = dir / "pred.csv";
    const auto predict = run_cli("baseline predict " + model_path.string() + " " +
                                 gt.string() + " --images-dir " +
                                 dir.path().string() + " -o " +
                                 pred_path.string());
    REQUIRE(predict.exit_code == 0);
    const ProbabilityMatrix m =
        load_probabilities(testutil::read_file(pred_path));
    CHECK(m.rows.size() == 14);
}

TEST_CASE("unknown subcommands and flags are usage errors") {
    CHECK(run_cli("frobnicate").exit_code == 1);
    CHECK(run_cli("stats --bogus-flag x.csv").exit_code == 1);
    CHECK(run_cli("").exit_code == 1);
}
