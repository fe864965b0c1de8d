#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "promptseg/eval.hpp"
#include "promptseg/fsio.hpp"
#include "promptseg/image.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

using namespace promptseg;
using testsupport::RunResult;
using testsupport::TempDir;
using testsupport::run_cli;

namespace {

std::string manifest_for_duplicates(const TempDir& dir, int side, int n_train, int n_test,
                                    std::uint32_t seed, int margin) {
    const auto set = testsupport::make_duplicate_set(side, n_train, n_test, seed, margin);
    return testsupport::write_dataset(set, dir.path).string();
}

std::string manifest_for_benchmark(const TempDir& dir, int side, int n_train, int n_test,
                                   std::uint32_t seed) {
    const auto set = testsupport::make_benchmark_set(side, n_train, n_test, 0.05, seed);
    return testsupport::write_dataset(set, dir.path).string();
}

std::size_t count_lines_with(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find(needle) != std::string::npos) ++count;
    }
    return count;
}

} // namespace

TEST_CASE("no or unknown subcommand is a usage error") {
    CHECK(run_cli({}).exit_code == 2);
    CHECK(run_cli({"frobnicate"}).exit_code == 2);
    CHECK(run_cli({"sweep"}).exit_code == 2); // --manifest missing
    CHECK(run_cli({"--help"}).exit_code == 0);
}

TEST_CASE("validate: healthy dataset") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 12, 2, 1, 7, 0);
    const RunResult r = run_cli({"validate", "--manifest", manifest});
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("train: 2, test: 1") != std::string::npos);
    CHECK(r.output.find("image dimensions 12x12: 3") != std::string::npos);
    CHECK(r.output.find("\nok") != std::string::npos);
}

TEST_CASE("validate: problems are listed and exit code is 1") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 12, 2, 1, 9, 0);
    std::filesystem::remove(dir.path / "masks" / "train_00.png");
    const RunResult r = run_cli({"validate", "--manifest", manifest});
    CHECK(r.exit_code == 1);
    CHECK(count_lines_with(r.output, "problem:") >= 1);
    CHECK(r.output.find("validation failed") != std::string::npos);
    CHECK(r.output.find("train_00") != std::string::npos);
}

TEST_CASE("validate: unparseable manifest is a usage-level failure") {
    TempDir dir;
    const auto path = dir.path / "broken.json";
    write_file_atomic(path, std::string("{\"version\": "));
    const RunResult r = run_cli({"validate", "--manifest", path.string()});
    CHECK(r.exit_code == 2);

    const RunResult missing = run_cli({"validate", "--manifest", (dir.path / "nope.json").string()});
    CHECK(missing.exit_code == 1);
}

TEST_CASE("retrieve: ranked ids with distances; the duplicate ranks first at zero") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 16, 3, 1, 21, 0);
    const RunResult r = run_cli({"retrieve", "--manifest", manifest, "--test-id", "test_00",
                                 "--k", "2", "--metric", "frobenius", "--target-side", "16"});
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.output);
    std::string first_line;
    REQUIRE(std::getline(in, first_line));
    CHECK(first_line == "train_00 0.000000");
    std::string second_line;
    REQUIRE(std::getline(in, second_line));
    CHECK(second_line.find("train_") == 0);
}

TEST_CASE("retrieve: bad arguments") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 16, 3, 1, 23, 0);
    CHECK(run_cli({"retrieve", "--manifest", manifest, "--test-id", "ghost", "--k", "1",
                   "--target-side", "16"})
              .exit_code == 1);
    CHECK(run_cli({"retrieve", "--manifest", manifest, "--test-id", "test_00", "--k", "0",
                   "--target-side", "16"})
              .exit_code == 2);
    CHECK(run_cli({"retrieve", "--manifest", manifest, "--test-id", "test_00", "--k", "9",
                   "--target-side", "16"})
              .exit_code == 1);
    CHECK(run_cli({"retrieve", "--manifest", manifest, "--test-id", "test_00", "--k", "1",
                   "--metric", "hamming", "--target-side", "16"})
              .exit_code == 2);
}

TEST_CASE("retrieve: canvas dump has prompt geometry") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 16, 3, 1, 25, 0);
    const auto canvas_path = dir.path / "canvas.png";
    const RunResult r = run_cli({"retrieve", "--manifest", manifest, "--test-id", "test_00",
                                 "--k", "2", "--target-side", "16", "--dump-canvas",
                                 canvas_path.string()});
    REQUIRE(r.exit_code == 0);
    REQUIRE(std::filesystem::exists(canvas_path));
    const RasterImage canvas = decode_image(read_file(canvas_path));
    CHECK(canvas.width == 32);
    CHECK(canvas.height == 48); // (k + 1) rows
}

TEST_CASE("predict: exact-recall conditions reproduce the stored mask byte for byte") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 32, 3, 1, 27, 4);
    const auto out_path = dir.path / "nested" / "deeper" / "out.png";
    const RunResult r = run_cli({"predict", "--manifest", manifest, "--test-id", "test_00",
                                 "--k", "1", "--target-side", "32", "--stride", "1",
                                 "--out", out_path.string()});
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("mask written to") != std::string::npos);
    REQUIRE(std::filesystem::exists(out_path));
    // test_00 duplicates train_00, so its mask must come back exactly
    CHECK(read_file(out_path) == read_file(dir.path / "masks" / "train_00.png"));
}

TEST_CASE("predict: side dumps decode to canvas and soft-mask shapes") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 16, 2, 1, 29, 0);
    const auto out_path = dir.path / "mask.png";
    const auto soft_path = dir.path / "soft.png";
    const auto canvas_path = dir.path / "canvas.png";
    const RunResult r = run_cli({"predict", "--manifest", manifest, "--test-id", "test_00",
                                 "--k", "2", "--target-side", "16",
                                 "--out", out_path.string(), "--dump-soft", soft_path.string(),
                                 "--dump-canvas", canvas_path.string()});
    REQUIRE(r.exit_code == 0);
    const RasterImage soft = decode_image(read_file(soft_path));
    CHECK(soft.width == 16);
    CHECK(soft.height == 16);
    const RasterImage canvas = decode_image(read_file(canvas_path));
    CHECK(canvas.width == 32);
    CHECK(canvas.height == 48);
}

TEST_CASE("predict: unreachable remote backend exits 4 and writes nothing") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 16, 2, 1, 31, 0);
    const auto out_path = dir.path / "never.png";
    const RunResult r = run_cli({"predict", "--manifest", manifest, "--test-id", "test_00",
                                 "--k", "1", "--target-side", "16", "--backend", "remote",
                                 "--endpoint", "http://127.0.0.1:9", "--timeout-secs", "1",
                                 "--out", out_path.string()});
    CHECK(r.exit_code == 4);
    CHECK_FALSE(std::filesystem::exists(out_path));
}

TEST_CASE("predict: remote backend requires an endpoint") {
    TempDir dir;
    const std::string manifest = manifest_for_duplicates(dir, 16, 2, 1, 33, 0);
    const RunResult r = run_cli({"predict", "--manifest", manifest, "--test-id", "test_00",
                                 "--k", "1", "--target-side", "16", "--backend", "remote",
                                 "--out", (dir.path / "x.png").string()});
    CHECK(r.exit_code == 2);
}

TEST_CASE("sweep: full grid, deterministic reruns, warm cache") {
    TempDir dir;
    TempDir cache;
    const std::string manifest = manifest_for_benchmark(dir, 16, 4, 2, 41);
    const std::vector<std::string> base = {
        "sweep", "--manifest", manifest, "--k-min", "1", "--k-max", "3",
        "--target-side", "16", "--cache-dir", cache.path.string()};

    auto run_into = [&](const std::string& out_file) {
        std::vector<std::string> args = base;
        args.insert(args.end(), {"--out", out_file});
        return run_cli(args);
    };

    const auto out1 = (dir.path / "r1.csv").string();
    const RunResult r1 = run_into(out1);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.output.find("report written to") != std::string::npos);
    CHECK(count_lines_with(r1.output, "cell k=") == 6); // 3 k x 2 metrics

    const std::string csv = read_text_file(out1);
    CHECK(csv.rfind("k,metric,miou,n_images,miou_pct\n", 0) == 0);
    CHECK(count_lines_with(csv, "frobenius") == 3);
    CHECK(count_lines_with(csv, "ssim") == 3);

    // two distance-matrix cache files, one per metric, named by 32-hex keys
    std::size_t cache_files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(cache.path)) {
        CHECK(entry.path().extension() == ".csv");
        CHECK(entry.path().stem().string().size() == 32);
        ++cache_files;
    }
    CHECK(cache_files == 2);

    // rerun (warm cache) must produce identical bytes
    const auto out2 = (dir.path / "r2.csv").string();
    REQUIRE(run_into(out2).exit_code == 0);
    CHECK(read_file(out1) == read_file(out2));
}

TEST_CASE("sweep: --out directory derives the report name") {
    TempDir dir;
    TempDir cache;
    const std::string manifest = manifest_for_benchmark(dir, 16, 3, 1, 43);
    const auto reports = dir.path / "reports";
    std::filesystem::create_directories(reports);
    const RunResult r = run_cli({"sweep", "--manifest", manifest, "--k-min", "1", "--k-max", "1",
                                 "--target-side", "16", "--cache-dir", cache.path.string(),
                                 "--out", reports.string()});
    REQUIRE(r.exit_code == 0);
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(reports)) {
        names.push_back(entry.path().filename().string());
    }
    REQUIRE(names.size() == 1);
    CHECK(names[0].rfind("report_", 0) == 0);
    CHECK(names[0].find("_reference_v1.csv") != std::string::npos);
    CHECK(names[0].size() == std::string("report_0123456789abcdef_reference_v1.csv").size());
}

TEST_CASE("sweep: --metric narrows the grid") {
    TempDir dir;
    TempDir cache;
    const std::string manifest = manifest_for_benchmark(dir, 16, 3, 1, 47);
    const auto out = (dir.path / "ssim_only.csv").string();
    const RunResult r = run_cli({"sweep", "--manifest", manifest, "--k-min", "1", "--k-max", "2",
                                 "--metric", "ssim", "--target-side", "16",
                                 "--cache-dir", cache.path.string(), "--out", out});
    REQUIRE(r.exit_code == 0);
    const std::string csv = read_text_file(out);
    CHECK(count_lines_with(csv, "ssim") == 2);
    CHECK(count_lines_with(csv, "frobenius") == 0);
}

TEST_CASE("sweep: json report records remote failures and exits 3") {
    TempDir dir;
    TempDir cache;
    const std::string manifest = manifest_for_benchmark(dir, 16, 3, 1, 53);
    const auto out = (dir.path / "failed.json").string();
    const RunResult r = run_cli({"sweep", "--manifest", manifest, "--k-min", "1", "--k-max", "2",
                                 "--metric", "frobenius", "--target-side", "16",
                                 "--backend", "remote", "--endpoint", "http://127.0.0.1:9",
                                 "--timeout-secs", "1", "--cache-dir", cache.path.string(),
                                 "--format", "json", "--out", out});
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("cell(s) failed") != std::string::npos);
    const SweepReport report = parse_report_json(read_text_file(out));
    CHECK(report.cells.empty());
    REQUIRE(report.failures.size() == 2);
    CHECK(report.failures[0].k == 1);
    CHECK(report.failures[1].k == 2);
}

TEST_CASE("sweep: k range and pool-size validation") {
    TempDir dir;
    TempDir cache;
    const std::string manifest = manifest_for_benchmark(dir, 16, 3, 1, 59);
    CHECK(run_cli({"sweep", "--manifest", manifest, "--k-min", "3", "--k-max", "2",
                   "--target-side", "16", "--cache-dir", cache.path.string()})
              .exit_code == 2);
    // k-max beyond the train pool fails the sweep before any cell runs
    const auto out = (dir.path / "never.csv").string();
    CHECK(run_cli({"sweep", "--manifest", manifest, "--k-min", "1", "--k-max", "10",
                   "--target-side", "16", "--cache-dir", cache.path.string(), "--out", out})
              .exit_code == 1);
    CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("sweep: PROMPTSEG_CACHE_DIR supplies the cache location") {
    TempDir dir;
    TempDir cache;
    const std::string manifest = manifest_for_benchmark(dir, 16, 3, 1, 61);
    const std::string cmd = "env PROMPTSEG_CACHE_DIR=" + testsupport::shell_quote(cache.path.string()) +
                            " " + testsupport::shell_quote(testsupport::cli_binary()) +
                            " sweep --manifest " + testsupport::shell_quote(manifest) +
                            " --k-min 1 --k-max 1 --metric frobenius --target-side 16 --out " +
                            testsupport::shell_quote((dir.path / "env.csv").string());
    const RunResult r = testsupport::run_command(cmd);
    REQUIRE(r.exit_code == 0);
    std::size_t cache_files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(cache.path)) {
        (void)entry;
        ++cache_files;
    }
    CHECK(cache_files == 1);
}
