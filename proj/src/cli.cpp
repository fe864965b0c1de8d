#include "promptseg/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "promptseg/backend.hpp"
#include "promptseg/dataset.hpp"
#include "promptseg/errors.hpp"
#include "promptseg/eval.hpp"
#include "promptseg/fsio.hpp"
#include "promptseg/image.hpp"
#include "promptseg/prompt.hpp"
#include "promptseg/similarity.hpp"

namespace promptseg {

namespace fs = std::filesystem;

namespace {

// flags shared by the pipeline subcommands
struct CommonOpts {
    std::string manifest;
    std::size_t k = 2;
    std::string metric = "ssim";
    std::string backend = "reference";
    std::string endpoint;
    double timeout_secs = 60.0;
    int patch_side = 7;
    int stride = 2;
    double threshold = 0.5;
    int target_side = 448;
    std::string cache_dir;
    int parallelism = 0;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_backend) {
    cmd->add_option("--manifest", o.manifest, "Dataset manifest JSON path")->required();
    cmd->add_option("--metric", o.metric, "Retrieval distance metric")
        ->check(CLI::IsMember({"frobenius", "ssim"}));
    cmd->add_option("--target-side", o.target_side, "Square side images are resized to")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--cache-dir", o.cache_dir, "Distance-matrix cache directory")
        ->envname("PROMPTSEG_CACHE_DIR");
    cmd->add_option("--parallelism", o.parallelism, "Worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
    if (with_backend) {
        cmd->add_option("--backend", o.backend, "Segmentation backend")
            ->check(CLI::IsMember({"reference", "remote"}));
        cmd->add_option("--endpoint", o.endpoint, "Remote backend base URL (e.g. http://host:port)");
        cmd->add_option("--timeout-secs", o.timeout_secs, "Remote request timeout")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--patch-side", o.patch_side, "Reference backend patch side (odd)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--stride", o.stride, "Reference backend grid stride")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--threshold", o.threshold, "Soft-mask binarization threshold")
            ->check(CLI::Range(0.0, 1.0));
    }
}

BackendSpec backend_from_opts(const CommonOpts& o) {
    BackendSpec spec;
    if (o.backend == "remote") {
        spec.kind = BackendKind::remote;
        if (o.endpoint.empty()) {
            throw CLI::ValidationError("--endpoint", "required when --backend remote");
        }
        spec.endpoint = o.endpoint;
        spec.timeout_secs = o.timeout_secs;
    } else {
        spec.kind = BackendKind::reference;
        spec.patch.patch_side = o.patch_side;
        spec.patch.stride = o.stride;
    }
    return spec;
}

PreprocessConfig preprocess_from_opts(const CommonOpts& o) {
    PreprocessConfig cfg;
    cfg.target_side = o.target_side;
    return cfg;
}

fs::path effective_cache_dir(const CommonOpts& o) {
    return o.cache_dir.empty() ? fs::path(".promptseg-cache") : fs::path(o.cache_dir);
}

const LabeledExample& find_test(const Dataset& ds, const std::string& test_id) {
    const auto it = std::find_if(ds.test.begin(), ds.test.end(),
                                 [&](const LabeledExample& e) { return e.id == test_id; });
    if (it == ds.test.end()) {
        throw UnknownTestId("no test-split entry with id '" + test_id + "'");
    }
    return *it;
}

std::vector<LabeledExample> exemplars_for(const Dataset& ds, const RetrievalResult& retrieval) {
    std::vector<LabeledExample> out;
    out.reserve(retrieval.neighbors.size());
    for (const auto& n : retrieval.neighbors) {
        const auto it = std::find_if(ds.train.begin(), ds.train.end(),
                                     [&](const LabeledExample& e) { return e.id == n.exemplar_id; });
        out.push_back(*it);
    }
    return out;
}

RetrievalResult retrieve_for(const Dataset& ds, const LabeledExample& test, std::size_t k,
                             Metric metric) {
    std::vector<std::pair<std::string, GrayImage>> pool;
    pool.reserve(ds.train.size());
    for (const auto& e : ds.train) pool.emplace_back(e.id, to_grayscale(e.image));
    return knn_retrieve(test.id, to_grayscale(test.image), pool, k, metric);
}

int cmd_validate(const std::string& manifest_path) {
    using nlohmann::json;
    const std::string text = read_text_file(manifest_path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::fprintf(stderr, "error: manifest %s: %s\n", manifest_path.c_str(), e.what());
        return 2;
    }

    std::vector<std::string> problems;
    std::size_t n_train = 0, n_test = 0;
    std::set<std::string> seen;
    std::map<std::string, std::size_t> image_dims, mask_dims;

    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
        problems.push_back("top level must be an object with an 'entries' array");
    } else {
        const fs::path base = fs::path(manifest_path).parent_path();
        std::size_t index = 0;
        for (const auto& e : doc["entries"]) {
            const std::string label = "entry #" + std::to_string(index);
            ++index;
            if (!e.is_object()) {
                problems.push_back(label + ": not an object");
                continue;
            }
            std::string id;
            if (e.contains("id") && e["id"].is_string()) {
                id = e["id"].get<std::string>();
                if (!seen.insert(id).second) problems.push_back(label + ": duplicate id '" + id + "'");
            } else {
                problems.push_back(label + ": missing string field 'id'");
            }
            std::string split;
            if (e.contains("split") && e["split"].is_string()) {
                split = e["split"].get<std::string>();
                if (split == "train") {
                    ++n_train;
                } else if (split == "test") {
                    ++n_test;
                } else {
                    problems.push_back(label + ": split must be 'train' or 'test', got '" + split + "'");
                }
            } else {
                problems.push_back(label + ": missing string field 'split'");
            }
            for (const char* key : {"image", "mask"}) {
                if (!e.contains(key) || !e[key].is_string()) {
                    problems.push_back(label + ": missing string field '" + key + "'");
                    continue;
                }
                const fs::path p = base / e[key].get<std::string>();
                if (!fs::exists(p)) {
                    problems.push_back(label + " ('" + id + "'): missing file " + p.string());
                    continue;
                }
                try {
                    const RasterImage img = decode_image(read_file(p));
                    const std::string dim =
                        std::to_string(img.width) + "x" + std::to_string(img.height);
                    (key == std::string("image") ? image_dims : mask_dims)[dim]++;
                } catch (const Error& err) {
                    problems.push_back(label + " ('" + id + "'): " + err.what());
                }
            }
        }
    }

    std::printf("train: %zu, test: %zu\n", n_train, n_test);
    for (const auto& [dim, count] : image_dims) {
        std::printf("image dimensions %s: %zu\n", dim.c_str(), count);
    }
    for (const auto& [dim, count] : mask_dims) {
        std::printf("mask dimensions %s: %zu\n", dim.c_str(), count);
    }
    for (const auto& p : problems) std::printf("problem: %s\n", p.c_str());
    if (!problems.empty()) {
        std::printf("validation failed: %zu problem(s)\n", problems.size());
        return 1;
    }
    std::printf("ok\n");
    return 0;
}

int cmd_retrieve(const CommonOpts& o, const std::string& test_id, const std::string& dump_canvas) {
    const Manifest manifest = load_manifest(o.manifest);
    const Dataset ds = load_examples(manifest, preprocess_from_opts(o));
    const LabeledExample& test = find_test(ds, test_id);
    const RetrievalResult r = retrieve_for(ds, test, o.k, metric_from_string(o.metric));
    for (const auto& n : r.neighbors) {
        std::printf("%s %.6f\n", n.exemplar_id.c_str(), n.distance);
    }
    if (!dump_canvas.empty()) {
        const PromptCanvas canvas = build_prompt(exemplars_for(ds, r), test.image);
        write_file_atomic(fs::path(dump_canvas), encode_png(canvas.image));
        std::fprintf(stderr, "canvas written to %s\n", dump_canvas.c_str());
    }
    return 0;
}

int cmd_predict(const CommonOpts& o, const std::string& test_id, const std::string& out_path,
                const std::string& dump_canvas, const std::string& dump_soft) {
    const Manifest manifest = load_manifest(o.manifest);
    const Dataset ds = load_examples(manifest, preprocess_from_opts(o));
    const LabeledExample& test = find_test(ds, test_id);
    const RetrievalResult r = retrieve_for(ds, test, o.k, metric_from_string(o.metric));
    const std::vector<LabeledExample> exemplars = exemplars_for(ds, r);

    const BackendSpec spec = backend_from_opts(o);
    const SoftMask soft = segment(exemplars, test.image, spec);
    const BinaryMask pred = binarize(soft, o.threshold);

    write_file_atomic(fs::path(out_path), encode_png_gray(mask_to_gray(pred)));
    std::printf("mask written to %s\n", out_path.c_str());

    if (!dump_soft.empty()) {
        GrayImage g;
        g.width = soft.width;
        g.height = soft.height;
        g.pixels = soft.values;
        write_file_atomic(fs::path(dump_soft), encode_png_gray(g));
        std::fprintf(stderr, "soft mask written to %s\n", dump_soft.c_str());
    }
    if (!dump_canvas.empty()) {
        const PromptCanvas canvas = build_prompt(exemplars, test.image);
        write_file_atomic(fs::path(dump_canvas), encode_png(canvas.image));
        std::fprintf(stderr, "canvas written to %s\n", dump_canvas.c_str());
    }
    return 0;
}

int cmd_sweep(const CommonOpts& o, std::size_t k_min, std::size_t k_max, const std::string& out_path,
              const std::string& format_tag, bool metric_given) {
    const Manifest manifest = load_manifest(o.manifest);
    const PreprocessConfig preprocess = preprocess_from_opts(o);
    const Dataset ds = load_examples(manifest, preprocess);

    // --metric narrows the grid; the default sweeps the full two-metric grid
    std::vector<Metric> metrics;
    if (metric_given) {
        metrics.push_back(metric_from_string(o.metric));
    } else {
        metrics = {Metric::frobenius, Metric::ssim};
    }

    EvalContext ctx;
    ctx.config.preprocess = preprocess;
    ctx.config.backend = backend_from_opts(o);
    ctx.config.threshold = o.threshold;
    ctx.config.dataset_hash = dataset_digest(manifest, preprocess);
    ctx.cache_dir = effective_cache_dir(o);
    for (const Metric m : metrics) {
        ctx.cache_keys[m] = cache_key(manifest, preprocess, m);
    }
    ctx.parallelism = o.parallelism;

    const KRange range{k_min, k_max};
    const SweepReport report = sweep(
        ds, range, metrics, ctx,
        [](const SweepCell& cell) {
            std::fprintf(stderr, "cell k=%zu metric=%s miou=%.6f (%zu images)\n", cell.k,
                         to_string(cell.metric).c_str(), cell.miou_value, cell.n_images);
        },
        [](const CellFailure& f) {
            std::fprintf(stderr, "cell k=%zu metric=%s FAILED: %s\n", f.k,
                         to_string(f.metric).c_str(), f.error.c_str());
        });

    const ReportFormat format = report_format_from_string(format_tag);
    fs::path out = out_path.empty() ? fs::path(".") : fs::path(out_path);
    if (fs::is_directory(out) || out_path.empty() || out_path.back() == '/') {
        out /= report_basename(report, format);
    }
    write_file_atomic(out, emit_report(report, format));
    std::printf("report written to %s\n", out.string().c_str());

    if (!report.failures.empty()) {
        std::fprintf(stderr, "%zu cell(s) failed\n", report.failures.size());
        return 3;
    }
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return 2;
    if (dynamic_cast<const ConnectError*>(&e)) return 4;
    if (dynamic_cast<const TimeoutError*>(&e)) return 5;
    if (dynamic_cast<const ProtocolError*>(&e)) return 6;
    if (dynamic_cast<const ServerError*>(&e)) return 7;
    if (dynamic_cast<const MissingFile*>(&e) || dynamic_cast<const DuplicateId*>(&e) ||
        dynamic_cast<const UnknownTestId*>(&e) || dynamic_cast<const KTooLarge*>(&e)) {
        return 1;
    }
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    return 3;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Few-shot segmentation prompting toolkit"};
    app.require_subcommand(1);

    std::string validate_manifest;
    CLI::App* validate = app.add_subcommand("validate", "Check a dataset manifest and its files");
    validate->add_option("--manifest", validate_manifest, "Dataset manifest JSON path")->required();

    CommonOpts retrieve_opts;
    std::string retrieve_test_id, retrieve_dump_canvas;
    CLI::App* retrieve = app.add_subcommand("retrieve", "Rank exemplars for one test image");
    add_common_flags(retrieve, retrieve_opts, false);
    retrieve->add_option("--test-id", retrieve_test_id, "Test-split entry to query")->required();
    retrieve->add_option("--k", retrieve_opts.k, "Number of exemplars")->check(CLI::PositiveNumber);
    retrieve->add_option("--dump-canvas", retrieve_dump_canvas, "Write the would-be prompt canvas PNG here");

    CommonOpts predict_opts;
    std::string predict_test_id, predict_out, predict_dump_canvas, predict_dump_soft;
    CLI::App* predict = app.add_subcommand("predict", "Segment one test image");
    add_common_flags(predict, predict_opts, true);
    predict->add_option("--test-id", predict_test_id, "Test-split entry to segment")->required();
    predict->add_option("--k", predict_opts.k, "Number of exemplars")->check(CLI::PositiveNumber);
    predict->add_option("--out", predict_out, "Output mask PNG path")->required();
    predict->add_option("--dump-canvas", predict_dump_canvas, "Write the prompt canvas PNG here");
    predict->add_option("--dump-soft", predict_dump_soft, "Write the soft-mask PNG here");

    CommonOpts sweep_opts;
    std::size_t k_min = 1, k_max = 15;
    std::string sweep_out, sweep_format = "csv";
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Evaluate the full k x metric grid");
    add_common_flags(sweep_cmd, sweep_opts, true);
    sweep_cmd->add_option("--k-min", k_min, "Smallest k")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--k-max", k_max, "Largest k")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep_out, "Report file (or directory for an auto-generated name)");
    sweep_cmd->add_option("--format", sweep_format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2; // --help exits 0; every parse failure is usage
    }

    try {
        if (*validate) return cmd_validate(validate_manifest);
        if (*retrieve) {
            if (retrieve_opts.parallelism > 0) omp_set_num_threads(retrieve_opts.parallelism);
            return cmd_retrieve(retrieve_opts, retrieve_test_id, retrieve_dump_canvas);
        }
        if (*predict) {
            if (predict_opts.parallelism > 0) omp_set_num_threads(predict_opts.parallelism);
            return cmd_predict(predict_opts, predict_test_id, predict_out, predict_dump_canvas,
                               predict_dump_soft);
        }
        if (*sweep_cmd) {
            if (sweep_opts.parallelism > 0) omp_set_num_threads(sweep_opts.parallelism);
            if (k_min > k_max) {
                std::fprintf(stderr, "error: --k-min %zu exceeds --k-max %zu\n", k_min, k_max);
                return 2;
            }
            return cmd_sweep(sweep_opts, k_min, k_max, sweep_out, sweep_format,
                             sweep_cmd->count("--metric") > 0);
        }
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
    return 2;
}

} // namespace promptseg
