#include "promptseg/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "promptseg/errors.hpp"
#include "promptseg/fsio.hpp"

namespace promptseg {

namespace fs = std::filesystem;
using nlohmann::json;

double iou(const BinaryMask& pred, const BinaryMask& gt) {
    if (!pred.same_shape(gt)) throw DimensionMismatch("iou: shape mismatch");
    long long inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.fg.size(); ++i) {
        const bool p = pred.fg[i] != 0;
        const bool g = gt.fg[i] != 0;
        if (p && g) ++inter;
        if (p || g) ++uni;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double miou(const std::vector<IoURecord>& records) {
    if (records.empty()) throw EmptyRecordList("miou: no records");
    double sum = 0.0;
    for (const auto& r : records) sum += r.iou_value;
    return sum / static_cast<double>(records.size());
}

namespace {

std::vector<std::pair<std::string, GrayImage>> gray_pool(const std::vector<LabeledExample>& examples) {
    std::vector<std::pair<std::string, GrayImage>> pool;
    pool.reserve(examples.size());
    for (const auto& e : examples) pool.emplace_back(e.id, to_grayscale(e.image));
    return pool;
}

bool ids_match(const DistanceMatrix& m, const Dataset& ds) {
    if (m.test_ids.size() != ds.test.size() || m.train_ids.size() != ds.train.size()) return false;
    for (std::size_t i = 0; i < ds.test.size(); ++i) {
        if (m.test_ids[i] != ds.test[i].id) return false;
    }
    for (std::size_t j = 0; j < ds.train.size(); ++j) {
        if (m.train_ids[j] != ds.train[j].id) return false;
    }
    return true;
}

} // namespace

DistanceMatrix canonical_distance_matrix(const Dataset& ds, Metric metric, const EvalContext& ctx) {
    if (ds.train.empty()) throw EmptyPool("canonical_distance_matrix: no train images");
    if (ds.test.empty()) throw EvalError("canonical_distance_matrix: no test images");

    std::optional<fs::path> cache_path;
    if (ctx.cache_dir) {
        const auto it = ctx.cache_keys.find(metric);
        if (it != ctx.cache_keys.end()) {
            cache_path = *ctx.cache_dir / (it->second + ".csv");
        }
    }

    if (cache_path && fs::exists(*cache_path)) {
        // the cache is derived state: unreadable, truncated or mismatching
        // entries (key collisions, hand edits) fall through to a recompute
        // that overwrites them
        try {
            DistanceMatrix cached = parse_matrix_csv(read_text_file(*cache_path));
            cached.metric = metric;
            if (ids_match(cached, ds)) return cached;
        } catch (const Error&) {
        }
    }

    DistanceMatrix m = canonicalize_matrix(build_distance_matrix(
        gray_pool(ds.test), gray_pool(ds.train), metric, ctx.config.ssim_params, ctx.parallelism));
    if (cache_path) {
        write_file_atomic(*cache_path, write_matrix_csv(m));
    }
    return m;
}

std::vector<IoURecord> evaluate_with_matrix(const Dataset& ds, std::size_t k,
                                            const DistanceMatrix& matrix, const EvalContext& ctx) {
    if (ds.train.empty()) throw EmptyPool("evaluate: no train images");
    if (ds.test.empty()) throw EvalError("evaluate: no test images");
    if (k == 0) throw std::invalid_argument("evaluate: k must be >= 1");
    if (k > ds.train.size()) {
        throw KTooLarge("evaluate: k=" + std::to_string(k) + " exceeds train pool size " +
                        std::to_string(ds.train.size()));
    }

    std::unordered_map<std::string, std::size_t> train_index;
    train_index.reserve(ds.train.size());
    for (std::size_t j = 0; j < ds.train.size(); ++j) train_index[ds.train[j].id] = j;

    std::vector<IoURecord> records;
    records.reserve(ds.test.size());
    for (const auto& test : ds.test) {
        try {
            const RetrievalResult retrieval = knn_from_matrix(matrix, test.id, k);
            std::vector<LabeledExample> exemplars;
            exemplars.reserve(k);
            for (const auto& n : retrieval.neighbors) {
                exemplars.push_back(ds.train[train_index.at(n.exemplar_id)]);
            }
            const SoftMask soft = segment(exemplars, test.image, ctx.config.backend);
            const BinaryMask pred = binarize(soft, ctx.config.threshold);
            IoURecord rec;
            rec.test_id = test.id;
            rec.iou_value = iou(pred, test.mask);
            rec.k = k;
            rec.metric = matrix.metric;
            rec.backend = backend_tag(ctx.config.backend);
            records.push_back(std::move(rec));
        } catch (const Error& e) {
            throw EvalError("test '" + test.id + "': " + e.what());
        }
    }
    // ds.test is sorted by id, so records already are; keep the guarantee
    // explicit in case callers hand-build datasets
    std::sort(records.begin(), records.end(),
              [](const IoURecord& a, const IoURecord& b) { return a.test_id < b.test_id; });
    return records;
}

std::vector<IoURecord> evaluate_once(const Dataset& ds, std::size_t k, Metric metric,
                                     const EvalContext& ctx) {
    if (ds.train.empty()) throw EmptyPool("evaluate: no train images");
    if (k > ds.train.size()) {
        throw KTooLarge("evaluate: k=" + std::to_string(k) + " exceeds train pool size " +
                        std::to_string(ds.train.size()));
    }
    const DistanceMatrix matrix = canonical_distance_matrix(ds, metric, ctx);
    return evaluate_with_matrix(ds, k, matrix, ctx);
}

SweepReport sweep(const Dataset& ds, KRange range, const std::vector<Metric>& metrics,
                  const EvalContext& ctx, const std::function<void(const SweepCell&)>& on_cell,
                  const std::function<void(const CellFailure&)>& on_failure) {
    if (metrics.empty()) throw std::invalid_argument("sweep: no metrics given");
    if (range.k_min == 0 || range.k_min > range.k_max) {
        throw std::invalid_argument("sweep: invalid k range");
    }
    if (ds.train.empty()) throw EmptyPool("sweep: no train images");
    if (range.k_max > ds.train.size()) {
        const std::size_t first_bad = std::max(range.k_min, ds.train.size() + 1);
        throw KTooLarge("sweep cell (k=" + std::to_string(first_bad) + ", metric=" +
                        to_string(metrics.front()) + "): k exceeds train pool size " +
                        std::to_string(ds.train.size()));
    }

    SweepReport report;
    report.config = ctx.config;
    for (const Metric metric : metrics) {
        const DistanceMatrix matrix = canonical_distance_matrix(ds, metric, ctx);
        for (std::size_t k = range.k_min; k <= range.k_max; ++k) {
            try {
                SweepCell cell;
                cell.k = k;
                cell.metric = metric;
                cell.records = evaluate_with_matrix(ds, k, matrix, ctx);
                cell.n_images = cell.records.size();
                cell.miou_value = miou(cell.records);
                if (on_cell) on_cell(cell);
                report.cells.push_back(std::move(cell));
            } catch (const Error& e) {
                report.failures.push_back({k, metric, e.what()});
                if (on_failure) on_failure(report.failures.back());
            }
        }
    }
    return report;
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw ParseError("unknown report format: " + s);
}

namespace {

std::string fixed6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json config_to_json(const RunConfig& c) {
    json backend{
        {"kind", backend_tag(c.backend)},
        {"endpoint", c.backend.endpoint},
        {"timeout_secs", c.backend.timeout_secs},
        {"patch_side", c.backend.patch.patch_side},
        {"stride", c.backend.patch.stride},
        {"aggregation", "center-vote"},
    };
    json preprocess{
        {"target_side", c.preprocess.target_side},
        {"channel_means", c.preprocess.channel_means},
        {"channel_stds", c.preprocess.channel_stds},
    };
    json ssim_params{
        {"window_side", c.ssim_params.window_side},
        {"gaussian_sigma", c.ssim_params.gaussian_sigma},
        {"c1", c.ssim_params.c1},
        {"c2", c.ssim_params.c2},
        {"dynamic_range", c.ssim_params.dynamic_range},
    };
    return json{
        {"backend", backend},          {"dataset_hash", c.dataset_hash},
        {"layout_version", c.layout_version}, {"preprocess", preprocess},
        {"ssim", ssim_params},         {"threshold", c.threshold},
    };
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    const json& b = j.at("backend");
    const std::string kind = b.at("kind").get<std::string>();
    if (kind == "reference") {
        c.backend.kind = BackendKind::reference;
    } else if (kind == "remote") {
        c.backend.kind = BackendKind::remote;
    } else {
        throw ParseError("report: unknown backend kind: " + kind);
    }
    c.backend.endpoint = b.at("endpoint").get<std::string>();
    c.backend.timeout_secs = b.at("timeout_secs").get<double>();
    c.backend.patch.patch_side = b.at("patch_side").get<int>();
    c.backend.patch.stride = b.at("stride").get<int>();
    const json& p = j.at("preprocess");
    c.preprocess.target_side = p.at("target_side").get<int>();
    c.preprocess.channel_means = p.at("channel_means").get<std::array<double, 3>>();
    c.preprocess.channel_stds = p.at("channel_stds").get<std::array<double, 3>>();
    const json& s = j.at("ssim");
    c.ssim_params.window_side = s.at("window_side").get<int>();
    c.ssim_params.gaussian_sigma = s.at("gaussian_sigma").get<double>();
    c.ssim_params.c1 = s.at("c1").get<double>();
    c.ssim_params.c2 = s.at("c2").get<double>();
    c.ssim_params.dynamic_range = s.at("dynamic_range").get<double>();
    c.threshold = j.at("threshold").get<double>();
    c.layout_version = j.at("layout_version").get<std::string>();
    c.dataset_hash = j.at("dataset_hash").get<std::string>();
    return c;
}

} // namespace

std::string emit_report(const SweepReport& report, ReportFormat format) {
    if (format == ReportFormat::csv) {
        // miou on [0,1]; miou_pct carries the same value on the 0-100 scale
        std::string out = "k,metric,miou,n_images,miou_pct\n";
        for (const auto& cell : report.cells) {
            out += std::to_string(cell.k);
            out += ',';
            out += to_string(cell.metric);
            out += ',';
            out += fixed6(cell.miou_value);
            out += ',';
            out += std::to_string(cell.n_images);
            out += ',';
            out += fixed6(cell.miou_value * 100.0);
            out += '\n';
        }
        return out;
    }

    json cells = json::array();
    for (const auto& cell : report.cells) {
        json records = json::array();
        for (const auto& r : cell.records) {
            records.push_back({{"test_id", r.test_id}, {"iou", r.iou_value}});
        }
        cells.push_back({{"k", cell.k},
                         {"metric", to_string(cell.metric)},
                         {"miou", cell.miou_value},
                         {"n_images", cell.n_images},
                         {"records", records}});
    }
    json failures = json::array();
    for (const auto& f : report.failures) {
        failures.push_back({{"k", f.k}, {"metric", to_string(f.metric)}, {"error", f.error}});
    }
    const json doc{{"config", config_to_json(report.config)}, {"cells", cells}, {"failures", failures}};
    return doc.dump(2) + "\n";
}

SweepReport parse_report_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("report json: ") + e.what());
    }
    try {
        SweepReport report;
        report.config = config_from_json(doc.at("config"));
        for (const json& jc : doc.at("cells")) {
            SweepCell cell;
            cell.k = jc.at("k").get<std::size_t>();
            cell.metric = metric_from_string(jc.at("metric").get<std::string>());
            cell.miou_value = jc.at("miou").get<double>();
            cell.n_images = jc.at("n_images").get<std::size_t>();
            for (const json& jr : jc.at("records")) {
                IoURecord rec;
                rec.test_id = jr.at("test_id").get<std::string>();
                rec.iou_value = jr.at("iou").get<double>();
                rec.k = cell.k;
                rec.metric = cell.metric;
                rec.backend = backend_tag(report.config.backend);
                cell.records.push_back(std::move(rec));
            }
            report.cells.push_back(std::move(cell));
        }
        for (const json& jf : doc.at("failures")) {
            CellFailure f;
            f.k = jf.at("k").get<std::size_t>();
            f.metric = metric_from_string(jf.at("metric").get<std::string>());
            f.error = jf.at("error").get<std::string>();
            report.failures.push_back(std::move(f));
        }
        return report;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report json: ") + e.what());
    }
}

std::string report_basename(const SweepReport& report, ReportFormat format) {
    const std::string ext = format == ReportFormat::csv ? "csv" : "json";
    return "report_" + report.config.dataset_hash + "_" + backend_tag(report.config.backend) + "_" +
           report.config.layout_version + "." + ext;
}

} // namespace promptseg
