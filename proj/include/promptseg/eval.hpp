#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptseg/backend.hpp"
#include "promptseg/dataset.hpp"
#include "promptseg/image.hpp"
#include "promptseg/prompt.hpp"
#include "promptseg/similarity.hpp"

namespace promptseg {

struct IoURecord {
    std::string test_id;
    double iou_value = 0.0;
    std::size_t k = 0;
    Metric metric = Metric::frobenius;
    std::string backend;
    bool operator==(const IoURecord&) const = default;
};

/// |pred AND gt| / |pred OR gt| via integer pixel counts; 1.0 when both masks
/// are entirely background.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Arithmetic mean of the records' IoU values.
double miou(const std::vector<IoURecord>& records);

struct KRange {
    std::size_t k_min = 1;
    std::size_t k_max = 15;
};

/// Everything that determines the numbers: stored in every report so a result
/// can be traced back to its exact configuration.
struct RunConfig {
    PreprocessConfig preprocess;
    SsimParams ssim_params;
    BackendSpec backend;
    double threshold = 0.5;
    std::string layout_version = kLayoutVersion;
    std::string dataset_hash;
    bool operator==(const RunConfig&) const = default;
};

struct SweepCell {
    std::size_t k = 0;
    Metric metric = Metric::frobenius;
    double miou_value = 0.0;
    std::size_t n_images = 0;
    std::vector<IoURecord> records;
    bool operator==(const SweepCell&) const = default;
};

struct CellFailure {
    std::size_t k = 0;
    Metric metric = Metric::frobenius;
    std::string error;
    bool operator==(const CellFailure&) const = default;
};

struct SweepReport {
    RunConfig config;
    std::vector<SweepCell> cells; // metric-major, k ascending within a metric
    std::vector<CellFailure> failures;
    bool operator==(const SweepReport&) const = default;
};

struct EvalContext {
    RunConfig config;
    std::optional<std::filesystem::path> cache_dir; // distance matrices live here
    std::map<Metric, std::string> cache_keys;       // metric -> cache file stem
    int parallelism = 0;                            // 0 = all hardware threads
};

/// Test-vs-train distances with every value rounded through the 9-significant-
/// digit cache rendering, loaded from / saved to the cache when configured.
/// Cold and warm paths yield bit-identical matrices by construction.
DistanceMatrix canonical_distance_matrix(const Dataset& ds, Metric metric, const EvalContext& ctx);

/// Full pipeline per test image: retrieve k exemplars, segment, binarize,
/// score against ground truth. Records come back sorted by test_id; any
/// component failure is rethrown with the test id attached.
std::vector<IoURecord> evaluate_once(const Dataset& ds, std::size_t k, Metric metric,
                                     const EvalContext& ctx);

/// Same, driven by an already-canonicalized distance matrix (sweeps reuse one
/// matrix per metric across all k).
std::vector<IoURecord> evaluate_with_matrix(const Dataset& ds, std::size_t k,
                                            const DistanceMatrix& matrix, const EvalContext& ctx);

/// One evaluate per (metric, k) cell. A failing cell is recorded and the sweep
/// continues; an out-of-range k fails the whole sweep before any work. The
/// observers, when given, see each cell/failure as it completes (progress logs).
SweepReport sweep(const Dataset& ds, KRange range, const std::vector<Metric>& metrics,
                  const EvalContext& ctx,
                  const std::function<void(const SweepCell&)>& on_cell = {},
                  const std::function<void(const CellFailure&)>& on_failure = {});

enum class ReportFormat { csv, json };

ReportFormat report_format_from_string(const std::string& s); // throws ParseError

/// CSV: "k,metric,miou,n_images,miou_pct" rows at 6 decimal places (miou_pct
/// is the same value on the 0-100 scale). JSON: config + cells + per-image
/// records + failures, keys in stable order. Emission is byte-deterministic.
std::string emit_report(const SweepReport& report, ReportFormat format);

SweepReport parse_report_json(const std::string& text); // throws ParseError

/// "report_<dataset-hash>_<backend>_<layout>.<ext>" — used when the caller
/// gives a directory instead of a file name.
std::string report_basename(const SweepReport& report, ReportFormat format);

} // namespace promptseg
