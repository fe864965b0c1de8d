#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "promptseg/image.hpp"

namespace promptseg {

enum class Metric { frobenius, ssim };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s); // throws ParseError on unknown tag

/// Windowed-SSIM parameters. Defaults: 11x11 Gaussian window, sigma 1.5,
/// c1 = (0.01 L)^2 and c2 = (0.03 L)^2 with dynamic range L = 1.
struct SsimParams {
    int window_side = 11;
    double gaussian_sigma = 1.5;
    double c1 = 1e-4;
    double c2 = 9e-4;
    double dynamic_range = 1.0;
    bool operator==(const SsimParams&) const = default;
};

struct Neighbor {
    std::string exemplar_id;
    double distance = 0.0;
    bool operator==(const Neighbor&) const = default;
};

struct RetrievalResult {
    std::string test_id;
    std::vector<Neighbor> neighbors; // sorted by (distance, exemplar_id)
    bool operator==(const RetrievalResult&) const = default;
};

struct DistanceMatrix {
    std::vector<std::string> test_ids;
    std::vector<std::string> train_ids;
    std::vector<double> values; // |test_ids| x |train_ids|, row-major
    Metric metric = Metric::frobenius;

    double at(std::size_t test_idx, std::size_t train_idx) const {
        return values[test_idx * train_ids.size() + train_idx];
    }
    bool operator==(const DistanceMatrix&) const = default;
};

/// sqrt of the sum of squared pixelwise differences, accumulated in row-major order.
double frobenius_distance(const GrayImage& a, const GrayImage& b);

/// Mean SSIM index over all valid (unpadded) window positions.
double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& p = {});

/// 1 - mean SSIM; in [0,2].
double ssim_distance(const GrayImage& a, const GrayImage& b, const SsimParams& p = {});

double metric_distance(Metric m, const GrayImage& a, const GrayImage& b, const SsimParams& p = {});

/// k smallest-distance pool entries, ascending, ties broken by ascending id.
RetrievalResult knn_retrieve(const std::string& test_id, const GrayImage& test,
                             const std::vector<std::pair<std::string, GrayImage>>& pool,
                             std::size_t k, Metric metric, const SsimParams& p = {});

/// Same ranking logic driven by a precomputed matrix row instead of fresh metric calls.
RetrievalResult knn_from_matrix(const DistanceMatrix& m, const std::string& test_id, std::size_t k);

/// All pairwise test-vs-pool distances. Worker count affects scheduling only,
/// never the values; parallelism 0 means "use all hardware threads".
DistanceMatrix build_distance_matrix(const std::vector<std::pair<std::string, GrayImage>>& tests,
                                     const std::vector<std::pair<std::string, GrayImage>>& pool,
                                     Metric metric, const SsimParams& p = {}, int parallelism = 0);

/// Portable CSV form: header "test_id,<train ids...>", one row per test id,
/// values rendered at 9 significant digits.
std::string write_matrix_csv(const DistanceMatrix& m);
DistanceMatrix parse_matrix_csv(const std::string& text); // throws ParseError

/// Rounds every value through the 9-significant-digit CSV rendering, so
/// in-memory matrices and cache-loaded matrices drive identical downstream results.
DistanceMatrix canonicalize_matrix(const DistanceMatrix& m);

} // namespace promptseg
