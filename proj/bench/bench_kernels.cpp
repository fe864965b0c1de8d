// Production kernels (OpenMP) vs their serial reference implementations.
// Run: build/bench/bench_kernels [--benchmark_filter=...]
#include <benchmark/benchmark.h>

#include <omp.h>

#include <vector>

#include "promptseg/backend.hpp"
#include "promptseg/image.hpp"
#include "promptseg/serial/reference.hpp"
#include "promptseg/similarity.hpp"
#include "support/synthetic.hpp"

using namespace promptseg;

namespace {

GrayImage gray_fixture(int side, std::uint32_t seed) {
    return testsupport::random_gray(side, side, seed);
}

std::vector<LabeledExample> exemplar_fixture(int side, int count) {
    std::vector<LabeledExample> out;
    for (int i = 0; i < count; ++i) {
        out.push_back({"e" + std::to_string(i),
                       testsupport::random_rgb(side, side, 100 + i),
                       testsupport::random_mask(side, side, 200 + i)});
    }
    return out;
}

void bm_frobenius(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const GrayImage a = gray_fixture(side, 1), b = gray_fixture(side, 2);
    for (auto _ : state) benchmark::DoNotOptimize(frobenius_distance(a, b));
}

void bm_frobenius_serial(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const GrayImage a = gray_fixture(side, 1), b = gray_fixture(side, 2);
    for (auto _ : state) benchmark::DoNotOptimize(serial::frobenius_ref(a, b));
}

void bm_ssim(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const GrayImage a = gray_fixture(side, 1), b = gray_fixture(side, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}

void bm_ssim_serial(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const GrayImage a = gray_fixture(side, 1), b = gray_fixture(side, 2);
    for (auto _ : state) benchmark::DoNotOptimize(serial::ssim_ref(a, b));
}

void bm_patchmatch(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto exemplars = exemplar_fixture(side, 3);
    const RasterImage test = testsupport::random_rgb(side, side, 999);
    PatchMatchParams p; // patch 7, stride 2
    for (auto _ : state) benchmark::DoNotOptimize(reference_patchmatch(exemplars, test, p));
}

void bm_patchmatch_serial(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto exemplars = exemplar_fixture(side, 3);
    const RasterImage test = testsupport::random_rgb(side, side, 999);
    PatchMatchParams p;
    for (auto _ : state) {
        benchmark::DoNotOptimize(serial::patchmatch_bruteforce_ref(exemplars, test, p));
    }
}

void bm_distance_matrix(benchmark::State& state) {
    const int workers = static_cast<int>(state.range(0));
    std::vector<std::pair<std::string, GrayImage>> tests, pool;
    for (int i = 0; i < 6; ++i) tests.emplace_back("t" + std::to_string(i), gray_fixture(64, 300 + i));
    for (int i = 0; i < 24; ++i) pool.emplace_back("e" + std::to_string(i), gray_fixture(64, 400 + i));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_distance_matrix(tests, pool, Metric::ssim, {}, workers));
    }
}

BENCHMARK(bm_frobenius)->Arg(64)->Arg(256);
BENCHMARK(bm_frobenius_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_ssim)->Arg(64)->Arg(256);
BENCHMARK(bm_ssim_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_patchmatch)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_patchmatch_serial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_distance_matrix)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
