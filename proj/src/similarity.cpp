#include "promptseg/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <omp.h>

#include "promptseg/errors.hpp"

namespace promptseg {

std::string to_string(Metric m) {
    return m == Metric::frobenius ? "frobenius" : "ssim";
}

Metric metric_from_string(const std::string& s) {
    if (s == "frobenius") return Metric::frobenius;
    if (s == "ssim") return Metric::ssim;
    throw ParseError("unknown metric tag: " + s);
}

double frobenius_distance(const GrayImage& a, const GrayImage& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("frobenius_distance: shape mismatch");
    // plain sequential accumulation; callers parallelize across pairs instead,
    // which keeps results bit-identical for any worker count
    double sum = 0.0;
    const double* pa = a.pixels.data();
    const double* pb = b.pixels.data();
    const std::size_t n = a.pixels.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pa[i] - pb[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

namespace {

void validate_ssim_inputs(const GrayImage& a, const GrayImage& b, const SsimParams& p) {
    if (!a.same_shape(b)) throw DimensionMismatch("ssim: shape mismatch");
    if (p.window_side < 3 || p.window_side % 2 == 0) {
        throw std::invalid_argument("ssim: window_side must be odd and >= 3");
    }
    if (p.gaussian_sigma <= 0 || p.c1 <= 0 || p.c2 <= 0) {
        throw std::invalid_argument("ssim: sigma, c1, c2 must be positive");
    }
    if (a.width < p.window_side || a.height < p.window_side) {
        throw ImageTooSmall("ssim: image side smaller than window");
    }
}

// valid-region convolution of each row with a 1D kernel
void convolve_rows(const std::vector<double>& in, int w, int h, const std::vector<double>& k,
                   std::vector<double>& out) {
    const int win = static_cast<int>(k.size());
    const int ow = w - win + 1;
    out.resize(static_cast<std::size_t>(ow) * h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + static_cast<std::size_t>(y) * w;
        double* orow = out.data() + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < win; ++i) s += k[i] * row[x + i];
            orow[x] = s;
        }
    }
}

// valid-region convolution down each column
void convolve_cols(const std::vector<double>& in, int w, int h, const std::vector<double>& k,
                   std::vector<double>& out) {
    const int win = static_cast<int>(k.size());
    const int oh = h - win + 1;
    out.resize(static_cast<std::size_t>(w) * oh);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < oh; ++y) {
        double* orow = out.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = 0; i < win; ++i) s += k[i] * in[static_cast<std::size_t>(y + i) * w + x];
            orow[x] = s;
        }
    }
}

void window_means(const std::vector<double>& field, int w, int h, const std::vector<double>& k,
                  std::vector<double>& tmp, std::vector<double>& out) {
    convolve_rows(field, w, h, k, tmp);
    convolve_cols(tmp, w - static_cast<int>(k.size()) + 1, h, k, out);
}

} // namespace

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& p) {
    validate_ssim_inputs(a, b, p);
    const int w = a.width;
    const int h = a.height;
    const int win = p.window_side;
    const int half = win / 2;

    std::vector<double> kernel(win);
    double ksum = 0.0;
    for (int i = 0; i < win; ++i) {
        const double r = i - half;
        kernel[i] = std::exp(-(r * r) / (2.0 * p.gaussian_sigma * p.gaussian_sigma));
        ksum += kernel[i];
    }
    for (double& v : kernel) v /= ksum;

    const std::size_t n = a.pixels.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a.pixels[i] * a.pixels[i];
        bb[i] = b.pixels[i] * b.pixels[i];
        ab[i] = a.pixels[i] * b.pixels[i];
    }

    std::vector<double> tmp, mu_a, mu_b, e_aa, e_bb, e_ab;
    window_means(a.pixels, w, h, kernel, tmp, mu_a);
    window_means(b.pixels, w, h, kernel, tmp, mu_b);
    window_means(aa, w, h, kernel, tmp, e_aa);
    window_means(bb, w, h, kernel, tmp, e_bb);
    window_means(ab, w, h, kernel, tmp, e_ab);

    const int ow = w - win + 1;
    const int oh = h - win + 1;
    // per-row partials summed serially afterwards, so the total never depends
    // on how rows were scheduled across threads
    std::vector<double> row_sum(oh, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < oh; ++y) {
        double s = 0.0;
        for (int x = 0; x < ow; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * ow + x;
            const double ma = mu_a[i];
            const double mb = mu_b[i];
            const double var_a = e_aa[i] - ma * ma;
            const double var_b = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            const double num = (2.0 * ma * mb + p.c1) * (2.0 * cov + p.c2);
            const double den = (ma * ma + mb * mb + p.c1) * (var_a + var_b + p.c2);
            s += num / den;
        }
        row_sum[y] = s;
    }
    double total = 0.0;
    for (int y = 0; y < oh; ++y) total += row_sum[y];
    return total / (static_cast<double>(ow) * oh);
}

double ssim_distance(const GrayImage& a, const GrayImage& b, const SsimParams& p) {
    return 1.0 - ssim(a, b, p);
}

double metric_distance(Metric m, const GrayImage& a, const GrayImage& b, const SsimParams& p) {
    return m == Metric::frobenius ? frobenius_distance(a, b) : ssim_distance(a, b, p);
}

namespace {

bool neighbor_less(const Neighbor& x, const Neighbor& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    return x.exemplar_id < y.exemplar_id;
}

} // namespace

RetrievalResult knn_retrieve(const std::string& test_id, const GrayImage& test,
                             const std::vector<std::pair<std::string, GrayImage>>& pool,
                             std::size_t k, Metric metric, const SsimParams& p) {
    if (pool.empty()) throw EmptyPool("knn_retrieve: empty exemplar pool");
    if (k == 0) throw std::invalid_argument("knn_retrieve: k must be >= 1");
    if (k > pool.size()) {
        throw KTooLarge("knn_retrieve: k=" + std::to_string(k) + " exceeds pool size " +
                        std::to_string(pool.size()));
    }
    RetrievalResult r;
    r.test_id = test_id;
    r.neighbors.reserve(pool.size());
    for (const auto& [id, img] : pool) {
        r.neighbors.push_back({id, metric_distance(metric, test, img, p)});
    }
    std::sort(r.neighbors.begin(), r.neighbors.end(), neighbor_less);
    r.neighbors.resize(k);
    return r;
}

RetrievalResult knn_from_matrix(const DistanceMatrix& m, const std::string& test_id, std::size_t k) {
    const auto it = std::find(m.test_ids.begin(), m.test_ids.end(), test_id);
    if (it == m.test_ids.end()) throw UnknownTestId("knn_from_matrix: unknown test id: " + test_id);
    if (m.train_ids.empty()) throw EmptyPool("knn_from_matrix: matrix has no train columns");
    if (k == 0) throw std::invalid_argument("knn_from_matrix: k must be >= 1");
    if (k > m.train_ids.size()) {
        throw KTooLarge("knn_from_matrix: k=" + std::to_string(k) + " exceeds pool size " +
                        std::to_string(m.train_ids.size()));
    }
    const std::size_t row = static_cast<std::size_t>(it - m.test_ids.begin());
    RetrievalResult r;
    r.test_id = test_id;
    r.neighbors.reserve(m.train_ids.size());
    for (std::size_t j = 0; j < m.train_ids.size(); ++j) {
        r.neighbors.push_back({m.train_ids[j], m.at(row, j)});
    }
    std::sort(r.neighbors.begin(), r.neighbors.end(), neighbor_less);
    r.neighbors.resize(k);
    return r;
}

DistanceMatrix build_distance_matrix(const std::vector<std::pair<std::string, GrayImage>>& tests,
                                     const std::vector<std::pair<std::string, GrayImage>>& pool,
                                     Metric metric, const SsimParams& p, int parallelism) {
    DistanceMatrix m;
    m.metric = metric;
    m.test_ids.reserve(tests.size());
    for (const auto& [id, img] : tests) m.test_ids.push_back(id);
    m.train_ids.reserve(pool.size());
    for (const auto& [id, img] : pool) m.train_ids.push_back(id);
    m.values.assign(tests.size() * pool.size(), 0.0);

    const int threads = parallelism > 0 ? parallelism : omp_get_max_threads();
    const long long cells = static_cast<long long>(tests.size()) * static_cast<long long>(pool.size());
    // each cell is written by exactly one worker, so scheduling cannot change values
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long long c = 0; c < cells; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) / pool.size();
        const std::size_t j = static_cast<std::size_t>(c) % pool.size();
        m.values[static_cast<std::size_t>(c)] =
            metric_distance(metric, tests[i].second, pool[j].second, p);
    }
    return m;
}

namespace {

std::string format_distance(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void validate_csv_id(const std::string& id) {
    if (id.empty() || id.find_first_of(",\r\n") != std::string::npos) {
        throw std::invalid_argument("id not representable in CSV: '" + id + "'");
    }
}

} // namespace

std::string write_matrix_csv(const DistanceMatrix& m) {
    std::string out = "test_id";
    for (const auto& id : m.train_ids) {
        validate_csv_id(id);
        out += ',';
        out += id;
    }
    out += '\n';
    for (std::size_t i = 0; i < m.test_ids.size(); ++i) {
        validate_csv_id(m.test_ids[i]);
        out += m.test_ids[i];
        for (std::size_t j = 0; j < m.train_ids.size(); ++j) {
            out += ',';
            out += format_distance(m.at(i, j));
        }
        out += '\n';
    }
    return out;
}

DistanceMatrix parse_matrix_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("distance csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    DistanceMatrix m;
    std::istringstream hdr(line);
    std::string cell;
    if (!std::getline(hdr, cell, ',') || cell != "test_id") {
        throw ParseError("distance csv: header must start with 'test_id'");
    }
    while (std::getline(hdr, cell, ',')) m.train_ids.push_back(cell);
    if (m.train_ids.empty()) throw ParseError("distance csv: no train columns");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        if (!std::getline(row, cell, ',')) throw ParseError("distance csv: bad row at line " + std::to_string(line_no));
        m.test_ids.push_back(cell);
        std::size_t count = 0;
        while (std::getline(row, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
                throw ParseError("distance csv: bad value '" + cell + "' at line " + std::to_string(line_no));
            }
            m.values.push_back(v);
            ++count;
        }
        if (count != m.train_ids.size()) {
            throw ParseError("distance csv: row width " + std::to_string(count) + " != " +
                             std::to_string(m.train_ids.size()) + " at line " + std::to_string(line_no));
        }
    }
    if (m.test_ids.empty()) throw ParseError("distance csv: no data rows");
    return m;
}

DistanceMatrix canonicalize_matrix(const DistanceMatrix& m) {
    DistanceMatrix out = m;
    for (double& v : out.values) {
        const std::string s = format_distance(v);
        v = std::strtod(s.c_str(), nullptr);
    }
    return out;
}

} // namespace promptseg
