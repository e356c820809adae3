#include "cvxattn/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cvxattn {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw std::invalid_argument("Mat: data length " + std::to_string(data_.size()) +
                                    " != rows*cols " + std::to_string(rows_ * cols_));
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diag(std::span<const double> d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool Mat::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double Mat::frobenius() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
    Mat out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

Mat operator-(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("Mat subtraction: shape mismatch");
    Mat out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

void require_finite(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw std::invalid_argument(std::string(what) + ": non-finite entry at index " +
                                        std::to_string(i));
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

namespace {

// Column-wise helpers on row-major storage.
double col_dot(const Mat& m, std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, p) * m(r, q);
    return s;
}

void rotate_cols(Mat& m, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double a = m(r, p);
        const double b = m(r, q);
        m(r, p) = c * a - s * b;
        m(r, q) = s * a + c * b;
    }
}

// Tall case (rows >= cols).
Svd jacobi_tall(const Mat& a) {
    const std::size_t n = a.cols();
    Mat u = a;
    Mat v = Mat::identity(n);

    constexpr double kTol = 1e-15;
    constexpr int kMaxSweeps = 80;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = col_dot(u, p, p);
                const double beta = col_dot(u, q, q);
                const double gamma = col_dot(u, p, q);
                if (gamma == 0.0 || std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                rotate_cols(u, p, q, c, s);
                rotate_cols(v, p, q, c, s);
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(u, j, j));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    Svd out{Mat(a.rows(), n), std::vector<double>(n), Mat(n, n)};
    const double smax = n > 0 ? sigma[order[0]] : 0.0;
    const double floor = smax * 1e-14;
    std::vector<bool> needs_basis(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.sigma[j] = sigma[src];
        for (std::size_t r = 0; r < n; ++r) out.v(r, j) = v(r, src);
        if (sigma[src] > floor && sigma[src] > 0.0) {
            for (std::size_t r = 0; r < a.rows(); ++r) out.u(r, j) = u(r, src) / sigma[src];
        } else {
            needs_basis[j] = true;
        }
    }

    // Rank-deficient columns: complete U with Gram-Schmidt on unit vectors.
    std::size_t candidate = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!needs_basis[j]) continue;
        for (; candidate < a.rows(); ++candidate) {
            std::vector<double> e(a.rows(), 0.0);
            e[candidate] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == j || (needs_basis[k] && k > j)) continue;
                    double proj = 0.0;
                    for (std::size_t r = 0; r < a.rows(); ++r) proj += out.u(r, k) * e[r];
                    for (std::size_t r = 0; r < a.rows(); ++r) e[r] -= proj * out.u(r, k);
                }
            double norm = 0.0;
            for (double x : e) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 1e-6) {
                for (std::size_t r = 0; r < a.rows(); ++r) out.u(r, j) = e[r] / norm;
                ++candidate;
                break;
            }
        }
        needs_basis[j] = false;
    }
    return out;
}

} // namespace

Svd svd_thin(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("svd_thin: empty matrix");
    require_finite(m.data(), "svd_thin");
    if (m.rows() >= m.cols()) return jacobi_tall(m);
    Svd t = jacobi_tall(m.transpose());
    return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

Mat svd_reconstruct(const Svd& s) {
    const std::size_t k = s.sigma.size();
    Mat out(s.u.rows(), s.v.rows());
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += s.u(i, l) * s.sigma[l] * s.v(j, l);
            out(i, j) = acc;
        }
    return out;
}

double nuclear_norm(const Mat& m) {
    const Svd s = svd_thin(m);
    return std::accumulate(s.sigma.begin(), s.sigma.end(), 0.0);
}

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix(splitmix(seed + kGolden) ^ (tag * kGolden + 0x632BE59BD9B4E019ULL));
}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return splitmix(seed_ + counter_ * kGolden);
}

double RngStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gauss() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - next_unit(); // (0, 1]
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

std::size_t RngStream::next_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("next_index: empty range");
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

RngStream RngStream::derive(std::uint64_t tag) const { return RngStream(mix_seed(seed_, tag)); }

std::vector<double> gauss_sample(RngStream& rng, std::size_t n, double mean, double stddev) {
    if (!(stddev > 0.0) || !std::isfinite(stddev))
        throw std::invalid_argument("gauss_sample: stddev must be > 0");
    std::vector<double> out(n);
    for (auto& x : out) x = mean + stddev * rng.next_gauss();
    return out;
}

std::vector<double> uniform_sample(RngStream& rng, std::size_t n, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform_sample: requires lo < hi");
    std::vector<double> out(n);
    for (auto& x : out) {
        x = lo + (hi - lo) * rng.next_unit();
        if (x >= hi) x = std::nextafter(hi, lo); // rounding guard for [lo, hi)
    }
    return out;
}

} // namespace cvxattn
