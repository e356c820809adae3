#pragma once

// Dense numeric substrate: a row-major matrix, a one-sided Jacobi thin SVD
// and a counter-based random stream.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cvxattn {

/// Row-major dense matrix of doubles.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
    Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Mat identity(std::size_t n);
    static Mat diag(std::span<const double> d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Mat transpose() const;
    bool all_finite() const;
    double frobenius() const;

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);
Mat operator-(const Mat& a, const Mat& b);

/// Throws std::invalid_argument naming `what` if any entry is NaN/Inf.
void require_finite(std::span<const double> values, const char* what);

struct Svd {
    Mat u;                     // rows x k, orthonormal columns
    std::vector<double> sigma; // k values, descending, nonnegative
    Mat v;                     // cols x k, orthonormal columns
};

/// Thin SVD, k = min(rows, cols), by one-sided Jacobi rotations.
Svd svd_thin(const Mat& m);

/// U * diag(sigma) * V^T.
Mat svd_reconstruct(const Svd& s);

/// Sum of singular values.
double nuclear_norm(const Mat& m);

/// Counter-based generator (SplitMix64 over seed + counter). Single owner;
/// parallel consumers derive their own stream with `derive`.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t next_u64();
    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit();
    double next_gauss();
    /// Uniform integer in [0, n).
    std::size_t next_index(std::size_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    /// Independent stream keyed by (seed, tag).
    RngStream derive(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

std::vector<double> gauss_sample(RngStream& rng, std::size_t n, double mean, double stddev);
std::vector<double> uniform_sample(RngStream& rng, std::size_t n, double lo, double hi);

double dot(std::span<const double> a, std::span<const double> b);

} // namespace cvxattn
