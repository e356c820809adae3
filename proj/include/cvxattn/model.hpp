#pragma once

// Convexified attention classifier: scores, simplex attention, attended
// aggregation, class scoring, prediction and the model bundle format.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvxattn/dataio.hpp"
#include "cvxattn/features.hpp"
#include "cvxattn/numkernel.hpp"

namespace cvxattn {

enum class LossKind : std::uint8_t { hinge = 0, squared = 1 };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// Trainable weights A[k][p][j], stored contiguously. The row-major layout is
/// also the (K*P) x m matrix the nuclear-norm constraint acts on.
class WeightTensor {
public:
    WeightTensor() = default;
    WeightTensor(std::size_t classes, std::size_t patches, std::size_t dim, double fill = 0.0);

    std::size_t classes() const { return classes_; }
    std::size_t patches() const { return patches_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return values_.size(); }

    std::span<double> block(std::size_t k, std::size_t p) {
        return {values_.data() + (k * patches_ + p) * dim_, dim_};
    }
    std::span<const double> block(std::size_t k, std::size_t p) const {
        return {values_.data() + (k * patches_ + p) * dim_, dim_};
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    Mat as_matrix() const;
    void assign(const Mat& reshaped);

    friend bool operator==(const WeightTensor&, const WeightTensor&) = default;

private:
    std::size_t classes_ = 0;
    std::size_t patches_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

/// s[k][p] = <Q_p, A_{k,p}> / sqrt(m).  Result is K x P.
Mat attention_scores(const Mat& q, const WeightTensor& a);

/// Each row projected onto the probability simplex.
Mat attention_weights(const Mat& scores);

/// Row k = sum_p alpha[k][p] * Q_p.  Result is K x m.
Mat attend(const Mat& q, const Mat& alpha);

/// f_k = sum_p alpha[k][p] <Q_p, A_{k,p}> with alpha held as given.
std::vector<double> class_scores_with(const Mat& q, const WeightTensor& a, const Mat& alpha);

struct ForwardPass {
    Mat scores;               // K x P
    Mat alpha;                // K x P, rows on the simplex
    std::vector<double> f;    // K
};

ForwardPass forward(const Mat& q, const WeightTensor& a);

/// Class scores with attention recomputed from A.
std::vector<double> class_scores(const Mat& q, const WeightTensor& a);

/// Lowest index wins ties.
std::size_t argmax(std::span<const double> f);

struct ModelBundle {
    PatchSpec spec;
    std::size_t classes = 0;
    RffMap rff;
    WeightTensor weights;
    NormStats norm;
    LossKind loss = LossKind::hinge;
    std::uint32_t trained_epochs = 0;

    /// Throws std::invalid_argument if the parts disagree on shape.
    void validate() const;
};

struct Prediction {
    std::size_t label = 0;
    std::vector<double> scores;
};

/// Normalizes raw X with the bundle's stats, featurizes and scores it.
Prediction predict(const Mat& x, const ModelBundle& bundle);

struct ParamCount {
    std::size_t trainable = 0;
    std::size_t fixed = 0;
    std::size_t total() const { return trainable + fixed; }
};

ParamCount param_count(const PatchSpec& spec, std::size_t classes, std::size_t m);
ParamCount param_count(const ModelBundle& bundle);

// ---------------------------------------------------------------------------
// Binary bundle format (little-endian):
//
//   offset  size  field
//        0     4  magic "CVXA"
//        4     4  u32 format_version
//        8    20  u32 K, C, T, P, m
//       28     1  u8 loss_kind (0 hinge, 1 squared)
//       29     1  u8 real_bytes (4 or 8) for the payload
//       30     2  u16 flags (bit 0: trained)
//       32     4  u32 trained_epochs
//       36     8  f64 gamma
//       44        payload reals: mean[C], stddev[C], b[m], W[patch_dim*m], A[K*P*m]
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 44;

enum class Precision { f64, f32 };

class FormatError : public std::runtime_error {
public:
    enum class Code { bad_magic, version_mismatch, truncated, trailing_data, dimension_overflow, invalid_field };

    FormatError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::vector<std::uint8_t> serialize(const ModelBundle& bundle, Precision precision = Precision::f64);
ModelBundle deserialize(std::span<const std::uint8_t> bytes);

void save_bundle(const ModelBundle& bundle, const std::string& path, Precision precision = Precision::f64);
ModelBundle load_bundle(const std::string& path);

} // namespace cvxattn
