#include "cvxattn/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "cvxattn/projections.hpp"

namespace cvxattn {

const char* to_string(LossKind kind) { return kind == LossKind::hinge ? "hinge" : "squared"; }

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "hinge") return LossKind::hinge;
    if (name == "squared") return LossKind::squared;
    throw std::invalid_argument("unknown loss '" + name + "' (valid: hinge, squared)");
}

WeightTensor::WeightTensor(std::size_t classes, std::size_t patches, std::size_t dim, double fill)
    : classes_(classes), patches_(patches), dim_(dim), values_(classes * patches * dim, fill) {}

Mat WeightTensor::as_matrix() const { return Mat(classes_ * patches_, dim_, values_); }

void WeightTensor::assign(const Mat& reshaped) {
    if (reshaped.rows() != classes_ * patches_ || reshaped.cols() != dim_)
        throw std::invalid_argument("WeightTensor::assign: expected (K*P) x m matrix");
    values_ = reshaped.data();
}

namespace {

void check_shapes(const Mat& q, const WeightTensor& a) {
    if (q.rows() != a.patches() || q.cols() != a.dim())
        throw std::invalid_argument("feature matrix is " + std::to_string(q.rows()) + "x" +
                                    std::to_string(q.cols()) + ", weights expect " +
                                    std::to_string(a.patches()) + "x" + std::to_string(a.dim()));
}

} // namespace

Mat attention_scores(const Mat& q, const WeightTensor& a) {
    check_shapes(q, a);
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(a.dim()));
    Mat s(a.classes(), a.patches());
    for (std::size_t k = 0; k < a.classes(); ++k)
        for (std::size_t p = 0; p < a.patches(); ++p) s(k, p) = inv_sqrt_m * dot(q.row(p), a.block(k, p));
    return s;
}

Mat attention_weights(const Mat& scores) {
    Mat alpha(scores.rows(), scores.cols());
    for (std::size_t k = 0; k < scores.rows(); ++k) {
        const auto row = simplex_project(scores.row(k));
        std::copy(row.begin(), row.end(), alpha.row(k).begin());
    }
    return alpha;
}

Mat attend(const Mat& q, const Mat& alpha) {
    if (alpha.cols() != q.rows())
        throw std::invalid_argument("attend: attention has " + std::to_string(alpha.cols()) +
                                    " patches, features have " + std::to_string(q.rows()));
    Mat out(alpha.rows(), q.cols());
    for (std::size_t k = 0; k < alpha.rows(); ++k)
        for (std::size_t p = 0; p < q.rows(); ++p) {
            const double w = alpha(k, p);
            if (w == 0.0) continue;
            for (std::size_t j = 0; j < q.cols(); ++j) out(k, j) += w * q(p, j);
        }
    return out;
}

std::vector<double> class_scores_with(const Mat& q, const WeightTensor& a, const Mat& alpha) {
    check_shapes(q, a);
    if (alpha.rows() != a.classes() || alpha.cols() != a.patches())
        throw std::invalid_argument("class_scores: attention shape does not match weights");
    std::vector<double> f(a.classes(), 0.0);
    for (std::size_t k = 0; k < a.classes(); ++k)
        for (std::size_t p = 0; p < a.patches(); ++p)
            if (alpha(k, p) != 0.0) f[k] += alpha(k, p) * dot(q.row(p), a.block(k, p));
    return f;
}

ForwardPass forward(const Mat& q, const WeightTensor& a) {
    ForwardPass out;
    out.scores = attention_scores(q, a);
    out.alpha = attention_weights(out.scores);
    out.f = class_scores_with(q, a, out.alpha);
    return out;
}

std::vector<double> class_scores(const Mat& q, const WeightTensor& a) { return forward(q, a).f; }

std::size_t argmax(std::span<const double> f) {
    if (f.empty()) throw std::invalid_argument("argmax: empty score vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < f.size(); ++k)
        if (f[k] > f[best]) best = k;
    return best;
}

void ModelBundle::validate() const {
    spec.validate();
    if (classes < 2) throw std::invalid_argument("ModelBundle: need at least 2 classes");
    if (rff.patch_dim() != spec.patch_dim())
        throw std::invalid_argument("ModelBundle: RFF patch_dim " + std::to_string(rff.patch_dim()) +
                                    " != C*T/P " + std::to_string(spec.patch_dim()));
    if (rff.b.size() != rff.dim()) throw std::invalid_argument("ModelBundle: RFF bias length != m");
    if (weights.classes() != classes || weights.patches() != spec.patches || weights.dim() != rff.dim())
        throw std::invalid_argument("ModelBundle: weights are not shaped K x P x m");
    if (norm.mean.size() != spec.channels || norm.stddev.size() != spec.channels)
        throw std::invalid_argument("ModelBundle: normalization stats do not match channel count");
}

Prediction predict(const Mat& x, const ModelBundle& bundle) {
    const Mat q = featurize(zscore_apply(x, bundle.norm), bundle.spec, bundle.rff);
    Prediction out;
    out.scores = class_scores(q, bundle.weights);
    out.label = argmax(out.scores);
    return out;
}

ParamCount param_count(const PatchSpec& spec, std::size_t classes, std::size_t m) {
    return {classes * spec.patches * m, spec.patch_dim() * m + m};
}

ParamCount param_count(const ModelBundle& bundle) {
    return param_count(bundle.spec, bundle.classes, bundle.rff.dim());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'C', 'V', 'X', 'A'};
constexpr std::uint32_t kMaxDim = 1u << 16;
constexpr std::uint64_t kMaxPayload = 1ull << 26;

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    out.insert(out.end(), raw.begin(), raw.end());
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        if (bytes_.size() - pos_ < sizeof(T))
            throw FormatError(FormatError::Code::truncated,
                              "model bundle truncated at byte " + std::to_string(pos_) + " of " +
                                  std::to_string(bytes_.size()));
        std::array<std::uint8_t, sizeof(T)> raw;
        std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw.data(), sizeof(T));
        return value;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> serialize(const ModelBundle& bundle, Precision precision) {
    bundle.validate();
    const bool f32 = precision == Precision::f32;
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.classes));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.spec.channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.spec.frames));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.spec.patches));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.rff.dim()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(bundle.loss));
    put<std::uint8_t>(out, f32 ? 4 : 8);
    put<std::uint16_t>(out, bundle.trained_epochs > 0 ? 1 : 0);
    put<std::uint32_t>(out, bundle.trained_epochs);
    put<double>(out, bundle.rff.gamma);

    auto reals = [&](const std::vector<double>& values) {
        for (double v : values) {
            if (f32)
                put<float>(out, static_cast<float>(v));
            else
                put<double>(out, v);
        }
    };
    reals(bundle.norm.mean);
    reals(bundle.norm.stddev);
    reals(bundle.rff.b);
    reals(bundle.rff.w.data());
    reals(bundle.weights.values());
    return out;
}

ModelBundle deserialize(std::span<const std::uint8_t> bytes) {
    using Code = FormatError::Code;
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw FormatError(Code::bad_magic, "not a model bundle (bad magic)");
    Reader in(bytes.subspan(kMagic.size()));
    const auto version = in.get<std::uint32_t>();
    if (version != kFormatVersion)
        throw FormatError(Code::version_mismatch, "model bundle format version " + std::to_string(version) +
                                                      ", this build reads version " +
                                                      std::to_string(kFormatVersion));
    std::array<std::uint32_t, 5> dims{};
    for (auto& d : dims) d = in.get<std::uint32_t>();
    const auto [classes, channels, frames, patches, m] = dims;
    const auto loss = in.get<std::uint8_t>();
    const auto real_bytes = in.get<std::uint8_t>();
    const auto flags = in.get<std::uint16_t>();
    const auto epochs = in.get<std::uint32_t>();
    const auto gamma = in.get<double>();

    for (auto d : dims)
        if (d == 0 || d > kMaxDim)
            throw FormatError(Code::dimension_overflow, "model bundle dimension " + std::to_string(d) +
                                                            " outside [1, " + std::to_string(kMaxDim) + "]");
    if (frames % patches != 0)
        throw FormatError(Code::invalid_field, "model bundle: patches do not divide frames");
    const std::uint64_t patch_dim = std::uint64_t{channels} * frames / patches;
    const std::uint64_t count = 2ull * channels + m + patch_dim * m + std::uint64_t{classes} * patches * m;
    if (patch_dim * m > kMaxPayload || std::uint64_t{classes} * patches * m > kMaxPayload)
        throw FormatError(Code::dimension_overflow, "model bundle payload too large");
    if (loss > 1) throw FormatError(Code::invalid_field, "model bundle: unknown loss kind " + std::to_string(loss));
    if (real_bytes != 4 && real_bytes != 8)
        throw FormatError(Code::invalid_field, "model bundle: real width " + std::to_string(real_bytes));
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw FormatError(Code::invalid_field, "model bundle: gamma must be > 0");
    if (in.remaining() < count * real_bytes)
        throw FormatError(Code::truncated, "model bundle truncated: payload needs " +
                                               std::to_string(count * real_bytes) + " bytes, " +
                                               std::to_string(in.remaining()) + " present");
    if (in.remaining() > count * real_bytes)
        throw FormatError(Code::trailing_data, "model bundle has " +
                                                   std::to_string(in.remaining() - count * real_bytes) +
                                                   " unexpected trailing bytes");

    auto reals = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = real_bytes == 4 ? static_cast<double>(in.get<float>()) : in.get<double>();
        return v;
    };

    ModelBundle b;
    b.spec = {channels, frames, patches};
    b.classes = classes;
    b.loss = static_cast<LossKind>(loss);
    b.trained_epochs = (flags & 1u) ? epochs : 0;
    b.norm.mean = reals(channels);
    b.norm.stddev = reals(channels);
    b.rff.gamma = gamma;
    b.rff.b = reals(m);
    b.rff.w = Mat(patch_dim, m, reals(patch_dim * m));
    b.weights = WeightTensor(classes, patches, m);
    b.weights.values() = reals(std::size_t{classes} * patches * m);
    for (const auto* v : {&b.norm.mean, &b.norm.stddev, &b.rff.b, &b.rff.w.data(), &b.weights.values()})
        for (double x : *v)
            if (!std::isfinite(x)) throw FormatError(Code::invalid_field, "model bundle holds a non-finite value");
    return b;
}

void save_bundle(const ModelBundle& bundle, const std::string& path, Precision precision) {
    const auto bytes = serialize(bundle, precision);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model '" + path + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

} // namespace cvxattn
