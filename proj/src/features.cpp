#include "cvxattn/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cvxattn {

void PatchSpec::validate() const {
    if (channels == 0 || frames == 0 || patches == 0)
        throw std::invalid_argument("PatchSpec: channels, frames and patches must be >= 1");
    if (frames % patches != 0)
        throw std::invalid_argument("PatchSpec: patches (" + std::to_string(patches) +
                                    ") must divide frames (" + std::to_string(frames) + ")");
}

std::vector<std::vector<double>> patchify(const Mat& x, const PatchSpec& spec) {
    spec.validate();
    if (x.rows() != spec.channels || x.cols() != spec.frames)
        throw std::invalid_argument("patchify: input is " + std::to_string(x.rows()) + "x" +
                                    std::to_string(x.cols()) + ", expected " +
                                    std::to_string(spec.channels) + "x" +
                                    std::to_string(spec.frames));
    const std::size_t len = spec.frames_per_patch();
    std::vector<std::vector<double>> out(spec.patches);
    for (std::size_t p = 0; p < spec.patches; ++p) {
        auto& v = out[p];
        v.reserve(spec.patch_dim());
        for (std::size_t f = p * len; f < (p + 1) * len; ++f)
            for (std::size_t c = 0; c < spec.channels; ++c) v.push_back(x(c, f));
    }
    return out;
}

Mat unpatchify(const std::vector<std::vector<double>>& patches, const PatchSpec& spec) {
    spec.validate();
    if (patches.size() != spec.patches) throw std::invalid_argument("unpatchify: wrong patch count");
    const std::size_t len = spec.frames_per_patch();
    Mat x(spec.channels, spec.frames);
    for (std::size_t p = 0; p < spec.patches; ++p) {
        if (patches[p].size() != spec.patch_dim())
            throw std::invalid_argument("unpatchify: wrong patch length");
        std::size_t i = 0;
        for (std::size_t f = p * len; f < (p + 1) * len; ++f)
            for (std::size_t c = 0; c < spec.channels; ++c) x(c, f) = patches[p][i++];
    }
    return x;
}

RffMap rff_init(const PatchSpec& spec, std::size_t m, double gamma, RngStream& rng) {
    spec.validate();
    if (m == 0) throw std::invalid_argument("rff_init: feature dimension m must be >= 1");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("rff_init: gamma must be > 0");
    RffMap map;
    map.gamma = gamma;
    map.w = Mat(spec.patch_dim(), m, gauss_sample(rng, spec.patch_dim() * m, 0.0, std::sqrt(2.0 * gamma)));
    map.b = uniform_sample(rng, m, 0.0, 2.0 * std::numbers::pi);
    return map;
}

std::vector<double> rff_features(std::span<const double> patch, const RffMap& map) {
    if (patch.size() != map.patch_dim())
        throw std::invalid_argument("rff_transform: patch length " + std::to_string(patch.size()) +
                                    " != map patch_dim " + std::to_string(map.patch_dim()));
    const std::size_t m = map.dim();
    const double scale = std::sqrt(2.0 / static_cast<double>(m));
    std::vector<double> z(map.b);
    for (std::size_t i = 0; i < patch.size(); ++i) {
        const auto wrow = map.w.row(i);
        for (std::size_t j = 0; j < m; ++j) z[j] += patch[i] * wrow[j];
    }
    for (auto& v : z) v = scale * std::cos(v);
    return z;
}

Mat rff_transform(const std::vector<std::vector<double>>& patches, const RffMap& map) {
    Mat q(patches.size(), map.dim());
    for (std::size_t p = 0; p < patches.size(); ++p) {
        const auto row = rff_features(patches[p], map);
        std::copy(row.begin(), row.end(), q.row(p).begin());
    }
    return q;
}

Mat featurize(const Mat& x, const PatchSpec& spec, const RffMap& map) {
    return rff_transform(patchify(x, spec), map);
}

} // namespace cvxattn
