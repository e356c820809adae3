#pragma once

// Temporal patch partitioning and the fixed random Fourier feature map.

#include <cstddef>
#include <vector>

#include "cvxattn/numkernel.hpp"

namespace cvxattn {

/// Shape of one gesture: channels x frames, split into equal temporal patches.
struct PatchSpec {
    std::size_t channels = 0;
    std::size_t frames = 0;
    std::size_t patches = 0;

    std::size_t frames_per_patch() const { return frames / patches; }
    std::size_t patch_dim() const { return channels * frames / patches; }

    /// Throws std::invalid_argument unless patches divides frames and patch_dim >= 1.
    void validate() const;

    friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

/// Split X (channels x frames) into `patches` flattened vectors. Within a patch
/// values are laid out frame by frame, all channels of a frame contiguous.
std::vector<std::vector<double>> patchify(const Mat& x, const PatchSpec& spec);
Mat unpatchify(const std::vector<std::vector<double>>& patches, const PatchSpec& spec);

/// phi(x) = sqrt(2/m) cos(x^T W + b), W ~ N(0, 2 gamma), b ~ U[0, 2 pi).
/// Immutable once built.
struct RffMap {
    Mat w;                 // patch_dim x m
    std::vector<double> b; // m
    double gamma = 0.0;

    std::size_t patch_dim() const { return w.rows(); }
    std::size_t dim() const { return w.cols(); }
};

RffMap rff_init(const PatchSpec& spec, std::size_t m, double gamma, RngStream& rng);

/// Feature vector for a single flattened patch.
std::vector<double> rff_features(std::span<const double> patch, const RffMap& map);

/// Q (patches x m), one row per patch.
Mat rff_transform(const std::vector<std::vector<double>>& patches, const RffMap& map);

/// patchify followed by rff_transform.
Mat featurize(const Mat& x, const PatchSpec& spec, const RffMap& map);

} // namespace cvxattn
