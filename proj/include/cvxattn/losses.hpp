#pragma once

// Convex losses over class scores and their (sub)gradients with respect to
// the weight tensor, attention weights held fixed.

#include <cstddef>
#include <span>
#include <vector>

#include "cvxattn/model.hpp"
#include "cvxattn/numkernel.hpp"

namespace cvxattn {

/// Mean of max(0, 1 - f_y + max_{k != y} f_k). `f` is n x K.
double hinge_loss(const Mat& f, std::span<const std::size_t> labels);

/// Mean of ||Y_i - f_i||^2. `onehot` is n x K.
double squared_loss(const Mat& f, const Mat& onehot);

Mat one_hot(std::span<const std::size_t> labels, std::size_t classes);

double loss_value(LossKind kind, const Mat& f, std::span<const std::size_t> labels);

/// A mini-batch view: features[i] is P x m, alpha[i] is K x P.
struct BatchView {
    std::span<const Mat> features;
    std::span<const std::size_t> labels;
    std::span<const Mat> alpha;
};

/// Scores f (n x K) with the batch's attention held fixed.
Mat batch_scores(const BatchView& batch, const WeightTensor& a);

/// Subgradient of the hinge loss. A sample with positive margin violation
/// adds alpha[j*][p] Q_p to block (j*, p) and subtracts alpha[y][p] Q_p from
/// block (y, p); j* is the lowest-index highest rival. Zero margin counts as
/// satisfied.
WeightTensor hinge_subgradient(const BatchView& batch, const WeightTensor& a);

/// Block (k, p) receives 2 (f_k - Y_k) alpha[k][p] Q_p, averaged.
WeightTensor squared_gradient(const BatchView& batch, const WeightTensor& a);

WeightTensor loss_gradient(LossKind kind, const BatchView& batch, const WeightTensor& a);

/// Loss with attention recomputed from `a` for every sample.
double pipeline_loss(LossKind kind, std::span<const Mat> features, std::span<const std::size_t> labels,
                     const WeightTensor& a);

} // namespace cvxattn
