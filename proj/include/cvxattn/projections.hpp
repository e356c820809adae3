#pragma once

// Convex projection operators used by the attention layer and the
// nuclear-norm constraint.

#include <span>
#include <vector>

#include "cvxattn/numkernel.hpp"

namespace cvxattn {

/// Threshold theta such that sum_p max(v_p - theta, 0) == radius.
/// Sort-descending construction; ties keep original index order.
double simplex_threshold(std::span<const double> v, double radius = 1.0);

/// Euclidean projection onto {a : a >= 0, sum a = 1}.
std::vector<double> simplex_project(std::span<const double> s);

/// ||s - simplex_project(s)||^2. Half of it has gradient s - simplex_project(s).
double squared_distance_to_simplex(std::span<const double> s);

/// Projection of a nonnegative vector onto {x >= 0 : sum x <= radius}.
std::vector<double> l1_ball_project_nonneg(std::span<const double> sigma, double radius);

/// Projection onto {A : ||A||_* <= radius} by thresholding singular values.
Mat nuclear_ball_project(const Mat& a, double radius);

/// Max-shifted softmax. Reference only: used to demonstrate non-convexity.
std::vector<double> softmax_ref(std::span<const double> s);

} // namespace cvxattn
