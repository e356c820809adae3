#pragma once

// Executable checks of the convexity claims: the midpoint protocol on a
// trained model, simplex nonexpansiveness sweeps and the softmax
// counterexample. Every check returns its measurements and a verdict.

#include <cstddef>
#include <string>
#include <vector>

#include "cvxattn/dataio.hpp"
#include "cvxattn/model.hpp"

namespace cvxattn {

struct ConvexityTrialReport {
    LossKind loss = LossKind::hinge;
    double noise_stddev = 0.1;
    double tolerance = 1e-6;
    std::size_t trials = 0;
    std::size_t satisfied = 0;
    double mean_violation = 0.0;   // L(mid) - L(A1)/2 - L(A2)/2; negative = strict
    double max_violation = 0.0;
    std::vector<double> violations;

    bool passed() const { return satisfied == trials; }
};

/// A1, A2 = trained A + N(0, noise^2) each; loss evaluated on `testset` with
/// attention recomputed at A1, A2 and their midpoint.
ConvexityTrialReport convexity_check(const ModelBundle& bundle, const Dataset& testset, LossKind loss,
                                     std::size_t trials, double noise_stddev, RngStream& rng,
                                     double tolerance = 1e-6);

/// Midpoint violation for one explicit pair; exposed for the degenerate case.
double midpoint_violation(LossKind loss, const std::vector<Mat>& features, const std::vector<std::size_t>& labels,
                          const WeightTensor& a1, const WeightTensor& a2);

struct NonexpansivenessReport {
    std::size_t pairs = 0;
    std::size_t skipped = 0;          // ||v - w|| < 1e-12
    double max_ratio = 0.0;           // ||Pv - Pw|| / ||v - w||
    double max_firm_gap = 0.0;        // ||Pv - Pw||^2 - <Pv - Pw, v - w>
    double lipschitz_tolerance = 1e-9;
    double firm_tolerance = 1e-12;

    bool passed() const { return max_ratio <= 1.0 + lipschitz_tolerance && max_firm_gap <= firm_tolerance; }
};

struct PairCheck {
    bool skipped = false;
    double ratio = 0.0;
    double firm_gap = 0.0;
};

PairCheck check_pair(const std::vector<double>& v, const std::vector<double>& w);

/// Random pairs with entries in [-scale, scale].
NonexpansivenessReport nonexpansiveness_sweep(std::size_t pairs, std::size_t dim, RngStream& rng,
                                              double scale = 5.0);

struct SoftmaxCounterexample {
    std::vector<double> at_midpoint;       // softmax(0.5 z + 0.5 z')
    std::vector<double> interpolated;      // 0.5 softmax(z) + 0.5 softmax(z')
    double d2_midpoint = 0.0;              // squared simplex distance at the midpoint
    double d2_interpolated = 0.0;          // 0.5 d2(z) + 0.5 d2(z')
    bool jensen_violated = false;          // softmax breaks the inequality
    bool matches_reference = false;        // 0.731 / 0.691 within 1e-3
    bool simplex_distance_convex = false;  // d2 satisfies it at the same points

    bool passed() const { return jensen_violated && matches_reference && simplex_distance_convex; }
};

/// z = (0, 0), z' = (2, 0), t = 0.5.
SoftmaxCounterexample softmax_counterexample();

} // namespace cvxattn
