#include "cvxattn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cvxattn/losses.hpp"
#include "cvxattn/projections.hpp"

namespace cvxattn {

double midpoint_violation(LossKind loss, const std::vector<Mat>& features, const std::vector<std::size_t>& labels,
                          const WeightTensor& a1, const WeightTensor& a2) {
    WeightTensor mid = a1;
    for (std::size_t i = 0; i < mid.size(); ++i) mid.values()[i] = 0.5 * a1.values()[i] + 0.5 * a2.values()[i];
    const double l1 = pipeline_loss(loss, features, labels, a1);
    const double l2 = pipeline_loss(loss, features, labels, a2);
    const double lm = pipeline_loss(loss, features, labels, mid);
    return lm - 0.5 * l1 - 0.5 * l2;
}

ConvexityTrialReport convexity_check(const ModelBundle& bundle, const Dataset& testset, LossKind loss,
                                     std::size_t trials, double noise_stddev, RngStream& rng, double tolerance) {
    if (trials == 0) throw std::invalid_argument("convexity_check: need at least one trial");
    if (testset.samples.empty()) throw std::invalid_argument("convexity_check: empty test set");
    if (bundle.trained_epochs == 0) throw std::invalid_argument("convexity_check: model bundle is untrained");
    bundle.validate();

    std::vector<Mat> features;
    std::vector<std::size_t> labels;
    for (const auto& s : testset.samples) {
        features.push_back(featurize(zscore_apply(s.x, bundle.norm), bundle.spec, bundle.rff));
        labels.push_back(s.label);
    }

    ConvexityTrialReport report;
    report.loss = loss;
    report.noise_stddev = noise_stddev;
    report.tolerance = tolerance;
    report.trials = trials;
    report.max_violation = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        WeightTensor a1 = bundle.weights;
        WeightTensor a2 = bundle.weights;
        for (auto& v : a1.values()) v += noise_stddev * rng.next_gauss();
        for (auto& v : a2.values()) v += noise_stddev * rng.next_gauss();
        const double viol = midpoint_violation(loss, features, labels, a1, a2);
        report.violations.push_back(viol);
        if (viol <= tolerance) ++report.satisfied;
        sum += viol;
        report.max_violation = std::max(report.max_violation, viol);
    }
    report.mean_violation = sum / static_cast<double>(trials);
    return report;
}

PairCheck check_pair(const std::vector<double>& v, const std::vector<double>& w) {
    if (v.size() != w.size()) throw std::invalid_argument("check_pair: length mismatch");
    double dist2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dist2 += (v[i] - w[i]) * (v[i] - w[i]);
    PairCheck out;
    if (std::sqrt(dist2) < 1e-12) {
        out.skipped = true;
        return out;
    }
    const auto pv = simplex_project(v);
    const auto pw = simplex_project(w);
    double proj2 = 0.0;
    double inner = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double dp = pv[i] - pw[i];
        proj2 += dp * dp;
        inner += dp * (v[i] - w[i]);
    }
    out.ratio = std::sqrt(proj2 / dist2);
    out.firm_gap = proj2 - inner;
    return out;
}

NonexpansivenessReport nonexpansiveness_sweep(std::size_t pairs, std::size_t dim, RngStream& rng, double scale) {
    if (pairs == 0) throw std::invalid_argument("nonexpansiveness_sweep: need at least one pair");
    if (dim == 0) throw std::invalid_argument("nonexpansiveness_sweep: dimension must be >= 1");
    NonexpansivenessReport r;
    r.pairs = pairs;
    r.max_firm_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto v = uniform_sample(rng, dim, -scale, scale);
        const auto w = uniform_sample(rng, dim, -scale, scale);
        const PairCheck c = check_pair(v, w);
        if (c.skipped) {
            ++r.skipped;
            continue;
        }
        r.max_ratio = std::max(r.max_ratio, c.ratio);
        r.max_firm_gap = std::max(r.max_firm_gap, c.firm_gap);
    }
    return r;
}

SoftmaxCounterexample softmax_counterexample() {
    const std::vector<double> z{0.0, 0.0};
    const std::vector<double> z2{2.0, 0.0};
    const std::vector<double> mid{1.0, 0.0};

    SoftmaxCounterexample out;
    out.at_midpoint = softmax_ref(mid);
    const auto s1 = softmax_ref(z);
    const auto s2 = softmax_ref(z2);
    out.interpolated = {0.5 * s1[0] + 0.5 * s2[0], 0.5 * s1[1] + 0.5 * s2[1]};
    out.jensen_violated = out.at_midpoint[0] > out.interpolated[0];
    out.matches_reference =
        std::abs(out.at_midpoint[0] - 0.731) <= 1e-3 && std::abs(out.interpolated[0] - 0.691) <= 1e-3;

    out.d2_midpoint = squared_distance_to_simplex(mid);
    out.d2_interpolated = 0.5 * squared_distance_to_simplex(z) + 0.5 * squared_distance_to_simplex(z2);
    out.simplex_distance_convex = out.d2_midpoint <= out.d2_interpolated + 1e-12;
    return out;
}

} // namespace cvxattn
