#include "cvxattn/losses.hpp"

#include <stdexcept>
#include <string>

namespace cvxattn {

namespace {

void check_labels(std::span<const std::size_t> labels, std::size_t n, std::size_t classes) {
    if (labels.size() != n)
        throw std::invalid_argument("loss: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(n) + " score rows");
    for (std::size_t y : labels)
        if (y >= classes) throw std::invalid_argument("loss: label " + std::to_string(y) + " out of range");
}

// Highest rival score and its index, lowest index on ties.
std::pair<std::size_t, double> best_rival(std::span<const double> f, std::size_t y) {
    std::size_t best = y == 0 ? 1 : 0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (k != y && f[k] > f[best]) best = k;
    return {best, f[best]};
}

void check_batch(const BatchView& batch, const WeightTensor& a) {
    if (batch.features.size() != batch.labels.size() || batch.features.size() != batch.alpha.size())
        throw std::invalid_argument("batch: features, labels and attention differ in length");
    if (batch.features.empty()) throw std::invalid_argument("batch: empty");
    for (std::size_t i = 0; i < batch.features.size(); ++i) {
        const Mat& q = batch.features[i];
        const Mat& al = batch.alpha[i];
        if (q.rows() != a.patches() || q.cols() != a.dim())
            throw std::invalid_argument("batch: feature matrix " + std::to_string(i) + " has the wrong shape");
        if (al.rows() != a.classes() || al.cols() != a.patches())
            throw std::invalid_argument("batch: attention matrix " + std::to_string(i) + " has the wrong shape");
    }
    check_labels(batch.labels, batch.features.size(), a.classes());
}

// grad block (k, .) += coeff * sum_p alpha[k][p] Q_p
void accumulate(WeightTensor& g, const Mat& q, const Mat& alpha, std::size_t k, double coeff) {
    for (std::size_t p = 0; p < g.patches(); ++p) {
        const double w = coeff * alpha(k, p);
        if (w == 0.0) continue;
        auto block = g.block(k, p);
        const auto row = q.row(p);
        for (std::size_t j = 0; j < g.dim(); ++j) block[j] += w * row[j];
    }
}

} // namespace

double hinge_loss(const Mat& f, std::span<const std::size_t> labels) {
    if (f.rows() == 0) throw std::invalid_argument("hinge_loss: need at least one sample");
    if (f.cols() < 2) throw std::invalid_argument("hinge_loss: need at least 2 classes");
    check_labels(labels, f.rows(), f.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < f.rows(); ++i) {
        const auto row = f.row(i);
        const double margin = 1.0 - row[labels[i]] + best_rival(row, labels[i]).second;
        if (margin > 0.0) total += margin;
    }
    return total / static_cast<double>(f.rows());
}

double squared_loss(const Mat& f, const Mat& onehot) {
    if (f.rows() != onehot.rows() || f.cols() != onehot.cols())
        throw std::invalid_argument("squared_loss: scores and targets differ in shape");
    if (f.rows() == 0) throw std::invalid_argument("squared_loss: need at least one sample");
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = onehot.data()[i] - f.data()[i];
        total += d * d;
    }
    return total / static_cast<double>(f.rows());
}

Mat one_hot(std::span<const std::size_t> labels, std::size_t classes) {
    Mat y(labels.size(), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) throw std::invalid_argument("one_hot: label out of range");
        y(i, labels[i]) = 1.0;
    }
    return y;
}

double loss_value(LossKind kind, const Mat& f, std::span<const std::size_t> labels) {
    if (kind == LossKind::hinge) return hinge_loss(f, labels);
    check_labels(labels, f.rows(), f.cols());
    return squared_loss(f, one_hot(labels, f.cols()));
}

Mat batch_scores(const BatchView& batch, const WeightTensor& a) {
    check_batch(batch, a);
    Mat f(batch.features.size(), a.classes());
    for (std::size_t i = 0; i < batch.features.size(); ++i) {
        const auto fi = class_scores_with(batch.features[i], a, batch.alpha[i]);
        std::copy(fi.begin(), fi.end(), f.row(i).begin());
    }
    return f;
}

WeightTensor hinge_subgradient(const BatchView& batch, const WeightTensor& a) {
    const Mat f = batch_scores(batch, a);
    WeightTensor g(a.classes(), a.patches(), a.dim());
    const double inv_n = 1.0 / static_cast<double>(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        const std::size_t y = batch.labels[i];
        const auto [rival, rival_score] = best_rival(f.row(i), y);
        if (1.0 - f(i, y) + rival_score <= 0.0) continue;
        accumulate(g, batch.features[i], batch.alpha[i], rival, inv_n);
        accumulate(g, batch.features[i], batch.alpha[i], y, -inv_n);
    }
    return g;
}

WeightTensor squared_gradient(const BatchView& batch, const WeightTensor& a) {
    const Mat f = batch_scores(batch, a);
    WeightTensor g(a.classes(), a.patches(), a.dim());
    const double inv_n = 1.0 / static_cast<double>(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t k = 0; k < a.classes(); ++k) {
            const double target = batch.labels[i] == k ? 1.0 : 0.0;
            accumulate(g, batch.features[i], batch.alpha[i], k, 2.0 * (f(i, k) - target) * inv_n);
        }
    return g;
}

WeightTensor loss_gradient(LossKind kind, const BatchView& batch, const WeightTensor& a) {
    return kind == LossKind::hinge ? hinge_subgradient(batch, a) : squared_gradient(batch, a);
}

double pipeline_loss(LossKind kind, std::span<const Mat> features, std::span<const std::size_t> labels,
                     const WeightTensor& a) {
    if (features.empty()) throw std::invalid_argument("pipeline_loss: empty sample set");
    Mat f(features.size(), a.classes());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto fi = class_scores(features[i], a);
        std::copy(fi.begin(), fi.end(), f.row(i).begin());
    }
    return loss_value(kind, f, labels);
}

} // namespace cvxattn
