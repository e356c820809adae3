#include "cvxattn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "cvxattn/losses.hpp"
#include "cvxattn/projections.hpp"

namespace cvxattn {

void TrainConfig::validate() const {
    spec.validate();
    if (!(radius > 0.0)) throw std::invalid_argument("TrainConfig: R must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("TrainConfig: gamma must be > 0");
    if (!(eta > 0.0)) throw std::invalid_argument("TrainConfig: eta must be > 0");
    if (m == 0) throw std::invalid_argument("TrainConfig: m must be >= 1");
    if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (batches_per_epoch == 0) throw std::invalid_argument("TrainConfig: batches_per_epoch must be >= 1");
    if (classes < 2) throw std::invalid_argument("TrainConfig: need at least 2 classes");
}

std::vector<std::string> preset_names() { return {"tap", "swipe", "tap-appxB", "swipe-appxB"}; }

TrainConfig preset(const std::string& name) {
    TrainConfig c;
    if (name == "tap" || name == "swipe") {
        // Default sizing: R=10, m=3, gamma=1, eta=0.01, |B|=32, B=128.
        c.radius = 10.0;
        c.m = 3;
        c.gamma = 1.0;
        c.eta = 0.01;
        c.epochs = 100;
        c.batch_size = 32;
        c.batches_per_epoch = 128;
        c.spec = name == "tap" ? PatchSpec{6, 10, 10} : PatchSpec{6, 30, 30};
        return c;
    }
    if (name == "tap-appxB") {
        c.radius = 5.158;
        c.m = 9;
        c.gamma = 0.789;
        c.eta = 0.0297;
        c.epochs = 200;
        c.batch_size = 16;
        c.batches_per_epoch = 128;
        c.variance_meta = 50;
        c.spec = {6, 10, 10};
        return c;
    }
    if (name == "swipe-appxB") {
        c.radius = 10.770;
        c.m = 3;
        c.gamma = 0.135;
        c.eta = 0.0703;
        c.epochs = 300;
        c.batch_size = 16;
        c.batches_per_epoch = 128;
        c.variance_meta = 30;
        c.spec = {6, 30, 30};
        return c;
    }
    throw std::invalid_argument("unknown preset '" + name + "' (valid: tap, swipe, tap-appxB, swipe-appxB)");
}

namespace {

void check_dataset(const Dataset& data, const TrainConfig& config) {
    if (data.samples.empty()) throw std::invalid_argument("train: empty dataset");
    if (data.classes() != config.classes)
        throw std::invalid_argument("train: dataset has " + std::to_string(data.classes()) +
                                    " classes, config expects " + std::to_string(config.classes));
    const auto counts = data.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] == 0)
            throw std::invalid_argument("train: class '" + data.class_names[k] + "' has no samples");
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const Mat& x = data.samples[i].x;
        if (x.rows() != config.spec.channels || x.cols() != config.spec.frames)
            throw std::invalid_argument("train: sample " + std::to_string(i) + " is " + std::to_string(x.rows()) +
                                        "x" + std::to_string(x.cols()) + ", config expects " +
                                        std::to_string(config.spec.channels) + "x" +
                                        std::to_string(config.spec.frames));
        if (!x.all_finite()) throw std::invalid_argument("train: sample " + std::to_string(i) + " is not finite");
    }
}

double accuracy_on(const std::vector<Mat>& features, const std::vector<std::size_t>& labels,
                   const WeightTensor& a, Mat& scores_out) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto f = class_scores(features[i], a);
        std::copy(f.begin(), f.end(), scores_out.row(i).begin());
        if (argmax(f) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(features.size());
}

} // namespace

TrainResult train(const Dataset& data, const TrainConfig& config) {
    config.validate();
    check_dataset(data, config);
    const auto started = std::chrono::steady_clock::now();

    const RngStream root(config.seed);
    RngStream rff_rng = root.derive(1);
    RngStream init_rng = root.derive(2);
    RngStream batch_rng = root.derive(3);

    TrainResult result;
    ModelBundle& bundle = result.bundle;
    bundle.spec = config.spec;
    bundle.classes = config.classes;
    bundle.loss = config.loss;
    bundle.norm = zscore_fit(data.samples);
    bundle.rff = rff_init(config.spec, config.m, config.gamma, rff_rng);

    const std::size_t n = data.samples.size();
    std::vector<Mat> features;
    std::vector<std::size_t> labels;
    features.reserve(n);
    labels.reserve(n);
    for (const auto& s : data.samples) {
        features.push_back(featurize(zscore_apply(s.x, bundle.norm), config.spec, bundle.rff));
        labels.push_back(s.label);
    }

    WeightTensor a(config.classes, config.spec.patches, config.m);
    a.values() = gauss_sample(init_rng, a.size(), 0.0, 0.01);

    std::vector<Mat> batch_q(config.batch_size);
    std::vector<Mat> batch_alpha(config.batch_size);
    std::vector<std::size_t> batch_y(config.batch_size);
    Mat scores(n, config.classes);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
            for (std::size_t i = 0; i < config.batch_size; ++i) {
                const std::size_t idx = batch_rng.next_index(n);
                batch_q[i] = features[idx];
                batch_y[i] = labels[idx];
                batch_alpha[i] = attention_weights(attention_scores(batch_q[i], a));
            }
            const WeightTensor g = loss_gradient(config.loss, {batch_q, batch_y, batch_alpha}, a);
            auto& values = a.values();
            for (std::size_t j = 0; j < values.size(); ++j) values[j] -= config.eta * g.values()[j];
        }
        a.assign(nuclear_ball_project(a.as_matrix(), config.radius));

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_accuracy = accuracy_on(features, labels, a, scores);
        rec.loss = loss_value(config.loss, scores, labels);
        rec.nuclear_norm = nuclear_norm(a.as_matrix());
        if (result.report.epochs_to_convergence == 0 && rec.train_accuracy == 1.0)
            result.report.epochs_to_convergence = epoch;
        result.report.epochs.push_back(rec);
    }

    bundle.weights = std::move(a);
    bundle.trained_epochs = static_cast<std::uint32_t>(config.epochs);
    result.report.final_nuclear_norm = result.report.epochs.back().nuclear_norm;
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::size_t Confusion::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

double Confusion::accuracy() const {
    std::size_t diag = 0;
    for (std::size_t k = 0; k < classes; ++k) diag += at(k, k);
    const std::size_t t = total();
    return t == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(t);
}

double macro_f1(const Confusion& confusion) {
    const std::size_t k_count = confusion.classes;
    if (k_count == 0 || confusion.total() == 0) throw std::invalid_argument("macro_f1: empty confusion matrix");
    double sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        std::size_t predicted = 0;
        std::size_t actual = 0;
        for (std::size_t j = 0; j < k_count; ++j) {
            predicted += confusion.at(j, k);
            actual += confusion.at(k, j);
        }
        const double tp = static_cast<double>(confusion.at(k, k));
        const double precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
        const double recall = actual ? tp / static_cast<double>(actual) : 0.0;
        if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
    }
    return sum / static_cast<double>(k_count);
}

Confusion evaluate(const ModelBundle& bundle, const Dataset& data) {
    Confusion c(bundle.classes);
    for (const auto& s : data.samples) ++c.at(s.label, predict(s.x, bundle).label);
    return c;
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("kfold: need at least 2 folds");
    const auto counts = data.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] < folds)
            throw std::invalid_argument("kfold: class '" + data.class_names[k] + "' has " +
                                        std::to_string(counts[k]) + " samples, fewer than " +
                                        std::to_string(folds) + " folds");
    RngStream rng = RngStream(seed).derive(0x5f01d);
    std::vector<std::size_t> assignment(data.size(), 0);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.samples[i].label == k) members.push_back(i);
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.next_index(i)]);
        for (std::size_t i = 0; i < members.size(); ++i) assignment[members[i]] = (offset + i) % folds;
        offset = (offset + members.size()) % folds;
    }
    return assignment;
}

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double pop_std(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

KFoldReport kfold_evaluate(const Dataset& data, const TrainConfig& config, std::size_t folds, std::size_t jobs) {
    config.validate();
    const auto assignment = stratified_folds(data, folds, config.seed);

    KFoldReport report;
    report.folds.resize(folds);
    auto run_fold = [&](std::size_t f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < data.size(); ++i) (assignment[i] == f ? test_idx : train_idx).push_back(i);
        TrainConfig fold_config = config;
        fold_config.seed = config.seed + f;
        const auto trained = train(data.subset(train_idx), fold_config);
        const Confusion c = evaluate(trained.bundle, data.subset(test_idx));
        report.folds[f] = {f, c.accuracy(), macro_f1(c), test_idx.size()};
    };

    jobs = std::clamp<std::size_t>(jobs, 1, folds);
    if (jobs == 1) {
        for (std::size_t f = 0; f < folds; ++f) run_fold(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < jobs; ++w)
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t f = next++; f < folds; f = next++) run_fold(f);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : workers) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::vector<double> acc, f1;
    for (const auto& r : report.folds) {
        acc.push_back(r.accuracy);
        f1.push_back(r.macro_f1);
    }
    report.mean_accuracy = mean_of(acc);
    report.std_accuracy = pop_std(acc, report.mean_accuracy);
    report.mean_f1 = mean_of(f1);
    report.std_f1 = pop_std(f1, report.mean_f1);
    return report;
}

SplitIndices stratified_split(const Dataset& data, std::uint64_t seed) {
    const auto counts = data.class_counts();
    std::size_t present = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] > 0) ++present;
        if (counts[k] < 5)
            throw std::invalid_argument("split: class '" + data.class_names[k] + "' has " +
                                        std::to_string(counts[k]) + " samples, need at least 5");
    }
    if (present < 2) throw std::invalid_argument("split: need at least 2 classes");
    RngStream rng = RngStream(seed).derive(0x5917);
    SplitIndices out;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.samples[i].label == k) members.push_back(i);
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.next_index(i)]);
        const auto n = static_cast<double>(members.size());
        const auto n_train = static_cast<std::size_t>(std::llround(0.6 * n));
        const auto n_val = static_cast<std::size_t>(std::llround(0.2 * n));
        for (std::size_t i = 0; i < members.size(); ++i) {
            auto& dest = i < n_train ? out.train : (i < n_train + n_val ? out.validation : out.test);
            dest.push_back(members[i]);
        }
    }
    for (auto* v : {&out.train, &out.validation, &out.test}) std::sort(v->begin(), v->end());
    return out;
}

SplitReport split_evaluate(const Dataset& data, const TrainConfig& config) {
    config.validate();
    const SplitIndices split = stratified_split(data, config.seed);
    const auto trained = train(data.subset(split.train), config);
    SplitReport r;
    r.train_size = split.train.size();
    r.validation_size = split.validation.size();
    r.test_size = split.test.size();
    r.validation_accuracy = evaluate(trained.bundle, data.subset(split.validation)).accuracy();
    const Confusion test = evaluate(trained.bundle, data.subset(split.test));
    r.test_accuracy = test.accuracy();
    r.test_macro_f1 = macro_f1(test);
    return r;
}

} // namespace cvxattn
