// cvxattn: synthesize, train, evaluate, verify, benchmark, predict, export.
//
// Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvxattn/cvxattn.hpp"

namespace {

using cvxattn::Dataset;
using cvxattn::SynthConfig;
using cvxattn::TrainConfig;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- JSON config ------------------------------------------------------------

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw UsageError(where + ": expected a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw UsageError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read_key(const json& obj, const char* key, T& dst, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError(where + "." + key + ": wrong type");
    }
}

/// Everything a config file may set. Flags override these values.
struct CliConfig {
    std::string preset = "tap-appxB";
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    json train = json::object();
    json synth = json::object();
};

CliConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config '" + path + "': " + e.what());
    }
    reject_unknown(doc, {"preset", "seed", "jobs", "train", "synth"}, "config");
    CliConfig cfg;
    read_key(doc, "preset", cfg.preset, "config");
    if (doc.contains("seed")) {
        std::uint64_t s = 0;
        read_key(doc, "seed", s, "config");
        cfg.seed = s;
    }
    read_key(doc, "jobs", cfg.jobs, "config");
    if (doc.contains("train")) {
        reject_unknown(doc["train"],
                       {"radius", "m", "gamma", "eta", "epochs", "batch_size", "batches_per_epoch", "loss",
                        "channels", "frames", "patches"},
                       "config.train");
        cfg.train = doc["train"];
    }
    if (doc.contains("synth")) {
        reject_unknown(doc["synth"],
                       {"kind", "samples_per_class", "noise_stddev", "amplitude", "drift_rate", "frames",
                        "differential_channels", "position_jitter", "pressure_jitter", "pulse_width", "speed_jitter",
                        "falloff", "quantize_12bit", "sample_rate"},
                       "config.synth");
        cfg.synth = doc["synth"];
    }
    return cfg;
}

TrainConfig resolve_train(const CliConfig& cli) {
    TrainConfig t = cvxattn::preset(cli.preset);
    const json& j = cli.train;
    const std::string w = "config.train";
    read_key(j, "radius", t.radius, w);
    read_key(j, "m", t.m, w);
    read_key(j, "gamma", t.gamma, w);
    read_key(j, "eta", t.eta, w);
    read_key(j, "epochs", t.epochs, w);
    read_key(j, "batch_size", t.batch_size, w);
    read_key(j, "batches_per_epoch", t.batches_per_epoch, w);
    read_key(j, "channels", t.spec.channels, w);
    read_key(j, "frames", t.spec.frames, w);
    read_key(j, "patches", t.spec.patches, w);
    if (j.contains("loss")) {
        std::string loss;
        read_key(j, "loss", loss, w);
        t.loss = cvxattn::loss_kind_from_string(loss);
    }
    if (cli.seed) t.seed = *cli.seed;
    t.validate();
    return t;
}

SynthConfig resolve_synth(const CliConfig& cli) {
    SynthConfig s;
    const json& j = cli.synth;
    const std::string w = "config.synth";
    if (j.contains("kind")) {
        std::string kind;
        read_key(j, "kind", kind, w);
        s.kind = cvxattn::gesture_kind_from_string(kind);
    }
    read_key(j, "samples_per_class", s.samples_per_class, w);
    read_key(j, "noise_stddev", s.noise_stddev, w);
    read_key(j, "amplitude", s.amplitude, w);
    read_key(j, "drift_rate", s.drift_rate, w);
    read_key(j, "frames", s.frames, w);
    read_key(j, "differential_channels", s.differential_channels, w);
    read_key(j, "position_jitter", s.position_jitter, w);
    read_key(j, "pressure_jitter", s.pressure_jitter, w);
    read_key(j, "pulse_width", s.pulse_width, w);
    read_key(j, "speed_jitter", s.speed_jitter, w);
    read_key(j, "falloff", s.falloff, w);
    read_key(j, "quantize_12bit", s.quantize_12bit, w);
    read_key(j, "sample_rate", s.sample_rate, w);
    if (cli.seed) s.seed = *cli.seed;
    return s;
}

json to_json(const TrainConfig& t) {
    return json{{"radius", t.radius},
                {"m", t.m},
                {"gamma", t.gamma},
                {"eta", t.eta},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"batches_per_epoch", t.batches_per_epoch},
                {"loss", cvxattn::to_string(t.loss)},
                {"seed", t.seed},
                {"classes", t.classes},
                {"channels", t.spec.channels},
                {"frames", t.spec.frames},
                {"patches", t.spec.patches}};
}

json to_json(const SynthConfig& s) {
    return json{{"kind", cvxattn::to_string(s.kind)},
                {"samples_per_class", s.samples_per_class},
                {"noise_stddev", s.noise_stddev},
                {"amplitude", s.amplitude},
                {"drift_rate", s.drift_rate},
                {"seed", s.seed},
                {"frames", s.resolved_frames()},
                {"differential_channels", s.differential_channels},
                {"position_jitter", s.position_jitter},
                {"pressure_jitter", s.pressure_jitter},
                {"pulse_width", s.pulse_width},
                {"speed_jitter", s.speed_jitter},
                {"falloff", s.falloff},
                {"quantize_12bit", s.quantize_12bit},
                {"sample_rate", s.sample_rate}};
}

void echo_config(const std::string& command, const json& body) {
    std::cerr << "# " << command << " config " << body.dump() << "\n";
}

// --- shared helpers ---------------------------------------------------------

Dataset load_data(const std::string& path) {
    if (!std::filesystem::exists(path)) throw UsageError("data file not found: " + path);
    return cvxattn::load_csv(path);
}

cvxattn::ModelBundle load_model(const std::string& path) {
    if (!std::filesystem::exists(path)) throw UsageError("model file not found: " + path);
    return cvxattn::load_bundle(path);
}

void check_shapes(const Dataset& data, const TrainConfig& cfg) {
    if (data.channels != cfg.spec.channels || data.frames != cfg.spec.frames)
        throw UsageError("data is " + std::to_string(data.channels) + " channels x " + std::to_string(data.frames) +
                         " frames but the config expects " + std::to_string(cfg.spec.channels) + " x " +
                         std::to_string(cfg.spec.frames));
    if (data.classes() != cfg.classes)
        throw UsageError("data has " + std::to_string(data.classes()) + " classes, config expects " +
                         std::to_string(cfg.classes));
}

void check_model_data(const cvxattn::ModelBundle& model, const Dataset& data) {
    if (data.channels != model.spec.channels || data.frames != model.spec.frames)
        throw UsageError("data shape " + std::to_string(data.channels) + "x" + std::to_string(data.frames) +
                         " does not match the model's " + std::to_string(model.spec.channels) + "x" +
                         std::to_string(model.spec.frames));
}

std::string fmt(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string fmt_sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

/// Options shared by commands that build a TrainConfig.
struct TrainOptions {
    std::string preset;
    std::string config_path;
    std::string loss;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "tap | swipe | tap-appxB | swipe-appxB");
        cmd->add_option("--config", config_path, "JSON config file; flags override it");
        cmd->add_option("--loss", loss, "hinge | squared");
        cmd->add_option("--epochs", epochs, "override the epoch count");
        cmd->add_option("--seed", seed, "top-level seed");
    }

    CliConfig cli() const {
        CliConfig c = config_path.empty() ? CliConfig{} : load_config(config_path);
        if (!preset.empty()) c.preset = preset;
        if (seed) c.seed = *seed;
        if (jobs > 0) c.jobs = jobs;
        return c;
    }

    TrainConfig resolve() const {
        TrainConfig t = resolve_train(cli());
        if (!loss.empty()) t.loss = cvxattn::loss_kind_from_string(loss);
        if (epochs) t.epochs = *epochs;
        t.validate();
        return t;
    }
};

// --- commands ---------------------------------------------------------------

struct SynthArgs {
    std::string config_path;
    std::string kind;
    std::optional<std::size_t> per_class;
    std::optional<double> noise;
    std::optional<double> drift;
    std::optional<std::uint64_t> seed;
    bool quantize = false;
    bool via_stream = false;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    CliConfig cli = a.config_path.empty() ? CliConfig{} : load_config(a.config_path);
    if (a.seed) cli.seed = *a.seed;
    SynthConfig s = resolve_synth(cli);
    if (!a.kind.empty()) s.kind = cvxattn::gesture_kind_from_string(a.kind);
    if (a.per_class) s.samples_per_class = *a.per_class;
    if (a.noise) s.noise_stddev = *a.noise;
    if (a.drift) s.drift_rate = *a.drift;
    if (a.quantize) s.quantize_12bit = true;
    s.validate();
    echo_config("synth", to_json(s));

    const Dataset data = a.via_stream ? cvxattn::synth_generate_via_stream(s) : cvxattn::synth_generate(s);
    cvxattn::save_csv(data, a.out);
    std::cout << "wrote " << data.size() << " samples, " << data.classes() << " classes, " << data.channels << "x"
              << data.frames << " to " << a.out << "\n";
    return kExitOk;
}

struct TrainArgs {
    TrainOptions opts;
    std::string data;
    std::string out_model;
    std::string report;
    bool preprocess = false;
};

int cmd_train(const TrainArgs& a) {
    const TrainConfig cfg = a.opts.resolve();
    echo_config("train", to_json(cfg));
    Dataset data = load_data(a.data);
    if (a.preprocess) cvxattn::preprocess_dataset(data);
    check_shapes(data, cfg);

    const auto counts = cvxattn::param_count(cfg.spec, cfg.classes, cfg.m);
    std::cout << "trainable=" << counts.trainable << " fixed=" << counts.fixed << " total=" << counts.total() << "\n";

    const auto result = cvxattn::train(data, cfg);
    for (const auto& e : result.report.epochs)
        std::cout << "epoch " << e.epoch << " loss=" << fmt(e.loss, 6) << " train_acc=" << fmt(e.train_accuracy)
                  << " nuclear=" << fmt(e.nuclear_norm, 6) << "\n";
    std::cout << "final nuclear_norm=" << fmt(result.report.final_nuclear_norm, 6) << " (R=" << cfg.radius << ")\n";
    std::cout << "epochs_to_convergence=" << result.report.epochs_to_convergence << "\n";
    std::cerr << "# wall time " << fmt(result.report.wall_seconds, 3) << " s\n";

    cvxattn::save_bundle(result.bundle, a.out_model);
    std::cout << "wrote model " << a.out_model << " (" << std::filesystem::file_size(a.out_model) << " bytes)\n";

    if (!a.report.empty()) {
        json rep;
        rep["config"] = to_json(cfg);
        rep["trainable"] = counts.trainable;
        rep["fixed"] = counts.fixed;
        json epochs = json::array();
        for (const auto& e : result.report.epochs)
            epochs.push_back({{"epoch", e.epoch},
                              {"loss", e.loss},
                              {"train_accuracy", e.train_accuracy},
                              {"nuclear_norm", e.nuclear_norm}});
        rep["epochs"] = epochs;
        rep["final_nuclear_norm"] = result.report.final_nuclear_norm;
        rep["epochs_to_convergence"] = result.report.epochs_to_convergence;
        std::ofstream out(a.report);
        if (!out) throw UsageError("cannot open report '" + a.report + "' for writing");
        out << rep.dump(2) << "\n";
    }
    return kExitOk;
}

struct EvalArgs {
    TrainOptions opts;
    std::string data;
    std::string mode = "kfold";
    std::size_t folds = 10;
    bool preprocess = false;
};

int cmd_eval(const EvalArgs& a) {
    const TrainConfig cfg = a.opts.resolve();
    const CliConfig cli = a.opts.cli();
    echo_config("eval", to_json(cfg));
    Dataset data = load_data(a.data);
    if (a.preprocess) cvxattn::preprocess_dataset(data);
    check_shapes(data, cfg);

    if (a.mode == "kfold") {
        if (a.folds < 2) throw UsageError("--folds must be >= 2");
        for (std::size_t c : data.class_counts())
            if (a.folds > c)
                throw UsageError("--folds " + std::to_string(a.folds) + " exceeds the smallest class count (" +
                                 std::to_string(c) + ")");
        std::cout << "methodology: stratified " << a.folds << "-fold cross-validation, " << data.size()
                  << " samples\n";
        const auto r = cvxattn::kfold_evaluate(data, cfg, a.folds, cli.jobs);
        for (const auto& f : r.folds)
            std::cout << "fold " << f.fold << " accuracy=" << fmt(f.accuracy) << " macro_f1=" << fmt(f.macro_f1)
                      << " n=" << f.test_size << "\n";
        std::cout << "accuracy " << fmt(r.mean_accuracy) << " +- " << fmt(r.std_accuracy) << "\n";
        std::cout << "macro_f1 " << fmt(r.mean_f1) << " +- " << fmt(r.std_f1) << "\n";
    } else if (a.mode == "split") {
        std::cout << "methodology: stratified 60-20-20 train-validation-test split, " << data.size() << " samples\n";
        const auto r = cvxattn::split_evaluate(data, cfg);
        std::cout << "sizes train=" << r.train_size << " validation=" << r.validation_size << " test=" << r.test_size
                  << "\n";
        std::cout << "validation accuracy " << fmt(r.validation_accuracy) << "\n";
        std::cout << "test accuracy " << fmt(r.test_accuracy) << "\n";
        std::cout << "test macro_f1 " << fmt(r.test_macro_f1) << "\n";
    } else {
        throw UsageError("unknown --mode '" + a.mode + "' (valid: kfold, split)");
    }
    return kExitOk;
}

struct VerifyArgs {
    std::string model;
    std::string data;
    std::size_t trials = 100;
    double noise = 0.1;
    std::size_t pairs = 1000;
    std::size_t dim = 10;
    std::uint64_t seed = 0;
    std::string loss = "both";
};

int cmd_verify(const VerifyArgs& a) {
    echo_config("verify", json{{"trials", a.trials}, {"noise", a.noise}, {"pairs", a.pairs}, {"dim", a.dim},
                               {"seed", a.seed}, {"loss", a.loss}});
    std::vector<cvxattn::LossKind> losses;
    if (a.loss == "both") losses = {cvxattn::LossKind::hinge, cvxattn::LossKind::squared};
    else if (a.loss == "hinge") losses = {cvxattn::LossKind::hinge};
    else if (a.loss == "squared") losses = {cvxattn::LossKind::squared};
    else throw UsageError("unknown --loss '" + a.loss + "' (valid: hinge, squared, both)");
    const auto model = load_model(a.model);
    if (model.trained_epochs == 0) throw UsageError("model '" + a.model + "' is untrained");
    const Dataset data = load_data(a.data);
    check_model_data(model, data);

    bool ok = true;
    cvxattn::RngStream root(a.seed);
    for (auto loss : losses) {
        cvxattn::RngStream rng = root.derive(static_cast<std::uint64_t>(loss) + 1);
        const auto r = cvxattn::convexity_check(model, data, loss, a.trials, a.noise, rng);
        std::cout << cvxattn::to_string(loss) << ": " << r.satisfied << "/" << r.trials
                  << " satisfied (mean violation " << fmt_sci(r.mean_violation) << ", max " << fmt_sci(r.max_violation)
                  << ", tol " << fmt_sci(r.tolerance) << ")\n";
        ok = ok && r.passed();
    }

    cvxattn::RngStream prng = root.derive(10);
    const auto ne = cvxattn::nonexpansiveness_sweep(a.pairs, a.dim, prng);
    std::cout << "simplex projection: " << (ne.pairs - ne.skipped) << " pairs, max ratio " << fmt(ne.max_ratio, 12)
              << ", max firm gap " << fmt_sci(ne.max_firm_gap) << " -> " << (ne.passed() ? "ok" : "FAILED") << "\n";
    ok = ok && ne.passed();

    const auto sm = cvxattn::softmax_counterexample();
    std::cout << "softmax counterexample: softmax(mid)_1=" << fmt(sm.at_midpoint[0], 4)
              << " interpolated_1=" << fmt(sm.interpolated[0], 4)
              << " jensen " << (sm.jensen_violated ? "violated" : "holds") << "; d2 midpoint "
              << fmt(sm.d2_midpoint) << " <= " << fmt(sm.d2_interpolated) << " -> " << (sm.passed() ? "ok" : "FAILED")
              << "\n";
    ok = ok && sm.passed();

    std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
    return ok ? kExitOk : kExitCheckFailed;
}

struct BenchArgs {
    std::string model;
    std::string data;
    std::size_t iters = 100;
    double max_mean_us = 1000.0;
};

int cmd_bench(const BenchArgs& a) {
    if (a.iters == 0) throw UsageError("--iters must be >= 1");
    echo_config("bench", json{{"iters", a.iters}, {"warmup", 10}, {"max_mean_us", a.max_mean_us}});
    const auto model = load_model(a.model);
    const Dataset data = load_data(a.data);
    check_model_data(model, data);
    if (data.samples.empty()) throw UsageError("data file has no gestures");

    using clock = std::chrono::steady_clock;
    std::size_t sink = 0;
    for (std::size_t i = 0; i < 10; ++i) sink += cvxattn::predict(data.samples[i % data.size()].x, model).label;

    std::vector<double> us;
    us.reserve(a.iters);
    for (std::size_t i = 0; i < a.iters; ++i) {
        const auto& x = data.samples[i % data.size()].x;
        const auto t0 = clock::now();
        sink += cvxattn::predict(x, model).label;
        const auto t1 = clock::now();
        us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    double mean = 0.0;
    for (double v : us) mean += v;
    mean /= static_cast<double>(us.size());
    double var = 0.0;
    for (double v : us) var += (v - mean) * (v - mean);
    const double stddev = us.size() > 1 ? std::sqrt(var / static_cast<double>(us.size())) : 0.0;

    // Drift removal + smoothing cost per frame, for comparison only.
    const auto& x0 = data.samples[0].x;
    const std::size_t window = cvxattn::frames_for_ms(200.0, data.sample_rate);
    const auto p0 = clock::now();
    for (std::size_t i = 0; i < a.iters; ++i) sink += cvxattn::smooth(cvxattn::remove_drift(x0, window)).cols();
    const auto p1 = clock::now();
    const double pre_us = std::chrono::duration<double, std::micro>(p1 - p0).count() /
                          static_cast<double>(a.iters * x0.cols());

    std::cout << "latency mean_us=" << fmt(mean, 2) << " std_us=" << fmt(stddev, 2) << " iters=" << a.iters
              << " warmup=10\n";
    std::cout << "preprocess us_per_frame=" << fmt(pre_us, 3) << "\n";
    std::cout << "model_bytes=" << std::filesystem::file_size(a.model) << "\n";
    std::cerr << "# checksum " << sink << "\n";
    if (mean >= a.max_mean_us) {
        std::cerr << "mean latency " << fmt(mean, 2) << " us exceeds " << a.max_mean_us << " us\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

struct PredictArgs {
    std::string model;
    std::string data;
    std::string out;
};

int cmd_predict(const PredictArgs& a) {
    const auto model = load_model(a.model);
    const Dataset data = load_data(a.data);
    check_model_data(model, data);

    std::ofstream out(a.out);
    if (!out) throw UsageError("cannot open '" + a.out + "' for writing");
    out << "gesture_id,label,predicted";
    for (std::size_t k = 0; k < model.classes; ++k) out << ",score" << k;
    out << "\n";
    std::size_t correct = 0;
    char buf[32];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data.samples[i];
        const auto p = cvxattn::predict(s.x, model);
        const auto name = [&](std::size_t k) {
            return k < data.class_names.size() ? data.class_names[k] : std::to_string(k);
        };
        out << i << "," << name(s.label) << "," << name(p.label);
        for (double v : p.scores) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
        if (p.label == s.label) ++correct;
    }
    if (!out) throw std::runtime_error("write failed for '" + a.out + "'");
    std::cout << "wrote " << data.size() << " predictions to " << a.out << "\n";
    std::cout << "accuracy " << fmt(data.size() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0)
              << "\n";
    return kExitOk;
}

struct ExportArgs {
    std::string model;
    std::string out;
    int precision = 32;
    std::string data;
};

int cmd_export(const ExportArgs& a) {
    if (a.precision != 32 && a.precision != 64) throw UsageError("--precision must be 32 or 64");
    const auto model = load_model(a.model);
    const auto prec = a.precision == 32 ? cvxattn::Precision::f32 : cvxattn::Precision::f64;
    cvxattn::save_bundle(model, a.out, prec);
    const auto bytes = std::filesystem::file_size(a.out);
    std::cout << "wrote " << a.out << " precision=" << a.precision << " bytes=" << bytes << "\n";

    if (a.data.empty()) return kExitOk;
    const Dataset data = load_data(a.data);
    check_model_data(model, data);
    const auto exported = cvxattn::load_bundle(a.out);
    std::size_t changed = 0;
    for (const auto& s : data.samples)
        if (cvxattn::predict(s.x, model).label != cvxattn::predict(s.x, exported).label) ++changed;
    std::cout << "label parity: " << (data.size() - changed) << "/" << data.size() << " unchanged\n";
    return changed == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convexified attention gesture classifier"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "cvxattn 0.1.0");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic gesture dataset (CSV)");
    c_synth->add_option("--config", synth.config_path, "JSON config file");
    c_synth->add_option("--kind", synth.kind, "tap | swipe");
    c_synth->add_option("--n-per-class", synth.per_class, "samples per class");
    c_synth->add_option("--noise", synth.noise, "noise stddev (amplitude units)");
    c_synth->add_option("--drift", synth.drift, "linear drift per frame");
    c_synth->add_option("--seed", synth.seed, "seed");
    c_synth->add_flag("--quantize", synth.quantize, "emulate 12-bit readings");
    c_synth->add_flag("--via-stream", synth.via_stream, "embed in a stream and segment it back out");
    c_synth->add_option("--out", synth.out, "output CSV")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train a model");
    train.opts.add_to(c_train);
    c_train->add_option("--data", train.data, "training CSV")->required();
    c_train->add_option("--out-model", train.out_model, "model bundle to write")->required();
    c_train->add_option("--report", train.report, "per-epoch report (JSON)");
    c_train->add_flag("--preprocess", train.preprocess, "apply drift removal and smoothing first");

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Cross-validate or hold-out evaluate");
    eval.opts.add_to(c_eval);
    c_eval->add_option("--data", eval.data, "dataset CSV")->required();
    c_eval->add_option("--mode", eval.mode, "kfold | split");
    c_eval->add_option("--folds", eval.folds, "number of folds");
    c_eval->add_option("--jobs", eval.opts.jobs, "worker threads for folds");
    c_eval->add_flag("--preprocess", eval.preprocess, "apply drift removal and smoothing first");

    VerifyArgs verify;
    auto* c_verify = app.add_subcommand("verify", "Run the convexity checks");
    c_verify->add_option("--model", verify.model, "trained model bundle")->required();
    c_verify->add_option("--data", verify.data, "test CSV")->required();
    c_verify->add_option("--trials", verify.trials, "midpoint trials per loss");
    c_verify->add_option("--noise", verify.noise, "perturbation stddev");
    c_verify->add_option("--pairs", verify.pairs, "nonexpansiveness pairs");
    c_verify->add_option("--dim", verify.dim, "nonexpansiveness dimension");
    c_verify->add_option("--seed", verify.seed, "seed");
    c_verify->add_option("--loss", verify.loss, "loss to check: hinge, squared or both");

    BenchArgs bench;
    auto* c_bench = app.add_subcommand("bench", "Measure single-sample inference latency");
    c_bench->add_option("--model", bench.model, "model bundle")->required();
    c_bench->add_option("--data", bench.data, "CSV with input gestures")->required();
    c_bench->add_option("--iters", bench.iters, "timed runs");
    c_bench->add_option("--max-mean-us", bench.max_mean_us, "fail if the mean exceeds this");

    PredictArgs predict;
    auto* c_predict = app.add_subcommand("predict", "Label gestures with a model");
    c_predict->add_option("--model", predict.model, "model bundle")->required();
    c_predict->add_option("--data", predict.data, "input CSV")->required();
    c_predict->add_option("--out", predict.out, "predictions CSV")->required();

    ExportArgs exp;
    auto* c_export = app.add_subcommand("export", "Write a compact model bundle");
    c_export->add_option("--model", exp.model, "model bundle")->required();
    c_export->add_option("--out", exp.out, "exported bundle")->required();
    c_export->add_option("--precision", exp.precision, "32 or 64");
    c_export->add_option("--data", exp.data, "dataset for the label parity check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*c_synth) return cmd_synth(synth);
        if (*c_train) return cmd_train(train);
        if (*c_eval) return cmd_eval(eval);
        if (*c_verify) return cmd_verify(verify);
        if (*c_bench) return cmd_bench(bench);
        if (*c_predict) return cmd_predict(predict);
        if (*c_export) return cmd_export(exp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
