// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvxattn/cvxattn.hpp"
#include "oracles.hpp"

using namespace cvxattn;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Shared artifacts, built on first use.
struct Fixtures {
    std::map<std::string, Dataset> data;
    std::map<std::string, TrainResult> models;

    const Dataset& synth(GestureKind kind, std::uint64_t seed, std::size_t per_class = 100) {
        const std::string key = std::string(to_string(kind)) + "/" + std::to_string(seed) + "/" + std::to_string(per_class);
        auto it = data.find(key);
        if (it != data.end()) return it->second;
        SynthConfig cfg;
        cfg.kind = kind;
        cfg.seed = seed;
        cfg.samples_per_class = per_class;
        cfg.noise_stddev = 0.05 * cfg.amplitude;
        return data.emplace(key, synth_generate(cfg)).first->second;
    }

    const TrainResult& trained(const std::string& preset_name, LossKind loss = LossKind::hinge) {
        const std::string key = preset_name + "/" + to_string(loss);
        auto it = models.find(key);
        if (it != models.end()) return it->second;
        TrainConfig cfg = preset(preset_name);
        cfg.loss = loss;
        cfg.seed = 1;
        const auto kind = preset_name.rfind("tap", 0) == 0 ? GestureKind::tap : GestureKind::swipe;
        return models.emplace(key, train(synth(kind, 7), cfg)).first->second;
    }
};

Outcome simplex_oracle() {
    const auto t0 = Clock::now();
    RngStream rng(1001);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + rng.next_index(29);
        const auto v = oracle::random_vec(rng, n, -5.0, 5.0);
        const auto got = simplex_project(v);
        const auto want = oracle::simplex_qp(v);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 5.0,
            "1000 vectors, P in 2..30, max |diff| " + fmt("%.2e", worst) + ", " + fmt("%.3f", secs) + " s"};
}

Outcome firm_nonexpansive() {
    const auto t0 = Clock::now();
    RngStream rng(1002);
    double worst_firm = -1e300, worst_lip = -1e300;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + rng.next_index(29);
        const auto v = oracle::random_vec(rng, n, -5.0, 5.0);
        const auto w = oracle::random_vec(rng, n, -5.0, 5.0);
        const auto pv = simplex_project(v);
        const auto pw = simplex_project(w);
        double proj2 = 0.0, inner = 0.0, dist2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            proj2 += (pv[i] - pw[i]) * (pv[i] - pw[i]);
            inner += (pv[i] - pw[i]) * (v[i] - w[i]);
            dist2 += (v[i] - w[i]) * (v[i] - w[i]);
        }
        worst_firm = std::max(worst_firm, proj2 - inner);
        worst_lip = std::max(worst_lip, std::sqrt(proj2) - std::sqrt(dist2));
    }
    const double secs = seconds_since(t0);
    return {worst_firm <= 1e-12 && worst_lip <= 1e-12 && secs < 5.0,
            "1000 pairs, max firm gap " + fmt("%.2e", worst_firm) + ", max Lipschitz excess " + fmt("%.2e", worst_lip) +
                ", " + fmt("%.3f", secs) + " s"};
}

Outcome softmax_witness() {
    const auto c = softmax_counterexample();
    return {c.passed(), "softmax(mid)_1 = " + fmt("%.4f", c.at_midpoint[0]) + " vs interpolated " +
                            fmt("%.4f", c.interpolated[0]) + " (paper 0.731 vs 0.691); d2 " + fmt("%.3f", c.d2_midpoint) +
                            " <= " + fmt("%.3f", c.d2_interpolated)};
}

Outcome convexity_protocol(Fixtures& fx) {
    const auto t0 = Clock::now();
    const Dataset& test = fx.synth(GestureKind::tap, 1007, 25);
    std::string detail;
    bool ok = true;
    for (LossKind loss : {LossKind::hinge, LossKind::squared}) {
        const TrainResult& model = fx.trained("tap-appxB", loss);
        RngStream rng(2000 + static_cast<std::uint64_t>(loss));
        const auto r = convexity_check(model.bundle, test, loss, 100, 0.1, rng, 1e-6);
        ok = ok && r.passed();
        detail += std::string(to_string(loss)) + " " + std::to_string(r.satisfied) + "/" + std::to_string(r.trials) +
                  " (mean violation " + fmt("%.2e", r.mean_violation) + ", max " + fmt("%.2e", r.max_violation) + "); ";
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 60.0, detail + "paper means -2.3e-7 / -1.8e-7; " + fmt("%.1f", secs) + " s incl. training"};
}

Outcome parameter_counts() {
    const auto tap = param_count(PatchSpec{4, 10, 10}, 4, 3);
    const auto swipe = param_count(PatchSpec{4, 30, 30}, 4, 3);
    const auto tap6 = param_count(PatchSpec{6, 10, 10}, 4, 3);
    const bool ok = tap.trainable == 120 && swipe.trainable == 360 && tap6.total() == 141;
    return {ok, "tap trainable " + std::to_string(tap.trainable) + ", swipe trainable " +
                    std::to_string(swipe.trainable) + ", tap patch_dim=6 total " + std::to_string(tap6.total())};
}

Outcome storage(Fixtures& fx) {
    bool ok = true;
    std::string detail;
    for (const std::string name : {"tap", "swipe", "tap-appxB", "swipe-appxB"}) {
        const auto bytes = serialize(fx.trained(name).bundle, Precision::f32);
        ok = ok && bytes.size() <= 7168;
        detail += name + " " + std::to_string(bytes.size()) + " B; ";
    }
    return {ok, detail + "bound 7168 B (paper 3,948 / 6,872 B)"};
}

Outcome recognition(Fixtures& fx, std::map<std::string, double>& tap_means) {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (const std::string name : {"tap-appxB", "swipe-appxB"}) {
        const auto kind = name == "tap-appxB" ? GestureKind::tap : GestureKind::swipe;
        TrainConfig cfg = preset(name);
        cfg.seed = 0;
        const auto r = kfold_evaluate(fx.synth(kind, 7), cfg, 10);
        if (kind == GestureKind::tap) tap_means["0"] = r.mean_accuracy;
        ok = ok && r.mean_accuracy >= 0.99 && r.std_accuracy <= 0.02;
        detail += name + " " + fmt("%.4f", r.mean_accuracy) + " +- " + fmt("%.4f", r.std_accuracy) + " (F1 " +
                  fmt("%.4f", r.mean_f1) + "); ";
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 600.0, detail + "10-fold, 400 samples each, " + fmt("%.1f", secs) + " s"};
}

Outcome seed_stability(Fixtures& fx, std::map<std::string, double>& tap_means) {
    TrainConfig cfg = preset("tap-appxB");
    std::vector<double> means;
    std::string detail = "tap 10-fold means:";
    for (std::uint64_t s = 0; s < 5; ++s) {
        double m = 0.0;
        const std::string key = std::to_string(s * 1000);
        if (tap_means.count(key)) {
            m = tap_means[key];
        } else {
            cfg.seed = s * 1000;
            m = kfold_evaluate(fx.synth(GestureKind::tap, 7), cfg, 10).mean_accuracy;
        }
        means.push_back(m);
        detail += " " + fmt("%.4f", m);
    }
    const double spread = *std::max_element(means.begin(), means.end()) - *std::min_element(means.begin(), means.end());
    return {spread <= 0.01, detail + "; spread " + fmt("%.4f", spread)};
}

Outcome gradient_checks() {
    RngStream rng(3001);
    const double h = 1e-6;
    double worst_hinge = 0.0, worst_sq = 0.0;
    std::size_t hinge_n = 0, sq_n = 0;
    for (int t = 0; hinge_n < 50 || sq_n < 50; ++t) {
        if (t > 10000) break;
        const std::size_t n = 1 + rng.next_index(4), k = 2 + rng.next_index(3), p = 2 + rng.next_index(4),
                          m = 1 + rng.next_index(4);
        std::vector<Mat> q, alpha;
        std::vector<std::size_t> y;
        WeightTensor a(k, p, m);
        for (double& x : a.values()) x = rng.next_gauss();
        for (std::size_t i = 0; i < n; ++i) {
            Mat qi(p, m);
            for (double& x : qi.data()) x = std::sqrt(2.0 / static_cast<double>(m)) * std::cos(6.3 * rng.next_unit());
            q.push_back(qi);
            alpha.push_back(attention_weights(oracle::random_mat(rng, k, p, 1.5)));
            y.push_back(rng.next_index(k));
        }
        const BatchView batch{q, y, alpha};
        auto loss_at = [&](LossKind kind, const WeightTensor& w) { return loss_value(kind, batch_scores(batch, w), y); };

        // Hinge kinks: zero margin or a tie for the best rival.
        const Mat f = batch_scores(batch, a);
        double kink = 1e300;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> rivals;
            for (std::size_t c = 0; c < k; ++c)
                if (c != y[i]) rivals.push_back(f(i, c));
            std::sort(rivals.rbegin(), rivals.rend());
            kink = std::min(kink, std::abs(1.0 - f(i, y[i]) + rivals[0]));
            if (rivals.size() > 1) kink = std::min(kink, rivals[0] - rivals[1]);
        }

        for (LossKind kind : {LossKind::hinge, LossKind::squared}) {
            if (kind == LossKind::hinge && (hinge_n >= 50 || kink <= 1e-3)) continue;
            if (kind == LossKind::squared && sq_n >= 50) continue;
            const WeightTensor g = loss_gradient(kind, batch, a);
            double worst = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                WeightTensor up = a, down = a;
                up.values()[i] += h;
                down.values()[i] -= h;
                worst = std::max(worst, std::abs((loss_at(kind, up) - loss_at(kind, down)) / (2 * h) - g.values()[i]));
            }
            if (kind == LossKind::hinge) {
                worst_hinge = std::max(worst_hinge, worst);
                ++hinge_n;
            } else {
                worst_sq = std::max(worst_sq, worst);
                ++sq_n;
            }
        }
    }
    return {hinge_n == 50 && sq_n == 50 && worst_hinge <= 1e-5 && worst_sq <= 1e-6,
            std::to_string(hinge_n) + " hinge instances max err " + fmt("%.2e", worst_hinge) + " (tol 1e-5), " +
                std::to_string(sq_n) + " squared max err " + fmt("%.2e", worst_sq) + " (tol 1e-6)"};
}

Outcome nuclear_feasibility(Fixtures& fx) {
    bool ok = true;
    std::string detail;
    for (const std::string name : {"tap", "swipe", "tap-appxB", "swipe-appxB"}) {
        const TrainResult& r = fx.trained(name);
        const double radius = preset(name).radius;
        double worst = -1e300;
        for (const auto& e : r.report.epochs) worst = std::max(worst, e.nuclear_norm - radius);
        worst = std::max(worst, nuclear_norm(r.bundle.weights.as_matrix()) - radius);
        ok = ok && worst <= 1e-9;
        detail += name + " " + std::to_string(r.report.epochs.size()) + " epochs max(||A||_* - R) " +
                  fmt("%.1e", worst) + "; ";
    }
    // Diagonal inputs: singular values are |d|, the projection thresholds them.
    struct Case {
        std::vector<double> d;
        double radius;
        std::vector<double> want;
    };
    const std::vector<Case> cases{{{3.0, 1.0}, 2.0, {2.0, 0.0}},
                                  {{4.0, 2.0, 1.0}, 3.0, {2.5, 0.5, 0.0}},
                                  {{1.0, 1.0, 1.0}, 1.5, {0.5, 0.5, 0.5}},
                                  {{5.0, -3.0}, 4.0, {3.0, -1.0}},
                                  {{0.5, 0.25}, 1.0, {0.5, 0.25}}};
    std::size_t exact = 0;
    for (const auto& c : cases)
        if (nuclear_ball_project(Mat::diag(c.d), c.radius) == Mat::diag(c.want)) ++exact;
    ok = ok && exact == cases.size();
    return {ok, detail + "diagonal oracle exact " + std::to_string(exact) + "/" + std::to_string(cases.size())};
}

Outcome latency(Fixtures& fx) {
    const ModelBundle& model = fx.trained("tap-appxB").bundle;
    const Dataset& d = fx.synth(GestureKind::tap, 7);
    std::size_t sink = 0;
    for (std::size_t i = 0; i < 10; ++i) sink += predict(d.samples[i].x, model).label;
    std::vector<double> us;
    for (std::size_t i = 0; i < 100; ++i) {
        const auto t0 = Clock::now();
        sink += predict(d.samples[i * 3].x, model).label;
        us.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    }
    double mean = 0.0, var = 0.0;
    for (double v : us) mean += v;
    mean /= 100.0;
    for (double v : us) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / 100.0);
    return {mean < 1000.0 && sink < 1000000, "tap-appxB predict mean " + fmt("%.2f", mean) + " us, std " +
                                                 fmt("%.2f", sd) + " us over 100 runs (paper 296.35 us on Cortex-M4)"};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const std::string& cli, const std::filesystem::path& work) {
    if (cli.empty()) return {false, "no CLI binary given (--cli)"};
    std::filesystem::create_directories(work);
    auto run = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > \"" + (work / "log.txt").string() + "\" 2>&1";
        return std::system(cmd.c_str());
    };
    const auto p = [&](const char* name) { return "\"" + (work / name).string() + "\""; };
    int rc = 0;
    rc |= run("synth --kind tap --n-per-class 100 --seed 7 --out " + p("a.csv"));
    rc |= run("synth --kind tap --n-per-class 100 --seed 7 --out " + p("b.csv"));
    rc |= run("train --data " + p("a.csv") + " --preset tap-appxB --seed 3 --out-model " + p("a.bin"));
    rc |= run("train --data " + p("a.csv") + " --preset tap-appxB --seed 3 --out-model " + p("b.bin"));
    if (rc != 0) return {false, "CLI invocation failed; see " + (work / "log.txt").string()};
    const std::string a_csv = slurp(work / "a.csv"), b_csv = slurp(work / "b.csv");
    const std::string a_bin = slurp(work / "a.bin"), b_bin = slurp(work / "b.bin");
    const bool same_csv = !a_csv.empty() && a_csv == b_csv;
    const bool same_bin = !a_bin.empty() && a_bin == b_bin;
    return {same_csv && same_bin, std::string("synth ") + (same_csv ? "identical" : "DIFFERENT") + " (" +
                                      std::to_string(a_csv.size()) + " B), train " +
                                      (same_bin ? "identical" : "DIFFERENT") + " (" + std::to_string(a_bin.size()) + " B)"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::string cli;
    std::string work = (std::filesystem::temp_directory_path() / "cvxattn_acceptance").string();
    app.add_option("--cli", cli, "path to the cvxattn executable");
    app.add_option("--workdir", work, "scratch directory");
    CLI11_PARSE(app, argc, argv);

    Fixtures fx;
    std::map<std::string, double> tap_means;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"simplex projection oracle equivalence", simplex_oracle},
        {"firm nonexpansiveness", firm_nonexpansive},
        {"softmax counterexample", softmax_witness},
        {"convexity verification protocol", [&] { return convexity_protocol(fx); }},
        {"parameter counts", parameter_counts},
        {"storage of 32-bit bundles", [&] { return storage(fx); }},
        {"recognition at desk scale", [&] { return recognition(fx, tap_means); }},
        {"seed stability", [&] { return seed_stability(fx, tap_means); }},
        {"gradient checks", gradient_checks},
        {"nuclear-norm feasibility", [&] { return nuclear_feasibility(fx); }},
        {"inference latency", [&] { return latency(fx); }},
        {"determinism of train and synth", [&] { return determinism(cli, work); }},
    };

    std::size_t failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
