#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../oracles.hpp"
#include "cvxattn/features.hpp"

using namespace cvxattn;

TEST_CASE("PatchSpec: sizes and validation") {
    const PatchSpec tap{4, 10, 10};
    CHECK(tap.patch_dim() == 4);
    CHECK(PatchSpec{6, 10, 10}.patch_dim() == 6);
    CHECK(PatchSpec{6, 30, 10}.patch_dim() == 18);
    CHECK_THROWS_AS(PatchSpec({4, 10, 3}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(PatchSpec({0, 10, 10}).validate(), std::invalid_argument);
    CHECK_NOTHROW(PatchSpec({6, 30, 30}).validate());
}

TEST_CASE("patchify: slicing, layout, round trip") {
    const Mat x(1, 4, std::vector<double>{1, 2, 3, 4});
    const auto p = patchify(x, {1, 4, 2});
    REQUIRE(p.size() == 2);
    CHECK(p[0] == std::vector<double>{1, 2});
    CHECK(p[1] == std::vector<double>{3, 4});

    RngStream rng(31);
    const Mat tap = oracle::random_mat(rng, 4, 10);
    const auto tp = patchify(tap, {4, 10, 10});
    CHECK(tp.size() == 10);
    for (const auto& v : tp) CHECK(v.size() == 4);

    // Channel-major within a frame: patch 1 of a 2x4 input split in two holds
    // frames 2 and 3, all channels of frame 2 first.
    const Mat two(2, 4, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    const auto tw = patchify(two, {2, 4, 2});
    CHECK(tw[1] == std::vector<double>{3, 7, 4, 8});

    for (int t = 0; t < 100; ++t) {
        const PatchSpec spec{1 + rng.next_index(6), 30, std::vector<std::size_t>{1, 2, 3, 5, 10, 30}[rng.next_index(6)]};
        const Mat xr = oracle::random_mat(rng, spec.channels, spec.frames);
        CHECK(unpatchify(patchify(xr, spec), spec) == xr);
    }
    CHECK_THROWS_AS(patchify(tap, {4, 12, 6}), std::invalid_argument);
    CHECK_THROWS_AS(patchify(tap, {3, 10, 10}), std::invalid_argument);
}

TEST_CASE("rff_init: shapes, determinism, variance, errors") {
    RngStream a(32);
    const RffMap m = rff_init({6, 10, 10}, 3, 1.0, a);
    CHECK(m.w.rows() == 6);
    CHECK(m.w.cols() == 3);
    CHECK(m.b.size() == 3);
    for (double b : m.b) {
        CHECK(b >= 0.0);
        CHECK(b < 2.0 * std::numbers::pi);
    }

    RngStream s1(77), s2(77);
    const RffMap r1 = rff_init({4, 10, 10}, 5, 0.5, s1);
    const RffMap r2 = rff_init({4, 10, 10}, 5, 0.5, s2);
    CHECK(r1.w == r2.w);
    CHECK(r1.b == r2.b);

    RngStream big(33);
    const RffMap wide = rff_init({4, 10, 10}, 2048, 1.0, big);
    double mean = 0.0, var = 0.0;
    for (double x : wide.w.data()) mean += x;
    mean /= static_cast<double>(wide.w.size());
    for (double x : wide.w.data()) var += (x - mean) * (x - mean);
    var /= static_cast<double>(wide.w.size() - 1);
    CHECK(var >= 1.9);
    CHECK(var <= 2.1);

    CHECK_THROWS_AS(rff_init({4, 10, 10}, 0, 1.0, big), std::invalid_argument);
    CHECK_THROWS_AS(rff_init({4, 10, 10}, 3, 0.0, big), std::invalid_argument);
}

TEST_CASE("rff_transform: forced zero input, bounds, errors") {
    RngStream rng(34);
    RffMap map = rff_init({4, 10, 10}, 8, 1.0, rng);
    std::fill(map.b.begin(), map.b.end(), 0.0);
    const std::vector<std::vector<double>> zero(3, std::vector<double>(4, 0.0));
    const Mat q = rff_transform(zero, map);
    CHECK(q.rows() == 3);
    CHECK(q.cols() == 8);
    for (double x : q.data()) CHECK(x == doctest::Approx(std::sqrt(2.0 / 8.0)).epsilon(1e-15));

    RngStream r2(35);
    const RffMap m2 = rff_init({4, 10, 10}, 3, 1.0, r2);
    const double bound = std::sqrt(2.0 / 3.0);
    for (int t = 0; t < 50; ++t) {
        const Mat x = oracle::random_mat(r2, 4, 10, 5.0);
        const Mat qf = featurize(x, {4, 10, 10}, m2);
        for (double v : qf.data()) CHECK(std::abs(v) <= bound);
        CHECK(featurize(x, {4, 10, 10}, m2) == qf);
    }
    CHECK_THROWS_AS(rff_features(std::vector<double>(5, 0.0), m2), std::invalid_argument);
}

namespace {

/// Mean |<phi(x), phi(y)> - exp(-gamma' ||x - y||^2)| over random pairs, where
/// gamma' is the kernel width implied by W ~ N(0, 2 gamma): the RBF kernel
/// exp(-sigma^2 ||d||^2 / 2) with sigma^2 = 2 gamma is exp(-gamma ||d||^2).
double kernel_error(std::size_t m, double gamma, std::uint64_t seed, std::size_t pairs) {
    RngStream rng(seed);
    const RffMap map = rff_init({4, 1, 1}, m, gamma, rng);
    double err = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto x = oracle::random_vec(rng, 4, -0.5, 0.5);
        const auto y = oracle::random_vec(rng, 4, -0.5, 0.5);
        err += std::abs(dot(rff_features(x, map), rff_features(y, map)) - oracle::rbf(x, y, gamma));
    }
    return err / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("rff: kernel approximation") {
    CHECK(kernel_error(2048, 0.5, 36, 100) <= 0.05);

    RngStream rng(37);
    const RffMap map = rff_init({4, 1, 1}, 4096, 1.0, rng);
    const auto x = oracle::random_vec(rng, 4, -1.0, 1.0);
    const auto phi = rff_features(x, map);
    const double self = dot(phi, phi);
    CHECK(self >= 0.95);
    CHECK(self <= 1.05);

    double small = 0.0, large = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        small += kernel_error(64, 0.5, 100 + s, 30);
        large += kernel_error(4096, 0.5, 100 + s, 30);
    }
    CHECK(small > large);
}
