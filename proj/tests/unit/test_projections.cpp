#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "../oracles.hpp"
#include "cvxattn/projections.hpp"

using namespace cvxattn;

namespace {

void check_vec(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

}  // namespace

TEST_CASE("simplex_project: worked examples") {
    check_vec(simplex_project(std::vector<double>{0.25, 0.25, 0.25, 0.25}), {0.25, 0.25, 0.25, 0.25}, 1e-15);
    check_vec(simplex_project(std::vector<double>{2.0, 0.0}), oracle::simplex_qp({2.0, 0.0}), 1e-15);
    check_vec(simplex_project(std::vector<double>{2.0, 0.0}), {1.0, 0.0}, 1e-15);
    check_vec(simplex_project(std::vector<double>{1.0, 0.5}), oracle::simplex_qp({1.0, 0.5}), 1e-15);
    check_vec(simplex_project(std::vector<double>{1.0, 0.5}), {0.75, 0.25}, 1e-15);
    check_vec(simplex_project(std::vector<double>{-3.0}), {1.0}, 0.0);
}

TEST_CASE("simplex_project: rejects empty and non-finite input") {
    CHECK_THROWS_AS(simplex_project(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(simplex_project(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}),
                    std::invalid_argument);
    CHECK_THROWS_AS(simplex_project(std::vector<double>{std::numeric_limits<double>::infinity()}),
                    std::invalid_argument);
}

TEST_CASE("simplex_project: QP oracle, KKT, idempotence on random vectors") {
    RngStream rng(21);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + rng.next_index(29);
        const auto v = oracle::random_vec(rng, n, -5.0, 5.0);
        const auto a = simplex_project(v);
        check_vec(a, oracle::simplex_qp(v), 1e-9);
        CHECK(oracle::simplex_kkt_residual(v, a) <= 1e-9);
        double sum = 0.0;
        for (double x : a) {
            CHECK(x >= -1e-12);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        check_vec(simplex_project(a), a, 1e-12);
    }
}

TEST_CASE("simplex_project: ties give the same threshold") {
    const std::vector<double> v{1.0, 1.0, 0.2, 1.0};
    check_vec(simplex_project(v), oracle::simplex_qp(v), 1e-15);
}

TEST_CASE("squared_distance_to_simplex: values, gradient, convexity") {
    CHECK(squared_distance_to_simplex(std::vector<double>{0.2, 0.3, 0.5}) <= 1e-30);
    CHECK(squared_distance_to_simplex(std::vector<double>{2.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));

    RngStream rng(22);
    const double h = 1e-5;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng.next_index(8);
        auto v = oracle::random_vec(rng, n, -3.0, 3.0);
        const auto proj = simplex_project(v);
        for (std::size_t i = 0; i < n; ++i) {
            const double x0 = v[i];
            v[i] = x0 + h;
            const double up = 0.5 * squared_distance_to_simplex(v);
            v[i] = x0 - h;
            const double down = 0.5 * squared_distance_to_simplex(v);
            v[i] = x0;
            worst = std::max(worst, std::abs((up - down) / (2 * h) - (v[i] - proj[i])));
        }
    }
    CHECK(worst <= 1e-6);

    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + rng.next_index(10);
        const auto v1 = oracle::random_vec(rng, n, -5.0, 5.0);
        const auto v2 = oracle::random_vec(rng, n, -5.0, 5.0);
        const double s = rng.next_unit();
        std::vector<double> mid(n);
        for (std::size_t i = 0; i < n; ++i) mid[i] = s * v1[i] + (1 - s) * v2[i];
        CHECK(squared_distance_to_simplex(mid) <=
              s * squared_distance_to_simplex(v1) + (1 - s) * squared_distance_to_simplex(v2) + 1e-9);
    }
}

TEST_CASE("firm nonexpansiveness on random pairs") {
    RngStream rng(23);
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
        CHECK(proj2 <= inner + 1e-12);
        CHECK(std::sqrt(proj2) <= std::sqrt(dist2) + 1e-12);
    }
}

TEST_CASE("l1_ball_project_nonneg: examples, oracle, errors") {
    check_vec(l1_ball_project_nonneg(std::vector<double>{1.0, 0.5}, 2.0), {1.0, 0.5}, 0.0);
    check_vec(l1_ball_project_nonneg(std::vector<double>{3.0, 1.0}, 2.0), {2.0, 0.0}, 1e-15);
    check_vec(l1_ball_project_nonneg(std::vector<double>{1.0, 1.0, 1.0}, 1.5), {0.5, 0.5, 0.5}, 1e-15);

    RngStream rng(24);
    for (int t = 0; t < 200; ++t) {
        const auto s = oracle::random_vec(rng, 1 + rng.next_index(12), 0.0, 4.0);
        const double r = 0.1 + 10.0 * rng.next_unit();
        const auto got = l1_ball_project_nonneg(s, r);
        check_vec(got, oracle::l1_ball_bisect(s, r), 1e-9);
        CHECK(std::accumulate(got.begin(), got.end(), 0.0) <= r + 1e-9);
    }
    CHECK_THROWS_AS(l1_ball_project_nonneg(std::vector<double>{1.0, -0.1}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(l1_ball_project_nonneg(std::vector<double>{1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("nuclear_ball_project: diagonal case, interior, feasibility") {
    const std::vector<double> d{3.0, 1.0};
    const Mat p = nuclear_ball_project(Mat::diag(d), 2.0);
    const std::vector<double> want{2.0, 0.0};
    CHECK((p - Mat::diag(want)).frobenius() <= 1e-12);

    RngStream rng(25);
    const Mat small = oracle::random_mat(rng, 6, 3, 0.1);
    CHECK((nuclear_ball_project(small, 100.0) - small).frobenius() <= 1e-9);

    const Mat big = oracle::random_mat(rng, 40, 9, 2.0);
    const Mat pb = nuclear_ball_project(big, 5.158);
    // Gram eigenvalues lose half the digits of near-zero singular values.
    CHECK(oracle::nuclear_norm_gram(pb) <= 5.158 + 1e-6);
    CHECK(nuclear_norm(pb) <= 5.158 + 1e-9);

    const Mat zero(4, 3);
    CHECK(nuclear_ball_project(zero, 1.0) == zero);
    CHECK_THROWS_AS(nuclear_ball_project(big, -1.0), std::invalid_argument);
}

TEST_CASE("nuclear_ball_project: nearest among random feasible candidates") {
    RngStream rng(26);
    for (int t = 0; t < 3; ++t) {
        const Mat a = oracle::random_mat(rng, 5, 3, 2.0);
        const double radius = 2.0;
        const Mat p = nuclear_ball_project(a, radius);
        const double best = (a - p).frobenius();
        double closest = std::numeric_limits<double>::infinity();
        for (int c = 0; c < 10000; ++c) {
            // Random candidates near p, pulled back inside the ball by scaling.
            Mat cand = p;
            for (double& x : cand.data()) x += 0.3 * rng.next_gauss();
            const double nn = oracle::nuclear_norm_gram(cand);
            if (nn > radius)
                for (double& x : cand.data()) x *= radius / nn;
            closest = std::min(closest, (a - cand).frobenius());
        }
        CHECK(closest >= best - 1e-9);
    }
}

TEST_CASE("softmax_ref: reference values") {
    const auto s = softmax_ref(std::vector<double>{1.0, 0.0});
    CHECK(std::abs(s[0] - 0.731) <= 1e-3);
    CHECK(std::abs(s[1] - 0.269) <= 1e-3);
    check_vec(softmax_ref(std::vector<double>{0.0, 0.0}), {0.5, 0.5}, 1e-15);
    for (double c : {-800.0, 0.0, 3.5, 900.0}) check_vec(softmax_ref(std::vector<double>{c, c, c}), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
    CHECK_THROWS_AS(softmax_ref(std::vector<double>{std::numeric_limits<double>::quiet_NaN()}), std::invalid_argument);
}
