#include "cvxattn/projections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cvxattn {

double simplex_threshold(std::span<const double> v, double radius) {
    if (v.empty()) throw std::invalid_argument("simplex projection: empty vector");
    require_finite(v, "simplex projection");

    std::vector<double> u(v.begin(), v.end());
    std::stable_sort(u.begin(), u.end(), std::greater<>());

    // rho = largest j with u_j - (sum_{i<=j} u_i - radius) / j > 0
    double running = 0.0;
    double sum_at_rho = u[0];
    std::size_t rho = 1;
    for (std::size_t j = 0; j < u.size(); ++j) {
        running += u[j];
        if (u[j] - (running - radius) / static_cast<double>(j + 1) > 0.0) {
            rho = j + 1;
            sum_at_rho = running;
        }
    }
    return (sum_at_rho - radius) / static_cast<double>(rho);
}

std::vector<double> simplex_project(std::span<const double> s) {
    const double theta = simplex_threshold(s, 1.0);
    std::vector<double> out(s.size());
    for (std::size_t p = 0; p < s.size(); ++p) out[p] = std::max(s[p] - theta, 0.0);
    return out;
}

double squared_distance_to_simplex(std::span<const double> s) {
    const auto proj = simplex_project(s);
    double d = 0.0;
    for (std::size_t p = 0; p < s.size(); ++p) d += (s[p] - proj[p]) * (s[p] - proj[p]);
    return d;
}

std::vector<double> l1_ball_project_nonneg(std::span<const double> sigma, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("l1_ball_project_nonneg: radius must be > 0");
    require_finite(sigma, "l1_ball_project_nonneg");
    for (double x : sigma)
        if (x < 0.0) throw std::invalid_argument("l1_ball_project_nonneg: negative entry");

    std::vector<double> out(sigma.begin(), sigma.end());
    if (out.empty()) return out;
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    if (total <= radius) return out;

    const double theta = simplex_threshold(sigma, radius);
    for (auto& x : out) x = std::max(x - theta, 0.0);
    return out;
}

Mat nuclear_ball_project(const Mat& a, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("nuclear_ball_project: radius must be > 0");
    Svd s = svd_thin(a);
    const double total = std::accumulate(s.sigma.begin(), s.sigma.end(), 0.0);
    if (total <= radius) return a;
    s.sigma = l1_ball_project_nonneg(s.sigma, radius);
    return svd_reconstruct(s);
}

std::vector<double> softmax_ref(std::span<const double> s) {
    if (s.empty()) throw std::invalid_argument("softmax_ref: empty vector");
    require_finite(s, "softmax_ref");
    const double mx = *std::max_element(s.begin(), s.end());
    std::vector<double> out(s.size());
    double z = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = std::exp(s[i] - mx);
        z += out[i];
    }
    for (auto& x : out) x /= z;
    return out;
}

} // namespace cvxattn
