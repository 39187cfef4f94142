#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "amprt/errors.hpp"

namespace amprt {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrtPi = 1.77245385090551602730;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Default orders used by the state-evolution code.
inline constexpr int kDefaultOrder1d = 61;
// 81 keeps the sharp sign-link aggregator integrals converged to ~1e-11 for eta up to ~2.
inline constexpr int kDefaultOrder2d = 81;
// Gauss-Legendre points per panel in expect_gauss_panels.
inline constexpr int kPanelOrder = 20;

// Standard normal CDF. Built on std::erfc, which is accurate to a few ulp
// over the whole line, so the absolute error is far below 1e-12.
double normal_cdf(double x);

double normal_pdf(double x);

// 1 / (1 + exp(-x)) without overflow; accepts +-infinity.
double stable_logistic(double x);

// Derivative of the logistic function, logistic(x) * (1 - logistic(x)).
double logistic_deriv(double x);

// Gauss rule for a fixed weight function. For Gauss-Hermite the weight is exp(-x^2)
// (physicists' convention), so the weights sum to sqrt(pi); nodes are strictly
// increasing and symmetric about 0.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

// Rules are computed once per order and cached; the references stay valid for the
// lifetime of the program. Safe to call from several threads.
const QuadratureRule& gauss_hermite_rule(int order);
// Weight exp(-x) on [0, inf).
const QuadratureRule& gauss_laguerre_rule(int order);
// Weight 1 on [-1, 1].
const QuadratureRule& gauss_legendre_rule(int order);
// Gauss-Hermite after the change of variables x -> sqrt(2) x: integrates against the
// standard normal density, weights sum to 1.
const QuadratureRule& normal_rule(int order);

void check_order(int order);

// E[f(G)], G ~ N(0, 1).
template <class F>
double expect_gauss_1d(F&& f, int order = kDefaultOrder1d) {
    const QuadratureRule& rule = normal_rule(order);
    double acc = 0.0;
    for (int k = 0; k < rule.order; ++k) acc += rule.weights[k] * f(rule.nodes[k]);
    return acc;
}

// E[f(Z0, G)] for independent standard normals; tensor-product rule of order^2 points.
template <class F>
double expect_gauss_2d(F&& f, int order = kDefaultOrder2d) {
    const QuadratureRule& rule = normal_rule(order);
    double acc = 0.0;
    for (int i = 0; i < rule.order; ++i) {
        double inner = 0.0;
        for (int j = 0; j < rule.order; ++j) inner += rule.weights[j] * f(rule.nodes[i], rule.nodes[j]);
        acc += rule.weights[i] * inner;
    }
    return acc;
}

namespace detail {

// |cut| beyond which the Gaussian tail past the cut is below double precision.
inline constexpr double kTailCut = 9.0;

// Integral of r(w) phi(w) over [0, inf) for smooth r. The even part of r goes through
// Gauss-Hermite, the odd part r_o(w) = w e(w) through Gauss-Laguerre after s = w^2 / 2.
template <class R>
double half_line_normal_integral(R&& r, int order) {
    const QuadratureRule& gh = normal_rule(order);
    double even = 0.0;
    for (int k = 0; k < gh.order; ++k) even += gh.weights[k] * r(gh.nodes[k]);
    const QuadratureRule& gl = gauss_laguerre_rule(order);
    double odd = 0.0;
    for (int k = 0; k < gl.order; ++k) {
        const double w = std::sqrt(2.0 * gl.nodes[k]);
        odd += gl.weights[k] * 0.5 * (r(w) - r(-w)) / w;
    }
    return 0.5 * even + kInvSqrt2Pi * odd;
}

// Integral of r(w) phi(w) over [0, c] (signed: negative c gives minus the integral over [c, 0]).
template <class R>
double segment_normal_integral(R&& r, double c, int order) {
    const QuadratureRule& leg = gauss_legendre_rule(order);
    const double half = 0.5 * c;
    double acc = 0.0;
    for (int k = 0; k < leg.order; ++k) {
        const double w = half * (leg.nodes[k] + 1.0);
        acc += leg.weights[k] * r(w) * normal_pdf(w);
    }
    return half * acc;
}

}  // namespace detail

// E[f(W)], W ~ N(0, 1), for an integrand with a jump at W = cut: f equals left(w) for
// w < cut and right(w) for w > cut, where left and right are each smooth on the whole
// line. Spectrally accurate where plain Gauss-Hermite would converge only slowly.
template <class L, class R>
double expect_gauss_split(L&& left, R&& right, double cut, int order = kDefaultOrder1d) {
    const double base = expect_gauss_1d(left, order);
    auto diff = [&](double w) { return right(w) - left(w); };
    if (cut >= detail::kTailCut) return base;
    if (cut <= -detail::kTailCut) return base + expect_gauss_1d(diff, order);
    const double tail = detail::half_line_normal_integral(diff, order) -
                        detail::segment_normal_integral(diff, cut, order);
    return base + tail;
}

// Composite Gauss-Legendre rule against the standard normal density on [-12, 12]: panels
// shrink geometrically towards a sharp but continuous transition of the given width around
// W = center (e.g. a steep logistic). Weights include the density; the mass outside is 4e-33.
QuadratureRule normal_panel_rule(double center, double width, int panel_order = kPanelOrder);

// E[f(W)], W ~ N(0, 1), under normal_panel_rule.
template <class F>
double expect_gauss_panels(F&& f, double center, double width, int panel_order = kPanelOrder) {
    const QuadratureRule rule = normal_panel_rule(center, width, panel_order);
    double acc = 0.0;
    for (int k = 0; k < rule.order; ++k) acc += rule.weights[k] * f(rule.nodes[k]);
    return acc;
}

// Bisection on a bracket with f(lo) * f(hi) <= 0. Returns a point whose bracket has
// width <= tol (or an exact zero). Throws BracketError without a sign change.
double find_root_bisect(const std::function<double(double)>& f, double lo, double hi, double tol);

// Deterministic random stream keyed by (master_seed, stream_index). The engine is
// std::mt19937_64 seeded through std::seed_seq with both keys, so equal keys give
// bit-identical draws and different indices give decorrelated streams.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index, std::uint64_t substream = 0);

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }
    std::uint64_t substream() const noexcept { return substream_; }

    double normal();
    // Uniform on [0, 1).
    double uniform();
    bool bernoulli(double prob) { return uniform() < prob; }

    // Independent sibling stream with the same (master_seed, stream_index), e.g. for
    // the data matrix vs. the signal vector of one replication.
    RngStream derive(std::uint64_t substream) const { return {master_seed_, stream_index_, substream}; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::uint64_t substream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace amprt
