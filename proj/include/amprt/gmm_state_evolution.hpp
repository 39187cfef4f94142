#pragma once

#include <functional>
#include <vector>

#include "amprt/gmm_retrain.hpp"

namespace amprt {

struct SeStateGmm {
    double m = 0.0;
    double sigma = 1.0;
    double eta = 0.0;
    double m_bar = 0.0;      // gamma sqrt(alpha) m
    double sigma_bar = 1.0;  // sqrt(alpha (m^2 + sigma^2))
};

SeStateGmm make_se_state_gmm(double m, double sigma, const GmmParams& params);

// m_1 = gamma (1 - 2p) / sqrt(alpha), sigma_1 = 1.
SeStateGmm se_init_gmm(const GmmParams& params);

// One step of the (m, sigma) recursion: m' = gamma / sqrt(alpha) E[g(m_bar Y + sigma_bar G, Yhat) Y],
// sigma'^2 = E[g^2], over the four (Y, Yhat) atoms times a panel quadrature in G.
SeStateGmm se_step_gmm(const SeStateGmm& state, const AggregatorGmm& agg, const GmmParams& params,
                       int order = kPanelOrder);

// E[Y g(m_bar Y + sigma_bar G, Yhat)] and E[g^2] at a state; exposed for identity checks.
struct GmmMoments {
    double e_yg = 0.0;
    double e_g2 = 0.0;
};
GmmMoments se_moments_gmm(const SeStateGmm& state, const AggregatorGmm& agg, const GmmParams& params,
                          int order = kPanelOrder);

// Phi(-gamma eta / sqrt(eta^2 + 1)).
double se_error_gmm(const SeStateGmm& state, const GmmParams& params);
double se_error_gmm_eta(double eta, double gamma);

// Optimal aggregator matched to a state: eta = m / sigma, input scale sqrt(alpha) m / (gamma sigma^2).
OptimalGmm matched_optimal(const SeStateGmm& state, const GmmParams& params);

// Maps u = eta_t^2 to eta_{t+1}^2.
double eta_map_opt(double u, const GmmParams& params, int order = kPanelOrder);
double eta_map_ft(double u, const GmmParams& params);
double eta_map_ct(double u, const GmmParams& params);

struct SeMapSpec {
    enum class Variant { Opt, FtLimit, CtLimit, Smoothed };
    Variant variant = Variant::Opt;
    GmmParams params;
    // Used by Smoothed only. The map is taken on the sigma = 1 slice: state (m, sigma) = (sqrt(u), 1).
    AggregatorGmm agg = Identity{};
    int order = kPanelOrder;

    double operator()(double u) const;
    // Upper bound gamma^2 / alpha shared by all variants.
    double bound() const { return params.gamma * params.gamma / params.alpha; }
};

const char* variant_name(SeMapSpec::Variant v);

// Fixed points of u -> F(u) on [0, u_max]: sign changes of F(u) - u on `grid` cells, refined by
// bisection to 1e-8, ascending.
std::vector<double> find_fixed_points(const std::function<double(double)>& map, double u_max, int grid);
// As above; u_max is extended past the bound gamma^2 / alpha when needed.
std::vector<double> find_fixed_points(const SeMapSpec& map, double u_max = 50.0, int grid = 2000);

struct CrossoverResult {
    std::vector<double> roots;  // all sign changes of F_CT - F_FT on (0, u_max]
    bool found() const { return !roots.empty(); }
    double first() const { return roots.front(); }
};

CrossoverResult find_crossover(const GmmParams& params, double u_max = 50.0, int grid = 2000);

struct PStarResult {
    double p_star = 0.0;
    double residual = 0.0;
    bool found = false;
    // gamma^2 >= sqrt(pi alpha / 2): the regime where monotone dynamics above p* are guaranteed.
    bool guaranteed = false;
};

// h(p) = Phi(-gamma^2 (1 - 2p) / sqrt(gamma^2 (1 - 2p)^2 + alpha)) - p.
double p_star_condition(double p, double gamma, double alpha);
PStarResult p_star(const GmmParams& params);

struct CobwebTrace {
    std::vector<std::pair<double, double>> pairs;  // (u_t, F(u_t))
    bool truncated = false;
};

CobwebTrace cobweb_trace(const SeMapSpec& map, double u1, int T);
CobwebTrace cobweb_trace(const std::function<double(double)>& map, double u1, int T);

// SE trace for a fixed aggregator family: states t = 1..T. For Opt each step uses the matched
// optimal aggregator of the current state; Smoothed uses map.agg on the full (m, sigma) recursion;
// the closed-form limits iterate eta^2 with sigma = 1.
std::vector<SeStateGmm> se_trace_gmm(const SeMapSpec& map, int T);

// Optimal aggregator per step with eta_t and input scale from the SE trace. With plugin = true
// they are estimated from the iterate: m = mu^T theta / (gamma sqrt(d)), sigma^2 = ||theta||^2 / d - m^2.
GmmSchedule optimal_schedule(const GmmParams& params, int T, bool plugin = false);

}  // namespace amprt
