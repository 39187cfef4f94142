#pragma once

#include <vector>

#include "amprt/glm_retrain.hpp"

namespace amprt {

// Main-text convention: Z_t = mu Z + sigma G with Z ~ N(0, alpha gamma^2), sigma_1 = sqrt(alpha).
struct SeStateGlm {
    double mu = 0.0;
    double sigma = 1.0;
    double eta = 0.0;
};

SeStateGlm make_se_state_glm(double mu, double sigma);

// mu_1 = 2 / (alpha gamma^2) E[Z hat_h_p(Z)], sigma_1 = sqrt(alpha). The sign link uses
// eta_1 = (1 - 2p) sqrt(2/pi) / alpha directly.
SeStateGlm se_init_glm(const GlmParams& params, int order = kDefaultOrder1d);
// mu_1 by quadrature for every link (the sign link included).
double se_init_mu_quadrature(const GlmParams& params, int order = kDefaultOrder1d);

// eta_{t+1} = sqrt(E[g*(alpha eta^2 Z + alpha eta G, Yhat)^2] / alpha), 2-D quadrature over (Z, G).
double se_step_glm_opt(double eta, const GlmParams& params, int order = kDefaultOrder2d);

// General recursion
//   mu' = (1/(alpha gamma^2) + mu^2/sigma^2) E[E(Z | Z_t, Yhat) g] - mu/sigma^2 E[Z_t g],
//   sigma'^2 = alpha E[g^2],
// with E(Z | Z_t, Yhat) from the same posterior integral as the optimal aggregator.
SeStateGlm se_step_glm_generic(const SeStateGlm& state, const AggregatorGlm& agg, const GlmParams& params,
                               int order = kDefaultOrder2d);

// Same mu' through E[E(Z | Z_t, Yhat) g] = E[Z g]; used as an independent check.
double se_step_glm_mu_tower(const SeStateGlm& state, const AggregatorGlm& agg, const GlmParams& params,
                            int order = kDefaultOrder2d);

// Posterior mean E(Z | Z_t = u, Yhat = yhat) at a state.
double glm_posterior_mean(double u, double yhat, const SeStateGlm& state, const GlmParams& params,
                          int order = kDefaultOrder1d);

// F(rho(eta)) with rho = eta gamma / sqrt(eta^2 gamma^2 + 1/alpha).
double se_error_glm(double eta, const GlmParams& params);

// Optimal aggregator matched to a state: eta = mu / sigma, input scale alpha mu / sigma^2.
AggregatorGlm matched_optimal_glm(const SeStateGlm& state, const GlmParams& params, int order = kDefaultOrder1d);

// u = eta^2 -> eta_{t+1}^2 for the optimal aggregator; u = 0 gives the eta -> 0 limit.
double eta_map_glm(double u, const GlmParams& params, int order = kDefaultOrder2d);

// States t = 1..T. optimal = true follows the optimal aggregator (eta recursion);
// otherwise the identity aggregator is kept (no retraining).
std::vector<SeStateGlm> se_trace_glm(const GlmParams& params, int T, bool optimal = true);

// eta_t and the input scale from the optimal SE trace.
GlmSchedule optimal_schedule_glm(const GlmParams& params, int T);

}  // namespace amprt
