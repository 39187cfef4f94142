#pragma once

#include <string>
#include <utility>
#include <vector>

#include "amprt/gmm_retrain.hpp"

namespace amprt {

struct LogitRecord {
    std::string id;
    double z = 0.0;
    double yhat = 1.0;
};

struct BimodalFit {
    double mu_plus = 1.0;
    double mu_minus = -1.0;
    double sigma_plus = 1.0;
    double sigma_minus = 1.0;
    double pi_plus = 0.5;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    // A component hit sigma_floor at some iteration.
    bool sigma_clamped = false;
};

struct BayesMixConfig {
    double p = 0.1;
    int em_max_iters = 500;
    double em_tol = 1e-10;
    // <= 0 selects 1e-3 times the standard deviation of the data.
    double sigma_floor = 0.0;
    // Ridge penalty of the demo's linear fit: (X^T X / n + ridge I) theta = X^T t / n.
    double ridge = 1.0;

    void validate() const;
};

// Mean log-likelihood of the two-component mixture.
double mixture_loglik(const std::vector<double>& z, const BimodalFit& fit);

// Starting point: components from the sign split of z (median +- one std when one side is empty).
BimodalFit em_initial_fit(const std::vector<double>& z, double sigma_floor);

// One EM update; sigma clamped at sigma_floor.
BimodalFit em_iteration(const std::vector<double>& z, const BimodalFit& fit, double sigma_floor);

// EM for a 1-D two-component Gaussian mixture, components sorted so mu_plus >= mu_minus.
// loglik_trace, when given, receives the log-likelihood after initialisation and after each step.
BimodalFit fit_bimodal_em(const std::vector<double>& z, const BayesMixConfig& cfg,
                          std::vector<double>* loglik_trace = nullptr);

// tanh((yhat log((1-p)/p) + (z - mu-)^2 / (2 sigma-^2) - (z - mu+)^2 / (2 sigma+^2) + log(pi+/pi-)) / 2).
double bayesmix_aggregate(double z, double yhat, const BimodalFit& fit, double p);

std::vector<std::pair<std::string, double>> emit_targets(const std::vector<LogitRecord>& records,
                                                         const BimodalFit& fit, const BayesMixConfig& cfg);

struct DemoRound {
    int round = 0;
    double accuracy = 0.0;
    BimodalFit fit;  // fit used to build this round's targets (unset for round 0)
};

struct DemoResult {
    std::vector<DemoRound> rounds;
    bool halted = false;
    std::string message;
};

// Ridge least-squares linear model retrained on BayesMix targets. Round 0 fits the noisy labels; each
// later round fits EM to the current training logits X theta and refits to the aggregated targets.
// Accuracy is the exact clean-test accuracy 1 - Phi(-mu^T theta / ||theta||).
DemoResult bayesmix_retrain_demo(const GmmParams& params, const BayesMixConfig& cfg, int T, const RngStream& rng);

}  // namespace amprt
