#pragma once

#include <functional>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "amprt/numerics.hpp"
#include "amprt/trajectory.hpp"

namespace amprt {

// h(z) = (1 + sign(z)) / 2.
struct SignLink {};
// h(z) = 1 / (1 + exp(-scale z)).
struct LogisticLink {
    double scale = 1.0;
};
// h(z) = Phi(scale z).
struct ProbitLink {
    double scale = 1.0;
};
// User-supplied h; assumed continuous.
struct CustomLink {
    std::function<double(double)> h;
    std::string name = "custom";
};

using Link = std::variant<SignLink, LogisticLink, ProbitLink, CustomLink>;

double link_value(const Link& link, double z);
bool link_is_sign(const Link& link);
std::string link_name(const Link& link);
// Parses "sign", "logistic", "logistic:<scale>", "probit", "probit:<scale>".
Link parse_link(const std::string& text);
// Throws ConfigError unless h(u) > h(-u) on a grid of u in (0, 10] and h stays in [0, 1].
void check_link(const Link& link);

// (1 - p) h(z) + p (1 - h(z)).
double hat_h_p(double z, const Link& link, double p);

struct GlmParams {
    double gamma = 1.0;
    double alpha = 1.0;
    double p = 0.0;
    Link link = SignLink{};
    int n = 0;
    int d = 0;

    static GlmParams make(double gamma, double alpha, double p, Link link, int n);
    void validate() const;
    // gamma used by the theory: 1 for the sign link (scale invariant), gamma otherwise.
    double effective_gamma() const { return link_is_sign(link) ? 1.0 : gamma; }
};

struct GlmDataset {
    Eigen::MatrixXd X;        // n x d, entries N(0, 1/n)
    Eigen::VectorXd beta;     // ||beta||^2 / d = gamma^2
    Eigen::VectorXd y_true;   // +-1
    Eigen::VectorXd y_noisy;  // +-1
};

struct AmpStateGlm {
    Eigen::VectorXd beta_est;
    Eigen::VectorXd y_soft;
    int t = 0;
};

// Bayes-optimal aggregator evaluated by quadrature, applied as g*(input_scale * u).
struct OptimalGlm {
    double eta = 0.0;
    GlmParams params;
    int order = kDefaultOrder1d;
    double input_scale = 1.0;
};

// Closed form of the optimal aggregator for the sign link, applied as g*(input_scale * u).
struct OptimalSign {
    double eta = 0.0;
    GlmParams params;
    double input_scale = 1.0;
};

using AggregatorGlm = std::variant<Identity, OptimalGlm, OptimalSign>;

const char* aggregator_name(const AggregatorGlm& agg);

// E over Z ~ N(0, sd^2) of f(z, hat_h_p(z)). The sign link is split at z = 0.
template <class F>
double expect_over_link(const Link& link, double p, double sd, F&& f, int order) {
    if (link_is_sign(link)) {
        return expect_gauss_split([&](double w) { return f(sd * w, p); },
                                  [&](double w) { return f(sd * w, 1.0 - p); }, 0.0, order);
    }
    return expect_gauss_1d([&](double w) { return f(sd * w, hat_h_p(sd * w, link, p)); }, order);
}

GlmDataset sample_glm_dataset(const GlmParams& params, const RngStream& rng);

// g*(u, yhat) = (1/(alpha gamma^2) + eta^2) E[Z | u, yhat] - u / alpha, with the posterior
// weight exp(-eta^2 z^2 / 2 + u z / alpha - z^2 / (2 alpha gamma^2)) f(z) completed to a Gaussian
// N(m, 1/P) and the remaining factor f integrated by Gauss-Hermite.
double optimal_aggregator_glm(double u, double yhat, double eta, const GlmParams& params,
                              int order = kDefaultOrder1d);

// Sign link: (1/s)(1-2p) yhat sqrt(2/pi) exp(-u^2 s^2 / (2 alpha^2)) / (1 + (1-2p) yhat (2 Phi(u s / alpha) - 1)),
// s^2 = 1 / (1/alpha + eta^2).
double optimal_aggregator_sign(double u, double yhat, double eta, const GlmParams& params);

double eval_aggregator_glm(const AggregatorGlm& agg, double u, double yhat);
// Central difference with step 1e-5 (0 for the identity).
double eval_aggregator_glm_deriv(const AggregatorGlm& agg, double u, double yhat);

AmpStateGlm amp_init_glm(const GlmDataset& data);

// beta' = X^T g - C beta, y' = X beta' - g d / n.
AmpStateGlm amp_step_glm(const AmpStateGlm& state, const GlmDataset& data, const AggregatorGlm& agg,
                         double* onsager_out = nullptr);

// Error of sign(x^T theta) against the noiseless GLM label, as a function of
// rho = beta^T theta / (||beta|| ||theta||). Sign link: arccos(rho) / pi.
double glm_error_of_overlap(double rho, const GlmParams& params);
// E[Phi(rho Z / sqrt(1 - rho^2)) (1 - h(sqrt(alpha) gamma Z)) + Phi(-rho Z / sqrt(1 - rho^2)) h(sqrt(alpha) gamma Z)]
// by panel quadrature for every link, including the sign link.
double glm_error_of_overlap_quadrature(double rho, const GlmParams& params, int order = kPanelOrder);

double test_error_glm(const Eigen::VectorXd& theta, const GlmDataset& data, const GlmParams& params);

using GlmSchedule = std::function<AggregatorGlm(int t, const AmpStateGlm& state, const GlmDataset& data)>;

Trajectory run_retraining_glm(const GlmParams& params, const GlmSchedule& schedule, int T, const RngStream& rng);
Trajectory run_retraining_glm(const GlmDataset& data, const GlmParams& params, const GlmSchedule& schedule, int T);

}  // namespace amprt
