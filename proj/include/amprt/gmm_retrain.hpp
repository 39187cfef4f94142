#pragma once

#include <cstdint>
#include <functional>
#include <variant>

#include <Eigen/Dense>

#include "amprt/numerics.hpp"
#include "amprt/trajectory.hpp"

namespace amprt {

struct GmmParams {
    double gamma = 1.0;
    double alpha = 1.0;
    double p = 0.0;
    double pi_plus = 0.5;
    int n = 0;
    int d = 0;

    // d = round(alpha * n).
    static GmmParams make(double gamma, double alpha, double p, double pi_plus, int n);
    void validate() const;
};

struct GmmDataset {
    Eigen::MatrixXd X;        // n x d, rows x_i = y_i mu + z_i
    Eigen::VectorXd y_true;   // +-1
    Eigen::VectorXd y_noisy;  // +-1
    Eigen::VectorXd mu;       // ||mu|| = gamma
};

struct AmpStateGmm {
    Eigen::VectorXd theta;
    Eigen::VectorXd y_soft;
    int t = 0;
};

// Bayes-optimal aggregator tanh((yhat log((1-p)/p) + 2 gamma^2 k y / (alpha (eta^2 + 1)) + log(pi+/pi-)) / 2).
// input_scale k is 1 on the optimal manifold; the first retraining step needs k = 1 - 2p
// because the identity initialisation leaves (m, sigma) off it.
struct OptimalGmm {
    double eta = 0.0;
    GmmParams params;
    double input_scale = 1.0;
};

// 2 logistic(beta y) - 1, a smooth stand-in for sign(y).
struct SmoothedFullRT {
    double beta = 1.0;
};

// yhat logistic(beta y yhat), a smooth stand-in for yhat 1{y yhat > 0}.
struct SmoothedConsensusRT {
    double beta = 1.0;
};

using AggregatorGmm = std::variant<Identity, OptimalGmm, SmoothedFullRT, SmoothedConsensusRT>;

const char* aggregator_name(const AggregatorGmm& agg);

GmmDataset sample_gmm_dataset(const GmmParams& params, const RngStream& rng);

double eval_aggregator(const AggregatorGmm& agg, double y, double yhat);
double eval_aggregator_deriv(const AggregatorGmm& agg, double y, double yhat);

double onsager_coefficient(const AggregatorGmm& agg, const Eigen::VectorXd& y_soft,
                           const Eigen::VectorXd& y_noisy);

// Initial state for the identity step: theta = 0, y_soft = 0, t = 0.
AmpStateGmm amp_init_gmm(const GmmDataset& data);

// theta' = X^T g / sqrt(n) - C theta, y' = X theta' / sqrt(n) - g d / n.
AmpStateGmm amp_step_gmm(const AmpStateGmm& state, const GmmDataset& data, const AggregatorGmm& agg);
AmpStateGmm amp_step_gmm(const AmpStateGmm& state, const GmmDataset& data, const AggregatorGmm& agg,
                         double* onsager_out);

double test_error_gmm(const Eigen::VectorXd& theta, const Eigen::VectorXd& mu);

// (1/n) X^T yhat.
Eigen::VectorXd vanilla_estimator(const GmmDataset& data);

// Aggregator for the step that maps y^t to theta^{t+1}; called for t = 1, ..., T-1
// (t = 0 always uses the identity).
using GmmSchedule = std::function<AggregatorGmm(int t, const AmpStateGmm& state, const GmmDataset& data)>;

GmmSchedule constant_schedule(const AggregatorGmm& agg);

// Runs T AMP steps on a fresh dataset; point t = 1..T describes theta^t.
Trajectory run_retraining_gmm(const GmmParams& params, const GmmSchedule& schedule, int T, const RngStream& rng);
Trajectory run_retraining_gmm(const GmmDataset& data, const GmmSchedule& schedule, int T);

enum class HardRetrain { FullRT, ConsensusRT };

// Plain retraining without memory correction: theta^{t+1} = X^T g(X theta^t, yhat) / n with
// g = sign (full) or yhat 1{agree} (consensus); theta^1 is the vanilla estimator.
Trajectory run_hard_retraining_gmm(const GmmDataset& data, HardRetrain mode, int T);

}  // namespace amprt
