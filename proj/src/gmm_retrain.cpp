#include "amprt/gmm_retrain.hpp"

#include <cmath>
#include <string>

namespace amprt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_finite(double y) {
    if (!std::isfinite(y)) throw DomainError("aggregator evaluated at non-finite y");
}

// Slope of the exponent in y, and the y-independent part.
double optimal_slope(const OptimalGmm& a) {
    const GmmParams& q = a.params;
    return 2.0 * q.gamma * q.gamma * a.input_scale / (q.alpha * (a.eta * a.eta + 1.0));
}

double optimal_offset(const OptimalGmm& a, double yhat) {
    const GmmParams& q = a.params;
    return yhat * std::log((1.0 - q.p) / q.p) + std::log(q.pi_plus / (1.0 - q.pi_plus));
}

void check_vector(const Eigen::VectorXd& v, const char* what, int t) {
    if (!v.allFinite()) throw DivergenceError(std::string("non-finite entries in ") + what, t);
}

}  // namespace

GmmParams GmmParams::make(double gamma, double alpha, double p, double pi_plus, int n) {
    GmmParams q{gamma, alpha, p, pi_plus, n, static_cast<int>(std::lround(alpha * n))};
    q.validate();
    return q;
}

void GmmParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
    if (!(p >= 0.0 && p < 0.5)) throw ConfigError("p must lie in [0, 0.5)");
    if (!(pi_plus > 0.0 && pi_plus < 1.0)) throw ConfigError("pi_plus must lie in (0, 1)");
    if (n < 0 || d < 0) throw ConfigError("n and d must be non-negative");
}

const char* aggregator_name(const AggregatorGmm& agg) {
    return std::visit(overloaded{[](const Identity&) { return "identity"; },
                                 [](const OptimalGmm&) { return "opt"; },
                                 [](const SmoothedFullRT&) { return "ft"; },
                                 [](const SmoothedConsensusRT&) { return "ct"; }},
                      agg);
}

GmmDataset sample_gmm_dataset(const GmmParams& params, const RngStream& rng) {
    params.validate();
    const int n = params.n, d = params.d;
    if (static_cast<long long>(n) * d == 0) throw ConfigError("sample_gmm_dataset: n * d must be positive");

    GmmDataset ds;
    RngStream mu_rng = rng.derive(1);
    ds.mu.resize(d);
    for (int j = 0; j < d; ++j) ds.mu[j] = mu_rng.normal();
    const double norm = ds.mu.norm();
    if (norm == 0.0) throw NumericalError("sampled mean vector is zero");
    ds.mu *= params.gamma / norm;

    RngStream label_rng = rng.derive(2);
    ds.y_true.resize(n);
    ds.y_noisy.resize(n);
    for (int i = 0; i < n; ++i) {
        ds.y_true[i] = label_rng.bernoulli(params.pi_plus) ? 1.0 : -1.0;
        const bool flip = label_rng.bernoulli(params.p);
        ds.y_noisy[i] = flip ? -ds.y_true[i] : ds.y_true[i];
    }

    // Row-wise draws so the dataset does not depend on Eigen's storage order.
    RngStream x_rng = rng.derive(3);
    ds.X.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) ds.X(i, j) = x_rng.normal();
    ds.X.noalias() += ds.y_true * ds.mu.transpose();
    return ds;
}

double eval_aggregator(const AggregatorGmm& agg, double y, double yhat) {
    check_finite(y);
    return std::visit(
        overloaded{[&](const Identity&) { return yhat; },
                   [&](const OptimalGmm& a) {
                       if (a.params.p == 0.0) return yhat;
                       return std::tanh(0.5 * (optimal_offset(a, yhat) + optimal_slope(a) * y));
                   },
                   [&](const SmoothedFullRT& a) { return 2.0 * stable_logistic(a.beta * y) - 1.0; },
                   [&](const SmoothedConsensusRT& a) { return yhat * stable_logistic(a.beta * y * yhat); }},
        agg);
}

double eval_aggregator_deriv(const AggregatorGmm& agg, double y, double yhat) {
    check_finite(y);
    return std::visit(overloaded{[&](const Identity&) { return 0.0; },
                                 [&](const OptimalGmm& a) {
                                     if (a.params.p == 0.0) return 0.0;
                                     const double g = std::tanh(0.5 * (optimal_offset(a, yhat) + optimal_slope(a) * y));
                                     return 0.5 * optimal_slope(a) * (1.0 - g) * (1.0 + g);
                                 },
                                 [&](const SmoothedFullRT& a) { return 2.0 * a.beta * logistic_deriv(a.beta * y); },
                                 [&](const SmoothedConsensusRT& a) {
                                     return a.beta * logistic_deriv(a.beta * y * yhat);
                                 }},
                      agg);
}

double onsager_coefficient(const AggregatorGmm& agg, const Eigen::VectorXd& y_soft,
                           const Eigen::VectorXd& y_noisy) {
    if (y_soft.size() != y_noisy.size())
        throw ShapeError("onsager_coefficient: y_soft has " + std::to_string(y_soft.size()) +
                         " entries, y_noisy has " + std::to_string(y_noisy.size()));
    if (y_soft.size() == 0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_soft.size(); ++i) acc += eval_aggregator_deriv(agg, y_soft[i], y_noisy[i]);
    return acc / static_cast<double>(y_soft.size());
}

AmpStateGmm amp_init_gmm(const GmmDataset& data) {
    return {Eigen::VectorXd::Zero(data.X.cols()), Eigen::VectorXd::Zero(data.X.rows()), 0};
}

AmpStateGmm amp_step_gmm(const AmpStateGmm& state, const GmmDataset& data, const AggregatorGmm& agg) {
    return amp_step_gmm(state, data, agg, nullptr);
}

AmpStateGmm amp_step_gmm(const AmpStateGmm& state, const GmmDataset& data, const AggregatorGmm& agg,
                         double* onsager_out) {
    const Eigen::Index n = data.X.rows(), d = data.X.cols();
    if (state.theta.size() != d || state.y_soft.size() != n || data.y_noisy.size() != n)
        throw ShapeError("amp_step_gmm: state dimensions do not match the dataset");
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(state.y_soft[i])) throw DivergenceError("non-finite soft prediction", state.t);
        g[i] = eval_aggregator(agg, state.y_soft[i], data.y_noisy[i]);
    }
    const double c = onsager_coefficient(agg, state.y_soft, data.y_noisy);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    AmpStateGmm next;
    next.t = state.t + 1;
    next.theta.noalias() = inv_sqrt_n * (data.X.transpose() * g);
    next.theta -= c * state.theta;
    next.y_soft.noalias() = inv_sqrt_n * (data.X * next.theta);
    next.y_soft -= (static_cast<double>(d) / static_cast<double>(n)) * g;
    check_vector(next.theta, "theta", next.t);
    check_vector(next.y_soft, "soft predictions", next.t);
    if (onsager_out) *onsager_out = c;
    return next;
}

double test_error_gmm(const Eigen::VectorXd& theta, const Eigen::VectorXd& mu) {
    if (theta.size() != mu.size()) throw ShapeError("test_error_gmm: theta and mu differ in length");
    const double norm = theta.norm();
    if (!(norm > 0.0)) throw DegenerateModelError("test_error_gmm: theta has zero norm");
    return normal_cdf(-mu.dot(theta) / norm);
}

Eigen::VectorXd vanilla_estimator(const GmmDataset& data) {
    const double n = static_cast<double>(data.X.rows());
    Eigen::VectorXd theta = data.X.transpose() * data.y_noisy;
    return theta / n;
}

GmmSchedule constant_schedule(const AggregatorGmm& agg) {
    return [agg](int, const AmpStateGmm&, const GmmDataset&) { return agg; };
}

namespace {

TrajectoryPoint describe(const AmpStateGmm& s, const GmmDataset& data, double onsager, double eta) {
    TrajectoryPoint pt;
    pt.t = s.t;
    pt.model_norm = s.theta.norm();
    pt.soft_norm = s.y_soft.norm();
    pt.onsager = onsager;
    pt.eta_used = eta;
    if (pt.model_norm > 0.0) {
        pt.overlap = data.mu.dot(s.theta) / pt.model_norm;
        pt.test_error = normal_cdf(-pt.overlap);
    } else {
        pt.overlap = 0.0;
        pt.test_error = 0.5;
    }
    return pt;
}

double eta_of(const AggregatorGmm& agg) {
    if (const auto* a = std::get_if<OptimalGmm>(&agg)) return a->eta;
    return std::nan("");
}

}  // namespace

Trajectory run_retraining_gmm(const GmmParams& params, const GmmSchedule& schedule, int T, const RngStream& rng) {
    if (T < 1) throw ConfigError("run_retraining_gmm: T must be at least 1");
    return run_retraining_gmm(sample_gmm_dataset(params, rng), schedule, T);
}

Trajectory run_retraining_gmm(const GmmDataset& data, const GmmSchedule& schedule, int T) {
    if (T < 1) throw ConfigError("run_retraining_gmm: T must be at least 1");
    Trajectory traj;
    AmpStateGmm state = amp_init_gmm(data);
    try {
        for (int t = 0; t < T; ++t) {
            const AggregatorGmm agg = t == 0 ? AggregatorGmm{Identity{}} : schedule(t, state, data);
            double c = 0.0;
            state = amp_step_gmm(state, data, agg, &c);
            traj.points.push_back(describe(state, data, c, eta_of(agg)));
        }
    } catch (const DivergenceError& e) {
        traj.diverged = true;
        traj.diverged_at = e.iteration();
        traj.message = e.what();
    } catch (const DomainError& e) {
        traj.diverged = true;
        traj.diverged_at = state.t + 1;
        traj.message = e.what();
    }
    return traj;
}

Trajectory run_hard_retraining_gmm(const GmmDataset& data, HardRetrain mode, int T) {
    if (T < 1) throw ConfigError("run_hard_retraining_gmm: T must be at least 1");
    const Eigen::Index n = data.X.rows();
    Trajectory traj;
    AmpStateGmm state{vanilla_estimator(data), Eigen::VectorXd(), 1};
    state.y_soft = data.X * state.theta;
    traj.points.push_back(describe(state, data, 0.0, std::nan("")));
    for (int t = 1; t < T; ++t) {
        Eigen::VectorXd g(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = state.y_soft[i] >= 0.0 ? 1.0 : -1.0;
            g[i] = mode == HardRetrain::FullRT ? s : (s == data.y_noisy[i] ? data.y_noisy[i] : 0.0);
        }
        state.theta = data.X.transpose() * g / static_cast<double>(n);
        state.y_soft = data.X * state.theta;
        state.t = t + 1;
        traj.points.push_back(describe(state, data, 0.0, std::nan("")));
    }
    return traj;
}

}  // namespace amprt
