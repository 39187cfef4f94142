#include "amprt/bayesmix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amprt {

namespace {

double log_normal_pdf(double z, double mu, double sigma) {
    const double r = (z - mu) / sigma;
    return -0.5 * r * r - std::log(sigma) - 0.5 * std::log(2.0 * kPi);
}

double log_add(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double stddev(const std::vector<double>& z) {
    const double n = static_cast<double>(z.size());
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / n);
}

double resolve_floor(const std::vector<double>& z, double floor) { return floor > 0.0 ? floor : 1e-3 * stddev(z); }

void check_data(const std::vector<double>& z) {
    if (z.size() < 4) throw DegenerateFitError("fit_bimodal_em: need at least 4 points, got " + std::to_string(z.size()));
    for (double v : z)
        if (!std::isfinite(v)) throw DomainError("fit_bimodal_em: non-finite logit");
    if (std::all_of(z.begin(), z.end(), [&](double v) { return v == z.front(); }))
        throw DegenerateFitError("fit_bimodal_em: all logits are identical");
}

void clamp_sigma(double& sigma, double floor, bool& flag) {
    if (!(sigma >= floor)) {
        sigma = floor;
        flag = true;
    }
}

}  // namespace

void BayesMixConfig::validate() const {
    if (!(p >= 0.0 && p < 0.5)) throw ConfigError("bayesmix: p must lie in [0, 0.5)");
    if (!(em_tol > 0.0)) throw ConfigError("bayesmix: em_tol must be positive");
    if (em_max_iters < 1) throw ConfigError("bayesmix: em_max_iters must be at least 1");
    if (!(ridge >= 0.0)) throw ConfigError("bayesmix: ridge must be non-negative");
}

double mixture_loglik(const std::vector<double>& z, const BimodalFit& f) {
    const double lp = std::log(f.pi_plus), lm = std::log(1.0 - f.pi_plus);
    double acc = 0.0;
    for (double v : z)
        acc += log_add(lp + log_normal_pdf(v, f.mu_plus, f.sigma_plus), lm + log_normal_pdf(v, f.mu_minus, f.sigma_minus));
    return acc / static_cast<double>(z.size());
}

BimodalFit em_initial_fit(const std::vector<double>& z, double sigma_floor) {
    check_data(z);
    const double floor = resolve_floor(z, sigma_floor);
    std::vector<double> pos, neg;
    for (double v : z) (v > 0.0 ? pos : neg).push_back(v);
    BimodalFit f;
    const double sd = stddev(z);
    if (pos.empty() || neg.empty()) {
        std::vector<double> sorted = z;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        f.mu_plus = med + sd;
        f.mu_minus = med - sd;
        f.sigma_plus = f.sigma_minus = sd;
        f.pi_plus = 0.5;
    } else {
        auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
        f.mu_plus = mean(pos);
        f.mu_minus = mean(neg);
        f.sigma_plus = pos.size() > 1 ? stddev(pos) : sd;
        f.sigma_minus = neg.size() > 1 ? stddev(neg) : sd;
        f.pi_plus = static_cast<double>(pos.size()) / z.size();
    }
    clamp_sigma(f.sigma_plus, floor, f.sigma_clamped);
    clamp_sigma(f.sigma_minus, floor, f.sigma_clamped);
    f.loglik = mixture_loglik(z, f);
    return f;
}

BimodalFit em_iteration(const std::vector<double>& z, const BimodalFit& f, double sigma_floor) {
    const double floor = resolve_floor(z, sigma_floor);
    const double lp = std::log(f.pi_plus), lm = std::log(1.0 - f.pi_plus);
    double w_sum = 0.0, w_z = 0.0, v_z = 0.0, total_z = 0.0;
    std::vector<double> resp(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double a = lp + log_normal_pdf(z[i], f.mu_plus, f.sigma_plus);
        const double b = lm + log_normal_pdf(z[i], f.mu_minus, f.sigma_minus);
        resp[i] = std::exp(a - log_add(a, b));
        w_sum += resp[i];
        w_z += resp[i] * z[i];
        total_z += z[i];
    }
    const double n = static_cast<double>(z.size());
    BimodalFit g = f;
    // Keep both weights strictly inside (0, 1) so the next E-step stays defined.
    const double tiny = 1e-12;
    g.pi_plus = std::clamp(w_sum / n, tiny, 1.0 - tiny);
    g.mu_plus = w_sum > 0.0 ? w_z / w_sum : f.mu_plus;
    g.mu_minus = n - w_sum > 0.0 ? (total_z - w_z) / (n - w_sum) : f.mu_minus;
    double ss_plus = 0.0, ss_minus = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        ss_plus += resp[i] * (z[i] - g.mu_plus) * (z[i] - g.mu_plus);
        v_z += (1.0 - resp[i]) * (z[i] - g.mu_minus) * (z[i] - g.mu_minus);
    }
    ss_minus = v_z;
    g.sigma_plus = w_sum > 0.0 ? std::sqrt(ss_plus / w_sum) : f.sigma_plus;
    g.sigma_minus = n - w_sum > 0.0 ? std::sqrt(ss_minus / (n - w_sum)) : f.sigma_minus;
    clamp_sigma(g.sigma_plus, floor, g.sigma_clamped);
    clamp_sigma(g.sigma_minus, floor, g.sigma_clamped);
    g.loglik = mixture_loglik(z, g);
    g.iterations = f.iterations + 1;
    return g;
}

BimodalFit fit_bimodal_em(const std::vector<double>& z, const BayesMixConfig& cfg, std::vector<double>* loglik_trace) {
    cfg.validate();
    BimodalFit f = em_initial_fit(z, cfg.sigma_floor);
    if (loglik_trace) loglik_trace->assign(1, f.loglik);
    for (int it = 0; it < cfg.em_max_iters; ++it) {
        const BimodalFit g = em_iteration(z, f, cfg.sigma_floor);
        if (loglik_trace) loglik_trace->push_back(g.loglik);
        const double gain = g.loglik - f.loglik;
        f = g;
        if (gain < cfg.em_tol) {
            f.converged = true;
            break;
        }
    }
    if (f.mu_plus < f.mu_minus) {
        std::swap(f.mu_plus, f.mu_minus);
        std::swap(f.sigma_plus, f.sigma_minus);
        f.pi_plus = 1.0 - f.pi_plus;
    }
    return f;
}

double bayesmix_aggregate(double z, double yhat, const BimodalFit& fit, double p) {
    if (!std::isfinite(z)) throw DomainError("bayesmix_aggregate: non-finite logit");
    if (p == 0.0) return yhat;
    const double dm = (z - fit.mu_minus) / fit.sigma_minus, dp = (z - fit.mu_plus) / fit.sigma_plus;
    const double a = yhat * std::log((1.0 - p) / p) + 0.5 * dm * dm - 0.5 * dp * dp +
                     std::log(fit.pi_plus / (1.0 - fit.pi_plus));
    return std::tanh(0.5 * a);
}

std::vector<std::pair<std::string, double>> emit_targets(const std::vector<LogitRecord>& records,
                                                         const BimodalFit& fit, const BayesMixConfig& cfg) {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(records.size());
    for (const LogitRecord& r : records) out.emplace_back(r.id, bayesmix_aggregate(r.z, r.yhat, fit, cfg.p));
    return out;
}

DemoResult bayesmix_retrain_demo(const GmmParams& params, const BayesMixConfig& cfg, int T, const RngStream& rng) {
    if (T < 1) throw ConfigError("bayesmix_retrain_demo: T must be at least 1");
    cfg.validate();
    const GmmDataset data = sample_gmm_dataset(params, rng);
    const double n = static_cast<double>(data.X.rows());
    Eigen::MatrixXd gram_matrix = data.X.transpose() * data.X / n;
    gram_matrix.diagonal().array() += cfg.ridge;
    const Eigen::LDLT<Eigen::MatrixXd> gram(gram_matrix);
    if (gram.info() != Eigen::Success) throw NumericalError("bayesmix_retrain_demo: singular Gram matrix");
    auto fit = [&](const Eigen::VectorXd& t) -> Eigen::VectorXd { return gram.solve(data.X.transpose() * t / n); };

    DemoResult res;
    Eigen::VectorXd targets = data.y_noisy;
    for (int r = 0; r < T; ++r) {
        DemoRound round;
        round.round = r;
        if (r > 0) {
            const Eigen::VectorXd z = data.X * fit(targets);
            try {
                round.fit = fit_bimodal_em(std::vector<double>(z.data(), z.data() + z.size()), cfg);
            } catch (const DegenerateFitError& e) {
                res.halted = true;
                res.message = e.what();
                break;
            }
            for (Eigen::Index i = 0; i < z.size(); ++i)
                targets[i] = bayesmix_aggregate(z[i], data.y_noisy[i], round.fit, cfg.p);
        }
        const Eigen::VectorXd theta = fit(targets);
        round.accuracy = theta.norm() > 0.0 ? 1.0 - test_error_gmm(theta, data.mu) : 0.5;
        res.rounds.push_back(round);
    }
    return res;
}

}  // namespace amprt
