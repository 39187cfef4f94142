#include "amprt/glm_retrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace amprt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kFdStep = 1e-5;

// phi(x) / Phi(x), finite for very negative x.
double phi_over_cdf(double x) {
    if (x > -30.0) return normal_pdf(x) / normal_cdf(x);
    const double r = 1.0 / (x * x);
    return -x / (1.0 - r + 3.0 * r * r - 15.0 * r * r * r);
}

double parse_scale(const std::string& text, std::size_t colon) {
    if (colon == std::string::npos) return 1.0;
    try {
        std::size_t used = 0;
        const std::string tail = text.substr(colon + 1);
        const double v = std::stod(tail, &used);
        if (used != tail.size()) throw ConfigError("bad link scale in '" + text + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("bad link scale in '" + text + "'");
    }
}

// Steepness of h at its transition, in units of z.
double link_slope(const Link& link) {
    if (const auto* l = std::get_if<LogisticLink>(&link)) return std::abs(l->scale);
    if (const auto* l = std::get_if<ProbitLink>(&link)) return std::abs(l->scale);
    return 1.0;
}

}  // namespace

double link_value(const Link& link, double z) {
    return std::visit(overloaded{[&](const SignLink&) { return z > 0.0 ? 1.0 : (z < 0.0 ? 0.0 : 0.5); },
                                 [&](const LogisticLink& l) { return stable_logistic(l.scale * z); },
                                 [&](const ProbitLink& l) { return normal_cdf(l.scale * z); },
                                 [&](const CustomLink& l) { return l.h(z); }},
                      link);
}

bool link_is_sign(const Link& link) { return std::holds_alternative<SignLink>(link); }

std::string link_name(const Link& link) {
    return std::visit(overloaded{[](const SignLink&) { return std::string("sign"); },
                                 [](const LogisticLink& l) { return "logistic:" + std::to_string(l.scale); },
                                 [](const ProbitLink& l) { return "probit:" + std::to_string(l.scale); },
                                 [](const CustomLink& l) { return l.name; }},
                      link);
}

Link parse_link(const std::string& text) {
    const std::size_t colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    Link link;
    if (kind == "sign" && colon == std::string::npos) link = SignLink{};
    else if (kind == "logistic") link = LogisticLink{parse_scale(text, colon)};
    else if (kind == "probit") link = ProbitLink{parse_scale(text, colon)};
    else throw ConfigError("unknown link '" + text + "' (expected sign, logistic[:scale], probit[:scale])");
    check_link(link);
    return link;
}

void check_link(const Link& link) {
    if (const auto* c = std::get_if<CustomLink>(&link); c && !c->h) throw ConfigError("custom link without a function");
    for (int i = 1; i <= 200; ++i) {
        const double u = 0.05 * i;
        const double a = link_value(link, u), b = link_value(link, -u);
        if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0))
            throw ConfigError("link " + link_name(link) + " leaves [0, 1]");
        if (!(a > b)) throw ConfigError("link " + link_name(link) + " violates h(u) > h(-u) at u = " + std::to_string(u));
    }
}

double hat_h_p(double z, const Link& link, double p) {
    const double h = link_value(link, z);
    return (1.0 - p) * h + p * (1.0 - h);
}

GlmParams GlmParams::make(double gamma, double alpha, double p, Link link, int n) {
    GlmParams q{gamma, alpha, p, std::move(link), n, static_cast<int>(std::lround(alpha * n))};
    q.validate();
    return q;
}

void GlmParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
    if (!(p >= 0.0 && p < 0.5)) throw ConfigError("p must lie in [0, 0.5)");
    if (n < 0 || d < 0) throw ConfigError("n and d must be non-negative");
    check_link(link);
}

const char* aggregator_name(const AggregatorGlm& agg) {
    return std::visit(overloaded{[](const Identity&) { return "identity"; }, [](const OptimalGlm&) { return "opt"; },
                                 [](const OptimalSign&) { return "opt-sign"; }},
                      agg);
}

GlmDataset sample_glm_dataset(const GlmParams& params, const RngStream& rng) {
    params.validate();
    const int n = params.n, d = params.d;
    if (static_cast<long long>(n) * d == 0) throw ConfigError("sample_glm_dataset: n * d must be positive");

    GlmDataset ds;
    RngStream beta_rng = rng.derive(1);
    ds.beta.resize(d);
    for (int j = 0; j < d; ++j) ds.beta[j] = beta_rng.normal();
    const double norm = ds.beta.norm();
    if (norm == 0.0) throw NumericalError("sampled beta is zero");
    ds.beta *= params.gamma * std::sqrt(static_cast<double>(d)) / norm;

    RngStream x_rng = rng.derive(3);
    const double sd = 1.0 / std::sqrt(static_cast<double>(n));
    ds.X.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) ds.X(i, j) = sd * x_rng.normal();

    const Eigen::VectorXd z = ds.X * ds.beta;
    RngStream label_rng = rng.derive(2);
    ds.y_true.resize(n);
    ds.y_noisy.resize(n);
    const bool sign = link_is_sign(params.link);
    for (int i = 0; i < n; ++i) {
        const double u = label_rng.uniform();
        ds.y_true[i] = sign ? (z[i] >= 0.0 ? 1.0 : -1.0) : (u < link_value(params.link, z[i]) ? 1.0 : -1.0);
        const bool flip = label_rng.bernoulli(params.p);
        ds.y_noisy[i] = flip ? -ds.y_true[i] : ds.y_true[i];
    }
    return ds;
}

double optimal_aggregator_sign(double u, double yhat, double eta, const GlmParams& params) {
    if (!(eta > 0.0)) throw DomainError("optimal_aggregator_sign: eta must be positive");
    if (!std::isfinite(u)) throw DomainError("optimal_aggregator_sign: non-finite u");
    const double a = params.alpha, p = params.p;
    const double s = 1.0 / std::sqrt(1.0 / a + eta * eta);
    const double c = u * s / a;
    if (p == 0.0) return yhat * phi_over_cdf(yhat * c) / s;
    return (1.0 - 2.0 * p) * yhat * normal_pdf(c) / (s * (p + (1.0 - 2.0 * p) * normal_cdf(yhat * c)));
}

double optimal_aggregator_glm(double u, double yhat, double eta, const GlmParams& params, int order) {
    if (!(eta >= 0.0)) throw DomainError("optimal_aggregator_glm: eta must be non-negative");
    if (!std::isfinite(u)) throw DomainError("optimal_aggregator_glm: non-finite u");
    const double g = params.effective_gamma(), a = params.alpha, p = params.p;
    const double prec = 1.0 / (a * g * g) + eta * eta;
    const double sq = std::sqrt(prec);
    const double m = u / (a * prec);
    const bool plus = yhat > 0.0;

    if (link_is_sign(params.link)) {
        // f jumps at z = 0, i.e. at W = -m sqrt(P).
        const double fl = plus ? p : 1.0 - p, fr = plus ? 1.0 - p : p;
        const double cut = -m * sq;
        const double e_f = expect_gauss_split([&](double) { return fl; }, [&](double) { return fr; }, cut, order);
        const double e_wf =
            expect_gauss_split([&](double w) { return fl * w; }, [&](double w) { return fr * w; }, cut, order);
        if (!(e_f > 1e-290)) {
            if (eta > 0.0) return optimal_aggregator_sign(u, yhat, eta, params);
            throw NumericalError("optimal_aggregator_glm: posterior normaliser underflows");
        }
        return sq * e_wf / e_f;
    }

    // A link whose transition is narrow on the W = (z - m) sqrt(P) scale defeats Gauss-Hermite;
    // those go through the panel rule centred on z = 0.
    const double slope = link_slope(params.link) / sq;
    QuadratureRule panels;
    if (slope > 1.0) panels = normal_panel_rule(-m * sq, 1.0 / slope);
    const QuadratureRule& rule = slope > 1.0 ? panels : normal_rule(order);
    // Log-domain weights so that a likelihood factor far below 1 cannot underflow.
    std::vector<double> lw(rule.order);
    double top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < rule.order; ++k) {
        const double h = hat_h_p(m + rule.nodes[k] / sq, params.link, p);
        const double f = plus ? h : 1.0 - h;
        lw[k] = std::log(rule.weights[k]) + std::log(f);
        top = std::max(top, lw[k]);
    }
    if (!std::isfinite(top)) throw NumericalError("optimal_aggregator_glm: likelihood vanishes on all nodes");
    double num = 0.0, den = 0.0;
    for (int k = 0; k < rule.order; ++k) {
        const double e = std::exp(lw[k] - top);
        num += e * rule.nodes[k];
        den += e;
    }
    return sq * num / den;
}

double eval_aggregator_glm(const AggregatorGlm& agg, double u, double yhat) {
    if (!std::isfinite(u)) throw DomainError("aggregator evaluated at non-finite y");
    return std::visit(overloaded{[&](const Identity&) { return yhat; },
                                 [&](const OptimalGlm& a) {
                                     return optimal_aggregator_glm(a.input_scale * u, yhat, a.eta, a.params, a.order);
                                 },
                                 [&](const OptimalSign& a) {
                                     return optimal_aggregator_sign(a.input_scale * u, yhat, a.eta, a.params);
                                 }},
                      agg);
}

double eval_aggregator_glm_deriv(const AggregatorGlm& agg, double u, double yhat) {
    if (std::holds_alternative<Identity>(agg)) return 0.0;
    return (eval_aggregator_glm(agg, u + kFdStep, yhat) - eval_aggregator_glm(agg, u - kFdStep, yhat)) /
           (2.0 * kFdStep);
}

AmpStateGlm amp_init_glm(const GlmDataset& data) {
    return {Eigen::VectorXd::Zero(data.X.cols()), Eigen::VectorXd::Zero(data.X.rows()), 0};
}

AmpStateGlm amp_step_glm(const AmpStateGlm& state, const GlmDataset& data, const AggregatorGlm& agg,
                         double* onsager_out) {
    const Eigen::Index n = data.X.rows(), d = data.X.cols();
    if (state.beta_est.size() != d || state.y_soft.size() != n || data.y_noisy.size() != n)
        throw ShapeError("amp_step_glm: state dimensions do not match the dataset");
    Eigen::VectorXd g(n);
    double c = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = state.y_soft[i];
        if (!std::isfinite(y)) throw DivergenceError("non-finite soft prediction", state.t);
        g[i] = eval_aggregator_glm(agg, y, data.y_noisy[i]);
        c += eval_aggregator_glm_deriv(agg, y, data.y_noisy[i]);
    }
    c /= static_cast<double>(n);

    AmpStateGlm next;
    next.t = state.t + 1;
    next.beta_est.noalias() = data.X.transpose() * g;
    next.beta_est -= c * state.beta_est;
    next.y_soft.noalias() = data.X * next.beta_est;
    next.y_soft -= (static_cast<double>(d) / static_cast<double>(n)) * g;
    if (!next.beta_est.allFinite()) throw DivergenceError("non-finite entries in beta", next.t);
    if (!next.y_soft.allFinite()) throw DivergenceError("non-finite entries in soft predictions", next.t);
    if (onsager_out) *onsager_out = c;
    return next;
}

double glm_error_of_overlap_quadrature(double rho, const GlmParams& params, int order) {
    if (!(std::abs(rho) <= 1.0 + 1e-12)) throw DomainError("overlap must lie in [-1, 1]");
    rho = std::clamp(rho, -1.0, 1.0);
    const double one_minus = 1.0 - rho * rho;
    const double r = one_minus > 0.0 ? rho / std::sqrt(one_minus) : std::numeric_limits<double>::infinity();
    const double scale = std::sqrt(params.alpha) * params.effective_gamma();
    auto cdf = [&](double x) {
        if (std::isinf(r)) return (rho > 0.0) == (x > 0.0) ? 1.0 : 0.0;
        return normal_cdf(r * x);
    };
    auto f = [&](double z) {
        const double h = link_value(params.link, scale * z);
        return cdf(z) * (1.0 - h) + cdf(-z) * h;
    };
    const double width = std::isinf(r) ? 1.0 : 1.0 / std::max(1.0, std::abs(r));
    return expect_gauss_panels(f, 0.0, width, order);
}

double glm_error_of_overlap(double rho, const GlmParams& params) {
    if (link_is_sign(params.link)) {
        if (!(std::abs(rho) <= 1.0 + 1e-12)) throw DomainError("overlap must lie in [-1, 1]");
        return std::acos(std::clamp(rho, -1.0, 1.0)) / kPi;
    }
    return glm_error_of_overlap_quadrature(rho, params);
}

double test_error_glm(const Eigen::VectorXd& theta, const GlmDataset& data, const GlmParams& params) {
    if (theta.size() != data.beta.size()) throw ShapeError("test_error_glm: theta and beta differ in length");
    const double nt = theta.norm(), nb = data.beta.norm();
    if (!(nt > 0.0) || !(nb > 0.0)) throw DegenerateModelError("test_error_glm: zero-norm vector");
    return glm_error_of_overlap(data.beta.dot(theta) / (nt * nb), params);
}

namespace {

double eta_of(const AggregatorGlm& agg) {
    if (const auto* a = std::get_if<OptimalGlm>(&agg)) return a->eta;
    if (const auto* a = std::get_if<OptimalSign>(&agg)) return a->eta;
    return std::nan("");
}

}  // namespace

Trajectory run_retraining_glm(const GlmParams& params, const GlmSchedule& schedule, int T, const RngStream& rng) {
    if (T < 1) throw ConfigError("run_retraining_glm: T must be at least 1");
    return run_retraining_glm(sample_glm_dataset(params, rng), params, schedule, T);
}

Trajectory run_retraining_glm(const GlmDataset& data, const GlmParams& params, const GlmSchedule& schedule, int T) {
    if (T < 1) throw ConfigError("run_retraining_glm: T must be at least 1");
    Trajectory traj;
    AmpStateGlm state = amp_init_glm(data);
    const double nb = data.beta.norm();
    try {
        for (int t = 0; t < T; ++t) {
            const AggregatorGlm agg = t == 0 ? AggregatorGlm{Identity{}} : schedule(t, state, data);
            double c = 0.0;
            state = amp_step_glm(state, data, agg, &c);
            TrajectoryPoint pt;
            pt.t = state.t;
            pt.model_norm = state.beta_est.norm();
            pt.soft_norm = state.y_soft.norm();
            pt.onsager = c;
            pt.eta_used = eta_of(agg);
            pt.overlap = pt.model_norm > 0.0 ? data.beta.dot(state.beta_est) / (nb * pt.model_norm) : 0.0;
            pt.test_error = glm_error_of_overlap(pt.overlap, params);
            traj.points.push_back(pt);
        }
    } catch (const DivergenceError& e) {
        traj.diverged = true;
        traj.diverged_at = e.iteration();
        traj.message = e.what();
    } catch (const NumericalError& e) {
        traj.diverged = true;
        traj.diverged_at = state.t + 1;
        traj.message = e.what();
    } catch (const DomainError& e) {
        traj.diverged = true;
        traj.diverged_at = state.t + 1;
        traj.message = e.what();
    }
    return traj;
}

}  // namespace amprt
