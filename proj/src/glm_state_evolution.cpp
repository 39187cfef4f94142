#include "amprt/glm_state_evolution.hpp"

#include <cmath>
#include <memory>

namespace amprt {

namespace {

// E over (Z, G, Yhat) of f(z, g, yhat) with Z ~ N(0, alpha gamma^2): outer Z integral split
// at the link's jump, inner Gauss-Hermite over G.
template <class F>
double expect_zgy(const GlmParams& params, F&& f, int order) {
    const double sd = std::sqrt(params.alpha) * params.effective_gamma();
    return expect_over_link(
        params.link, params.p, sd,
        [&](double z, double hp) {
            return expect_gauss_1d(
                [&](double g) {
                    double acc = 0.0;
                    if (hp > 0.0) acc += hp * f(z, g, 1.0);
                    if (hp < 1.0) acc += (1.0 - hp) * f(z, g, -1.0);
                    return acc;
                },
                order);
        },
        order);
}

}  // namespace

SeStateGlm make_se_state_glm(double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("state evolution: sigma must be positive");
    return {mu, sigma, mu / sigma};
}

double se_init_mu_quadrature(const GlmParams& params, int order) {
    const double g = params.effective_gamma(), a = params.alpha;
    const double e = expect_over_link(params.link, params.p, std::sqrt(a) * g,
                                      [](double z, double hp) { return z * hp; }, order);
    return 2.0 / (a * g * g) * e;
}

SeStateGlm se_init_glm(const GlmParams& params, int order) {
    params.validate();
    const double sigma = std::sqrt(params.alpha);
    if (link_is_sign(params.link)) {
        const double eta1 = (1.0 - 2.0 * params.p) * std::sqrt(2.0 / kPi) / params.alpha;
        return make_se_state_glm(eta1 * sigma, sigma);
    }
    return make_se_state_glm(se_init_mu_quadrature(params, order), sigma);
}

double glm_posterior_mean(double u, double yhat, const SeStateGlm& state, const GlmParams& params, int order) {
    // Equivalent eta-form input: the likelihood exp(-(u - mu z)^2 / (2 sigma^2)) matches
    // exp(-eta^2 z^2 / 2 + v z / alpha) with v = alpha mu u / sigma^2.
    const double g = params.effective_gamma(), a = params.alpha;
    const double prec = 1.0 / (a * g * g) + state.eta * state.eta;
    const double v = a * state.mu * u / (state.sigma * state.sigma);
    return (optimal_aggregator_glm(v, yhat, std::abs(state.eta), params, order) + v / a) / prec;
}

double se_step_glm_opt(double eta, const GlmParams& params, int order) {
    if (!(eta > 0.0)) throw DomainError("se_step_glm_opt: eta must be positive");
    const double a = params.alpha;
    const bool sign = link_is_sign(params.link);
    auto g = [&](double u, double yhat) {
        return sign ? optimal_aggregator_sign(u, yhat, eta, params)
                    : optimal_aggregator_glm(u, yhat, eta, params, kDefaultOrder1d);
    };
    const double e = expect_zgy(
        params,
        [&](double z, double gg, double yhat) {
            const double v = g(a * eta * eta * z + a * eta * gg, yhat);
            return v * v;
        },
        order);
    return std::sqrt(e / a);
}

SeStateGlm se_step_glm_generic(const SeStateGlm& state, const AggregatorGlm& agg, const GlmParams& params,
                               int order) {
    const double gm = params.effective_gamma(), a = params.alpha;
    const double mu = state.mu, s2 = state.sigma * state.sigma;
    const double prec = 1.0 / (a * gm * gm) + mu * mu / s2;
    const double e_post_g = expect_zgy(
        params,
        [&](double z, double gg, double yhat) {
            const double u = mu * z + state.sigma * gg;
            return glm_posterior_mean(u, yhat, state, params) * eval_aggregator_glm(agg, u, yhat);
        },
        order);
    const double e_zt_g = expect_zgy(
        params,
        [&](double z, double gg, double yhat) {
            const double u = mu * z + state.sigma * gg;
            return u * eval_aggregator_glm(agg, u, yhat);
        },
        order);
    const double e_g2 = expect_zgy(
        params,
        [&](double z, double gg, double yhat) {
            const double v = eval_aggregator_glm(agg, mu * z + state.sigma * gg, yhat);
            return v * v;
        },
        order);
    const double mu_next = prec * e_post_g - mu / s2 * e_zt_g;
    if (!std::isfinite(mu_next) || !(e_g2 > 0.0)) throw NumericalError("GLM state evolution: degenerate moments");
    return make_se_state_glm(mu_next, std::sqrt(a * e_g2));
}

double se_step_glm_mu_tower(const SeStateGlm& state, const AggregatorGlm& agg, const GlmParams& params, int order) {
    const double gm = params.effective_gamma(), a = params.alpha;
    const double mu = state.mu, s2 = state.sigma * state.sigma;
    const double prec = 1.0 / (a * gm * gm) + mu * mu / s2;
    const double e_zg = expect_zgy(
        params,
        [&](double z, double gg, double yhat) { return z * eval_aggregator_glm(agg, mu * z + state.sigma * gg, yhat); },
        order);
    const double e_zt_g = expect_zgy(
        params,
        [&](double z, double gg, double yhat) {
            const double u = mu * z + state.sigma * gg;
            return u * eval_aggregator_glm(agg, u, yhat);
        },
        order);
    return prec * e_zg - mu / s2 * e_zt_g;
}

double se_error_glm(double eta, const GlmParams& params) {
    const double g = params.effective_gamma();
    if (std::isinf(eta)) return glm_error_of_overlap(1.0, params);
    const double rho = eta * g / std::sqrt(eta * eta * g * g + 1.0 / params.alpha);
    return glm_error_of_overlap(rho, params);
}

AggregatorGlm matched_optimal_glm(const SeStateGlm& state, const GlmParams& params, int order) {
    const double scale = params.alpha * state.mu / (state.sigma * state.sigma);
    if (link_is_sign(params.link)) return OptimalSign{state.eta, params, scale};
    return OptimalGlm{state.eta, params, order, scale};
}

double eta_map_glm(double u, const GlmParams& params, int order) {
    if (!(u >= 0.0)) throw DomainError("eta_map_glm: u must be non-negative");
    if (u == 0.0) {
        // eta -> 0: the aggregator input vanishes and only the label carries information.
        const double sd = std::sqrt(params.alpha) * params.effective_gamma();
        const double pp = expect_over_link(params.link, params.p, sd, [](double, double hp) { return hp; }, order);
        const double gp = optimal_aggregator_glm(0.0, 1.0, 0.0, params), gm = optimal_aggregator_glm(0.0, -1.0, 0.0, params);
        return (pp * gp * gp + (1.0 - pp) * gm * gm) / params.alpha;
    }
    const double e = se_step_glm_opt(std::sqrt(u), params, order);
    return e * e;
}

std::vector<SeStateGlm> se_trace_glm(const GlmParams& params, int T, bool optimal) {
    if (T < 1) throw ConfigError("se_trace_glm: T must be at least 1");
    std::vector<SeStateGlm> out;
    SeStateGlm s = se_init_glm(params);
    out.push_back(s);
    for (int t = 1; t < T; ++t) {
        if (optimal) {
            // On the optimal manifold sigma^2 = alpha mu, i.e. mu = alpha eta^2, sigma = alpha eta.
            const double eta = s.eta > 0.0 ? se_step_glm_opt(s.eta, params) : 0.0;
            s = eta > 0.0 ? make_se_state_glm(params.alpha * eta * eta, params.alpha * eta) : make_se_state_glm(0.0, 1.0);
        } else {
            s = se_step_glm_generic(s, Identity{}, params);
        }
        out.push_back(s);
    }
    return out;
}

GlmSchedule optimal_schedule_glm(const GlmParams& params, int T) {
    auto trace = std::make_shared<std::vector<SeStateGlm>>(se_trace_glm(params, std::max(T, 1), true));
    return [trace, params](int t, const AmpStateGlm&, const GlmDataset&) -> AggregatorGlm {
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 1)) - 1, trace->size() - 1);
        return matched_optimal_glm((*trace)[k], params);
    };
}

}  // namespace amprt
