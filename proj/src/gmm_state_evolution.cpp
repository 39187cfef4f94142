#include "amprt/gmm_state_evolution.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <limits>

namespace amprt {

namespace {

struct Atom {
    double y, yhat, weight;
};

std::array<Atom, 4> atoms(const GmmParams& q) {
    const double pp = q.pi_plus, pm = 1.0 - q.pi_plus;
    return {{{1.0, 1.0, pp * (1.0 - q.p)}, {1.0, -1.0, pp * q.p}, {-1.0, -1.0, pm * (1.0 - q.p)}, {-1.0, 1.0, pm * q.p}}};
}

// E_G[f(m_bar Y + sigma_bar G)] for one atom. The aggregators are smooth but can be steep
// (smoothed FT/CT at large beta, the optimal tanh at high SNR), so the G-integral uses
// composite Gauss-Legendre refined around the aggregator's transition.
template <class F>
double expect_atom(const AggregatorGmm& agg, double m_bar, double sigma_bar, double y, double yhat, F&& f,
                   int order) {
    auto h = [&](double g) { return f(m_bar * y + sigma_bar * g); };
    double center = 0.0, width = 1.0;  // transition in y-space
    if (const auto* a = std::get_if<SmoothedFullRT>(&agg)) width = 1.0 / a->beta;
    else if (const auto* a = std::get_if<SmoothedConsensusRT>(&agg)) width = 1.0 / a->beta;
    else if (const auto* a = std::get_if<OptimalGmm>(&agg); a && a->params.p > 0.0) {
        const GmmParams& q = a->params;
        const double slope = 2.0 * q.gamma * q.gamma * a->input_scale / (q.alpha * (a->eta * a->eta + 1.0));
        const double offset = yhat * std::log((1.0 - q.p) / q.p) + std::log(q.pi_plus / (1.0 - q.pi_plus));
        if (slope != 0.0) {
            center = -offset / slope;
            width = 2.0 / std::abs(slope);
        }
    }
    if (!(sigma_bar > 0.0)) return h(0.0);
    return expect_gauss_panels(h, (center - m_bar * y) / sigma_bar, width / sigma_bar, order);
}

double log_odds_prior(const GmmParams& q) { return std::log(q.pi_plus / (1.0 - q.pi_plus)); }

}  // namespace

SeStateGmm make_se_state_gmm(double m, double sigma, const GmmParams& params) {
    if (!(sigma > 0.0)) throw DomainError("state evolution: sigma must be positive");
    SeStateGmm s;
    s.m = m;
    s.sigma = sigma;
    s.eta = m / sigma;
    s.m_bar = params.gamma * std::sqrt(params.alpha) * m;
    s.sigma_bar = std::sqrt(params.alpha * (m * m + sigma * sigma));
    return s;
}

SeStateGmm se_init_gmm(const GmmParams& params) {
    params.validate();
    return make_se_state_gmm(params.gamma * (1.0 - 2.0 * params.p) / std::sqrt(params.alpha), 1.0, params);
}

GmmMoments se_moments_gmm(const SeStateGmm& state, const AggregatorGmm& agg, const GmmParams& params, int order) {
    check_order(order);
    GmmMoments mo;
    for (const Atom& a : atoms(params)) {
        if (a.weight == 0.0) continue;
        const double yhat = a.yhat;
        const double e_g = expect_atom(agg, state.m_bar, state.sigma_bar, a.y, yhat,
                                       [&](double y) { return eval_aggregator(agg, y, yhat); }, order);
        const double e_g2 = expect_atom(
            agg, state.m_bar, state.sigma_bar, a.y, yhat,
            [&](double y) {
                const double g = eval_aggregator(agg, y, yhat);
                return g * g;
            },
            order);
        mo.e_yg += a.weight * a.y * e_g;
        mo.e_g2 += a.weight * e_g2;
    }
    return mo;
}

SeStateGmm se_step_gmm(const SeStateGmm& state, const AggregatorGmm& agg, const GmmParams& params, int order) {
    const GmmMoments mo = se_moments_gmm(state, agg, params, order);
    if (!std::isfinite(mo.e_yg) || !std::isfinite(mo.e_g2)) throw NumericalError("state evolution: non-finite moments");
    if (!(mo.e_g2 > 0.0)) throw NumericalError("state evolution: aggregator vanishes almost surely");
    return make_se_state_gmm(params.gamma / std::sqrt(params.alpha) * mo.e_yg, std::sqrt(mo.e_g2), params);
}

double se_error_gmm_eta(double eta, double gamma) {
    if (std::isinf(eta)) return normal_cdf(-gamma);
    return normal_cdf(-gamma * eta / std::sqrt(eta * eta + 1.0));
}

double se_error_gmm(const SeStateGmm& state, const GmmParams& params) {
    return normal_cdf(-state.m * params.gamma / std::sqrt(state.m * state.m + state.sigma * state.sigma));
}

OptimalGmm matched_optimal(const SeStateGmm& state, const GmmParams& params) {
    const double scale = std::sqrt(params.alpha) * state.m / (params.gamma * state.sigma * state.sigma);
    return OptimalGmm{state.eta, params, scale};
}

double eta_map_opt(double u, const GmmParams& params, int order) {
    if (!(u >= 0.0)) throw DomainError("eta_map_opt: u must be non-negative");
    const double bound = params.gamma * params.gamma / params.alpha;
    if (params.p == 0.0) return bound;
    const double s = std::isinf(u) ? params.gamma * params.gamma : params.gamma * params.gamma * u / (1.0 + u);
    const double rs = std::sqrt(s);
    const double lp = log_odds_prior(params);
    const double lq = std::log((1.0 - params.p) / params.p);
    double acc = 0.0;
    for (const Atom& a : atoms(params)) {
        auto f = [&](double g) {
            const double v = std::tanh(0.5 * (a.yhat * lq + 2.0 * (s * a.y + rs * g) + lp));
            return v * v;
        };
        const double e = rs > 0.0 ? expect_gauss_panels(f, (-0.5 * (a.yhat * lq + lp) - s * a.y) / rs, 1.0 / rs, order)
                                  : f(0.0);
        acc += a.weight * e;
    }
    return bound * acc;
}

double eta_map_ft(double u, const GmmParams& params) {
    if (!(u >= 0.0)) throw DomainError("eta_map_ft: u must be non-negative");
    const double r = std::isinf(u) ? params.gamma : params.gamma * std::sqrt(u / (1.0 + u));
    const double v = 2.0 * normal_cdf(r) - 1.0;
    return params.gamma * params.gamma / params.alpha * v * v;
}

double eta_map_ct(double u, const GmmParams& params) {
    if (!(u >= 0.0)) throw DomainError("eta_map_ct: u must be non-negative");
    const double r = std::isinf(u) ? params.gamma : params.gamma * std::sqrt(u / (1.0 + u));
    const double c = normal_cdf(r);
    const double num = c - params.p;
    return params.gamma * params.gamma / params.alpha * num * num / (params.p + (1.0 - 2.0 * params.p) * c);
}

double SeMapSpec::operator()(double u) const {
    switch (variant) {
        case Variant::Opt: return eta_map_opt(u, params, order);
        case Variant::FtLimit: return eta_map_ft(u, params);
        case Variant::CtLimit: return eta_map_ct(u, params);
        case Variant::Smoothed: {
            if (!(u >= 0.0)) throw DomainError("SeMapSpec: u must be non-negative");
            const SeStateGmm next = se_step_gmm(make_se_state_gmm(std::sqrt(u), 1.0, params), agg, params, order);
            return next.eta * next.eta;
        }
    }
    throw ConfigError("SeMapSpec: unknown variant");
}

const char* variant_name(SeMapSpec::Variant v) {
    switch (v) {
        case SeMapSpec::Variant::Opt: return "opt";
        case SeMapSpec::Variant::FtLimit: return "ft-limit";
        case SeMapSpec::Variant::CtLimit: return "ct-limit";
        case SeMapSpec::Variant::Smoothed: return "smoothed";
    }
    return "?";
}

namespace {

std::vector<double> sign_change_roots(const std::function<double(double)>& d, double lo, double hi, int grid,
                                      double tol) {
    std::vector<double> roots;
    const double h = (hi - lo) / grid;
    double u0 = lo, d0 = d(lo);
    if (d0 == 0.0) roots.push_back(lo);
    for (int i = 1; i <= grid; ++i) {
        const double u1 = lo + i * h;
        const double d1 = d(u1);
        if (d1 == 0.0) roots.push_back(u1);
        else if (d0 != 0.0 && (d0 < 0.0) != (d1 < 0.0)) roots.push_back(find_root_bisect(d, u0, u1, tol));
        u0 = u1;
        d0 = d1;
    }
    return roots;
}

}  // namespace

std::vector<double> find_fixed_points(const std::function<double(double)>& map, double u_max, int grid) {
    if (!(u_max > 0.0)) throw ConfigError("find_fixed_points: u_max must be positive");
    if (grid < 1) throw ConfigError("find_fixed_points: grid must be positive");
    return sign_change_roots([&](double u) { return map(u) - u; }, 0.0, u_max, grid, 1e-11);
}

std::vector<double> find_fixed_points(const SeMapSpec& map, double u_max, int grid) {
    double hi = u_max;
    int cells = grid;
    const double need = 1.5 * map.bound() + 1.0;
    if (hi < need) {
        cells = static_cast<int>(std::ceil(grid * need / hi));
        hi = need;
    }
    return find_fixed_points([&](double u) { return map(u); }, hi, cells);
}

CrossoverResult find_crossover(const GmmParams& params, double u_max, int grid) {
    if (!(params.p > 0.0 && params.p < 0.5)) throw ConfigError("find_crossover: p must lie in (0, 0.5)");
    auto diff = [&](double u) { return eta_map_ct(u, params) - eta_map_ft(u, params); };
    CrossoverResult r;
    // u = 0 is excluded: F_FT(0) = 0 < F_CT(0) there.
    r.roots = sign_change_roots(diff, u_max / grid * 1e-6, u_max, grid, 1e-12);
    return r;
}

double p_star_condition(double p, double gamma, double alpha) {
    const double g2 = gamma * gamma;
    const double a = g2 * (1.0 - 2.0 * p);
    return normal_cdf(-a / std::sqrt(a * (1.0 - 2.0 * p) + alpha)) - p;
}

PStarResult p_star(const GmmParams& params) {
    PStarResult r;
    const double g = params.gamma, a = params.alpha;
    r.guaranteed = g * g >= std::sqrt(kPi * a / 2.0);
    auto h = [&](double p) { return p_star_condition(p, g, a); };
    constexpr double lo = 1e-12, hi = 0.5 - 1e-7;
    constexpr int grid = 2000;
    double p0 = lo, h0 = h(lo);
    for (int i = 1; i <= grid; ++i) {
        const double p1 = lo + (hi - lo) * i / grid;
        const double h1 = h(p1);
        if ((h0 < 0.0) != (h1 < 0.0) || h1 == 0.0) {
            r.p_star = h1 == 0.0 ? p1 : find_root_bisect(h, p0, p1, 1e-15);
            r.residual = std::abs(h(r.p_star));
            r.found = true;
            return r;
        }
        p0 = p1;
        h0 = h1;
    }
    return r;
}

CobwebTrace cobweb_trace(const SeMapSpec& map, double u1, int T) {
    return cobweb_trace(std::function<double(double)>(map), u1, T);
}

CobwebTrace cobweb_trace(const std::function<double(double)>& map, double u1, int T) {
    if (!(u1 >= 0.0)) throw DomainError("cobweb_trace: u1 must be non-negative");
    if (T < 1) throw ConfigError("cobweb_trace: T must be at least 1");
    CobwebTrace tr;
    double u = u1;
    for (int t = 0; t < T; ++t) {
        double f = 0.0;
        try {
            f = map(u);
        } catch (const NumericalError&) {
            f = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(f)) {
            tr.truncated = true;
            break;
        }
        tr.pairs.emplace_back(u, f);
        u = f;
    }
    return tr;
}

std::vector<SeStateGmm> se_trace_gmm(const SeMapSpec& map, int T) {
    if (T < 1) throw ConfigError("se_trace_gmm: T must be at least 1");
    const GmmParams& q = map.params;
    std::vector<SeStateGmm> out;
    SeStateGmm s = se_init_gmm(q);
    out.push_back(s);
    for (int t = 1; t < T; ++t) {
        switch (map.variant) {
            case SeMapSpec::Variant::Opt: s = se_step_gmm(s, matched_optimal(s, q), q, map.order); break;
            case SeMapSpec::Variant::Smoothed: s = se_step_gmm(s, map.agg, q, map.order); break;
            default: {
                const double u = map(s.eta * s.eta);
                s = make_se_state_gmm(std::sqrt(u), 1.0, q);
            }
        }
        out.push_back(s);
    }
    return out;
}

GmmSchedule optimal_schedule(const GmmParams& params, int T, bool plugin) {
    if (!plugin) {
        SeMapSpec spec;
        spec.params = params;
        auto trace = std::make_shared<std::vector<SeStateGmm>>(se_trace_gmm(spec, std::max(T, 1)));
        return [trace, params](int t, const AmpStateGmm&, const GmmDataset&) -> AggregatorGmm {
            const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 1)) - 1, trace->size() - 1);
            return matched_optimal((*trace)[k], params);
        };
    }
    return [params](int, const AmpStateGmm& state, const GmmDataset& data) -> AggregatorGmm {
        const double d = static_cast<double>(state.theta.size());
        const double m = data.mu.dot(state.theta) / (params.gamma * std::sqrt(d));
        const double s2 = std::max(state.theta.squaredNorm() / d - m * m, 1e-12);
        return matched_optimal(make_se_state_gmm(m, std::sqrt(s2), params), params);
    };
}

}  // namespace amprt
