// One PASS/FAIL line per acceptance criterion, with the measured quantity.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "amprt/bayesmix.hpp"
#include "amprt/glm_retrain.hpp"
#include "amprt/glm_state_evolution.hpp"
#include "amprt/gmm_retrain.hpp"
#include "amprt/gmm_state_evolution.hpp"
#include "amprt/harness.hpp"

using namespace amprt;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

SeMapSpec map_of(const GmmParams& q, SeMapSpec::Variant v = SeMapSpec::Variant::Opt) {
    SeMapSpec m;
    m.variant = v;
    m.params = q;
    return m;
}

Outcome simulate_gap(ExperimentConfig cfg) {
    const ComparisonReport r = run_simulation(cfg, 1);
    const double gap = r.max_gap();
    return {r.n_failed() == 0 && gap <= 0.02, fmt("max gap %.4g over t=1..10, %.0f failed replications", gap, r.n_failed())};
}

Outcome c1() {
    ExperimentConfig cfg;
    cfg.model = "gmm";
    cfg.gamma = 1.5;
    cfg.p = 0.4;
    cfg.alpha = 0.8;
    cfg.n = 1000;
    cfg.pi_plus = 0.3;
    cfg.aggregator = "opt";
    cfg.T = 10;
    cfg.replications = 10;
    return simulate_gap(cfg);
}

Outcome c2() {
    ExperimentConfig cfg;
    cfg.model = "glm";
    cfg.link = "sign";
    cfg.p = 0.2;
    cfg.n = 10000;
    cfg.d = 5000;
    cfg.aggregator = "opt";
    cfg.T = 10;
    cfg.replications = 10;
    return simulate_gap(cfg);
}

Outcome c3() {
    const double ps[] = {0.2, 0.25, 0.3}, want[] = {4.32, 1.54, 0.75};
    bool ok = true;
    std::string detail;
    for (int k = 0; k < 3; ++k) {
        const CrossoverResult r = find_crossover(GmmParams::make(1.5, 2.0, ps[k], 0.3, 10));
        const double u = r.found() ? r.first() : std::nan("");
        ok = ok && std::abs(u - want[k]) <= 0.05;
        detail += fmt("u*(%.2f)=%.6f ", ps[k], u);
    }
    return {ok, detail};
}

Outcome c4() {
    double worst = 0.0;
    for (double gamma : {0.5, 1.5, 3.0})
        for (double alpha : {0.3, 0.8, 2.0})
            for (double p : {0.0, 0.1, 0.3, 0.45}) {
                const SeStateGmm s = se_init_gmm(GmmParams::make(gamma, alpha, p, 0.3, 10));
                worst = std::max(worst, std::abs(s.eta - gamma * (1.0 - 2.0 * p) / std::sqrt(alpha)));
                const SeStateGlm g = se_init_glm(GlmParams::make(1.0, alpha, p, SignLink{}, 10));
                worst = std::max(worst, std::abs(g.eta - (1.0 - 2.0 * p) * std::sqrt(2.0 / kPi) / alpha));
            }
    return {worst <= 1e-12, fmt("max deviation %.3g", worst)};
}

Outcome c5() {
    double gmm = 0.0, glm = 0.0;
    for (const GmmParams& q : {GmmParams::make(1.5, 0.8, 0.4, 0.3, 10), GmmParams::make(1.5, 2.0, 0.3, 0.3, 10),
                               GmmParams::make(2.0, 0.5, 0.1, 0.5, 10)}) {
        SeStateGmm s = se_init_gmm(q);
        for (int t = 0; t < 10; ++t) {
            s = se_step_gmm(s, matched_optimal(s, q), q);
            gmm = std::max(gmm, std::abs(s.m - q.gamma / std::sqrt(q.alpha) * s.sigma * s.sigma));
        }
    }
    for (const GlmParams& q : {GlmParams::make(1.0, 0.5, 0.2, SignLink{}, 10), GlmParams::make(1.0, 2.0, 0.1, SignLink{}, 10),
                               GlmParams::make(1.2, 0.8, 0.15, LogisticLink{1.0}, 10)}) {
        SeStateGlm s = se_init_glm(q);
        for (int t = 0; t < 10; ++t) {
            s = se_step_glm_generic(s, matched_optimal_glm(s, q), q);
            glm = std::max(glm, std::abs(s.sigma * s.sigma - q.alpha * s.mu));
        }
    }
    return {gmm <= 1e-9 && glm <= 1e-8, fmt("GMM max |m - (gamma/sqrt(alpha)) sigma^2| %.3g, GLM max |sigma^2 - alpha mu| %.3g", gmm, glm)};
}

Outcome c6() {
    RngStream rng(2024, 6);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double gamma = 0.5 + 2.5 * rng.uniform(), alpha = 0.2 + 3.0 * rng.uniform();
        const double p = 0.01 + 0.48 * rng.uniform(), pi = 0.1 + 0.8 * rng.uniform(), eta = 3.0 * rng.uniform();
        const GmmParams q = GmmParams::make(gamma, alpha, p, pi, 10);
        const SeStateGmm s = make_se_state_gmm(eta, 1.0, q);
        const GmmMoments m = se_moments_gmm(s, matched_optimal(s, q), q);
        worst = std::max(worst, std::abs(m.e_yg - m.e_g2));
    }
    return {worst <= 1e-8, fmt("max |E[Y g*] - E[g*^2]| %.3g over 20 tuples", worst)};
}

std::vector<GmmParams> five_sets() {
    return {GmmParams::make(1.5, 2.0, 0.3, 0.3, 10), GmmParams::make(1.5, 2.0, 0.2, 0.3, 10),
            GmmParams::make(1.5, 0.8, 0.4, 0.3, 10), GmmParams::make(2.0, 1.0, 0.1, 0.5, 10),
            GmmParams::make(1.0, 0.5, 0.25, 0.7, 10)};
}

Outcome c7() {
    double worst_drop = 0.0, worst_dom = 0.0;
    for (const GmmParams& q : five_sets()) {
        double prev = -1.0;
        for (int i = 0; i < 200; ++i) {
            const double u = 10.0 * i / 199.0, f = eta_map_opt(u, q);
            if (prev >= 0.0) worst_drop = std::max(worst_drop, prev - f);
            prev = f;
            worst_dom = std::max(worst_dom, std::max(eta_map_ft(u, q), eta_map_ct(u, q)) - f);
        }
    }
    return {worst_drop <= 0.0 && worst_dom <= 1e-9,
            fmt("largest decrease %.3g, largest max(F_FT, F_CT) - F_opt %.3g", worst_drop, worst_dom)};
}

Outcome c8() {
    double worst = 0.0;
    for (const GmmParams& q : five_sets()) {
        SeMapSpec smoothed = map_of(q, SeMapSpec::Variant::Smoothed);
        smoothed.agg = SmoothedFullRT{100.0};
        const auto a = se_trace_gmm(smoothed, 10);
        const auto b = se_trace_gmm(map_of(q, SeMapSpec::Variant::FtLimit), 10);
        for (int t = 0; t < 10; ++t)
            worst = std::max(worst, std::abs(se_error_gmm(a[t], q) - se_error_gmm_eta(b[t].eta, q.gamma)));
    }
    return {worst <= 0.01, fmt("max predicted-error difference %.3g over 10 iterations", worst)};
}

Outcome c9() {
    double agg = 0.0, err = 0.0;
    for (double alpha : {0.5, 2.0})
        for (double p : {0.05, 0.2, 0.4}) {
            const GlmParams q = GlmParams::make(1.0, alpha, p, SignLink{}, 10);
            for (double eta : {0.2, 0.8, 2.0})
                for (int k = 0; k <= 60; ++k)
                    for (double yh : {-1.0, 1.0}) {
                        const double u = -3.0 + 0.1 * k;
                        agg = std::max(agg, std::abs(optimal_aggregator_glm(u, yh, eta, q) - optimal_aggregator_sign(u, yh, eta, q)));
                    }
        }
    const GlmParams q = GlmParams::make(1.0, 0.5, 0.2, SignLink{}, 10);
    for (int k = 0; k <= 200; ++k) {
        const double rho = -1.0 + 0.01 * k;
        err = std::max(err, std::abs(glm_error_of_overlap_quadrature(rho, q) - std::acos(rho) / kPi));
    }
    return {agg <= 1e-6 && err <= 1e-8, fmt("aggregator max diff %.3g, F(rho) vs arccos max diff %.3g", agg, err)};
}

Outcome c10() {
    const GmmParams q = GmmParams::make(1.5, 2.0, 0.2, 0.3, 10);
    const bool applies = q.gamma * q.gamma >= std::sqrt(kPi * q.alpha / 2.0);
    const PStarResult r = p_star(q);
    double drop = 0.0;
    for (int k = 0; k < 5; ++k) {
        GmmParams qp = q;
        qp.p = r.p_star + 0.2 * k * (0.5 - r.p_star);
        const auto tr = se_trace_gmm(map_of(qp), 20);
        for (std::size_t t = 1; t < tr.size(); ++t) drop = std::max(drop, tr[t - 1].eta - tr[t].eta);
    }
    return {applies && r.found && r.residual <= 1e-10 && drop <= 1e-12,
            fmt("p* = %.8f, residual %.3g, largest eta decrease %.3g", r.p_star, r.residual, drop)};
}

Outcome c11() {
    RngStream rng(11, 0);
    double red = 0.0, drop = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double m = 0.2 + 2.0 * rng.uniform(), s = 0.3 + 1.5 * rng.uniform(), p = 0.01 + 0.45 * rng.uniform();
        BimodalFit f;
        f.mu_plus = m;
        f.mu_minus = -m;
        f.sigma_plus = f.sigma_minus = s;
        f.pi_plus = 0.5;
        const GmmParams q = GmmParams::make(1.0, s * s / m, p, 0.5, 10);
        const AggregatorGmm opt = OptimalGmm{0.0, q, 1.0};
        for (double z = -4.0; z <= 4.0; z += 0.25)
            for (double yh : {-1.0, 1.0}) red = std::max(red, std::abs(bayesmix_aggregate(z, yh, f, p) - eval_aggregator(opt, z, yh)));
    }
    for (int k = 0; k < 10; ++k) {
        RngStream r(500 + k, 0);
        std::vector<double> z;
        const double a = -1.0 + 0.2 * k, b = 1.5, s = 0.5 + 0.1 * k;
        for (int i = 0; i < 100 + 10 * k; ++i) z.push_back((r.uniform() < 0.4 ? a : b) + s * r.normal());
        std::vector<double> trace;
        fit_bimodal_em(z, BayesMixConfig{}, &trace);
        for (std::size_t t = 1; t < trace.size(); ++t) drop = std::max(drop, trace[t - 1] - trace[t]);
    }
    return {red <= 1e-12 && drop <= 1e-12, fmt("reduction max diff %.3g, largest log-likelihood decrease %.3g", red, drop)};
}

Outcome c12() {
    const GmmParams q = GmmParams::make(2.0, 0.1, 0.45, 0.5, 2000);
    BayesMixConfig cfg;
    cfg.p = 0.45;
    int wins = 0;
    for (int s = 0; s < 10; ++s) {
        const DemoResult r = bayesmix_retrain_demo(q, cfg, 10, RngStream(s, 0));
        wins += r.rounds.back().accuracy > r.rounds.front().accuracy;
    }
    return {wins >= 8, fmt("final accuracy above round 0 in %.0f/10 seeds", wins)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"GMM AMP vs SE gap <= 0.02", c1},
        {"GLM sign-link AMP vs SE gap <= 0.02", c2},
        {"crossover points within 0.05", c3},
        {"initialisations exact to 1e-12", c4},
        {"optimal aggregator identities", c5},
        {"Bayes identity over 20 tuples", c6},
        {"monotone SE map and dominance", c7},
        {"smoothed FT approaches its limit", c8},
        {"sign-link closed forms", c9},
        {"p* root and monotone SE", c10},
        {"BayesMix reduction and EM monotonicity", c11},
        {"BayesMix retraining demo", c12},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
