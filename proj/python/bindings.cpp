#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amprt/bayesmix.hpp"
#include "amprt/glm_retrain.hpp"
#include "amprt/glm_state_evolution.hpp"
#include "amprt/gmm_retrain.hpp"
#include "amprt/gmm_state_evolution.hpp"
#include "amprt/harness.hpp"
#include "amprt/io.hpp"

namespace py = pybind11;
using namespace amprt;

namespace {

SeMapSpec::Variant parse_variant(const std::string& s) {
    if (s == "opt") return SeMapSpec::Variant::Opt;
    if (s == "ft-limit") return SeMapSpec::Variant::FtLimit;
    if (s == "ct-limit") return SeMapSpec::Variant::CtLimit;
    throw ConfigError("unknown map variant '" + s + "' (opt, ft-limit, ct-limit)");
}

py::dict trajectory_dict(const Trajectory& tr) {
    std::vector<int> t;
    std::vector<double> err, overlap;
    for (const auto& p : tr.points) {
        t.push_back(p.t);
        err.push_back(p.test_error);
        overlap.push_back(p.overlap);
    }
    py::dict d;
    d["t"] = t;
    d["test_error"] = err;
    d["overlap"] = overlap;
    d["diverged"] = tr.diverged;
    d["message"] = tr.message;
    return d;
}

py::dict fit_dict(const BimodalFit& f) {
    py::dict d;
    d["mu_plus"] = f.mu_plus;
    d["mu_minus"] = f.mu_minus;
    d["sigma_plus"] = f.sigma_plus;
    d["sigma_minus"] = f.sigma_minus;
    d["pi_plus"] = f.pi_plus;
    d["loglik"] = f.loglik;
    d["iterations"] = f.iterations;
    d["converged"] = f.converged;
    d["sigma_clamped"] = f.sigma_clamped;
    return d;
}

BimodalFit fit_from(const py::dict& d) {
    BimodalFit f;
    f.mu_plus = d["mu_plus"].cast<double>();
    f.mu_minus = d["mu_minus"].cast<double>();
    f.sigma_plus = d["sigma_plus"].cast<double>();
    f.sigma_minus = d["sigma_minus"].cast<double>();
    f.pi_plus = d["pi_plus"].cast<double>();
    return f;
}

}  // namespace

PYBIND11_MODULE(_amprt, m) {
    m.doc() = "AMP retraining simulator, state evolution and BayesMix aggregation";
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<BracketError>(m, "BracketError", base.ptr());
    py::register_exception<DegenerateModelError>(m, "DegenerateModelError", base.ptr());
    py::register_exception<DegenerateFitError>(m, "DegenerateFitError", base.ptr());
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<DivergenceError>(m, "DivergenceError", numerical.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    py::class_<GmmParams>(m, "GmmParams")
        .def(py::init(&GmmParams::make), py::arg("gamma"), py::arg("alpha"), py::arg("p"), py::arg("pi_plus") = 0.5,
             py::arg("n") = 1000)
        .def_readonly("gamma", &GmmParams::gamma)
        .def_readonly("alpha", &GmmParams::alpha)
        .def_readonly("p", &GmmParams::p)
        .def_readonly("pi_plus", &GmmParams::pi_plus)
        .def_readonly("n", &GmmParams::n)
        .def_readonly("d", &GmmParams::d);

    py::class_<GlmParams>(m, "GlmParams")
        .def(py::init([](double gamma, double alpha, double p, const std::string& link, int n) {
                 return GlmParams::make(gamma, alpha, p, parse_link(link), n);
             }),
             py::arg("gamma") = 1.0, py::arg("alpha") = 0.5, py::arg("p") = 0.2, py::arg("link") = "sign",
             py::arg("n") = 1000)
        .def_readonly("gamma", &GlmParams::gamma)
        .def_readonly("alpha", &GlmParams::alpha)
        .def_readonly("p", &GlmParams::p)
        .def_readonly("n", &GlmParams::n)
        .def_readonly("d", &GlmParams::d)
        .def_property_readonly("link", [](const GlmParams& q) { return link_name(q.link); });

    py::class_<SeStateGmm>(m, "SeStateGmm")
        .def_readonly("m", &SeStateGmm::m)
        .def_readonly("sigma", &SeStateGmm::sigma)
        .def_readonly("eta", &SeStateGmm::eta);
    py::class_<SeStateGlm>(m, "SeStateGlm")
        .def_readonly("mu", &SeStateGlm::mu)
        .def_readonly("sigma", &SeStateGlm::sigma)
        .def_readonly("eta", &SeStateGlm::eta);

    // GMM state evolution
    m.def("se_init_gmm", &se_init_gmm, py::arg("params"));
    m.def("se_error_gmm", &se_error_gmm_eta, py::arg("eta"), py::arg("gamma"));
    m.def("eta_map_opt", [](double u, const GmmParams& q) { return eta_map_opt(u, q); }, py::arg("u"), py::arg("params"));
    m.def("eta_map_ft", &eta_map_ft, py::arg("u"), py::arg("params"));
    m.def("eta_map_ct", &eta_map_ct, py::arg("u"), py::arg("params"));
    m.def(
        "se_trace_gmm",
        [](const GmmParams& q, int T, const std::string& variant) {
            SeMapSpec s;
            s.variant = parse_variant(variant);
            s.params = q;
            return se_trace_gmm(s, T);
        },
        py::arg("params"), py::arg("T"), py::arg("variant") = "opt");
    m.def(
        "fixed_points",
        [](const GmmParams& q, const std::string& variant, double u_max, int grid) {
            SeMapSpec s;
            s.variant = parse_variant(variant);
            s.params = q;
            return find_fixed_points(s, u_max, grid);
        },
        py::arg("params"), py::arg("variant") = "opt", py::arg("u_max") = 50.0, py::arg("grid") = 2000);
    m.def(
        "cobweb",
        [](const std::function<double(double)>& f, double u1, int T) { return cobweb_trace(f, u1, T).pairs; },
        py::arg("map"), py::arg("u1"), py::arg("T"));
    m.def(
        "crossover", [](const GmmParams& q) { return find_crossover(q).roots; }, py::arg("params"),
        "All crossings of the CT and FT limit maps on (0, 50].");
    m.def(
        "p_star",
        [](double gamma, double alpha) {
            const PStarResult r = p_star(GmmParams::make(gamma, alpha, 0.1, 0.5, 10));
            py::dict d;
            d["p_star"] = r.p_star;
            d["residual"] = r.residual;
            d["found"] = r.found;
            d["guaranteed"] = r.guaranteed;
            return d;
        },
        py::arg("gamma"), py::arg("alpha"));

    // GMM AMP
    m.def(
        "optimal_aggregator_gmm",
        [](double y, double yhat, double eta, const GmmParams& q) { return eval_aggregator(OptimalGmm{eta, q, 1.0}, y, yhat); },
        py::arg("y"), py::arg("yhat"), py::arg("eta"), py::arg("params"));
    m.def(
        "sample_gmm_dataset",
        [](const GmmParams& q, std::uint64_t seed, std::uint64_t stream) {
            const GmmDataset ds = sample_gmm_dataset(q, RngStream(seed, stream));
            py::dict d;
            d["X"] = ds.X;
            d["y_true"] = ds.y_true;
            d["y_noisy"] = ds.y_noisy;
            d["mu"] = ds.mu;
            return d;
        },
        py::arg("params"), py::arg("seed") = 1, py::arg("stream") = 0);
    m.def(
        "run_retraining_gmm",
        [](const GmmParams& q, int T, std::uint64_t seed, std::uint64_t stream) {
            return trajectory_dict(run_retraining_gmm(q, optimal_schedule(q, T), T, RngStream(seed, stream)));
        },
        py::arg("params"), py::arg("T") = 10, py::arg("seed") = 1, py::arg("stream") = 0,
        "AMP with the Bayes-optimal aggregator schedule.");

    // GLM
    m.def("se_init_glm", [](const GlmParams& q) { return se_init_glm(q); }, py::arg("params"));
    m.def("se_trace_glm", &se_trace_glm, py::arg("params"), py::arg("T"), py::arg("optimal") = true);
    m.def("se_error_glm", &se_error_glm, py::arg("eta"), py::arg("params"));
    m.def("eta_map_glm", [](double u, const GlmParams& q) { return eta_map_glm(u, q); }, py::arg("u"), py::arg("params"));
    m.def(
        "optimal_aggregator_glm",
        [](double u, double yhat, double eta, const GlmParams& q) { return optimal_aggregator_glm(u, yhat, eta, q); },
        py::arg("u"), py::arg("yhat"), py::arg("eta"), py::arg("params"));
    m.def("optimal_aggregator_sign", &optimal_aggregator_sign, py::arg("u"), py::arg("yhat"), py::arg("eta"),
          py::arg("params"));
    m.def("glm_error_of_overlap", &glm_error_of_overlap, py::arg("rho"), py::arg("params"));
    m.def(
        "run_retraining_glm",
        [](const GlmParams& q, int T, std::uint64_t seed, std::uint64_t stream) {
            return trajectory_dict(run_retraining_glm(q, optimal_schedule_glm(q, T), T, RngStream(seed, stream)));
        },
        py::arg("params"), py::arg("T") = 10, py::arg("seed") = 1, py::arg("stream") = 0);

    // BayesMix
    m.def(
        "fit_bimodal",
        [](const std::vector<double>& z, int max_iters, double tol, double sigma_floor) {
            BayesMixConfig c;
            c.em_max_iters = max_iters;
            c.em_tol = tol;
            c.sigma_floor = sigma_floor;
            return fit_dict(fit_bimodal_em(z, c));
        },
        py::arg("z"), py::arg("max_iters") = 500, py::arg("tol") = 1e-10, py::arg("sigma_floor") = 0.0);
    m.def(
        "bayesmix_aggregate", [](double z, double yhat, const py::dict& fit, double p) { return bayesmix_aggregate(z, yhat, fit_from(fit), p); },
        py::arg("z"), py::arg("yhat"), py::arg("fit"), py::arg("p"));

    // Harness
    m.def(
        "run_simulation",
        [](const std::string& config_json, int jobs) {
            const ComparisonReport r = run_simulation(ExperimentConfig::from_json(config_json), jobs);
            py::list rows;
            for (const auto& row : r.rows) {
                py::dict d;
                d["t"] = row.t;
                d["se_error"] = row.se_error;
                d["emp_mean"] = row.emp_mean;
                d["emp_std"] = row.emp_std;
                d["gap"] = row.gap;
                d["n_ok"] = row.n_ok;
                rows.append(d);
            }
            return rows;
        },
        py::arg("config_json"), py::arg("jobs") = 1);
    m.def(
        "run_command",
        [](const std::string& config_json, const std::string& out_dir, int jobs) {
            return run_command(ExperimentConfig::from_json(config_json), RunOptions{out_dir, jobs, nullptr});
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("jobs") = 1);
    m.def("default_config_json", []() { return ExperimentConfig{}.to_json(); });
    m.def("extract_config", &extract_config, py::arg("text"));
}
