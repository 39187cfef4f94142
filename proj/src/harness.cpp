#include "amprt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "amprt/bayesmix.hpp"
#include "amprt/glm_state_evolution.hpp"
#include "amprt/gmm_state_evolution.hpp"
#include "amprt/io.hpp"

namespace amprt {

namespace {

using ojson = nlohmann::ordered_json;

const std::set<std::string> kCommands{"simulate", "se", "cobweb", "crossover",
                                      "bayesmix-fit", "bayesmix-apply", "bayesmix-demo"};
const std::set<std::string> kGmmSimulate{"opt", "opt-plugin", "identity", "ft", "ct", "hard-ft", "hard-ct"};
const std::set<std::string> kGmmSe{"opt", "identity", "ft", "ct", "ft-limit", "ct-limit"};
const std::set<std::string> kGmmCobweb{"opt", "ft", "ct", "ft-limit", "ct-limit"};
const std::set<std::string> kGlm{"opt", "identity"};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

GmmParams gmm_params(const ExperimentConfig& c) {
    return GmmParams::make(c.gamma, c.resolved_alpha(), c.p, c.pi_plus, c.n);
}

GlmParams glm_params(const ExperimentConfig& c) {
    return GlmParams::make(c.gamma, c.resolved_alpha(), c.p, parse_link(c.link), c.n);
}

int order_or(const ExperimentConfig& c, int fallback) { return c.order > 0 ? c.order : fallback; }

SeMapSpec gmm_map(const ExperimentConfig& c) {
    SeMapSpec spec;
    spec.params = gmm_params(c);
    spec.order = order_or(c, kPanelOrder);
    const std::string& a = c.aggregator;
    if (a == "opt" || a == "opt-plugin") spec.variant = SeMapSpec::Variant::Opt;
    else if (a == "ft-limit") spec.variant = SeMapSpec::Variant::FtLimit;
    else if (a == "ct-limit") spec.variant = SeMapSpec::Variant::CtLimit;
    else {
        spec.variant = SeMapSpec::Variant::Smoothed;
        if (a == "ft") spec.agg = SmoothedFullRT{c.beta};
        else if (a == "ct") spec.agg = SmoothedConsensusRT{c.beta};
        else spec.agg = Identity{};
    }
    return spec;
}

std::function<double(double)> map_function(const ExperimentConfig& c) {
    if (c.model == "glm") {
        const GlmParams q = glm_params(c);
        const int order = order_or(c, kDefaultOrder2d);
        return [q, order](double u) { return eta_map_glm(u, q, order); };
    }
    return gmm_map(c);
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return v.empty() ? kNaN : 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string fmt(double v) { return format_table(v); }

BayesMixConfig bayes_config(const ExperimentConfig& c) {
    BayesMixConfig b;
    b.p = c.p;
    b.em_max_iters = c.em_max_iters;
    b.em_tol = c.em_tol;
    b.sigma_floor = c.sigma_floor;
    b.ridge = c.ridge;
    b.validate();
    return b;
}

// Runs body(r) for r in [0, count) on up to jobs threads; rethrows the first failure by index.
template <class Body>
void parallel_for(int count, int jobs, Body&& body) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < count; r = next++) {
            try {
                body(r);
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(jobs, 1, std::max(count, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

class Writer {
public:
    Writer(const ExperimentConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt) {
        std::error_code ec;
        std::filesystem::create_directories(opt.out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + opt.out_dir + ": " + ec.message());
    }

    std::string path(const std::string& name) const { return (std::filesystem::path(opt_.out_dir) / name).string(); }

    Table table(const std::string& schema) const {
        Table t;
        t.meta = {{"schema", schema}, {"version", kVersion}, {"seed", std::to_string(cfg_.seed)}, {"config", cfg_.to_json()}};
        return t;
    }

    void put(const std::string& name, const Table& t) {
        t.write_file(path(name));
        files.push_back(path(name));
    }

    void put(const std::string& name, const std::string& text) {
        write_text_file(path(name), text);
        files.push_back(path(name));
    }

    void config_sidecar() { put("config.json", cfg_.to_json(true) + "\n"); }

    void log(const std::string& msg) const {
        if (opt_.log) *opt_.log << msg << '\n';
    }

    std::vector<std::string> files;

private:
    const ExperimentConfig& cfg_;
    const RunOptions& opt_;
};

void cmd_simulate(const ExperimentConfig& c, const RunOptions& opt, Writer& w) {
    const ComparisonReport rep = run_simulation(c, opt.jobs);
    w.config_sidecar();

    Table report = w.table("amprt-report v1");
    report.meta.emplace_back("max_gap", fmt(rep.max_gap()));
    report.meta.emplace_back("failed_replications", std::to_string(rep.n_failed()));
    report.columns = {"t", "se_error", "emp_mean", "emp_std", "gap", "n_ok"};
    for (const auto& r : rep.rows)
        report.add_row({std::to_string(r.t), fmt(r.se_error), fmt(r.emp_mean), fmt(r.emp_std), fmt(r.gap), std::to_string(r.n_ok)});
    w.put("report.tsv", report);

    Table traj = w.table("amprt-trajectories v1");
    traj.columns = {"rep", "t", "test_error", "overlap", "model_norm", "soft_norm", "onsager", "eta_used"};
    Table status = w.table("amprt-replications v1");
    status.columns = {"rep", "status", "diverged_at", "message"};
    for (std::size_t r = 0; r < rep.replications.size(); ++r) {
        const Trajectory& tr = rep.replications[r];
        for (const auto& p : tr.points)
            traj.add_row({std::to_string(r), std::to_string(p.t), fmt(p.test_error), fmt(p.overlap), fmt(p.model_norm),
                          fmt(p.soft_norm), fmt(p.onsager), fmt(p.eta_used)});
        status.add_row({std::to_string(r), tr.diverged ? "diverged" : "ok", std::to_string(tr.diverged_at), tr.message});
    }
    w.put("trajectories.tsv", traj);
    w.put("replications.tsv", status);

    if (c.save_data) {
        for (int r = 0; r < c.replications; ++r) {
            std::ostringstream os;
            ojson j = ojson::parse(c.to_json());
            j["replication"] = r;
            const RngStream rng(c.seed, static_cast<std::uint64_t>(r));
            if (c.model == "gmm") write_dataset(os, sample_gmm_dataset(gmm_params(c), rng), j.dump());
            else write_dataset(os, sample_glm_dataset(glm_params(c), rng), j.dump());
            char name[32];
            std::snprintf(name, sizeof name, "dataset_%03d.csv", r);
            w.put(name, os.str());
        }
    }

    for (std::size_t r = 0; r < rep.replications.size(); ++r)
        if (rep.replications[r].diverged)
            w.log("warning: replication " + std::to_string(r) + " diverged: " + rep.replications[r].message);
    w.log("max |SE - empirical| = " + fmt(rep.max_gap()));
    if (rep.n_failed() == c.replications) {
        const int at = rep.replications.empty() ? 0 : rep.replications.front().diverged_at;
        throw DivergenceError("all replications diverged", at);
    }
}

void cmd_se(const ExperimentConfig& c, Writer& w) {
    Table t = w.table("amprt-se v1");
    const bool gmm = c.model == "gmm";
    t.columns = {"t", "eta", gmm ? "m" : "mu", "sigma", "error"};
    if (c.eta1 > 0.0) {
        if (c.aggregator != "opt" && c.aggregator != "ft-limit" && c.aggregator != "ct-limit")
            throw ConfigError("--eta1 applies to the opt, ft-limit and ct-limit maps only");
        const auto map = map_function(c);
        const CobwebTrace tr = cobweb_trace(map, c.eta1 * c.eta1, c.T);
        for (std::size_t k = 0; k < tr.pairs.size(); ++k) {
            const double eta = std::sqrt(tr.pairs[k].first);
            const double err = gmm ? se_error_gmm_eta(eta, c.gamma) : se_error_glm(eta, glm_params(c));
            t.add_row({std::to_string(k + 1), fmt(eta), fmt(kNaN), fmt(kNaN), fmt(err)});
        }
        t.meta.emplace_back("truncated", tr.truncated ? "yes" : "no");
    } else if (gmm) {
        const SeMapSpec spec = gmm_map(c);
        const auto trace = se_trace_gmm(spec, c.T);
        for (std::size_t k = 0; k < trace.size(); ++k) {
            const auto& s = trace[k];
            t.add_row({std::to_string(k + 1), fmt(s.eta), fmt(s.m), fmt(s.sigma), fmt(se_error_gmm(s, spec.params))});
        }
    } else {
        const GlmParams q = glm_params(c);
        const auto trace = se_trace_glm(q, c.T, c.aggregator == "opt");
        for (std::size_t k = 0; k < trace.size(); ++k) {
            const auto& s = trace[k];
            t.add_row({std::to_string(k + 1), fmt(s.eta), fmt(s.mu), fmt(s.sigma), fmt(se_error_glm(s.eta, q))});
        }
    }
    w.config_sidecar();
    w.put("se.tsv", t);
}

void cmd_cobweb(const ExperimentConfig& c, Writer& w) {
    const auto map = map_function(c);
    const CobwebTrace tr = cobweb_trace(map, c.u1, c.T);
    const std::vector<double> fixed = find_fixed_points(map, c.u_max, c.grid);
    std::string fp;
    for (double u : fixed) fp += (fp.empty() ? "" : ",") + fmt(u);

    Table cob = w.table("amprt-cobweb v1");
    cob.meta.emplace_back("fixed_points", fp.empty() ? "none" : fp);
    cob.meta.emplace_back("truncated", tr.truncated ? "yes" : "no");
    cob.columns = {"step", "u", "F_u"};
    for (std::size_t k = 0; k < tr.pairs.size(); ++k)
        cob.add_row({std::to_string(k + 1), fmt(tr.pairs[k].first), fmt(tr.pairs[k].second)});

    Table curve = w.table("amprt-map v1");
    curve.meta.emplace_back("fixed_points", fp.empty() ? "none" : fp);
    curve.columns = {"u", "F_u", "diagonal"};
    for (int i = 0; i <= c.grid; ++i) {
        const double u = c.u_max * i / c.grid;
        double f = kNaN;
        try {
            f = map(u);
        } catch (const Error&) {
        }
        curve.add_row({fmt(u), fmt(f), fmt(u)});
    }
    w.config_sidecar();
    w.put("cobweb.tsv", cob);
    w.put("map.tsv", curve);
    w.log("fixed points: " + (fp.empty() ? std::string("none") : fp));
}

void cmd_crossover(const ExperimentConfig& c, Writer& w) {
    Table t = w.table("amprt-crossover v1");
    t.columns = {"p", "u_star", "residual", "n_roots", "status"};
    std::vector<std::pair<double, double>> found;
    for (double p : c.p_list) {
        const GmmParams q = GmmParams::make(c.gamma, c.resolved_alpha(), p, c.pi_plus, c.n);
        const CrossoverResult res = find_crossover(q);
        if (res.found()) {
            const double u = res.first();
            const double resid = std::abs(eta_map_ct(u, q) - eta_map_ft(u, q));
            t.add_row({fmt(p), fmt(u), fmt(resid), std::to_string(res.roots.size()), "ok"});
            found.emplace_back(p, u);
            w.log("p = " + fmt(p) + ": u* = " + fmt(u));
        } else {
            t.add_row({fmt(p), fmt(kNaN), fmt(kNaN), "0", "no-crossover"});
            w.log("p = " + fmt(p) + ": no crossover");
        }
    }
    std::sort(found.begin(), found.end());
    std::string trend = found.size() < 2 ? "n/a" : "ok";
    for (std::size_t k = 1; k < found.size(); ++k)
        if (!(found[k].second < found[k - 1].second)) trend = "violated";
    t.meta.emplace_back("trend_u_star_increases_as_p_decreases", trend);
    const PStarResult ps = p_star(GmmParams::make(c.gamma, c.resolved_alpha(), c.p_list.front(), c.pi_plus, c.n));
    t.meta.emplace_back("p_star", ps.found ? fmt(ps.p_star) : "none");
    t.meta.emplace_back("p_star_guaranteed", ps.guaranteed ? "yes" : "no");
    w.config_sidecar();
    w.put("crossover.tsv", t);
    w.log("trend check: " + trend);
}

std::vector<double> logits_z(const std::vector<LogitRecord>& recs) {
    std::vector<double> z;
    z.reserve(recs.size());
    for (const auto& r : recs) z.push_back(r.z);
    return z;
}

void cmd_bayesmix_fit(const ExperimentConfig& c, Writer& w) {
    const BayesMixConfig b = bayes_config(c);
    const auto recs = read_logits(c.logits);
    const BimodalFit fit = fit_bimodal_em(logits_z(recs), b);
    ojson j = ojson::parse(fit_to_json(fit));
    j["config"] = ojson::parse(c.to_json());
    w.put("fit.json", j.dump(2) + "\n");
    if (fit.sigma_clamped) w.log("warning: a mixture component was clamped at sigma_floor");
    if (!fit.converged) w.log("warning: EM stopped at the iteration cap before converging");
}

void cmd_bayesmix_apply(const ExperimentConfig& c, Writer& w) {
    const BayesMixConfig b = bayes_config(c);
    const auto recs = read_logits(c.logits);
    const BimodalFit fit = c.fit.empty() ? fit_bimodal_em(logits_z(recs), b) : fit_from_json(read_text_file(c.fit));
    std::ostringstream os;
    write_targets(os, emit_targets(recs, fit, b), c.to_json());
    w.put("targets.csv", os.str());
}

void cmd_bayesmix_demo(const ExperimentConfig& c, const RunOptions& opt, Writer& w) {
    const BayesMixConfig b = bayes_config(c);
    const GmmParams q = gmm_params(c);
    std::vector<DemoResult> results(static_cast<std::size_t>(c.replications));
    parallel_for(c.replications, opt.jobs, [&](int r) {
        results[static_cast<std::size_t>(r)] = bayesmix_retrain_demo(q, b, c.T, RngStream(c.seed, static_cast<std::uint64_t>(r)));
    });
    Table rounds = w.table("amprt-demo v1");
    rounds.columns = {"rep", "round", "accuracy", "mu_plus", "mu_minus", "sigma_plus", "sigma_minus", "pi_plus"};
    Table summary = w.table("amprt-demo-summary v1");
    summary.columns = {"rep", "accuracy_round0", "accuracy_final", "improved", "halted"};
    int improved = 0;
    for (std::size_t r = 0; r < results.size(); ++r) {
        const DemoResult& d = results[r];
        for (const auto& rd : d.rounds) {
            const bool has_fit = rd.round > 0;
            rounds.add_row({std::to_string(r), std::to_string(rd.round), fmt(rd.accuracy),
                            fmt(has_fit ? rd.fit.mu_plus : kNaN), fmt(has_fit ? rd.fit.mu_minus : kNaN),
                            fmt(has_fit ? rd.fit.sigma_plus : kNaN), fmt(has_fit ? rd.fit.sigma_minus : kNaN),
                            fmt(has_fit ? rd.fit.pi_plus : kNaN)});
        }
        const double a0 = d.rounds.front().accuracy, a1 = d.rounds.back().accuracy;
        const bool up = a1 > a0;
        improved += up;
        summary.add_row({std::to_string(r), fmt(a0), fmt(a1), up ? "yes" : "no", d.halted ? "yes" : "no"});
        if (d.halted) w.log("warning: demo replication " + std::to_string(r) + " halted: " + d.message);
    }
    summary.meta.emplace_back("improved", std::to_string(improved) + "/" + std::to_string(results.size()));
    w.config_sidecar();
    w.put("demo.tsv", rounds);
    w.put("demo_summary.tsv", summary);
    w.log("final accuracy above round 0 in " + std::to_string(improved) + "/" + std::to_string(results.size()) + " replications");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!kCommands.count(command)) throw ConfigError("unknown command '" + command + "'");
    if (model != "gmm" && model != "glm") throw ConfigError("model must be gmm or glm");
    if (T < 1) throw ConfigError("T must be at least 1");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (order != 0) check_order(order);
    if (d < 0) throw ConfigError("d must be non-negative");
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    if (command == "bayesmix-fit" || command == "bayesmix-apply") {
        if (logits.empty()) throw ConfigError("a logits file is required");
        bayes_config(*this);
        return;
    }
    if (command == "bayesmix-demo") {
        bayes_config(*this);
        gmm_params(*this);
        return;
    }
    if (command == "crossover") {
        if (p_list.empty()) throw ConfigError("p list must be nonempty");
        for (double q : p_list) GmmParams::make(gamma, resolved_alpha(), q, pi_plus, n);
        return;
    }
    if (model == "gmm") {
        gmm_params(*this);
        const auto& allowed = command == "simulate" ? kGmmSimulate : command == "se" ? kGmmSe : kGmmCobweb;
        if (!allowed.count(aggregator)) throw ConfigError("aggregator '" + aggregator + "' is not available for gmm " + command);
    } else {
        check_link(glm_params(*this).link);
        if (!kGlm.count(aggregator)) throw ConfigError("aggregator '" + aggregator + "' is not available for glm");
        if (command == "cobweb" && aggregator != "opt") throw ConfigError("the glm cobweb uses the opt map");
    }
    if (command == "cobweb") {
        if (!(u1 >= 0.0)) throw ConfigError("u1 must be non-negative");
        if (!(u_max > 0.0) || grid < 2) throw ConfigError("cobweb needs u_max > 0 and grid >= 2");
    }
    if (!(eta1 >= 0.0)) throw ConfigError("eta1 must be non-negative");
}

int ExperimentConfig::resolved_d() const { return d > 0 ? d : static_cast<int>(std::lround(alpha * n)); }

double ExperimentConfig::resolved_alpha() const {
    return d > 0 ? static_cast<double>(d) / static_cast<double>(n) : alpha;
}

std::string ExperimentConfig::to_json(bool pretty) const {
    ojson j;
    j["command"] = command;
    j["model"] = model;
    j["gamma"] = gamma;
    j["alpha"] = alpha;
    j["p"] = p;
    j["pi_plus"] = pi_plus;
    j["n"] = n;
    j["d"] = d;
    j["link"] = link;
    j["aggregator"] = aggregator;
    j["beta"] = beta;
    j["T"] = T;
    j["replications"] = replications;
    j["seed"] = seed;
    j["order"] = order;
    j["eta1"] = eta1;
    j["u1"] = u1;
    j["u_max"] = u_max;
    j["grid"] = grid;
    j["p_list"] = p_list;
    j["logits"] = logits;
    j["fit"] = fit;
    j["em_max_iters"] = em_max_iters;
    j["em_tol"] = em_tol;
    j["sigma_floor"] = sigma_floor;
    j["ridge"] = ridge;
    j["save_data"] = save_data;
    return pretty ? j.dump(2) : j.dump();
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    ExperimentConfig c;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const std::set<std::string> known = [] {
        std::set<std::string> s;
        const ojson defaults = ojson::parse(ExperimentConfig{}.to_json());
        for (auto& [k, v] : defaults.items()) s.insert(k);
        return s;
    }();
    for (auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("command", c.command);
        get("model", c.model);
        get("gamma", c.gamma);
        get("alpha", c.alpha);
        get("p", c.p);
        get("pi_plus", c.pi_plus);
        get("n", c.n);
        get("d", c.d);
        get("link", c.link);
        get("aggregator", c.aggregator);
        get("beta", c.beta);
        get("T", c.T);
        get("replications", c.replications);
        get("seed", c.seed);
        get("order", c.order);
        get("eta1", c.eta1);
        get("u1", c.u1);
        get("u_max", c.u_max);
        get("grid", c.grid);
        get("p_list", c.p_list);
        get("logits", c.logits);
        get("fit", c.fit);
        get("em_max_iters", c.em_max_iters);
        get("em_tol", c.em_tol);
        get("sigma_floor", c.sigma_floor);
        get("ridge", c.ridge);
        get("save_data", c.save_data);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
    return c;
}

double ComparisonReport::max_gap() const {
    double g = 0.0;
    for (const auto& r : rows)
        if (r.t >= 1 && std::isfinite(r.gap)) g = std::max(g, r.gap);
    return g;
}

int ComparisonReport::n_failed() const {
    return static_cast<int>(std::count_if(replications.begin(), replications.end(), [](const Trajectory& t) { return t.diverged; }));
}

std::vector<double> predicted_errors(const ExperimentConfig& c) {
    std::vector<double> out;
    if (c.model == "glm") {
        const GlmParams q = glm_params(c);
        for (const auto& s : se_trace_glm(q, c.T, c.aggregator == "opt")) out.push_back(se_error_glm(s.eta, q));
        return out;
    }
    if (c.aggregator == "hard-ft" || c.aggregator == "hard-ct") return std::vector<double>(static_cast<std::size_t>(c.T), kNaN);
    const SeMapSpec spec = gmm_map(c);
    for (const auto& s : se_trace_gmm(spec, c.T)) out.push_back(se_error_gmm(s, spec.params));
    return out;
}

ComparisonReport run_simulation(const ExperimentConfig& c, int jobs) {
    ExperimentConfig sim = c;
    sim.command = "simulate";
    sim.validate();
    ComparisonReport rep;
    rep.replications.resize(static_cast<std::size_t>(c.replications));
    const std::vector<double> se = predicted_errors(c);

    if (c.model == "gmm") {
        const GmmParams q = gmm_params(c);
        GmmSchedule schedule;
        if (c.aggregator == "opt") schedule = optimal_schedule(q, c.T, false);
        else if (c.aggregator == "opt-plugin") schedule = optimal_schedule(q, c.T, true);
        else if (c.aggregator == "ft") schedule = constant_schedule(SmoothedFullRT{c.beta});
        else if (c.aggregator == "ct") schedule = constant_schedule(SmoothedConsensusRT{c.beta});
        else schedule = constant_schedule(Identity{});
        parallel_for(c.replications, jobs, [&](int r) {
            const GmmDataset data = sample_gmm_dataset(q, RngStream(c.seed, static_cast<std::uint64_t>(r)));
            Trajectory& out = rep.replications[static_cast<std::size_t>(r)];
            if (c.aggregator == "hard-ft") out = run_hard_retraining_gmm(data, HardRetrain::FullRT, c.T);
            else if (c.aggregator == "hard-ct") out = run_hard_retraining_gmm(data, HardRetrain::ConsensusRT, c.T);
            else out = run_retraining_gmm(data, schedule, c.T);
        });
    } else {
        const GlmParams q = glm_params(c);
        const GlmSchedule schedule = c.aggregator == "opt" ? optimal_schedule_glm(q, c.T)
                                                          : GlmSchedule([](int, const AmpStateGlm&, const GlmDataset&) {
                                                                return AggregatorGlm{Identity{}};
                                                            });
        parallel_for(c.replications, jobs, [&](int r) {
            const GlmDataset data = sample_glm_dataset(q, RngStream(c.seed, static_cast<std::uint64_t>(r)));
            rep.replications[static_cast<std::size_t>(r)] = run_retraining_glm(data, q, schedule, c.T);
        });
    }

    rep.rows.push_back({0, kNaN, kNaN, kNaN, kNaN, 0});
    for (int t = 1; t <= c.T; ++t) {
        std::vector<double> errs;
        for (const auto& tr : rep.replications)
            if (static_cast<int>(tr.points.size()) >= t) errs.push_back(tr.points[static_cast<std::size_t>(t - 1)].test_error);
        ReportRow row;
        row.t = t;
        row.se_error = se[static_cast<std::size_t>(t - 1)];
        row.n_ok = static_cast<int>(errs.size());
        row.emp_mean = errs.empty() ? kNaN : std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
        row.emp_std = sample_std(errs, row.emp_mean);
        row.gap = std::abs(row.se_error - row.emp_mean);
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<std::string> run_command(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    Writer w(cfg, opt);
    const std::string& c = cfg.command;
    if (c == "simulate") cmd_simulate(cfg, opt, w);
    else if (c == "se") cmd_se(cfg, w);
    else if (c == "cobweb") cmd_cobweb(cfg, w);
    else if (c == "crossover") cmd_crossover(cfg, w);
    else if (c == "bayesmix-fit") cmd_bayesmix_fit(cfg, w);
    else if (c == "bayesmix-apply") cmd_bayesmix_apply(cfg, w);
    else cmd_bayesmix_demo(cfg, opt, w);
    return w.files;
}

std::string extract_config(const std::string& text) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
        if (j.contains("config") && j["config"].is_object()) return j["config"].dump();
        if (j.contains("command")) return j.dump();
    }
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] != '#') continue;
        const auto pos = line.find_first_not_of(" \t", 1);
        if (pos != std::string::npos && line.compare(pos, 7, "config:") == 0) return line.substr(pos + 7);
    }
    throw ConfigError("no embedded config found");
}

std::string default_out_dir() {
    const char* env = std::getenv("AMPRT_OUT_DIR");
    return env && *env ? std::string(env) : std::string("amprt_out");
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return 5;
    if (dynamic_cast<const IoError*>(&e)) return 4;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    return 1;
}

}  // namespace amprt
