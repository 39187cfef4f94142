#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "amprt/harness.hpp"
#include "amprt/io.hpp"

namespace {

void add_params(CLI::App* sub, amprt::ExperimentConfig& c) {
    sub->add_option("--model", c.model, "gmm or glm")->check(CLI::IsMember({"gmm", "glm"}));
    sub->add_option("--gamma", c.gamma, "signal strength");
    sub->add_option("--alpha", c.alpha, "d / n");
    sub->add_option("--d", c.d, "dimension; overrides --alpha when positive");
    sub->add_option("--p", c.p, "label flip probability");
    sub->add_option("--pi-plus", c.pi_plus, "prior of the +1 class (gmm)");
    sub->add_option("--n", c.n, "number of samples");
    sub->add_option("--link", c.link, "glm link: sign, logistic[:s], probit[:s]");
    sub->add_option("--aggregator", c.aggregator,
                    "opt, opt-plugin, identity, ft, ct, hard-ft, hard-ct, ft-limit, ct-limit");
    sub->add_option("--beta", c.beta, "sharpness of the smoothed ft / ct aggregators");
    sub->add_option("-T,--iterations", c.T, "number of iterations");
    sub->add_option("--order", c.order, "quadrature order (0 = defaults)");
}

}  // namespace

int main(int argc, char** argv) {
    amprt::ExperimentConfig cfg;
    std::string out_dir, config_file;
    int jobs = 1;
    bool seed_given = false;
    std::uint64_t seed = cfg.seed;

    CLI::App app{"AMP retraining simulator and BayesMix label aggregation"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    app.add_option("--seed", seed, "master seed")->each([&](const std::string&) { seed_given = true; });
    app.add_option("--jobs", jobs, "parallel replications")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory (default $AMPRT_OUT_DIR or amprt_out)");
    app.add_option("--config", config_file, "rerun from the config embedded in an output file");

    auto* sim = app.add_subcommand("simulate", "AMP replications against the state evolution");
    add_params(sim, cfg);
    sim->add_option("--reps,--replications", cfg.replications, "number of replications");
    sim->add_flag("--save-data", cfg.save_data, "also write each replication's dataset");

    auto* se = app.add_subcommand("se", "state-evolution trajectory");
    add_params(se, cfg);
    se->add_option("--eta1", cfg.eta1, "start the eta iteration here instead of the initialisation");

    auto* cob = app.add_subcommand("cobweb", "cobweb data for the eta map");
    add_params(cob, cfg);
    cob->add_option("--u1", cfg.u1, "starting point u = eta^2");
    cob->add_option("--u-max", cfg.u_max, "right end of the sampled map");
    cob->add_option("--grid", cfg.grid, "number of map samples");

    auto* cross = app.add_subcommand("crossover", "crossover of the FT and CT limit maps");
    add_params(cross, cfg);
    cross->add_option("--p-list", cfg.p_list, "flip probabilities")->delimiter(',');

    auto* bm = app.add_subcommand("bayesmix", "bimodal fit and soft targets from logits");
    bm->require_subcommand(1);
    auto add_bayes = [&](CLI::App* s) {
        if (!s->get_option_no_throw("--p")) s->add_option("--p", cfg.p, "label flip probability");
        s->add_option("--em-max-iters", cfg.em_max_iters, "EM iteration cap");
        s->add_option("--em-tol", cfg.em_tol, "EM log-likelihood tolerance");
        s->add_option("--sigma-floor", cfg.sigma_floor, "component sigma floor (0 = 1e-3 std)");
    };
    auto* bfit = bm->add_subcommand("fit", "fit the two-component mixture");
    add_bayes(bfit);
    bfit->add_option("--logits", cfg.logits, "logit file (id,z,yhat)")->required();
    auto* bapply = bm->add_subcommand("apply", "emit soft targets");
    add_bayes(bapply);
    bapply->add_option("--logits", cfg.logits, "logit file (id,z,yhat)")->required();
    bapply->add_option("--fit", cfg.fit, "fit.json from 'bayesmix fit' (fitted on the fly if omitted)");
    auto* bdemo = bm->add_subcommand("demo", "synthetic retraining demo");
    add_params(bdemo, cfg);
    add_bayes(bdemo);
    bdemo->add_option("--reps,--replications", cfg.replications, "number of seeds");
    bdemo->add_option("--ridge", cfg.ridge, "ridge penalty of the linear fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!config_file.empty()) {
            cfg = amprt::ExperimentConfig::from_json(amprt::extract_config(amprt::read_text_file(config_file)));
        } else {
            if (sim->parsed()) cfg.command = "simulate";
            else if (se->parsed()) cfg.command = "se";
            else if (cob->parsed()) cfg.command = "cobweb";
            else if (cross->parsed()) cfg.command = "crossover";
            else if (bfit->parsed()) cfg.command = "bayesmix-fit";
            else if (bapply->parsed()) cfg.command = "bayesmix-apply";
            else if (bdemo->parsed()) cfg.command = "bayesmix-demo";
            else {
                std::cerr << app.help();
                return 2;
            }
            if (cfg.command == "bayesmix-demo") {
                if (!bdemo->count("--p")) cfg.p = 0.45;
                if (!bdemo->count("--gamma")) cfg.gamma = 2.0;
                if (!bdemo->count("--n")) cfg.n = 2000;
                if (!bdemo->count("--pi-plus")) cfg.pi_plus = 0.5;
                if (!bdemo->count("--d") && !bdemo->count("--alpha")) cfg.d = 200;
            }
            if (seed_given) cfg.seed = seed;
        }
        if (out_dir.empty()) out_dir = amprt::default_out_dir();
        amprt::RunOptions opt{out_dir, jobs, &std::cerr};
        for (const auto& f : amprt::run_command(cfg, opt)) std::cout << f << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "amprt: " << e.what() << '\n';
        return amprt::exit_code_for(e);
    }
}
