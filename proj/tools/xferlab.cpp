// Experiment driver: generate synthetic data, train the target net, sweep
// weight perturbations while tracking the transfer metrics, and run the
// self-checking verification suites.
//
// Exit codes: 0 success, 1 verification or runtime failure, 2 configuration
// error, 3 I/O error.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "xferlab/errors.hpp"
#include "xferlab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"adversarial transferability metrics over synthetic sweeps"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t master_seed = 0;
    std::string only;
    std::size_t trials = 0;
    bool appendix_a = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (defaults apply if omitted)");
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--seed", master_seed, "master seed (rekeys every stream)");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate dataset.csv and target.json");
    CLI::App* train = app.add_subcommand("train", "train the target model on dataset.csv");
    CLI::App* sweep = app.add_subcommand("sweep", "perturbation sweep; writes sweep.csv/.svg");
    CLI::App* verify = app.add_subcommand("verify", "run the identity and bound suites");
    add_common(gen);
    add_common(train);
    add_common(sweep);
    add_common(verify);
    verify->add_option("--only", only, "run a single suite by name");
    verify->add_option("--trials", trials, "override the per-suite trial count");
    verify->add_flag("--appendix-a", appendix_a, "run only the 1-d sign-flip example");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        xferlab::RunConfig cfg =
            config_path.empty() ? xferlab::RunConfig{} : xferlab::load_config(config_path);
        if (sub->count("--out") > 0) cfg.out_dir = out_dir;
        if (sub->count("--seed") > 0) xferlab::apply_master_seed(cfg, master_seed);

        if (sub == gen) return xferlab::cmd_gen(cfg);
        if (sub == train) return xferlab::cmd_train(cfg);
        if (sub == sweep) return xferlab::cmd_sweep(cfg);
        xferlab::VerifyOptions opts;
        opts.only = only;
        opts.trials = trials;
        opts.appendix_a = appendix_a;
        return xferlab::cmd_verify(cfg, opts);
    } catch (const xferlab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const xferlab::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
