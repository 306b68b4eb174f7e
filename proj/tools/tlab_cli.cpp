#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tlab/tlab.h"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> mesh_h;
    std::optional<std::string> out;
    std::optional<double> safety;
    std::vector<std::string> ledgers;
};

int fail(tlab_status s) {
    std::fprintf(stderr, "error: %s\n", tlab_last_error());
    return tlab_exit_code(s);
}

int run(const std::string& command, const Options& o) {
    tlab_config* cfg = nullptr;
    tlab_status s = o.config.empty() ? tlab_config_parse("{\"version\": 1}", "", &cfg)
                                     : tlab_config_load(o.config.c_str(), &cfg);
    if (s != TLAB_OK) return fail(s);
    s = tlab_config_set_command(cfg, command.c_str());
    if (s == TLAB_OK && o.seed) s = tlab_config_set_seed(cfg, *o.seed);
    if (s == TLAB_OK && o.mesh_h) s = tlab_config_set_mesh_h(cfg, *o.mesh_h);
    if (s == TLAB_OK && o.out) s = tlab_config_set_out_dir(cfg, o.out->c_str());
    if (s == TLAB_OK && o.safety) s = tlab_config_set_safety(cfg, *o.safety);
    for (const auto& l : o.ledgers)
        if (s == TLAB_OK) s = tlab_config_add_ledger(cfg, l.c_str());
    if (s != TLAB_OK) {
        tlab_config_free(cfg);
        return fail(s);
    }

    tlab_result* res = nullptr;
    s = tlab_run(cfg, &res);
    tlab_config_free(cfg);
    if (res) {
        std::fputs(tlab_result_summary(res), stdout);
        for (std::size_t i = 0; i < tlab_result_failing_count(res); ++i)
            std::fprintf(stderr, "failed: %s\n", tlab_result_failing_id(res, i));
        tlab_result_free(res);
    }
    if (s != TLAB_OK && s != TLAB_CHECK_FAILED) return fail(s);
    return tlab_exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transmission-problem laboratory: solve, verify and size-estimate experiments."};
    app.set_version_flag("--version", tlab_version());
    app.require_subcommand(1);

    Options o;
    const std::vector<std::pair<const char*, const char*>> commands = {
        {"solve", "solve one scenario and write solution, gradient and mesh files"},
        {"verify-three-region", "three-region inequality on a layered ensemble"},
        {"verify-three-sphere", "three-sphere inequality inside one subdomain"},
        {"verify-carleman", "Carleman ratio curves for the analytic test pairs"},
        {"propagate", "empirical propagation-of-smallness constant"},
        {"size-estimate", "inclusion size bounds from one power measurement"},
        {"calibrate", "calibrate size-bound constants on an inclusion family"},
        {"report", "aggregate JSON-lines ledgers into a table"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "seed for all randomness");
        sub->add_option("--mesh-h", o.mesh_h, "target mesh size");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--safety", o.safety, "calibration safety factor");
        if (std::string(name) == "report") sub->add_option("ledgers", o.ledgers, "JSON-lines report files");
        else sub->get_option("--config")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    for (CLI::App* sub : app.get_subcommands()) return run(sub->get_name(), o);
    return 2;
}
