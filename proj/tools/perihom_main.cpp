// Experiment runner for the perforated-domain homogenization laboratory.
//
// usage:
//   perihom <micro|macro|cell|korn|extend|unfold|compare> <config> [options]
//   perihom sweep <micro|macro|cell|unfold> <config> [options]
//   perihom report <manifest.json>

#include "perihom/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw perihom::ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string out_root_default() {
    const char* env = std::getenv("PERIHOM_OUT_ROOT");
    return env ? env : ".";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"perihom: incremental viscoelastic simulation and homogenization "
                 "diagnostics on periodically perforated grids"};
    app.require_subcommand(1);

    std::string config_path, out_root = out_root_default(), sweep_target, manifest_path;
    bool non_deterministic = false;

    std::vector<std::string> run_subs = {"micro", "macro", "cell", "korn",
                                         "extend", "unfold", "compare"};
    for (const auto& name : run_subs) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("config", config_path, "experiment config file")->required();
        sub->add_option("--out-root", out_root, "output root directory");
        sub->add_flag("--non-deterministic", non_deterministic,
                      "allow non-reproducible scheduling (recorded in the manifest)");
    }
    CLI::App* sweep = app.add_subcommand("sweep", "run a subcommand once per eps");
    sweep->add_option("target", sweep_target, "micro|macro|cell|unfold")->required();
    sweep->add_option("config", config_path, "experiment config file")->required();
    sweep->add_option("--out-root", out_root, "output root directory");
    sweep->add_flag("--non-deterministic", non_deterministic);

    CLI::App* report = app.add_subcommand("report", "summarize a run manifest");
    report->add_option("manifest", manifest_path, "path to manifest.json")->required();

    CLI11_PARSE(app, argc, argv);
    std::string sub = app.get_subcommands().front()->get_name();

    if (sub == "report") return perihom::report_manifest(manifest_path);

    perihom::ExperimentConfig cfg;
    try {
        cfg = perihom::ExperimentConfig::parse(read_file(config_path));
        if (non_deterministic) cfg.deterministic = false;
    } catch (const perihom::Error& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    }

    if (sub == "sweep") {
        if (std::find(run_subs.begin(), run_subs.end(), sweep_target) == run_subs.end() ||
            sweep_target == "korn" || sweep_target == "extend" || sweep_target == "compare") {
            std::cerr << "config error: sweep target must be micro|macro|cell|unfold\n";
            return 2;
        }
        return perihom::run_sweep(sweep_target, cfg, out_root);
    }
    return perihom::run_subcommand(sub, cfg, out_root);
}
