// Experiment runner: weakboost {converge|variance|pde} --config file.toml [overrides]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "weakboost/experiments.hpp"

namespace fs = std::filesystem;
using namespace wb;

namespace {

struct Overrides {
    std::string config;
    std::string out = ".";
    uint64_t seed = 0;
    uint64_t samples = 0;
    double epsilon = 0.0;
    int workers = 0;
    bool quiet = false;
};

ExperimentConfig load(const Overrides& o, const std::string& command, CLI::App& sub) {
    ExperimentConfig cfg = load_config(o.config);
    cfg.command = command;
    if (sub.count("--seed")) cfg.seed = o.seed;
    if (sub.count("--samples")) {
        cfg.samples = o.samples;
        cfg.epsilon = 0.0;
    }
    if (sub.count("--epsilon")) {
        cfg.epsilon = o.epsilon;
        cfg.samples = 0;
    }
    if (sub.count("--workers")) cfg.workers = o.workers;
    return cfg;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "TOML experiment file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the RNG seed");
    sub->add_option("--samples", o.samples, "fixed sample count per estimate (overrides epsilon)");
    sub->add_option("--epsilon", o.epsilon, "target 95% half-width (overrides samples)");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_flag("--quiet", o.quiet, "no progress output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-grid boosted Monte Carlo experiments for CIR, Heston and multifactor Heston"};
    app.require_subcommand(1);
    Overrides o;
    auto* conv = app.add_subcommand("converge", "weak-error convergence study");
    auto* var = app.add_subcommand("variance", "correction-term variance V(n)");
    auto* pde = app.add_subcommand("pde", "hybrid tree/finite-difference put pricer");
    for (auto* s : {conv, var, pde}) add_common(s, o);
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(o.out);
        if (conv->parsed()) {
            ExperimentConfig cfg = load(o, "converge", *conv);
            ConvergeOutput out = cmd_converge(cfg);
            for (const auto& lvl : out.levels) {
                std::ostringstream csv;
                write_converge_csv(csv, lvl);
                write_file(fs::path(o.out) / (cfg.name + "_nu" + std::to_string(lvl.level) + ".csv"), csv.str());
                if (!o.quiet) {
                    std::printf("nu=%d\n", lvl.level);
                    for (size_t k = 0; k < lvl.points.size(); ++k) {
                        const auto& p = lvl.points[k];
                        std::printf("  n=%-3d estimate=%.8f hw=%.2e M1=%llu M2=%llu %.1fs%s\n", p.n, p.estimate.value,
                                    p.estimate.half_width_95, static_cast<unsigned long long>(p.m1),
                                    static_cast<unsigned long long>(p.m2), p.seconds, p.capped ? " (capped)" : "");
                    }
                    if (lvl.slope) std::printf("  slope=%.3f\n", lvl.slope->slope);
                }
            }
            write_file(fs::path(o.out) / (cfg.name + "_summary.json"), converge_summary_json(cfg, out) + "\n");
        } else if (var->parsed()) {
            ExperimentConfig cfg = load(o, "variance", *var);
            auto rows = cmd_variance(cfg);
            std::ostringstream csv;
            write_variance_csv(csv, rows);
            write_file(fs::path(o.out) / (cfg.name + ".csv"), csv.str());
            write_file(fs::path(o.out) / (cfg.name + "_summary.json"), variance_summary_json(cfg, rows) + "\n");
            if (!o.quiet) std::cout << csv.str();
        } else if (pde->parsed()) {
            ExperimentConfig cfg = load(o, "pde", *pde);
            PdeOutput out = cmd_pde(cfg);
            std::ostringstream csv;
            write_pde_csv(csv, out, cfg);
            write_file(fs::path(o.out) / (cfg.name + ".csv"), csv.str());
            write_file(fs::path(o.out) / (cfg.name + "_summary.json"), pde_summary_json(cfg, out) + "\n");
            if (!o.quiet) {
                std::printf("price=%.8f", out.price);
                if (out.reference) std::printf(" fourier=%.8f rel=%.2e", *out.reference, out.price / *out.reference - 1);
                std::printf(" (%.1fs)\n", out.seconds);
            }
        }
    } catch (const RegimeError& e) {
        std::fprintf(stderr, "regime error: %s\n", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid argument: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
