// Command-line runner for the metastability experiments. Every subcommand
// reads one JSON config (all keys optional), runs a seeded experiment and
// writes a CSV table plus a manifest.json echoing the resolved settings into
// the output directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "isinglab/dynamics.hpp"
#include "isinglab/lab.hpp"

namespace fs = std::filesystem;
using namespace ilab;

namespace {

Json load_config(const std::string& path) {
    if (path.empty()) return Json();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config file " + path + " is not valid JSON: " + e.what());
    }
    return j;
}

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
}

void write_artifacts(const std::string& out_dir, const std::string& name, const ResultTable& table,
                     const Json& manifest) {
    fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text(dir / (name + ".csv"), table.to_csv());
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"metastability laboratory for the two-dimensional Ising model"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "JSON config file (all keys optional)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    auto* threads_opt = app.add_option("--threads", threads, "override the config thread count");

    auto* cmd_simulate =
        app.add_subcommand("simulate", "free trajectories with optional binary event logs");
    auto* cmd_exp_law =
        app.add_subcommand("exp-law", "exit-time batch with exponential-law verdict");
    auto* cmd_plateau =
        app.add_subcommand("plateau", "window averages against the restricted reference");
    auto* cmd_hysteresis =
        app.add_subcommand("hysteresis", "return/nucleate/exit race from a chosen start law");
    auto* cmd_capacity =
        app.add_subcommand("capacity", "gap, extinction rate and capacities on an exact surrogate");
    auto* cmd_geometry = app.add_subcommand("geometry-check", "droplet geometry self-checks");
    auto* cmd_constants =
        app.add_subcommand("estimate-constants", "surface tension and magnetization estimates");
    auto* cmd_congestion =
        app.add_subcommand("congestion-check", "exhaustive single-site congestion inequality");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = parse_experiment_config(load_config(config_path));
        if (seed_opt->count()) cfg.seed = seed;
        if (threads_opt->count()) {
            if (threads < 1) throw std::invalid_argument("--threads must be at least 1");
            cfg.threads = threads;
        }

        if (cmd_simulate->parsed()) {
            SimulateResult res = simulate_experiment(cfg);
            write_artifacts(out_dir, "simulate", res.table, res.manifest);
            fs::path dir(out_dir);
            for (const Trajectory& tr : res.logs) {
                std::ofstream os(dir / ("replica_" + std::to_string(tr.replica) + ".mgev1"),
                                 std::ios::binary);
                write_event_log(os, tr);
            }
            std::printf("simulate: %d replicas, %zu event logs written\n", cfg.replicas,
                        res.logs.size());
            return 0;
        }
        if (cmd_exp_law->parsed()) {
            ExpLawResult res = exp_law_experiment(cfg);
            write_artifacts(out_dir, "exp_law", res.table, res.manifest);
            std::printf("exp-law: mean %.6g, censored %d/%d, KS %.4f (p = %.4f)%s\n", res.mean,
                        res.censored, cfg.replicas, res.ks.statistic, res.ks.p_value,
                        res.inconclusive ? " [inconclusive]" : "");
            return res.inconclusive ? 1 : 0;
        }
        if (cmd_plateau->parsed()) {
            PlateauResult res = plateau_experiment(cfg);
            write_artifacts(out_dir, "plateau", res.table, res.manifest);
            std::printf("plateau: theta %.6g, ref %.6g +- %.3g, within band %.1f%%, censored %d/%d%s\n",
                        res.theta, res.ref_mean, res.ref_sigma, 100.0 * res.fraction_within,
                        res.censored, cfg.replicas, res.inconclusive ? " [inconclusive]" : "");
            return res.inconclusive ? 1 : 0;
        }
        if (cmd_hysteresis->parsed()) {
            HysteresisResult res = hysteresis_experiment(cfg);
            write_artifacts(out_dir, "hysteresis", res.table, res.manifest);
            std::printf("hysteresis: return %d, nucleate %d, exit %d, censored %d\n", res.n_return,
                        res.n_nucleate, res.n_exit, res.n_censored);
            return 0;
        }
        if (cmd_capacity->parsed()) {
            CapacityReport res = capacity_gap_report(cfg);
            write_artifacts(out_dir, "capacity", res.table, res.manifest);
            for (size_t i = 0; i < res.betas.size(); ++i)
                std::printf("capacity: beta %.3f  phi/gap %.4f  phi*mu(R)/C %.4f\n", res.betas[i],
                            res.phi_over_gap[i], res.phi_muR_over_C[i]);
            return 0;
        }
        if (cmd_geometry->parsed()) {
            double tau0 = cfg.tau0 > 0 ? cfg.tau0 : 1.0;
            CheckReport res = geometry_check(tau0, cfg.wulff_dirs, 20, cfg.seed);
            write_artifacts(out_dir, "geometry_check", res.table, res.manifest);
            std::printf("geometry-check: %s\n", res.all_pass ? "all pass" : "FAILED");
            return res.all_pass ? 0 : 1;
        }
        if (cmd_constants->parsed()) {
            std::vector<int> ls = cfg.L_values.empty() ? std::vector<int>{1, 2, 3, 4} : cfg.L_values;
            ResultTable tau = estimate_tau0(cfg.beta, ls);
            MstarEstimate ms = estimate_mstar(cfg.beta, cfg.mstar_size, 20, cfg.seed);
            Json manifest;
            manifest["schema"] = "isinglab-manifest/1";
            manifest["experiment"] = "estimate_constants";
            manifest["config"] = experiment_config_json(cfg);
            manifest["results"] = {{"tau_hat_largest", tau.rows.back()[1]},
                                   {"m_star", ms.value},
                                   {"m_star_std_error", ms.std_error},
                                   {"m_star_exact", ms.exact}};
            fs::path dir(out_dir);
            fs::create_directories(dir);
            write_text(dir / "tau0.csv", tau.to_csv());
            ResultTable mt;
            mt.columns = {"L", "m_star", "std_error", "exact"};
            mt.add_row({static_cast<double>(cfg.mstar_size), ms.value, ms.std_error,
                        ms.exact ? 1.0 : 0.0});
            write_text(dir / "mstar.csv", mt.to_csv());
            write_text(dir / "manifest.json", manifest.dump(2) + "\n");
            std::printf("estimate-constants: tau_hat(L=%d) = %.6f, m_star(%dx%d) = %.6f\n",
                        ls.back(), tau.rows.back()[1], cfg.mstar_size, cfg.mstar_size, ms.value);
            return 0;
        }
        if (cmd_congestion->parsed()) {
            ModelParams p;
            p.beta = cfg.beta;
            p.h = cfg.h;
            // exhaustive over all configurations, so the block must stay tiny;
            // fall back to 2x3 when the config does not pick a size
            Json raw = load_config(config_path);
            int w = raw.contains("width") ? cfg.width : 2;
            int ht = raw.contains("height") ? cfg.height : 3;
            CheckReport res = congestion_check(w, ht, p);
            write_artifacts(out_dir, "congestion_check", res.table, res.manifest);
            std::printf("congestion-check: %s (worst ratio %.6g)\n",
                        res.all_pass ? "all pass" : "FAILED",
                        res.manifest["worst_ratio"].get<double>());
            return res.all_pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
