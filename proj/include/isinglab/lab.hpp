#pragma once
// Experiment layer: resolved configurations, seeded replica batches and their
// artifacts (CSV tables, JSON manifests). Every experiment is a pure function
// of its resolved config: rerunning with the same config and seed reproduces
// the outputs byte for byte, independent of the thread count.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isinglab/chain.hpp"
#include "isinglab/dynamics.hpp"
#include "isinglab/geometry.hpp"
#include "isinglab/model.hpp"
#include "isinglab/stats.hpp"

namespace ilab {

using Json = nlohmann::json;

// Rectangular numeric table. Serialized as RFC 4180 CSV: header row, CRLF
// line endings, numbers printed with %.17g so reruns compare byte-identical.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row); // size must match columns
    std::string to_csv() const;
};

// Union of the experiment knobs. Parsing fills defaults; fields documented as
// "0 = resolved" are replaced by measured or derived values during
// preparation, and the manifests echo the resolved config.
struct ExperimentConfig {
    // model
    double beta = 1.0;
    double h = 0.0; // 0 with auto_tune_h = resolved by the field tuner
    std::string rate_family = "metropolis"; // or "heat_bath"
    double b_exp = 0.24;
    double r_exp = 0.1;
    double B_plus = 0.0; // 0 = resolved to 0.9 * B_c
    // lattice
    int width = 16;
    int height = 16;
    std::string boundary = "minus"; // or "plus"
    // droplet geometry; both scales default to measurements at this beta so
    // the regions track the actual interface physics
    double tau0 = 0.0;   // 0 = transfer-matrix estimate at L = 8
    double m_star = 0.0; // 0 = exact estimate on a small block
    int wulff_dirs = 512;
    // batch
    int replicas = 300;
    double horizon = 0.0; // 0 = 50x the probed mean exit time
    double lambda = 0.0;  // 0 = resolved from the autocorrelation rule
    std::uint64_t seed = 1;
    int threads = 1;
    // field tuner and reference measurements
    bool auto_tune_h = true;
    double target_mean_low = 1e3;
    double target_mean_high = 1e4;
    int probe_replicas = 24;
    double probe_horizon = 0.0; // 0 = 4x target_mean_high; censored probes read as too slow
    double burn_in_factor = 20.0; // units of the autocorrelation time
    // plateau
    double theta = 0.0; // 0 = probed mean exit / 100
    std::string observable = "magnetization_density";
    double band_sigmas = 3.0;
    // hysteresis
    std::string start = "restricted"; // restricted | all_minus | capped | droplet
    double start_field_factor = 1.0;  // restricted start equilibrated at h' = factor * h
    double start_plus_cap = 0.5;      // capped start: plus sites <= cap * (B_c/h)^2
    int droplet_side = 0;             // 0 = ceil(2 B_c / h) + 2
    double kappa = 1.0;               // return clock rate on R
    double exit_density = 0.5;        // leaves the window when m(sigma)/N reaches this
    // capacity report
    std::vector<double> beta_grid;   // default {0.8, 1.0, 1.2}
    std::vector<double> kappa_grid;  // default {1, inf}
    std::vector<double> lambda_grid; // default {1, inf}
    int surrogate_size = 3;
    // constants
    std::vector<int> L_values; // default {1, 2, 3, 4}
    int mstar_size = 4;
    // simulate
    int log_trajectories = 0;
};

// Parses a config object, filling defaults and validating. Unknown keys and
// type mismatches throw std::invalid_argument naming the offending key. Rate
// grid entries accept the string "inf" for an absorbing clock.
ExperimentConfig parse_experiment_config(const Json& j);
Json experiment_config_json(const ExperimentConfig& c);

// Deterministic seed separation between experiment phases (tuning probes,
// reference runs, main batches) so no phase shares a stream with another.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

// ---- exact estimators ----

// Interface free energy per unit length at angle zero from the split/plus
// log-partition difference on a (2L+1)^2 block. Columns: L, tau_hat. beta = 0
// gives exactly 0. Enumerate mode is capped at `cap` sites.
ResultTable estimate_tau0(double beta, const std::vector<int>& L_values,
                          ZMethod method = ZMethod::TransferMatrix, int cap = 20);

struct MstarEstimate {
    double value = 0;
    double std_error = 0; // 0 in exact mode
    bool exact = true;
    long long samples = 0;
};

// Spontaneous magnetization proxy: minus the mean center spin on an L x L
// block with minus boundary at h = 0. Exact enumeration up to `cap` sites,
// otherwise a seeded Glauber time average over `mc_time` units.
MstarEstimate estimate_mstar(double beta, int L, int cap = 20, std::uint64_t seed = 1,
                             double mc_time = 5000.0);

// ---- prepared metastable instance ----

// A fully resolved dynamics instance: tuned field, droplet regions, measured
// autocorrelation time, burn-in length and killing rate. Shared by the
// exponential-law, plateau and hysteresis experiments so they can run on the
// same tuned parameters.
struct MetastableInstance {
    DomainPtr domain;
    BoundaryCondition bc = BoundaryCondition::minus();
    ModelParams params;
    WulffBasisPtr basis;
    FreeEnergyScalars scalars;
    RegionPredicate restricted; // R: reference region for starts and clocks
    RegionPredicate nucleated;  // S: kill region
    double m_star = 0;
    double autocorr_time = 0;
    double burn_in = 0;
    double probe_mean = 0; // mean exit estimate at the tuned field
    double lambda = 0;
    std::uint64_t seed = 0;
    Json log; // tuning trace, echoed into manifests

    // Restricted-ensemble start: burn-in of the R-restricted dynamics from
    // all minus, consuming only the caller-provided (per replica) stream.
    std::function<SpinConfig(Rng&)> start_sampler() const;
};

MetastableInstance prepare_instance(const ExperimentConfig& c);

// Named observable on the running simulator state. Knows
// "magnetization_density", "droplet_volume" and "indicator_R"/"indicator_S".
std::function<double(const Simulator&)> make_observable(const std::string& name,
                                                        const MetastableInstance& inst);

// ---- experiments ----

struct ExpLawResult {
    ResultTable table; // replica, exit_time, censored
    Json manifest;
    double mean = 0;
    KsResult ks;
    int censored = 0;
    bool inconclusive = false; // more than 10% censored
};
ExpLawResult exp_law_experiment(const ExperimentConfig& c);
ExpLawResult exp_law_experiment(const ExperimentConfig& c, const MetastableInstance& inst);

// Exact sup over window starts t in [0, t_end - theta] of the deviation
// |A(t) - ref| of the length-theta running average of a piecewise constant
// path (value fs[i] on [ts[i], ts[i+1]), ts[0] = 0, last piece ends at
// t_end). The average is piecewise linear in t, so the sup is attained where
// a window edge crosses a breakpoint.
double sup_window_deviation(const std::vector<double>& ts, const std::vector<double>& fs,
                            double t_end, double theta, double ref);

struct PlateauResult {
    ResultTable table; // replica, exit_time, censored, window_ok, sup_dev, pass
    Json manifest;
    double theta = 0;
    double ref_mean = 0;
    double ref_sigma = 0;
    double fraction_within = 0; // passing fraction of the uncensored replicas
    int censored = 0;
    bool inconclusive = false;
};
PlateauResult plateau_experiment(const ExperimentConfig& c);
PlateauResult plateau_experiment(const ExperimentConfig& c, const MetastableInstance& inst);

struct HysteresisResult {
    ResultTable table; // replica, time, winner (0 return, 1 nucleate, 2 exit, 3 censored)
    Json manifest;
    int n_return = 0;
    int n_nucleate = 0;
    int n_exit = 0;
    int n_censored = 0;
};
HysteresisResult hysteresis_experiment(const ExperimentConfig& c);
HysteresisResult hysteresis_experiment(const ExperimentConfig& c, const MetastableInstance& inst);

// Exact surrogate coherence report: spectral gap, extinction rate and soft
// capacities of the enumerated chain on a small block, over the beta grid and
// the (kappa, lambda) grid. The headline vectors hold, per beta, the ratios
// at the absorbing pins.
struct CapacityReport {
    ResultTable table; // beta, kappa, lambda, gap, phi_abs, phi_lambda, capacity, mu_R, ...
    Json manifest;
    std::vector<double> betas;
    std::vector<double> phi_over_gap;
    std::vector<double> phi_muR_over_C;
};
CapacityReport capacity_gap_report(const ExperimentConfig& c);

struct SimulateResult {
    ResultTable table; // replica, events, final_magnetization
    Json manifest;
    std::vector<Trajectory> logs; // first log_trajectories replicas
};
SimulateResult simulate_experiment(const ExperimentConfig& c);

// Geometry self-checks (scalar identities, shape energy identity, Blaschke
// bounds, merge containment, annulus erosion cross-check, tangent shift).
// Columns: check, cases, worst, pass.
struct CheckReport {
    ResultTable table;
    Json manifest;
    bool all_pass = true;
};
CheckReport geometry_check(double tau0, int n_dirs, int samples, std::uint64_t seed);

// Exhaustive single-site congestion inequality over all (sigma0, x) on a
// small block in row-major flip order. Columns: sigma0, x, lhs, rhs, pass.
CheckReport congestion_check(int width, int height, const ModelParams& p);

} // namespace ilab
