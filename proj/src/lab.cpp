#include "isinglab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "isinglab/paths.hpp"
#include "isinglab/potential.hpp"

namespace ilab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

// phase tags for derive_seed, so tuning probes, reference runs and replica
// batches never share a stream
enum : std::uint64_t {
    kTagProbe = 1,
    kTagAutocorr = 2,
    kTagExpLaw = 3,
    kTagPlateauRef = 4,
    kTagPlateau = 5,
    kTagHysteresis = 6,
    kTagSimulate = 7,
};

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        out += ch;
        if (ch == '"') out += '"';
    }
    out += '"';
    return out;
}

void run_parallel(int threads, const std::function<void()>& worker) {
    int k = std::max(1, threads);
    if (k == 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace

void ResultTable::add_row(std::vector<double> row) {
    if (row.size() != columns.size())
        throw std::invalid_argument("ResultTable: row width does not match the columns");
    rows.push_back(std::move(row));
}

std::string ResultTable::to_csv() const {
    std::string out;
    for (size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += csv_field(columns[i]);
    }
    out += "\r\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += "\r\n";
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    // splitmix64 over the combined word
    std::uint64_t z = base ^ (tag * 0x9E3779B97F4A7C15ull);
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// ---- config ----

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
    throw std::invalid_argument("config: key '" + key + "' " + what);
}

double num_field(const Json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    const Json& v = j.at(key);
    if (!v.is_number()) config_error(key, "must be a number");
    return v.get<double>();
}

int int_field(const Json& j, const char* key, int dflt) {
    if (!j.contains(key)) return dflt;
    const Json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) config_error(key, "must be an integer");
    return v.get<int>();
}

std::uint64_t u64_field(const Json& j, const char* key, std::uint64_t dflt) {
    if (!j.contains(key)) return dflt;
    const Json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) config_error(key, "must be an integer");
    if (v.is_number_integer() && v.get<long long>() < 0) config_error(key, "must be nonnegative");
    return v.get<std::uint64_t>();
}

bool bool_field(const Json& j, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    const Json& v = j.at(key);
    if (!v.is_boolean()) config_error(key, "must be a boolean");
    return v.get<bool>();
}

std::string str_field(const Json& j, const char* key, const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    const Json& v = j.at(key);
    if (!v.is_string()) config_error(key, "must be a string");
    return v.get<std::string>();
}

// rate grids accept "inf" for an absorbing clock
std::vector<double> rate_grid_field(const Json& j, const char* key, std::vector<double> dflt) {
    if (!j.contains(key)) return dflt;
    const Json& v = j.at(key);
    if (!v.is_array()) config_error(key, "must be an array");
    std::vector<double> out;
    for (const Json& e : v) {
        if (e.is_string()) {
            if (e.get<std::string>() != "inf") config_error(key, "entries must be numbers or \"inf\"");
            out.push_back(kInf);
        } else if (e.is_number()) {
            out.push_back(e.get<double>());
        } else {
            config_error(key, "entries must be numbers or \"inf\"");
        }
        if (!(out.back() > 0)) config_error(key, "entries must be positive");
    }
    if (out.empty()) config_error(key, "must not be empty");
    return out;
}

Json rate_grid_json(const std::vector<double>& g) {
    Json a = Json::array();
    for (double v : g) {
        if (std::isinf(v))
            a.push_back("inf");
        else
            a.push_back(v);
    }
    return a;
}

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "beta", "h", "rate_family", "b_exp", "r_exp", "B_plus",
        "width", "height", "boundary",
        "tau0", "m_star", "wulff_dirs",
        "replicas", "horizon", "lambda", "seed", "threads",
        "auto_tune_h", "target_mean_low", "target_mean_high",
        "probe_replicas", "probe_horizon", "burn_in_factor",
        "theta", "observable", "band_sigmas",
        "start", "start_field_factor", "start_plus_cap", "droplet_side",
        "kappa", "exit_density",
        "beta_grid", "kappa_grid", "lambda_grid", "surrogate_size",
        "L_values", "mstar_size",
        "log_trajectories",
    };
    return keys;
}

RateFamily family_from(const std::string& name) {
    if (name == "metropolis") return RateFamily::Metropolis;
    if (name == "heat_bath") return RateFamily::HeatBath;
    config_error("rate_family", "must be \"metropolis\" or \"heat_bath\"");
}

BoundaryCondition boundary_from(const std::string& name) {
    if (name == "minus") return BoundaryCondition::minus();
    if (name == "plus") return BoundaryCondition::plus();
    config_error("boundary", "must be \"minus\" or \"plus\"");
}

} // namespace

ExperimentConfig parse_experiment_config(const Json& j) {
    if (!j.is_null() && !j.is_object())
        throw std::invalid_argument("config: expected a JSON object");
    ExperimentConfig c;
    if (j.is_null()) return c;

    const auto& known = known_config_keys();
    for (const auto& item : j.items())
        if (std::find(known.begin(), known.end(), item.key()) == known.end())
            config_error(item.key(), "is not a recognized setting");

    c.beta = num_field(j, "beta", c.beta);
    c.h = num_field(j, "h", c.h);
    c.rate_family = str_field(j, "rate_family", c.rate_family);
    c.b_exp = num_field(j, "b_exp", c.b_exp);
    c.r_exp = num_field(j, "r_exp", c.r_exp);
    c.B_plus = num_field(j, "B_plus", c.B_plus);
    c.width = int_field(j, "width", c.width);
    c.height = int_field(j, "height", c.height);
    c.boundary = str_field(j, "boundary", c.boundary);
    c.tau0 = num_field(j, "tau0", c.tau0);
    c.m_star = num_field(j, "m_star", c.m_star);
    c.wulff_dirs = int_field(j, "wulff_dirs", c.wulff_dirs);
    c.replicas = int_field(j, "replicas", c.replicas);
    c.horizon = num_field(j, "horizon", c.horizon);
    c.lambda = num_field(j, "lambda", c.lambda);
    c.seed = u64_field(j, "seed", c.seed);
    c.threads = int_field(j, "threads", c.threads);
    c.auto_tune_h = bool_field(j, "auto_tune_h", c.auto_tune_h);
    c.target_mean_low = num_field(j, "target_mean_low", c.target_mean_low);
    c.target_mean_high = num_field(j, "target_mean_high", c.target_mean_high);
    c.probe_replicas = int_field(j, "probe_replicas", c.probe_replicas);
    c.probe_horizon = num_field(j, "probe_horizon", c.probe_horizon);
    c.burn_in_factor = num_field(j, "burn_in_factor", c.burn_in_factor);
    c.theta = num_field(j, "theta", c.theta);
    c.observable = str_field(j, "observable", c.observable);
    c.band_sigmas = num_field(j, "band_sigmas", c.band_sigmas);
    c.start = str_field(j, "start", c.start);
    c.start_field_factor = num_field(j, "start_field_factor", c.start_field_factor);
    c.start_plus_cap = num_field(j, "start_plus_cap", c.start_plus_cap);
    c.droplet_side = int_field(j, "droplet_side", c.droplet_side);
    c.kappa = num_field(j, "kappa", c.kappa);
    c.exit_density = num_field(j, "exit_density", c.exit_density);
    c.beta_grid = rate_grid_field(j, "beta_grid", c.beta_grid);
    c.kappa_grid = rate_grid_field(j, "kappa_grid", c.kappa_grid);
    c.lambda_grid = rate_grid_field(j, "lambda_grid", c.lambda_grid);
    c.surrogate_size = int_field(j, "surrogate_size", c.surrogate_size);
    if (j.contains("L_values")) {
        const Json& v = j.at("L_values");
        if (!v.is_array()) config_error("L_values", "must be an array");
        c.L_values.clear();
        for (const Json& e : v) {
            if (!e.is_number_integer() && !e.is_number_unsigned())
                config_error("L_values", "entries must be integers");
            c.L_values.push_back(e.get<int>());
        }
    }
    c.mstar_size = int_field(j, "mstar_size", c.mstar_size);
    c.log_trajectories = int_field(j, "log_trajectories", c.log_trajectories);

    if (!(c.beta >= 0)) config_error("beta", "must be nonnegative");
    if (!(c.h >= 0)) config_error("h", "must be nonnegative");
    family_from(c.rate_family);
    boundary_from(c.boundary);
    if (!(c.b_exp > 0)) config_error("b_exp", "must be positive");
    if (!(c.r_exp > 0)) config_error("r_exp", "must be positive");
    if (!(c.B_plus >= 0)) config_error("B_plus", "must be nonnegative");
    if (c.width < 1) config_error("width", "must be at least 1");
    if (c.height < 1) config_error("height", "must be at least 1");
    if (!(c.tau0 >= 0)) config_error("tau0", "must be nonnegative");
    if (!(c.m_star >= 0)) config_error("m_star", "must be nonnegative");
    if (c.wulff_dirs < 16) config_error("wulff_dirs", "must be at least 16");
    if (c.replicas < 1) config_error("replicas", "must be at least 1");
    if (!(c.horizon >= 0)) config_error("horizon", "must be nonnegative");
    if (!(c.lambda >= 0)) config_error("lambda", "must be nonnegative");
    if (c.threads < 1) config_error("threads", "must be at least 1");
    if (!(c.target_mean_low > 0) || !(c.target_mean_high > c.target_mean_low))
        config_error("target_mean_low", "must satisfy 0 < low < high");
    if (c.probe_replicas < 2) config_error("probe_replicas", "must be at least 2");
    if (!(c.probe_horizon >= 0)) config_error("probe_horizon", "must be nonnegative");
    if (!(c.burn_in_factor >= 0)) config_error("burn_in_factor", "must be nonnegative");
    if (!(c.theta >= 0)) config_error("theta", "must be nonnegative");
    if (!(c.band_sigmas > 0)) config_error("band_sigmas", "must be positive");
    if (c.start != "restricted" && c.start != "all_minus" && c.start != "capped" &&
        c.start != "droplet")
        config_error("start", "must be restricted, all_minus, capped or droplet");
    if (!(c.start_field_factor > 0)) config_error("start_field_factor", "must be positive");
    if (!(c.start_plus_cap > 0)) config_error("start_plus_cap", "must be positive");
    if (c.droplet_side < 0) config_error("droplet_side", "must be nonnegative");
    if (!(c.kappa > 0)) config_error("kappa", "must be positive");
    if (!(c.exit_density > -1) || !(c.exit_density <= 1))
        config_error("exit_density", "must lie in (-1, 1]");
    if (c.surrogate_size < 2) config_error("surrogate_size", "must be at least 2");
    for (int L : c.L_values)
        if (L < 0) config_error("L_values", "entries must be nonnegative");
    if (c.mstar_size < 1) config_error("mstar_size", "must be at least 1");
    if (c.log_trajectories < 0) config_error("log_trajectories", "must be nonnegative");
    return c;
}

Json experiment_config_json(const ExperimentConfig& c) {
    Json j;
    j["beta"] = c.beta;
    j["h"] = c.h;
    j["rate_family"] = c.rate_family;
    j["b_exp"] = c.b_exp;
    j["r_exp"] = c.r_exp;
    j["B_plus"] = c.B_plus;
    j["width"] = c.width;
    j["height"] = c.height;
    j["boundary"] = c.boundary;
    j["tau0"] = c.tau0;
    j["m_star"] = c.m_star;
    j["wulff_dirs"] = c.wulff_dirs;
    j["replicas"] = c.replicas;
    j["horizon"] = c.horizon;
    j["lambda"] = c.lambda;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["auto_tune_h"] = c.auto_tune_h;
    j["target_mean_low"] = c.target_mean_low;
    j["target_mean_high"] = c.target_mean_high;
    j["probe_replicas"] = c.probe_replicas;
    j["probe_horizon"] = c.probe_horizon;
    j["burn_in_factor"] = c.burn_in_factor;
    j["theta"] = c.theta;
    j["observable"] = c.observable;
    j["band_sigmas"] = c.band_sigmas;
    j["start"] = c.start;
    j["start_field_factor"] = c.start_field_factor;
    j["start_plus_cap"] = c.start_plus_cap;
    j["droplet_side"] = c.droplet_side;
    j["kappa"] = c.kappa;
    j["exit_density"] = c.exit_density;
    j["beta_grid"] = rate_grid_json(c.beta_grid);
    j["kappa_grid"] = rate_grid_json(c.kappa_grid);
    j["lambda_grid"] = rate_grid_json(c.lambda_grid);
    j["surrogate_size"] = c.surrogate_size;
    j["L_values"] = c.L_values;
    j["mstar_size"] = c.mstar_size;
    j["log_trajectories"] = c.log_trajectories;
    return j;
}

// ---- exact estimators ----

ResultTable estimate_tau0(double beta, const std::vector<int>& L_values, ZMethod method, int cap) {
    if (!(beta >= 0)) throw std::invalid_argument("estimate_tau0: beta must be nonnegative");
    if (L_values.empty()) throw std::invalid_argument("estimate_tau0: no block sizes given");
    ResultTable t;
    t.columns = {"L", "tau_hat"};
    for (int L : L_values) {
        if (L < 0) throw std::invalid_argument("estimate_tau0: L must be nonnegative");
        int side = 2 * L + 1;
        if (method == ZMethod::TransferMatrix && side > 22)
            throw std::length_error("estimate_tau0: block too wide for the transfer matrix");
        double tau = 0.0;
        if (beta > 0) {
            Domain d = Domain::rectangle(side, side);
            ModelParams p;
            p.beta = beta;
            p.h = 0.0;
            double lz_split =
                log_partition_function(d, BoundaryCondition::split(0.0, d.center()), p, method, cap);
            double lz_plus = log_partition_function(d, BoundaryCondition::plus(), p, method, cap);
            tau = -(lz_split - lz_plus) / (beta * side);
        }
        t.add_row({static_cast<double>(L), tau});
    }
    return t;
}

namespace {

// piecewise-constant observable sampled on a fixed time grid; the simulator
// carries any restriction
std::vector<double> sample_path(Simulator& sim, Rng& rng, double burn, double span, double dt,
                                const std::function<double(const Simulator&)>& obs) {
    if (!(dt > 0) || !(span > 0)) throw std::invalid_argument("sample_path: need positive span and dt");
    double end = sim.time() + burn + span;
    double next = sim.time() + burn;
    std::vector<double> xs;
    xs.reserve(static_cast<size_t>(span / dt) + 2);
    double v = obs(sim);
    for (;;) {
        StepOutcome o = sim.step(rng, end);
        double t1 = sim.time();
        while (next < t1 && next < end) {
            xs.push_back(v);
            next += dt;
        }
        if (o == StepOutcome::Horizon) break;
        v = obs(sim);
    }
    return xs;
}

} // namespace

MstarEstimate estimate_mstar(double beta, int L, int cap, std::uint64_t seed, double mc_time) {
    if (L < 1) throw std::invalid_argument("estimate_mstar: L must be at least 1");
    if (!(beta >= 0)) throw std::invalid_argument("estimate_mstar: beta must be nonnegative");
    MstarEstimate out;
    if (beta == 0) {
        out.samples = 1;
        return out; // symmetric measure, zero mean spin
    }
    auto d = std::make_shared<Domain>(Domain::rectangle(L, L));
    BoundaryCondition bc = BoundaryCondition::minus();
    ModelParams p;
    p.beta = beta;
    p.h = 0.0;
    int n = d->size();
    int center = d->index_of({L / 2, L / 2});
    if (n <= cap) {
        // gray-code sweep with incremental energies
        NeighborTable table = build_neighbor_table(*d, bc);
        SpinConfig c = SpinConfig::uniform(d, -1);
        double H = hamiltonian(c, p, bc);
        const double href = H;
        double z = 0.0, num = 0.0;
        const std::uint64_t total = 1ull << n;
        for (std::uint64_t k = 0;;) {
            double w = std::exp(-beta * (H - href));
            z += w;
            num += w * c.at(center);
            if (++k == total) break;
            int site = std::countr_zero(k);
            H += delta_energy(c, table, p, site);
            c.flip(site);
        }
        out.value = -num / z;
        out.std_error = 0.0;
        out.exact = true;
        out.samples = static_cast<long long>(total);
        return out;
    }
    // seeded Glauber time average with batch-means error bars
    if (!(mc_time > 0)) throw std::invalid_argument("estimate_mstar: mc_time must be positive");
    Rng rng = Rng::for_replica(seed, 0, Rng::kDynamics);
    Simulator sim(SpinConfig::uniform(d, -1), bc, p);
    double dt = mc_time / 20000.0;
    std::vector<double> xs = sample_path(
        sim, rng, std::max(100.0, 0.05 * mc_time), mc_time, dt,
        [center](const Simulator& s) { return static_cast<double>(s.state().at(center)); });
    const int batches = 20;
    size_t per = xs.size() / batches;
    if (per == 0) throw std::invalid_argument("estimate_mstar: mc_time too short");
    std::vector<double> means(batches);
    for (int b = 0; b < batches; ++b) {
        double acc = 0;
        for (size_t i = 0; i < per; ++i) acc += xs[static_cast<size_t>(b) * per + i];
        means[static_cast<size_t>(b)] = acc / static_cast<double>(per);
    }
    Summary s = summarize(means);
    out.value = -s.mean;
    out.std_error = s.sd / std::sqrt(static_cast<double>(batches));
    out.exact = false;
    out.samples = static_cast<long long>(xs.size());
    return out;
}

// ---- prepared instance ----

namespace {

struct ProbeStats {
    double mean = 0; // censored samples enter at the horizon
    int censored = 0;
    int n = 0;
};

// mean hitting time of `target` from all minus, unrestricted dynamics
ProbeStats probe_mean_exit(const DomainPtr& d, const BoundaryCondition& bc, const ModelParams& p,
                           const RegionPredicate& target, int n, double horizon,
                           std::uint64_t seed, int threads) {
    std::vector<double> times(static_cast<size_t>(n));
    std::vector<std::uint8_t> cen(static_cast<size_t>(n));
    std::atomic<int> next{0};
    run_parallel(threads, [&] {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= n) return;
            Rng rng = Rng::for_replica(seed, static_cast<std::uint64_t>(r), Rng::kDynamics);
            Simulator sim(SpinConfig::uniform(d, -1), bc, p);
            double T = horizon;
            bool censored = true;
            while (sim.time() < horizon) {
                StepOutcome o = sim.step(rng, horizon);
                if (o == StepOutcome::Horizon) break;
                if (o == StepOutcome::Flip && region_test(target, sim.hot())) {
                    T = sim.time();
                    censored = false;
                    break;
                }
            }
            times[static_cast<size_t>(r)] = T;
            cen[static_cast<size_t>(r)] = censored;
        }
    });
    ProbeStats st;
    st.n = n;
    for (int r = 0; r < n; ++r) {
        st.mean += times[static_cast<size_t>(r)];
        st.censored += cen[static_cast<size_t>(r)];
    }
    st.mean /= static_cast<double>(n);
    return st;
}

double measure_autocorr(const DomainPtr& d, const BoundaryCondition& bc, const ModelParams& p,
                        const RegionPredicate& R, std::uint64_t seed) {
    const double burn = 200.0, span = 2000.0, dt = 0.25;
    Rng rng = Rng::for_replica(seed, 0, Rng::kDynamics);
    Simulator sim(SpinConfig::uniform(d, -1), bc, p, &R);
    std::vector<double> xs = sample_path(sim, rng, burn, span, dt, [](const Simulator& s) {
        return s.hot().magnetization_density();
    });
    return integrated_autocorrelation(xs) * dt;
}

} // namespace

std::function<SpinConfig(Rng&)> MetastableInstance::start_sampler() const {
    DomainPtr d = domain;
    BoundaryCondition b = bc;
    ModelParams p = params;
    RegionPredicate R = restricted;
    double burn = burn_in;
    return [d, b, p, R, burn](Rng& rng) {
        Simulator sim(SpinConfig::uniform(d, -1), b, p, &R);
        while (sim.time() < burn)
            if (sim.step(rng, burn) == StepOutcome::Horizon) break;
        return sim.state();
    };
}

MetastableInstance prepare_instance(const ExperimentConfig& c) {
    MetastableInstance inst;
    inst.seed = c.seed;
    auto d = std::make_shared<Domain>(Domain::rectangle(c.width, c.height));
    inst.domain = d;
    inst.bc = boundary_from(c.boundary);
    ModelParams p;
    p.beta = c.beta;
    p.h = c.h;
    p.b_exp = c.b_exp;
    p.r_exp = c.r_exp;
    p.family = family_from(c.rate_family);
    if (!(p.beta > 0)) throw std::invalid_argument("prepare_instance: beta must be positive");

    double tau0 = c.tau0 > 0 ? c.tau0 : estimate_tau0(c.beta, {8}).rows[0][1];
    if (!(tau0 > 0))
        throw std::invalid_argument(
            "prepare_instance: interface tension did not resolve positive (beta too small?)");
    inst.basis = build_wulff_basis(SurfaceTension::constant(tau0), c.wulff_dirs);
    inst.m_star = c.m_star > 0 ? c.m_star : estimate_mstar(c.beta, 4).value;
    if (!(inst.m_star > 0))
        throw std::invalid_argument("prepare_instance: magnetization scale did not resolve positive");
    inst.scalars = scalars_from_basis(*inst.basis, inst.m_star);
    p.B_plus = c.B_plus > 0 ? c.B_plus : 0.9 * inst.scalars.B_c;

    Json trace = Json::array();
    double h = c.h;
    double probe_horizon = c.probe_horizon > 0 ? c.probe_horizon : 4.0 * c.target_mean_high;
    ProbeStats st;
    if (c.auto_tune_h) {
        // bisect the field until the probed mean exit lands in the target
        // window; the mean is decreasing in h, and an unreachable kill region
        // (heavy censoring) counts as a too-slow field
        double lo = 0.02, hi = 1.2;
        h = c.h > 0 ? c.h : 0.4;
        bool landed = false;
        for (int it = 0; it < 12; ++it) {
            p.h = h;
            RegionPredicate target = region_in_S(inst.bc, p, inst.basis, inst.scalars);
            st = probe_mean_exit(d, inst.bc, p, target, c.probe_replicas, probe_horizon,
                                 derive_seed(derive_seed(c.seed, kTagProbe), static_cast<std::uint64_t>(it)),
                                 c.threads);
            trace.push_back({{"h", h}, {"mean", st.mean}, {"censored", st.censored}});
            bool above = 2 * st.censored >= st.n || st.mean > c.target_mean_high;
            bool below = !above && st.mean < c.target_mean_low;
            if (!above && !below) {
                landed = true;
                break;
            }
            if (above)
                lo = h;
            else
                hi = h;
            h = 0.5 * (lo + hi);
        }
        if (!landed)
            throw std::runtime_error(
                "prepare_instance: field tuner did not reach the target window; probes: " +
                trace.dump());
    } else {
        if (!(c.h > 0)) throw std::invalid_argument("prepare_instance: h must be positive without tuning");
        p.h = h;
        RegionPredicate target = region_in_S(inst.bc, p, inst.basis, inst.scalars);
        st = probe_mean_exit(d, inst.bc, p, target, c.probe_replicas, probe_horizon,
                             derive_seed(derive_seed(c.seed, kTagProbe), 0), c.threads);
        trace.push_back({{"h", h}, {"mean", st.mean}, {"censored", st.censored}});
    }
    inst.params = p;
    inst.probe_mean = st.mean;
    inst.restricted = region_in_R(inst.bc, p, inst.basis);
    inst.nucleated = region_in_S(inst.bc, p, inst.basis, inst.scalars);

    inst.autocorr_time =
        measure_autocorr(d, inst.bc, p, inst.restricted, derive_seed(c.seed, kTagAutocorr));
    inst.burn_in = c.burn_in_factor * inst.autocorr_time;
    // killing rate: 1/lambda = 100 autocorrelation times, but no more than 1%
    // of the mean exit time
    inst.lambda = c.lambda > 0
                      ? c.lambda
                      : std::max(0.01 / inst.autocorr_time, 100.0 / inst.probe_mean);

    inst.log = Json{{"tuner", trace},
                    {"h", p.h},
                    {"tau0", tau0},
                    {"B_plus", p.B_plus},
                    {"B_c", inst.scalars.B_c},
                    {"m_star", inst.m_star},
                    {"w_beta", inst.scalars.w_beta},
                    {"probe_mean", inst.probe_mean},
                    {"probe_censored", st.censored},
                    {"probe_horizon", probe_horizon},
                    {"autocorr_time", inst.autocorr_time},
                    {"burn_in", inst.burn_in},
                    {"lambda", inst.lambda}};
    return inst;
}

std::function<double(const Simulator&)> make_observable(const std::string& name,
                                                        const MetastableInstance& inst) {
    if (name == "magnetization_density")
        return [](const Simulator& s) { return s.hot().magnetization_density(); };
    if (name == "droplet_volume")
        return [](const Simulator& s) { return static_cast<double>(s.hot().plus_count()); };
    if (name == "indicator_R") {
        RegionPredicate r = inst.restricted;
        return [r](const Simulator& s) { return region_test(r, s.hot()) ? 1.0 : 0.0; };
    }
    if (name == "indicator_S") {
        RegionPredicate r = inst.nucleated;
        return [r](const Simulator& s) { return region_test(r, s.hot()) ? 1.0 : 0.0; };
    }
    throw std::invalid_argument("unknown observable: " + name);
}

// ---- experiments ----

namespace {

Json manifest_shell(const char* experiment, const ExperimentConfig& c) {
    Json m;
    m["schema"] = "isinglab-manifest/1";
    m["experiment"] = experiment;
    m["config"] = experiment_config_json(c);
    return m;
}

Json instance_json(const MetastableInstance& inst) { return inst.log; }

} // namespace

ExpLawResult exp_law_experiment(const ExperimentConfig& c) {
    return exp_law_experiment(c, prepare_instance(c));
}

ExpLawResult exp_law_experiment(const ExperimentConfig& c, const MetastableInstance& inst) {
    double horizon = c.horizon > 0 ? c.horizon : 50.0 * inst.probe_mean;
    BatchResult batch =
        batch_exit_times(inst.start_sampler(), inst.bc, inst.params, nullptr, inst.nucleated,
                         inst.lambda, c.replicas, horizon, derive_seed(c.seed, kTagExpLaw),
                         c.threads);
    ExpLawResult out;
    out.table.columns = {"replica", "exit_time", "censored"};
    std::vector<double> alive;
    for (int r = 0; r < c.replicas; ++r) {
        const TimedResult& s = batch.samples[static_cast<size_t>(r)];
        out.table.add_row({static_cast<double>(r), s.time, s.censored ? 1.0 : 0.0});
        if (!s.censored) alive.push_back(s.time);
    }
    out.censored = batch.censored;
    if (alive.size() >= 2) {
        out.mean = std::accumulate(alive.begin(), alive.end(), 0.0) / static_cast<double>(alive.size());
        out.ks = ks_test_exponential(alive, out.mean);
    }
    out.inconclusive = 10 * out.censored > c.replicas;

    out.manifest = manifest_shell("exp_law", c);
    out.manifest["instance"] = instance_json(inst);
    out.manifest["resolved"] = {{"horizon", horizon}, {"lambda", inst.lambda}};
    out.manifest["results"] = {{"n_replicas", c.replicas},
                               {"n_success", c.replicas - out.censored},
                               {"n_censored", out.censored},
                               {"mean_exit", out.mean},
                               {"ks_statistic", out.ks.statistic},
                               {"ks_p_value", out.ks.p_value},
                               {"inconclusive", out.inconclusive}};
    return out;
}

// exact sup over t in [0, T - theta] of |A_theta(t) - ref| for a piecewise
// constant path: the window average is piecewise linear in t, so the sup is
// attained at a breakpoint of either window edge
double sup_window_deviation(const std::vector<double>& ts, const std::vector<double>& fs,
                            double t_end, double theta, double ref) {
    size_t k = ts.size();
    std::vector<double> pre(k + 1, 0.0);
    for (size_t i = 0; i < k; ++i) {
        double next = i + 1 < k ? ts[i + 1] : t_end;
        pre[i + 1] = pre[i] + fs[i] * (next - ts[i]);
    }
    auto integral_at = [&](double t) {
        size_t i = static_cast<size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
        // i >= 1 always: ts[0] = 0 <= t
        return pre[i - 1] + fs[i - 1] * (t - ts[i - 1]);
    };
    double hi = t_end - theta;
    std::vector<double> cand;
    cand.reserve(2 * k + 2);
    cand.push_back(0.0);
    cand.push_back(hi);
    for (double t : ts) {
        if (t > 0 && t < hi) cand.push_back(t);
        double s = t - theta;
        if (s > 0 && s < hi) cand.push_back(s);
    }
    double worst = 0.0;
    for (double t : cand) {
        double a = (integral_at(t + theta) - integral_at(t)) / theta;
        worst = std::max(worst, std::abs(a - ref));
    }
    return worst;
}

PlateauResult plateau_experiment(const ExperimentConfig& c) {
    return plateau_experiment(c, prepare_instance(c));
}

PlateauResult plateau_experiment(const ExperimentConfig& c, const MetastableInstance& inst) {
    PlateauResult out;
    auto obs = make_observable(c.observable, inst);
    double horizon = c.horizon > 0 ? c.horizon : 50.0 * inst.probe_mean;
    out.theta = c.theta > 0 ? c.theta : inst.probe_mean / 100.0;
    if (!(out.theta > 0)) throw std::invalid_argument("plateau_experiment: theta must be positive");

    // restricted-ensemble reference: mean and config-level spread of the
    // observable, from one long restricted run
    {
        double burn = std::max(inst.burn_in, 200.0);
        double span = std::max(2000.0, 200.0 * inst.autocorr_time);
        double dt = std::max(inst.autocorr_time / 4.0, 0.05);
        Rng rng = Rng::for_replica(derive_seed(c.seed, kTagPlateauRef), 0, Rng::kDynamics);
        Simulator sim(SpinConfig::uniform(inst.domain, -1), inst.bc, inst.params, &inst.restricted);
        std::vector<double> xs = sample_path(sim, rng, burn, span, dt, obs);
        Summary s = summarize(xs);
        out.ref_mean = s.mean;
        out.ref_sigma = s.sd;
    }

    const double band = c.band_sigmas * out.ref_sigma;
    std::uint64_t bseed = derive_seed(c.seed, kTagPlateau);
    auto sampler = inst.start_sampler();
    struct Row {
        double t_end = 0, sup = -1;
        bool censored = true, window_ok = false, pass = false;
    };
    std::vector<Row> rows(static_cast<size_t>(c.replicas));
    std::atomic<int> next{0};
    run_parallel(c.threads, [&] {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= c.replicas) return;
            Rng init = Rng::for_replica(bseed, static_cast<std::uint64_t>(r), Rng::kInit);
            Rng dyn = Rng::for_replica(bseed, static_cast<std::uint64_t>(r), Rng::kDynamics);
            Rng kill = Rng::for_replica(bseed, static_cast<std::uint64_t>(r), Rng::kKilling);
            Simulator sim(sampler(init), inst.bc, inst.params);
            double mark = kill.exponential(1.0 / inst.lambda);
            std::vector<double> ts{0.0}, fs{obs(sim)};
            double ell = 0.0, t_end = horizon;
            bool censored = true;
            for (;;) {
                bool in_s = region_test(inst.nucleated, sim.hot());
                double t0 = sim.time();
                StepOutcome o = sim.step(dyn, horizon);
                double dt = sim.time() - t0;
                if (in_s && ell + dt >= mark) {
                    t_end = t0 + (mark - ell);
                    censored = false;
                    break;
                }
                if (in_s) ell += dt;
                if (o == StepOutcome::Horizon) break;
                ts.push_back(sim.time());
                fs.push_back(obs(sim));
            }
            Row row;
            row.t_end = t_end;
            row.censored = censored;
            row.window_ok = t_end > out.theta;
            if (row.window_ok)
                row.sup = sup_window_deviation(ts, fs, t_end, out.theta, out.ref_mean);
            row.pass = !censored && row.window_ok && row.sup <= band;
            rows[static_cast<size_t>(r)] = row;
        }
    });

    out.table.columns = {"replica", "exit_time", "censored", "window_ok", "sup_dev", "pass"};
    int passes = 0, uncensored = 0;
    for (int r = 0; r < c.replicas; ++r) {
        const Row& row = rows[static_cast<size_t>(r)];
        out.table.add_row({static_cast<double>(r), row.t_end, row.censored ? 1.0 : 0.0,
                           row.window_ok ? 1.0 : 0.0, row.sup, row.pass ? 1.0 : 0.0});
        out.censored += row.censored;
        if (!row.censored) {
            ++uncensored;
            passes += row.pass;
        }
    }
    out.fraction_within = uncensored > 0 ? static_cast<double>(passes) / uncensored : 0.0;
    out.inconclusive = 10 * out.censored > c.replicas;

    out.manifest = manifest_shell("plateau", c);
    out.manifest["instance"] = instance_json(inst);
    out.manifest["resolved"] = {{"horizon", horizon},
                                {"theta", out.theta},
                                {"band", band},
                                {"ref_mean", out.ref_mean},
                                {"ref_sigma", out.ref_sigma}};
    out.manifest["results"] = {{"n_replicas", c.replicas},
                               {"n_success", c.replicas - out.censored},
                               {"n_censored", out.censored},
                               {"n_within_band", passes},
                               {"fraction_within", out.fraction_within},
                               {"inconclusive", out.inconclusive}};
    return out;
}

HysteresisResult hysteresis_experiment(const ExperimentConfig& c) {
    return hysteresis_experiment(c, prepare_instance(c));
}

HysteresisResult hysteresis_experiment(const ExperimentConfig& c, const MetastableInstance& inst) {
    const DomainPtr& d = inst.domain;
    double horizon = c.horizon > 0 ? c.horizon : 20.0 * inst.probe_mean;

    std::function<SpinConfig(Rng&)> start;
    Json start_log{{"kind", c.start}};
    if (c.start == "restricted") {
        if (c.start_field_factor == 1.0) {
            start = inst.start_sampler();
        } else {
            // equilibrate in the restricted ensemble of a shifted field, then
            // release at the instance field
            ModelParams p2 = inst.params;
            p2.h = c.start_field_factor * inst.params.h;
            p2.validate();
            RegionPredicate r2 = region_in_R(inst.bc, p2, inst.basis);
            double burn = inst.burn_in;
            BoundaryCondition bc = inst.bc;
            start = [d, bc, p2, r2, burn](Rng& rng) {
                Simulator sim(SpinConfig::uniform(d, -1), bc, p2, &r2);
                while (sim.time() < burn)
                    if (sim.step(rng, burn) == StepOutcome::Horizon) break;
                return sim.state();
            };
            start_log["h_start"] = p2.h;
        }
    } else if (c.start == "all_minus") {
        start = [d](Rng&) { return SpinConfig::uniform(d, -1); };
    } else if (c.start == "capped") {
        double cap_sites = c.start_plus_cap * std::pow(inst.scalars.B_c / inst.params.h, 2.0);
        double n = static_cast<double>(d->size());
        double density = (2.0 * cap_sites - n) / n;
        RegionPredicate r2 = region_magnetization_at_most(density);
        double burn = inst.burn_in;
        BoundaryCondition bc = inst.bc;
        ModelParams p = inst.params;
        start = [d, bc, p, r2, burn](Rng& rng) {
            Simulator sim(SpinConfig::uniform(d, -1), bc, p, &r2);
            while (sim.time() < burn)
                if (sim.step(rng, burn) == StepOutcome::Horizon) break;
            return sim.state();
        };
        start_log["cap_sites"] = cap_sites;
    } else { // droplet
        int side = c.droplet_side > 0
                       ? c.droplet_side
                       : static_cast<int>(std::ceil(2.0 * inst.scalars.B_c / inst.params.h)) + 2;
        side = std::min({side, c.width, c.height});
        int x0 = (c.width - side) / 2, y0 = (c.height - side) / 2;
        SpinConfig base = SpinConfig::uniform(d, -1);
        for (int i = 0; i < d->size(); ++i) {
            Coord s = d->site(i);
            if (s.x >= x0 && s.x < x0 + side && s.y >= y0 && s.y < y0 + side) base.s[static_cast<size_t>(i)] = 1;
        }
        start = [base](Rng&) { return base; };
        start_log["side"] = side;
    }

    RegionPredicate exit_region = region_magnetization_at_least(c.exit_density);
    std::uint64_t bseed = derive_seed(c.seed, kTagHysteresis);
    struct Row {
        double t = 0;
        int winner = 3; // 0 return, 1 nucleate, 2 exit, 3 censored
    };
    std::vector<Row> rows(static_cast<size_t>(c.replicas));
    std::atomic<int> next{0};
    run_parallel(c.threads, [&] {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= c.replicas) return;
            Rng init = Rng::for_replica(bseed, static_cast<std::uint64_t>(r), Rng::kInit);
            Rng dyn = Rng::for_replica(bseed, static_cast<std::uint64_t>(r), Rng::kDynamics);
            Rng kill = Rng::for_replica(bseed, static_cast<std::uint64_t>(r), Rng::kKilling);
            Simulator sim(start(init), inst.bc, inst.params);
            double mark_r = kill.exponential(1.0 / c.kappa);
            double mark_s = kill.exponential(1.0 / inst.lambda);
            double ell_r = 0.0, ell_s = 0.0;
            Row row;
            row.t = horizon;
            if (region_test(exit_region, sim.hot())) {
                row.winner = 2;
                row.t = 0.0;
            }
            while (row.winner == 3) {
                bool in_r = region_test(inst.restricted, sim.hot());
                bool in_s = region_test(inst.nucleated, sim.hot());
                double t0 = sim.time();
                StepOutcome o = sim.step(dyn, horizon);
                double dt = sim.time() - t0;
                double t_r = in_r && ell_r + dt >= mark_r ? t0 + (mark_r - ell_r) : kInf;
                double t_s = in_s && ell_s + dt >= mark_s ? t0 + (mark_s - ell_s) : kInf;
                if (t_r <= t_s && t_r < kInf) {
                    row.winner = 0;
                    row.t = t_r;
                    break;
                }
                if (t_s < kInf) {
                    row.winner = 1;
                    row.t = t_s;
                    break;
                }
                if (in_r) ell_r += dt;
                if (in_s) ell_s += dt;
                if (o == StepOutcome::Horizon) break;
                if (o == StepOutcome::Flip && region_test(exit_region, sim.hot())) {
                    row.winner = 2;
                    row.t = sim.time();
                    break;
                }
            }
            rows[static_cast<size_t>(r)] = row;
        }
    });

    HysteresisResult out;
    out.table.columns = {"replica", "time", "winner"};
    for (int r = 0; r < c.replicas; ++r) {
        const Row& row = rows[static_cast<size_t>(r)];
        out.table.add_row({static_cast<double>(r), row.t, static_cast<double>(row.winner)});
        switch (row.winner) {
        case 0: ++out.n_return; break;
        case 1: ++out.n_nucleate; break;
        case 2: ++out.n_exit; break;
        default: ++out.n_censored; break;
        }
    }
    out.manifest = manifest_shell("hysteresis", c);
    out.manifest["instance"] = instance_json(inst);
    out.manifest["resolved"] = {{"horizon", horizon},
                                {"kappa", c.kappa},
                                {"lambda", inst.lambda},
                                {"start", start_log}};
    out.manifest["results"] = {{"n_replicas", c.replicas},
                               {"n_return", out.n_return},
                               {"n_nucleate", out.n_nucleate},
                               {"n_exit", out.n_exit},
                               {"n_censored", out.n_censored}};
    return out;
}

CapacityReport capacity_gap_report(const ExperimentConfig& c) {
    int n = c.surrogate_size;
    if (n * n > 16)
        throw std::length_error("capacity_gap_report: surrogate block too large to enumerate");
    double h = c.h > 0 ? c.h : 1.5;
    std::vector<double> betas = c.beta_grid.empty() ? std::vector<double>{0.8, 1.0, 1.2} : c.beta_grid;
    std::vector<double> kappas = c.kappa_grid.empty() ? std::vector<double>{1.0, kInf} : c.kappa_grid;
    std::vector<double> lambdas =
        c.lambda_grid.empty() ? std::vector<double>{1.0, kInf} : c.lambda_grid;

    auto d = std::make_shared<Domain>(Domain::rectangle(n, n));
    BoundaryCondition bc = boundary_from(c.boundary);
    CapacityReport out;
    out.table.columns = {"beta",     "kappa", "lambda",       "gap",
                         "phi_abs",  "phi_lambda", "capacity", "mu_R",
                         "phi_over_gap", "phi_muR_over_C"};
    for (double beta : betas) {
        ModelParams p;
        p.beta = beta;
        p.h = h;
        p.family = family_from(c.rate_family);
        ChainModel ch = enumerate_chain(d, bc, p, nullptr, 1 << (n * n));
        auto r_mask = mask_of(ch, [](const SpinConfig& s) { return s.magnetization() <= -1; });
        auto s_mask = mask_of(ch, [](const SpinConfig& s) { return s.magnetization() >= 1; });
        double gap = spectral_gap(ch);
        double phi_abs = extinction_rate(ch, s_mask, kAbsorbing).phi_star;
        double mu_r = ch.mass(r_mask);
        for (double kappa : kappas)
            for (double lambda : lambdas) {
                double cap = soft_capacity(ch, r_mask, s_mask, kappa, lambda).value;
                double phi_l = extinction_rate(ch, s_mask, lambda).phi_star;
                out.table.add_row({beta, kappa, lambda, gap, phi_abs, phi_l, cap, mu_r,
                                   phi_abs / gap, phi_abs * mu_r / cap});
            }
        double cap_inf = soft_capacity(ch, r_mask, s_mask, kInf, kInf).value;
        out.betas.push_back(beta);
        out.phi_over_gap.push_back(phi_abs / gap);
        out.phi_muR_over_C.push_back(phi_abs * mu_r / cap_inf);
    }
    out.manifest = manifest_shell("capacity", c);
    out.manifest["resolved"] = {{"h", h},
                                {"surrogate_size", n},
                                {"betas", betas},
                                {"phi_over_gap", out.phi_over_gap},
                                {"phi_muR_over_C", out.phi_muR_over_C}};
    return out;
}

SimulateResult simulate_experiment(const ExperimentConfig& c) {
    if (!(c.horizon > 0)) throw std::invalid_argument("simulate: horizon must be positive");
    auto d = std::make_shared<Domain>(Domain::rectangle(c.width, c.height));
    BoundaryCondition bc = boundary_from(c.boundary);
    ModelParams p;
    p.beta = c.beta;
    p.h = c.h;
    p.b_exp = c.b_exp;
    p.r_exp = c.r_exp;
    p.family = family_from(c.rate_family);
    p.validate();
    std::uint64_t bseed = derive_seed(c.seed, kTagSimulate);

    SimulateResult out;
    out.logs.resize(static_cast<size_t>(std::min(c.log_trajectories, c.replicas)));
    struct Row {
        double events = 0, final_m = 0;
    };
    std::vector<Row> rows(static_cast<size_t>(c.replicas));
    std::atomic<int> next{0};
    run_parallel(c.threads, [&] {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= c.replicas) return;
            Rng rng = Rng::for_replica(bseed, static_cast<std::uint64_t>(r), Rng::kDynamics);
            Trajectory tr = simulate(SpinConfig::uniform(d, -1), bc, p, c.horizon, rng);
            tr.seed = bseed;
            tr.replica = static_cast<uint32_t>(r);
            rows[static_cast<size_t>(r)] = {static_cast<double>(tr.events.size()),
                                            tr.final_state().magnetization_density()};
            if (static_cast<size_t>(r) < out.logs.size()) out.logs[static_cast<size_t>(r)] = std::move(tr);
        }
    });
    out.table.columns = {"replica", "events", "final_magnetization"};
    for (int r = 0; r < c.replicas; ++r)
        out.table.add_row({static_cast<double>(r), rows[static_cast<size_t>(r)].events,
                           rows[static_cast<size_t>(r)].final_m});
    out.manifest = manifest_shell("simulate", c);
    out.manifest["results"] = {{"n_replicas", c.replicas},
                               {"logged_trajectories", static_cast<int>(out.logs.size())}};
    return out;
}

// ---- self-check batteries ----

CheckReport geometry_check(double tau0, int n_dirs, int samples, std::uint64_t seed) {
    if (!(tau0 > 0)) throw std::invalid_argument("geometry_check: tau0 must be positive");
    if (n_dirs < 16) throw std::invalid_argument("geometry_check: n_dirs too small");
    if (samples < 1) throw std::invalid_argument("geometry_check: need at least one sample");
    SurfaceTension tau = SurfaceTension::constant(tau0);
    WulffBasisPtr basis = build_wulff_basis(tau, n_dirs);
    Rng rng(seed, 0);
    CheckReport out;
    out.table.columns = {"check", "cases", "worst", "pass"};
    std::vector<std::string> names;
    auto add = [&](const std::string& name, int cases, double worst, double tol) {
        bool ok = worst <= tol;
        out.all_pass = out.all_pass && ok;
        names.push_back(name);
        out.table.add_row({static_cast<double>(names.size()), static_cast<double>(cases), worst,
                           ok ? 1.0 : 0.0});
    };

    // scalar identities for the constant model (unit m_star)
    {
        FreeEnergyScalars s = scalars_from_basis(*basis, 1.0);
        double w_exact = 2.0 * std::sqrt(kPi) * tau0;
        double worst = std::max(std::abs(s.w_beta - w_exact), std::abs(s.A - kPi * tau0 * tau0));
        add("scalar_identities", 1, worst, 1e-3 * std::max(1.0, tau0 * tau0));
    }
    // surface energy of a built shape is w_beta * B, and its area is B^2
    {
        double worst = 0;
        for (int i = 0; i < samples; ++i) {
            double B = rng.uniform(0.5, 5.0);
            WulffShape w = wulff_shape_of_B(basis, {rng.uniform(-2, 2), rng.uniform(-2, 2)}, B);
            double e = wulff_functional(w.polygon(), tau);
            worst = std::max(worst, std::abs(e - basis->w_beta * B) / (basis->w_beta * B));
            worst = std::max(worst, std::abs(w.area() - B * B) / (B * B));
        }
        add("shape_energy_identity", samples, worst, 1e-3);
    }
    // lower bounds via inscribed/enclosing shapes on random convex hulls
    {
        double worst = -kInf;
        int cases = 0;
        for (int i = 0; i < samples; ++i) {
            std::vector<Vec2> pts;
            for (int k = 0; k < 20; ++k) pts.push_back({rng.uniform(-3, 3), rng.uniform(-2, 2)});
            Polygon hull = convex_hull(pts);
            if (hull.v.size() < 3) continue;
            ++cases;
            BlaschkeBounds b = blaschke_bounds(hull, basis);
            worst = std::max({worst, b.bound_in - b.wulff_energy, b.bound_out - b.wulff_energy,
                              b.B_in - b.B_out});
        }
        add("blaschke_bounds", cases, worst, 1e-6);
    }
    // merge of intersecting shapes covers both, with additive B
    {
        double worst = -kInf;
        int cases = 0;
        while (cases < samples) {
            WulffShape a = make_wulff_shape(basis, {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                            rng.uniform(0.5, 1.5));
            WulffShape b = make_wulff_shape(basis, {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                            rng.uniform(0.5, 1.5));
            if (basis->gauge(b.center - a.center) > a.rho + b.rho) continue;
            ++cases;
            WulffShape m = merge_wulff(a, b);
            double contain = (a.contained_in(m, 1e-6) && b.contained_in(m, 1e-6)) ? 0.0 : 1.0;
            worst = std::max({worst, contain, std::abs(m.B() - (a.B() + b.B()))});
        }
        add("merge_containment", cases, worst, 1e-6);
    }
    // annulus inscribed radius against the erosion cross-check
    {
        double worst = 0;
        int cases = 0;
        const std::vector<std::pair<double, double>> bands{{1.0, 3.0}, {0.5, 2.0}, {1.0, 2.5}, {0.8, 1.6}};
        for (auto [b1, b2] : bands) {
            ++cases;
            double exact = annulus_inscribed_B(b1, b2);
            double erosion = annulus_inscribed_B_erosion(basis, b1, b2);
            worst = std::max(worst, std::abs(exact - erosion) / exact);
        }
        add("annulus_erosion", cases, worst, 0.02);
    }
    // tangent enlargement keeps the original inside, touching at the tangent
    {
        double worst = -kInf;
        for (int i = 0; i < samples; ++i) {
            double rho = rng.uniform(1.5, 4.0);
            WulffShape w = make_wulff_shape(basis, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, rho);
            TangentShiftResult ts = tangent_shift(w, rng.uniform(0, 2 * kPi), rng.uniform(0.05, rho / 3.5));
            double contain = w.contained_in(ts.enlarged, 1e-6) ? 0.0 : 1.0;
            double on_w = std::abs(w.gauge_from_center(ts.tangent_point) - w.rho);
            double on_e =
                std::abs(ts.enlarged.gauge_from_center(ts.tangent_point) - ts.enlarged.rho);
            worst = std::max({worst, contain, on_w, on_e});
        }
        add("tangent_shift", samples, worst, 1e-6);
    }

    out.manifest["schema"] = "isinglab-manifest/1";
    out.manifest["experiment"] = "geometry_check";
    out.manifest["config"] = {{"tau0", tau0}, {"n_dirs", n_dirs}, {"samples", samples}, {"seed", seed}};
    out.manifest["checks"] = names;
    out.manifest["all_pass"] = out.all_pass;
    return out;
}

CheckReport congestion_check(int width, int height, const ModelParams& p) {
    auto d = std::make_shared<Domain>(Domain::rectangle(width, height));
    BoundaryCondition bc = BoundaryCondition::minus();
    int n = d->size();
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    CheckReport out;
    out.table.columns = {"sigma0", "x", "lhs", "rhs", "pass"};
    double worst = 0;
    for (std::uint64_t bits = 0; bits < (1ull << n); ++bits) {
        SpinConfig sigma0 = SpinConfig::from_bits(d, bits);
        for (int x = 0; x < n; ++x) {
            CongestionCheck res = congestion_lemma_check(*d, bc, p, order, sigma0, x);
            bool ok = res.lhs <= res.rhs * (1.0 + 1e-12);
            out.all_pass = out.all_pass && ok;
            worst = std::max(worst, res.lhs / res.rhs);
            out.table.add_row({static_cast<double>(bits), static_cast<double>(x), res.lhs, res.rhs,
                               ok ? 1.0 : 0.0});
        }
    }
    out.manifest["schema"] = "isinglab-manifest/1";
    out.manifest["experiment"] = "congestion_check";
    out.manifest["config"] = {{"width", width}, {"height", height}, {"beta", p.beta}, {"h", p.h}};
    out.manifest["worst_ratio"] = worst;
    out.manifest["all_pass"] = out.all_pass;
    return out;
}

} // namespace ilab
