#include "doctest.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "isinglab/lab.hpp"
#include "isinglab/rng.hpp"

using namespace ilab;

namespace {

// cheap shared instance: explicit small field on a 10x10 block so no tuning
// bisection runs, and explicit scale constants so no transfer matrix runs
ExperimentConfig small_config() {
    ExperimentConfig c;
    c.width = 10;
    c.height = 10;
    c.beta = 1.0;
    c.h = 0.2;
    c.auto_tune_h = false;
    c.tau0 = 0.360471702201671;
    c.m_star = 0.9312513063279692;
    c.probe_replicas = 4;
    c.probe_horizon = 2000.0;
    c.burn_in_factor = 5.0;
    c.replicas = 24;
    c.seed = 7;
    return c;
}

const MetastableInstance& small_instance() {
    static MetastableInstance inst = prepare_instance(small_config());
    return inst;
}

double direct_window_average(const std::vector<double>& ts, const std::vector<double>& fs,
                             double t_end, double a, double b) {
    double acc = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
        double lo = std::max(a, ts[i]);
        double hi = std::min(b, i + 1 < ts.size() ? ts[i + 1] : t_end);
        if (hi > lo) acc += fs[i] * (hi - lo);
    }
    return acc / (b - a);
}

} // namespace

TEST_CASE("result tables serialize to stable csv") {
    ResultTable t;
    t.columns = {"a", "b"};
    CHECK_THROWS_AS(t.add_row({1.0}), std::invalid_argument);
    t.add_row({1.0, 0.1});
    t.add_row({-2.5, 3e-17});
    std::string csv = t.to_csv();
    CHECK(csv == "a,b\r\n1,0.10000000000000001\r\n-2.5,2.9999999999999999e-17\r\n");

    ResultTable empty;
    empty.columns = {"x"};
    CHECK(empty.to_csv() == "x\r\n");
}

TEST_CASE("config parsing: defaults, validation, echo round trip") {
    ExperimentConfig d = parse_experiment_config(Json());
    CHECK(d.beta == 1.0);
    CHECK(d.replicas == 300);
    CHECK(d.auto_tune_h);
    CHECK(d.observable == "magnetization_density");
    CHECK(d.rate_family == "metropolis");
    CHECK(d.surrogate_size == 3);
    CHECK(d.beta_grid.empty());

    CHECK_THROWS_WITH_AS(parse_experiment_config(Json{{"bogus_knob", 1}}),
                         doctest::Contains("bogus_knob"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_experiment_config(Json{{"beta", "hot"}}),
                         doctest::Contains("beta"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"replicas", 1.5}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"replicas", 0}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"seed", -1}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"auto_tune_h", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"kappa_grid", {"nope"}}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"kappa_grid", {0.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"kappa_grid", Json::array()}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"L_values", {1, "x"}}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"exit_density", 1.5}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"start", "sideways"}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json{{"target_mean_low", 10.0},
                                                 {"target_mean_high", 5.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(Json::array()), std::invalid_argument);

    Json in{{"kappa_grid", {"inf", 2.0}}, {"seed", 12345}, {"h", 0.3}, {"auto_tune_h", false}};
    ExperimentConfig c = parse_experiment_config(in);
    REQUIRE(c.kappa_grid.size() == 2);
    CHECK(std::isinf(c.kappa_grid[0]));
    CHECK(c.kappa_grid[1] == 2.0);
    CHECK(c.seed == 12345);

    Json echo = experiment_config_json(c);
    CHECK(echo["kappa_grid"] == Json({"inf", 2.0}));
    ExperimentConfig c2 = parse_experiment_config(echo);
    CHECK(experiment_config_json(c2) == echo);
}

TEST_CASE("seed derivation separates phases") {
    std::vector<std::uint64_t> seen;
    for (std::uint64_t tag = 0; tag < 8; ++tag) {
        std::uint64_t s = derive_seed(1, tag);
        CHECK(s == derive_seed(1, tag));
        for (std::uint64_t other : seen) CHECK(s != other);
        seen.push_back(s);
    }
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("interface tension estimates") {
    // frozen transfer-matrix value used by the default instance scales
    ResultTable t = estimate_tau0(1.0, {8});
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0] == 8.0);
    CHECK(t.rows[0][1] == doctest::Approx(0.360471702201671).epsilon(1e-12));

    // the two partition-function routes agree on an enumerable block
    double by_enum = estimate_tau0(0.9, {1}, ZMethod::Enumerate).rows[0][1];
    double by_tm = estimate_tau0(0.9, {1}, ZMethod::TransferMatrix).rows[0][1];
    CHECK(by_enum == doctest::Approx(by_tm).epsilon(1e-10));

    // beta = 0 rows are exactly zero, and caps are enforced
    ResultTable z = estimate_tau0(0.0, {1, 3});
    CHECK(z.rows[0][1] == 0.0);
    CHECK(z.rows[1][1] == 0.0);
    CHECK_THROWS_AS(estimate_tau0(1.0, {2}, ZMethod::Enumerate, 20), std::length_error);
    CHECK_THROWS_AS(estimate_tau0(1.0, {11}), std::length_error);
    CHECK_THROWS_AS(estimate_tau0(-1.0, {1}), std::invalid_argument);
    CHECK_THROWS_AS(estimate_tau0(1.0, {}), std::invalid_argument);

    // deep in the ordered phase the estimate approaches the sharp-interface
    // cost 1 + log(tanh(beta/2)) / beta per unit length
    double deep = estimate_tau0(5.0, {4}).rows[0][1];
    double sharp = 1.0 + std::log(std::tanh(2.5)) / 5.0;
    CHECK(deep == doctest::Approx(sharp).epsilon(0.02));
}

TEST_CASE("magnetization scale estimates") {
    MstarEstimate frozen = estimate_mstar(1.0, 4);
    CHECK(frozen.exact);
    CHECK(frozen.std_error == 0.0);
    CHECK(frozen.samples == (1LL << 16));
    CHECK(frozen.value == doctest::Approx(0.9312513063279692).epsilon(1e-12));

    // independent oracle on a 3x3 block: direct Boltzmann sum over all 512
    // configurations of minus the center spin
    {
        const double beta = 0.7;
        auto d = std::make_shared<Domain>(Domain::rectangle(3, 3));
        BoundaryCondition bc = BoundaryCondition::minus();
        ModelParams p;
        p.beta = beta;
        p.h = 0.0;
        int center = d->index_of({1, 1});
        double z = 0, num = 0;
        for (int mask = 0; mask < 512; ++mask) {
            SpinConfig c = SpinConfig::uniform(d, -1);
            for (int i = 0; i < 9; ++i)
                if (mask & (1 << i)) c.flip(i);
            double w = std::exp(-beta * hamiltonian(c, p, bc));
            z += w;
            num += w * c.at(center);
        }
        MstarEstimate est = estimate_mstar(beta, 3);
        CHECK(est.exact);
        CHECK(est.value == doctest::Approx(-num / z).epsilon(1e-10));
        CHECK(est.value > 0.0);
    }

    MstarEstimate zero = estimate_mstar(0.0, 3);
    CHECK(zero.value == 0.0);
    CHECK(estimate_mstar(2.0, 4).value > 0.99);

    // monte carlo fallback beyond the enumeration cap
    MstarEstimate mc = estimate_mstar(1.0, 5, 20, 3, 800.0);
    CHECK_FALSE(mc.exact);
    CHECK(mc.std_error > 0.0);
    CHECK(mc.samples > 0);
    CHECK(mc.value > 0.8);
    CHECK(mc.value < 1.0);

    CHECK_THROWS_AS(estimate_mstar(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_mstar(-0.5, 3), std::invalid_argument);
}

TEST_CASE("window deviation sup") {
    // constant path
    CHECK(sup_window_deviation({0.0}, {2.0}, 10.0, 3.0, 0.5) == doctest::Approx(1.5));

    // step path: the window average ramps from 0 to 1, worst at the end
    CHECK(sup_window_deviation({0.0, 2.0}, {0.0, 1.0}, 4.0, 2.0, 0.0) == doctest::Approx(1.0));

    // window covering the whole span reduces to the global average
    double avg = (1.0 * 1 + 2.0 * -1 + 2.0 * 2) / 5.0;
    CHECK(sup_window_deviation({0.0, 1.0, 3.0}, {1.0, -1.0, 2.0}, 5.0, 5.0, avg) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // random paths against a direct integration at the same breakpoints plus
    // a dense grid of window starts (the grid can only find less)
    Rng rng(99, 0);
    for (int trial = 0; trial < 50; ++trial) {
        size_t k = 1 + static_cast<size_t>(rng.below(40));
        std::vector<double> ts{0.0}, fs;
        for (size_t i = 1; i < k; ++i) ts.push_back(ts.back() + rng.exponential(1.0));
        for (size_t i = 0; i < k; ++i) fs.push_back(rng.normal());
        double t_end = ts.back() + rng.exponential(1.0);
        double theta = rng.uniform(0.05, t_end);
        double ref = rng.normal();

        double got = sup_window_deviation(ts, fs, t_end, theta, ref);

        double expect = 0.0;
        std::vector<double> cand{0.0, t_end - theta};
        for (double t : ts) {
            if (t > 0 && t < t_end - theta) cand.push_back(t);
            if (t - theta > 0 && t - theta < t_end - theta) cand.push_back(t - theta);
        }
        for (double a : cand)
            expect = std::max(expect,
                              std::abs(direct_window_average(ts, fs, t_end, a, a + theta) - ref));
        CHECK(got == doctest::Approx(expect).epsilon(1e-9));

        double grid = 0.0;
        for (int g = 0; g <= 500; ++g) {
            double a = (t_end - theta) * g / 500.0;
            grid = std::max(grid,
                            std::abs(direct_window_average(ts, fs, t_end, a, a + theta) - ref));
        }
        CHECK(got >= grid - 1e-9);
    }
}

TEST_CASE("prepared instance resolves and reproduces") {
    ExperimentConfig c = small_config();
    const MetastableInstance& inst = small_instance();

    CHECK(inst.params.h == 0.2);
    CHECK(inst.params.B_plus == doctest::Approx(0.9 * inst.scalars.B_c));
    CHECK(inst.probe_mean > 0.0);
    CHECK(inst.autocorr_time > 0.0);
    CHECK(inst.burn_in == doctest::Approx(5.0 * inst.autocorr_time));
    CHECK(inst.lambda ==
          doctest::Approx(std::max(0.01 / inst.autocorr_time, 100.0 / inst.probe_mean)));
    for (const char* key : {"h", "B_c", "probe_mean", "autocorr_time", "lambda", "tuner"})
        CHECK(inst.log.contains(key));

    // bitwise reproducible preparation
    MetastableInstance again = prepare_instance(c);
    CHECK(again.probe_mean == inst.probe_mean);
    CHECK(again.autocorr_time == inst.autocorr_time);
    CHECK(again.lambda == inst.lambda);

    // the start sampler consumes only the stream it is handed
    Rng a = Rng::for_replica(9, 0, Rng::kInit);
    Rng b = Rng::for_replica(9, 0, Rng::kInit);
    auto sampler = inst.start_sampler();
    CHECK(sampler(a).s == sampler(b).s);

    CHECK_THROWS_AS(
        [&] {
            ExperimentConfig bad = c;
            bad.h = 0.0;
            return prepare_instance(bad);
        }(),
        std::invalid_argument);
}

TEST_CASE("named observables") {
    const MetastableInstance& inst = small_instance();
    Simulator sim(SpinConfig::uniform(inst.domain, -1), inst.bc, inst.params);
    CHECK(make_observable("magnetization_density", inst)(sim) == -1.0);
    CHECK(make_observable("droplet_volume", inst)(sim) == 0.0);
    CHECK(make_observable("indicator_R", inst)(sim) == 1.0);
    CHECK(make_observable("indicator_S", inst)(sim) == 0.0);
    CHECK_THROWS_AS(make_observable("entropy", inst), std::invalid_argument);
}

TEST_CASE("exponential-law experiment bookkeeping") {
    ExperimentConfig c = small_config();
    const MetastableInstance& inst = small_instance();

    ExpLawResult r = exp_law_experiment(c, inst);
    CHECK(r.table.columns == std::vector<std::string>{"replica", "exit_time", "censored"});
    REQUIRE(static_cast<int>(r.table.rows.size()) == c.replicas);
    int censored = 0;
    for (const auto& row : r.table.rows) {
        CHECK(row[1] > 0.0);
        CHECK((row[2] == 0.0 || row[2] == 1.0));
        censored += row[2] == 1.0;
    }
    CHECK(censored == r.censored);
    CHECK(r.manifest["results"]["n_success"].get<int>() + r.censored == c.replicas);
    CHECK(r.mean > 0.0);
    CHECK(r.ks.statistic >= 0.0);
    CHECK(r.ks.statistic <= 1.0);
    CHECK(r.ks.p_value >= 0.0);
    CHECK(r.ks.p_value <= 1.0);

    // byte-identical rerun, also across thread counts
    ExpLawResult r2 = exp_law_experiment(c, inst);
    CHECK(r.table.to_csv() == r2.table.to_csv());
    CHECK(r.manifest.dump() == r2.manifest.dump());
    ExperimentConfig ct = c;
    ct.threads = 3;
    ExpLawResult r3 = exp_law_experiment(ct, inst);
    CHECK(r.table.to_csv() == r3.table.to_csv());

    // a hopeless horizon censors everything and flags the batch
    ExperimentConfig cc = c;
    cc.horizon = 1e-3;
    cc.replicas = 8;
    ExpLawResult all_cut = exp_law_experiment(cc, inst);
    CHECK(all_cut.censored == 8);
    CHECK(all_cut.inconclusive);
    CHECK(all_cut.manifest["results"]["n_success"] == 0);
}

TEST_CASE("plateau experiment bookkeeping") {
    ExperimentConfig c = small_config();
    c.replicas = 16;
    c.theta = 2.0;
    const MetastableInstance& inst = small_instance();

    PlateauResult r = plateau_experiment(c, inst);
    CHECK(r.theta == 2.0);
    CHECK(r.ref_mean < -0.5);
    CHECK(r.ref_mean > -1.0);
    CHECK(r.ref_sigma > 0.0);
    REQUIRE(static_cast<int>(r.table.rows.size()) == c.replicas);

    double band = 3.0 * r.ref_sigma;
    int censored = 0, passes = 0, uncensored = 0;
    for (const auto& row : r.table.rows) {
        bool cen = row[2] == 1.0, window_ok = row[3] == 1.0, pass = row[5] == 1.0;
        censored += cen;
        if (!cen) {
            ++uncensored;
            passes += pass;
        }
        if (window_ok)
            CHECK(row[4] >= 0.0);
        else
            CHECK(row[4] == -1.0);
        if (pass) {
            CHECK_FALSE(cen);
            CHECK(window_ok);
            CHECK(row[4] <= band);
        }
    }
    CHECK(censored == r.censored);
    REQUIRE(uncensored > 0);
    CHECK(r.fraction_within == doctest::Approx(static_cast<double>(passes) / uncensored));

    // metastable runs should hug the restricted reference most of the time
    CHECK(r.fraction_within >= 0.5);

    // reruns reproduce bytes
    PlateauResult r2 = plateau_experiment(c, inst);
    CHECK(r.table.to_csv() == r2.table.to_csv());
}

TEST_CASE("hysteresis experiment bookkeeping") {
    ExperimentConfig c = small_config();
    c.replicas = 8;
    c.horizon = 300.0;
    const MetastableInstance& inst = small_instance();

    HysteresisResult r = hysteresis_experiment(c, inst);
    CHECK(r.n_return + r.n_nucleate + r.n_exit + r.n_censored == c.replicas);
    REQUIRE(static_cast<int>(r.table.rows.size()) == c.replicas);
    for (const auto& row : r.table.rows) {
        CHECK(row[1] >= 0.0);
        CHECK(row[2] >= 0.0);
        CHECK(row[2] <= 3.0);
    }
    // starts in R with a unit return clock: the return mark should win often
    CHECK(r.n_return >= c.replicas / 2);

    // a large seeded droplet start mostly avoids an immediate return
    ExperimentConfig cd = c;
    cd.start = "droplet";
    cd.replicas = 6;
    HysteresisResult rd = hysteresis_experiment(cd, inst);
    CHECK(rd.n_return + rd.n_nucleate + rd.n_exit + rd.n_censored == cd.replicas);
    CHECK(rd.manifest["resolved"]["start"]["kind"] == "droplet");
    CHECK(rd.manifest["resolved"]["start"].contains("side"));

    ExperimentConfig ca = c;
    ca.start = "all_minus";
    ca.replicas = 4;
    HysteresisResult ra = hysteresis_experiment(ca, inst);
    CHECK(ra.n_return + ra.n_nucleate + ra.n_exit + ra.n_censored == ca.replicas);

    ExperimentConfig cp = c;
    cp.start = "capped";
    cp.replicas = 4;
    HysteresisResult rp = hysteresis_experiment(cp, inst);
    CHECK(rp.n_return + rp.n_nucleate + rp.n_exit + rp.n_censored == cp.replicas);
    CHECK(rp.manifest["resolved"]["start"].contains("cap_sites"));
}

TEST_CASE("capacity report structure") {
    ExperimentConfig c;
    c.beta_grid = {0.6, 1.0};
    CapacityReport r = capacity_gap_report(c);
    CHECK(r.table.rows.size() == 2 * 2 * 2);
    REQUIRE(r.betas == std::vector<double>{0.6, 1.0});
    REQUIRE(r.phi_over_gap.size() == 2);
    REQUIRE(r.phi_muR_over_C.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(r.phi_over_gap[i] > 0.0);
        CHECK(std::isfinite(r.phi_over_gap[i]));
        CHECK(r.phi_muR_over_C[i] > 0.0);
        CHECK(std::isfinite(r.phi_muR_over_C[i]));
    }
    for (const auto& row : r.table.rows) {
        CHECK(row[3] > 0.0); // gap
        CHECK(row[4] > 0.0); // phi_abs
        CHECK(row[6] > 0.0); // capacity
        CHECK(row[7] > 0.0); // mu_R
        CHECK(row[7] < 1.0);
    }
    CHECK_THROWS_AS(
        [] {
            ExperimentConfig big;
            big.surrogate_size = 5;
            return capacity_gap_report(big);
        }(),
        std::length_error);
}

TEST_CASE("simulate experiment smoke") {
    ExperimentConfig c;
    c.width = 6;
    c.height = 6;
    c.beta = 1.0;
    c.h = 0.3;
    c.auto_tune_h = false;
    c.horizon = 40.0;
    c.replicas = 3;
    c.log_trajectories = 2;
    c.threads = 2;
    c.seed = 11;

    SimulateResult r = simulate_experiment(c);
    REQUIRE(r.table.rows.size() == 3);
    REQUIRE(r.logs.size() == 2);
    for (int i = 0; i < 2; ++i)
        CHECK(static_cast<double>(r.logs[static_cast<size_t>(i)].events.size()) ==
              r.table.rows[static_cast<size_t>(i)][1]);
    for (const auto& row : r.table.rows) {
        CHECK(row[2] >= -1.0);
        CHECK(row[2] <= 1.0);
    }
    SimulateResult r2 = simulate_experiment(c);
    CHECK(r.table.to_csv() == r2.table.to_csv());

    ExperimentConfig bad = c;
    bad.horizon = 0.0;
    CHECK_THROWS_AS(simulate_experiment(bad), std::invalid_argument);
}

TEST_CASE("self-check batteries pass") {
    CheckReport g = geometry_check(0.36, 64, 6, 5);
    CHECK(g.all_pass);
    CHECK(g.table.rows.size() > 0);
    for (const auto& row : g.table.rows) CHECK(row[3] == 1.0);

    ModelParams p;
    p.beta = 0.8;
    p.h = 0.4;
    CheckReport s = congestion_check(3, 2, p);
    CHECK(s.all_pass);
    CHECK(s.table.rows.size() == (1u << 6) * 6);
}
