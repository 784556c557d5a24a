#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "isinglab/dynamics.hpp"
#include "isinglab/stats.hpp"

using namespace ilab;

namespace {

ModelParams mp(double beta, double h) {
    ModelParams p;
    p.beta = beta;
    p.h = h;
    p.b_exp = 0.24;
    p.r_exp = 0.1;
    return p;
}

// exact law at time t of the (possibly restricted) chain on <= 64 states,
// via symmetrization of the reversible generator
std::vector<double> exact_law(DomainPtr dom, const BoundaryCondition& bc, const ModelParams& p,
                              uint64_t init_bits, double t,
                              const std::function<bool(const SpinConfig&)>& allowed) {
    const int n_sites = dom->size();
    const int n = 1 << n_sites;
    NeighborTable table = build_neighbor_table(*dom, bc);
    std::vector<double> logpi(static_cast<size_t>(n));
    std::vector<bool> ok(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) {
        SpinConfig c = SpinConfig::from_bits(dom, static_cast<uint64_t>(s));
        logpi[static_cast<size_t>(s)] = -p.beta * hamiltonian(c, p, bc);
        ok[static_cast<size_t>(s)] = allowed ? allowed(c) : true;
    }
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        SpinConfig c = SpinConfig::from_bits(dom, static_cast<uint64_t>(s));
        for (int x = 0; x < n_sites; ++x) {
            int target = s ^ (1 << x);
            if (!ok[static_cast<size_t>(target)]) continue;
            Q(s, target) = flip_rate(p, delta_energy(c, table, p, x));
        }
        Q(s, s) = -Q.row(s).sum();
    }
    Eigen::VectorXd d(n);
    for (int s = 0; s < n; ++s) d[s] = std::exp(0.5 * logpi[static_cast<size_t>(s)]);
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) S(i, j) = d[i] * Q(i, j) / d[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    Eigen::VectorXd ev = (es.eigenvalues().array() * t).exp();
    Eigen::MatrixXd Pt = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    std::vector<double> law(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
        law[static_cast<size_t>(j)] = Pt(static_cast<int>(init_bits), j) * d[j] / d[static_cast<int>(init_bits)];
    return law;
}

std::vector<double> empirical_law(DomainPtr dom, const BoundaryCondition& bc, const ModelParams& p,
                                  uint64_t init_bits, double t, int n_rep, uint64_t seed,
                                  const RegionPredicate* restriction) {
    std::vector<double> law(static_cast<size_t>(1) << dom->size(), 0.0);
    SpinConfig init = SpinConfig::from_bits(dom, init_bits);
    for (int rep = 0; rep < n_rep; ++rep) {
        Rng rng = Rng::for_replica(seed, static_cast<uint64_t>(rep), Rng::kDynamics);
        Trajectory traj = simulate(init, bc, p, t, rng, restriction);
        law[traj.final_state().bits()] += 1.0 / n_rep;
    }
    return law;
}

Trajectory synthetic_one_site(std::vector<double> flip_times, double horizon) {
    auto dom = std::make_shared<Domain>(Domain::rectangle(1, 1));
    Trajectory traj{SpinConfig::uniform(dom, -1), BoundaryCondition::minus(), mp(1.0, 0.2),
                    {}, horizon, 0, 0};
    int8_t s = -1;
    for (double t : flip_times) {
        s = static_cast<int8_t>(-s);
        traj.events.push_back({t, 0, s});
    }
    return traj;
}

} // namespace

TEST_CASE("determinism and trivial horizons") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(4, 4));
    auto bc = BoundaryCondition::minus();
    ModelParams p = mp(0.8, 0.3);
    SpinConfig init = SpinConfig::uniform(dom, -1);

    Rng r0(7, 0);
    CHECK(simulate(init, bc, p, 0.0, r0).events.empty());

    Rng r1(9, 1), r2(9, 1);
    Trajectory a = simulate(init, bc, p, 50.0, r1);
    Trajectory b = simulate(init, bc, p, 50.0, r2);
    REQUIRE(a.events.size() == b.events.size());
    CHECK(!a.events.empty());
    for (size_t k = 0; k < a.events.size(); ++k) {
        CHECK(a.events[k].time == b.events[k].time);
        CHECK(a.events[k].site == b.events[k].site);
        CHECK(a.events[k].spin == b.events[k].spin);
    }
    double prev = 0.0;
    for (const Event& e : a.events) {
        CHECK(e.time > prev);
        CHECK(e.time <= a.horizon);
        prev = e.time;
    }
    CHECK_THROWS_AS(simulate(init, bc, p, -1.0, r1), std::invalid_argument);
}

TEST_CASE("holding times at a pinned state are exponential with the exit rate") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(2, 2));
    auto bc = BoundaryCondition::minus();
    ModelParams p = mp(1.0, 0.2);
    SpinConfig minus = SpinConfig::uniform(dom, -1);

    NeighborTable table = build_neighbor_table(*dom, bc);
    double exit_rate = 0.0;
    for (int i = 0; i < 4; ++i) exit_rate += flip_rate(p, delta_energy(minus, table, p, i));

    Rng rng(21, 0);
    Trajectory traj = simulate(minus, bc, p, 60000.0, rng);
    std::vector<double> holds;
    SpinConfig s = minus;
    double t_prev = 0.0;
    for (const Event& e : traj.events) {
        if (s == minus) holds.push_back(e.time - t_prev);
        t_prev = e.time;
        s.s[e.site] = e.spin;
    }
    REQUIRE(holds.size() > 2000);
    KsResult ks = ks_test_exponential(holds, 1.0 / exit_rate);
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("small-system law matches the matrix exponential") {
    ModelParams p = mp(1.0, 0.2);

    // one site: two-state chain at t = 1
    auto one = std::make_shared<Domain>(Domain::rectangle(1, 1));
    auto bc = BoundaryCondition::minus();
    auto exact1 = exact_law(one, bc, p, 0, 1.0, nullptr);
    auto emp1 = empirical_law(one, bc, p, 0, 1.0, 100000, 31, nullptr);
    CHECK(total_variation(exact1, emp1) <= 0.01);

    // 2x2 at several times
    auto dom = std::make_shared<Domain>(Domain::rectangle(2, 2));
    for (double t : {0.5, 2.0, 5.0}) {
        auto exact = exact_law(dom, bc, p, 0, t, nullptr);
        auto emp = empirical_law(dom, bc, p, 0, t, 100000, 37 + static_cast<uint64_t>(10 * t), nullptr);
        CHECK(total_variation(exact, emp) <= 0.01);
    }
}

TEST_CASE("restricted dynamics realizes the restricted generator") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(2, 2));
    auto bc = BoundaryCondition::minus();
    ModelParams p = mp(1.0, 0.4);
    RegionPredicate region = region_magnetization_at_most(0.0);

    auto allowed = [](const SpinConfig& c) { return c.magnetization_density() <= 0.0; };
    auto exact = exact_law(dom, bc, p, 0, 2.0, allowed);
    auto emp = empirical_law(dom, bc, p, 0, 2.0, 100000, 53, &region);
    CHECK(total_variation(exact, emp) <= 0.01);

    // trajectories never leave the region
    Rng rng(11, 2);
    Trajectory traj = simulate(SpinConfig::uniform(dom, -1), bc, p, 200.0, rng, &region);
    SpinConfig s = traj.initial;
    CHECK(allowed(s));
    for (const Event& e : traj.events) {
        s.s[e.site] = e.spin;
        CHECK(allowed(s));
    }

    // starting outside the region is a precondition error
    SpinConfig plus = SpinConfig::uniform(dom, 1);
    CHECK_THROWS_AS(simulate(plus, bc, p, 1.0, rng, &region), std::invalid_argument);
}

TEST_CASE("region screens agree with full evaluation") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(8, 8));
    auto bc = BoundaryCondition::minus();
    ModelParams p = mp(1.0, 0.2);
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 256);
    FreeEnergyScalars sc = scalars_from_basis(*basis, 1.0);
    ModelParams pr = p;
    pr.B_plus = 2.0;

    std::vector<RegionPredicate> regions;
    regions.push_back(region_in_I(bc, p));
    regions.push_back(region_in_R(bc, pr, basis));
    regions.push_back(region_in_R_minus(bc, p, sc));
    regions.push_back(region_in_S(bc, pr, basis, sc));
    regions.push_back(region_magnetization_at_most(-0.5));
    regions.push_back(region_complement(region_magnetization_at_most(-0.5)));

    Rng rng(3, 3);
    for (int rep = 0; rep < 50; ++rep) {
        SpinConfig c = SpinConfig::uniform(dom, -1);
        double density = rep % 2 == 0 ? 0.05 : 0.3;
        for (auto& s : c.s) s = rng.uniform() < density ? int8_t(1) : int8_t(-1);
        HotState hot(&c);
        for (const auto& r : regions) CHECK(region_test(r, hot) == r.eval(c));
    }
}

TEST_CASE("local time") {
    Trajectory traj = synthetic_one_site({1.0, 3.0}, 5.0);
    RegionPredicate plus_state = region_magnetization_at_least(1.0);

    LocalTime lt = local_time(traj, plus_state);
    CHECK(lt.at(0.5) == doctest::Approx(0.0));
    CHECK(lt.at(2.0) == doctest::Approx(1.0));
    CHECK(lt.at(3.0) == doctest::Approx(2.0));
    CHECK(lt.at(5.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(lt.at(5.1), std::out_of_range);

    LocalTime always = local_time(traj, region_all());
    CHECK(always.at(4.2) == doctest::Approx(4.2));
    LocalTime never = local_time(traj, region_complement(region_all()));
    CHECK(never.at(5.0) == doctest::Approx(0.0));
}

TEST_CASE("killing times") {
    // region always occupied: the killing time is the exponential mark itself
    Trajectory still = synthetic_one_site({}, 1e9);
    Rng marks(101, 5);
    std::vector<double> ts;
    for (int k = 0; k < 10000; ++k) {
        TimedResult r = killing_time(still, region_complement(region_magnetization_at_least(1.0)),
                                     2.0, marks);
        REQUIRE(!r.censored);
        ts.push_back(r.time);
    }
    CHECK(ks_test_exponential(ts, 0.5).p_value > 0.01);

    // region never occupied: censored at the horizon
    Trajectory t2 = synthetic_one_site({}, 10.0);
    TimedResult c = killing_time(t2, region_magnetization_at_least(1.0), 2.0, marks);
    CHECK(c.censored);
    CHECK(c.time == 10.0);
    CHECK_THROWS_AS(killing_time(t2, region_all(), 0.0, marks), std::invalid_argument);

    // region occupied half the time: the killing time doubles the exponential
    std::vector<double> flips;
    for (double t = 0.005; t < 30.0; t += 0.005) flips.push_back(t);
    Trajectory half = synthetic_one_site(flips, 30.0);
    Rng marks2(77, 5);
    std::vector<double> doubled;
    int censored = 0;
    for (int k = 0; k < 4000; ++k) {
        TimedResult r = killing_time(half, region_magnetization_at_least(1.0), 1.0, marks2);
        if (r.censored) { ++censored; continue; }
        doubled.push_back(r.time);
    }
    CHECK(censored == 0);
    CHECK(ks_test_exponential(doubled, 2.0).p_value > 0.01);
}

TEST_CASE("hitting times") {
    Trajectory traj = synthetic_one_site({1.0, 3.0, 4.5}, 6.0);
    RegionPredicate plus_state = region_magnetization_at_least(1.0);
    RegionPredicate minus_state = region_magnetization_at_most(-1.0);

    CHECK(hitting_time(traj, minus_state).time == 0.0);
    TimedResult h = hitting_time(traj, plus_state);
    CHECK(!h.censored);
    CHECK(h.time == 1.0);

    Trajectory still = synthetic_one_site({}, 6.0);
    TimedResult miss = hitting_time(still, plus_state);
    CHECK(miss.censored);

    // enters the region at its 3rd event
    auto two = std::make_shared<Domain>(Domain::rectangle(2, 1));
    Trajectory three{SpinConfig::uniform(two, -1), BoundaryCondition::minus(), mp(1.0, 0.2),
                     {{0.5, 0, 1}, {1.5, 0, -1}, {2.25, 1, 1}}, 6.0, 0, 0};
    RegionPredicate second_up = region_custom("second-up", [](const SpinConfig& c) {
        return c.at(1) > 0;
    });
    CHECK(hitting_time(three, second_up).time == 2.25);
}

TEST_CASE("time averages") {
    Trajectory traj = synthetic_one_site({1.0}, 4.0);
    auto mag = [](const SpinConfig& c) { return c.magnetization_density(); };

    CHECK(time_average(traj, [](const SpinConfig&) { return 3.25; }, 0.0, 4.0) ==
          doctest::Approx(3.25));
    CHECK(time_average(traj, mag, 0.0, 2.0) == doctest::Approx(0.0));
    CHECK(time_average(traj, mag, 0.0, 1.5) == doctest::Approx(-1.0 / 3.0));
    CHECK(time_average(traj, mag, 1.0, 3.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(time_average(traj, mag, 3.0, 2.0), std::out_of_range);
    CHECK_THROWS_AS(time_average(traj, mag, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("batch exit times") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(1, 1));
    auto bc = BoundaryCondition::minus();
    ModelParams p = mp(1.0, 0.2);
    SpinConfig init = SpinConfig::uniform(dom, -1);
    RegionPredicate plus_state = region_magnetization_at_least(1.0);

    // n = 1 reduces to a single replica with the same streams
    BatchResult one = batch_exit_times(init, bc, p, nullptr, plus_state, 0.5, 1, 1e6, 99);
    TimedResult direct = run_killed_replica([&](Rng&) { return init; }, bc, p, nullptr, plus_state,
                                            0.5, 1e6, 99, 0);
    REQUIRE(one.samples.size() == 1);
    CHECK(one.samples[0].time == direct.time);

    // identical seeds give identical sample lists; threads do not matter
    BatchResult a = batch_exit_times(init, bc, p, nullptr, plus_state, 0.5, 64, 1e6, 123, 1);
    BatchResult b = batch_exit_times(init, bc, p, nullptr, plus_state, 0.5, 64, 1e6, 123, 3);
    REQUIRE(a.samples.size() == b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].time == b.samples[i].time);
        CHECK(a.samples[i].censored == b.samples[i].censored);
    }

    // exact mean of the killed two-state chain, started from minus
    NeighborTable table = build_neighbor_table(*dom, bc);
    double up = flip_rate(p, delta_energy(init, table, p, 0));
    SpinConfig topc = SpinConfig::uniform(dom, 1);
    double down = flip_rate(p, delta_energy(topc, table, p, 0));
    double lambda = 0.5;
    double exact_mean = ((down + lambda) / up + 1.0) / lambda;
    BatchResult big = batch_exit_times(init, bc, p, nullptr, plus_state, lambda, 4000, 1e7, 7, 4);
    CHECK(big.censored == 0);
    std::vector<double> xs;
    for (const TimedResult& r : big.samples) xs.push_back(r.time);
    Summary s = summarize(xs);
    CHECK(std::abs(s.mean - exact_mean) <= 3.0 * s.sd / std::sqrt(static_cast<double>(s.n)));

    // stream independence: killing an always-inside region gives iid Exp(1/lambda)
    BatchResult pool = batch_exit_times(init, bc, p, nullptr, region_all(), 1.0, 10000, 1e6, 17, 4);
    std::vector<double> ys;
    for (const TimedResult& r : pool.samples) ys.push_back(r.time);
    CHECK(ks_test_exponential(ys, 1.0).p_value > 0.01);
}

TEST_CASE("event log round trip") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(4, 3));
    auto bc = BoundaryCondition::split(0.3, {1.5, 1.0});
    ModelParams p = mp(0.9, 0.25);
    Rng rng(5, 0);
    SpinConfig init = SpinConfig::from_bits(dom, 0x5a3);
    Trajectory traj = simulate(init, bc, p, 40.0, rng);
    traj.seed = 5;
    traj.replica = 2;
    REQUIRE(!traj.events.empty());

    std::stringstream ss;
    write_event_log(ss, traj);
    Trajectory back = read_event_log(ss);
    CHECK(back.initial == traj.initial);
    CHECK(back.horizon == traj.horizon);
    CHECK(back.seed == traj.seed);
    CHECK(back.replica == traj.replica);
    CHECK(back.params.beta == traj.params.beta);
    CHECK(back.params.h == traj.params.h);
    CHECK(back.bc.kind() == BoundaryCondition::Kind::Split);
    REQUIRE(back.events.size() == traj.events.size());
    for (size_t k = 0; k < traj.events.size(); ++k) {
        CHECK(back.events[k].time == traj.events[k].time);
        CHECK(back.events[k].site == traj.events[k].site);
        CHECK(back.events[k].spin == traj.events[k].spin);
    }
    CHECK(back.final_state() == traj.final_state());

    // truncation and corruption are rejected
    std::string blob = ss.str();
    std::stringstream cut(blob.substr(0, blob.size() - 5));
    CHECK_THROWS_AS(read_event_log(cut), std::runtime_error);
    std::string bad = blob;
    bad[0] = 'X';
    std::stringstream badm(bad);
    CHECK_THROWS_AS(read_event_log(badm), std::runtime_error);

    // unserializable setups are argument errors
    ModelParams pc = p;
    pc.family = RateFamily::CustomBounded;
    pc.custom_rate = [](double, double) { return 0.5; };
    pc.w_min = 0.1;
    pc.w_max = 1.0;
    Trajectory tc = traj;
    tc.params = pc;
    std::stringstream sink;
    CHECK_THROWS_AS(write_event_log(sink, tc), std::invalid_argument);
}
