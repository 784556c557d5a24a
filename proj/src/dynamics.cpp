#include "isinglab/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "json.hpp"

namespace ilab {

namespace {

// binary-indexed tree over per-site rates, 1-indexed storage
void fen_add(std::vector<double>& t, size_t i, double delta) {
    for (++i; i < t.size(); i += i & (~i + 1)) t[i] += delta;
}

double fen_total(const std::vector<double>& t) {
    double s = 0.0;
    for (size_t i = t.size() - 1; i > 0; i -= i & (~i + 1)) s += t[i];
    return s;
}

size_t fen_select(const std::vector<double>& t, double u, size_t n) {
    size_t pos = 0;
    size_t mask = std::bit_floor(t.size() - 1);
    for (; mask > 0; mask >>= 1) {
        size_t next = pos + mask;
        if (next < t.size() && t[next] <= u) {
            u -= t[next];
            pos = next;
        }
    }
    return std::min(pos, n - 1);
}

} // namespace

HotState::HotState(SpinConfig* cfg) : cfg_(cfg) { rebuild(); }

void HotState::rebuild() {
    const Domain& d = *cfg_->domain;
    row_plus_.assign(static_cast<size_t>(d.y1() - d.y0() + 1), 0);
    col_plus_.assign(static_cast<size_t>(d.x1() - d.x0() + 1), 0);
    plus_ = 0;
    for (int i = 0; i < d.size(); ++i)
        if (cfg_->at(i) > 0) {
            ++plus_;
            Coord c = d.site(i);
            ++row_plus_[static_cast<size_t>(c.y - d.y0())];
            ++col_plus_[static_cast<size_t>(c.x - d.x0())];
        }
}

void HotState::apply_flip(int site) {
    cfg_->flip(site);
    const Domain& d = *cfg_->domain;
    Coord c = d.site(site);
    int delta = cfg_->at(site) > 0 ? 1 : -1;
    plus_ += delta;
    row_plus_[static_cast<size_t>(c.y - d.y0())] += delta;
    col_plus_[static_cast<size_t>(c.x - d.x0())] += delta;
}

bool HotState::plus_bbox(int& x0, int& y0, int& x1, int& y1) const {
    if (plus_ == 0) return false;
    const Domain& d = *cfg_->domain;
    size_t a = 0;
    while (col_plus_[a] == 0) ++a;
    size_t b = col_plus_.size() - 1;
    while (col_plus_[b] == 0) --b;
    x0 = d.x0() + static_cast<int>(a);
    x1 = d.x0() + static_cast<int>(b);
    a = 0;
    while (row_plus_[a] == 0) ++a;
    b = row_plus_.size() - 1;
    while (row_plus_[b] == 0) --b;
    y0 = d.y0() + static_cast<int>(a);
    y1 = d.y0() + static_cast<int>(b);
    return true;
}

double HotState::plus_bbox_area() const {
    int x0, y0, x1, y1;
    if (!plus_bbox(x0, y0, x1, y1)) return 0.0;
    return static_cast<double>(x1 - x0 + 1) * static_cast<double>(y1 - y0 + 1);
}

namespace {
int longest_run_at_least(const std::vector<int>& v, int min_count) {
    int best = 0, run = 0;
    for (int c : v) {
        run = c >= min_count ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}
} // namespace

int HotState::longest_occupied_row_run(int min_count) const {
    return longest_run_at_least(row_plus_, min_count);
}
int HotState::longest_occupied_col_run(int min_count) const {
    return longest_run_at_least(col_plus_, min_count);
}

bool HotState::consistent() const {
    SpinConfig copy = *cfg_;
    HotState fresh(&copy);
    return fresh.plus_ == plus_ && fresh.row_plus_ == row_plus_ && fresh.col_plus_ == col_plus_;
}

bool region_test(const RegionPredicate& r, const HotState& hot) {
    if (r.screen) {
        int s = r.screen(hot);
        if (s != 0) return s > 0;
    }
    return r.eval(hot.config());
}

RegionPredicate region_all() {
    return {"all", [](const SpinConfig&) { return true; },
            [](const HotState&) { return 1; }};
}

RegionPredicate region_custom(std::string name, std::function<bool(const SpinConfig&)> eval) {
    return {std::move(name), std::move(eval), nullptr};
}

RegionPredicate region_complement(RegionPredicate r) {
    RegionPredicate out;
    out.name = "not(" + r.name + ")";
    out.eval = [inner = r.eval](const SpinConfig& c) { return !inner(c); };
    if (r.screen)
        out.screen = [inner = r.screen](const HotState& h) { return -inner(h); };
    return out;
}

RegionPredicate region_magnetization_at_most(double density) {
    RegionPredicate out;
    out.name = "m<=" + std::to_string(density);
    out.eval = [density](const SpinConfig& c) { return c.magnetization_density() <= density; };
    out.screen = [density](const HotState& h) {
        return h.magnetization_density() <= density ? 1 : -1;
    };
    return out;
}

RegionPredicate region_magnetization_at_least(double density) {
    RegionPredicate out;
    out.name = "m>=" + std::to_string(density);
    out.eval = [density](const SpinConfig& c) { return c.magnetization_density() >= density; };
    out.screen = [density](const HotState& h) {
        return h.magnetization_density() >= density ? 1 : -1;
    };
    return out;
}

// Any contour of a configuration encloses only cells inside the bounding box
// of the plus spins, so a small box rules vertebrate contours out.

RegionPredicate region_in_I(BoundaryCondition bc, ModelParams p) {
    RegionPredicate out;
    out.name = "I";
    double thr = p.vertebrate_threshold();
    out.eval = [bc, p](const SpinConfig& c) { return in_I(c, bc, p); };
    out.screen = [thr](const HotState& h) { return h.plus_bbox_area() < thr ? 1 : 0; };
    return out;
}

RegionPredicate region_in_R(BoundaryCondition bc, ModelParams p, WulffBasisPtr basis) {
    RegionPredicate out;
    out.name = "R";
    double thr = p.vertebrate_threshold();
    out.eval = [bc, p, basis](const SpinConfig& c) { return in_R(c, bc, p, basis); };
    out.screen = [thr](const HotState& h) { return h.plus_bbox_area() < thr ? 1 : 0; };
    return out;
}

RegionPredicate region_in_R_minus(BoundaryCondition bc, ModelParams p,
                                  FreeEnergyScalars scalars) {
    RegionPredicate out;
    out.name = "R-";
    double cap = (scalars.B_c / p.h) * (scalars.B_c / p.h);
    out.eval = [bc, p, scalars](const SpinConfig& c) { return in_R_minus(c, bc, p, scalars); };
    out.screen = [cap](const HotState& h) { return h.plus_bbox_area() < cap ? 1 : 0; };
    return out;
}

RegionPredicate region_in_S(BoundaryCondition bc, ModelParams p, WulffBasisPtr basis,
                            FreeEnergyScalars scalars) {
    double need = derived_B_minus(p, scalars.B_c);
    if (need <= 0.0) throw std::invalid_argument("derived B_minus must be positive");
    std::vector<Coord> shape = discretized_wulff_polyomino(basis, need / p.h);
    PolyominoProfile prof = polyomino_profile(shape);
    auto fits = polyomino_interior_tester(std::move(shape));
    RegionPredicate out;
    out.name = "S";
    out.eval = [bc, fits](const SpinConfig& c) { return fits(extract_contours(c, bc)); };
    // necessary conditions on any configuration whose contour interior holds a
    // translate of the reference polyomino: enough bbox area, and consecutive
    // occupied rows/columns matching the polyomino profile (rows of the shape
    // at least two cells wide pin two distinct plus sites on the inner
    // boundary of the enclosing contour)
    out.screen = [prof](const HotState& h) {
        if (h.plus_bbox_area() < static_cast<double>(prof.cells)) return -1;
        if (h.longest_occupied_row_run() < prof.row_runs1 ||
            h.longest_occupied_col_run() < prof.col_runs1)
            return -1;
        if (h.longest_occupied_row_run(2) < prof.row_runs2 ||
            h.longest_occupied_col_run(2) < prof.col_runs2)
            return -1;
        return 0;
    };
    return out;
}

Simulator::Simulator(SpinConfig init, BoundaryCondition bc, ModelParams params,
                     const RegionPredicate* restriction)
    : state_(std::move(init)), bc_(std::move(bc)), params_(std::move(params)),
      restriction_(restriction), table_(build_neighbor_table(*state_.domain, bc_)),
      hot_(&state_) {
    params_.validate();
    if (state_.domain->size() == 0) throw std::invalid_argument("empty domain");
    if (restriction_ && !restriction_->eval(state_))
        throw std::invalid_argument("initial configuration lies outside the restriction region");
    const size_t n = static_cast<size_t>(state_.domain->size());
    rates_.resize(n);
    tree_.assign(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        rates_[i] = flip_rate(params_, delta_energy(state_, table_, params_, static_cast<int>(i)));
        fen_add(tree_, i, rates_[i]);
    }
}

double Simulator::total_rate() const { return fen_total(tree_); }

void Simulator::refresh_rates_around(int site) {
    auto update = [&](int i) {
        double r = flip_rate(params_, delta_energy(state_, table_, params_, i));
        fen_add(tree_, static_cast<size_t>(i), r - rates_[static_cast<size_t>(i)]);
        rates_[static_cast<size_t>(i)] = r;
    };
    update(site);
    for (int k = 0; k < 4; ++k) {
        int32_t e = table_.nbr[static_cast<size_t>(4 * site + k)];
        if (e >= 0) update(e);
    }
}

void Simulator::audit() {
    if (!hot_.consistent()) throw std::logic_error("incremental spin statistics drifted");
    if (restriction_ && !restriction_->eval(state_))
        throw std::logic_error("restricted dynamics left its region");
    // refresh all rates to cancel accumulated floating-point drift
    const size_t n = rates_.size();
    tree_.assign(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        rates_[i] = flip_rate(params_, delta_energy(state_, table_, params_, static_cast<int>(i)));
        fen_add(tree_, i, rates_[i]);
    }
}

StepOutcome Simulator::step(Rng& rng, double horizon) {
    last_site_ = -1;
    double total = fen_total(tree_);
    double dt = rng.exponential(1.0 / total);
    if (time_ + dt > horizon) {
        time_ = horizon;
        return StepOutcome::Horizon;
    }
    time_ += dt;
    ++proposals_;
    int site = static_cast<int>(fen_select(tree_, rng.uniform() * total, rates_.size()));

    hot_.apply_flip(site); // tentative
    bool accept = true;
    if (restriction_) {
        int sc = restriction_->screen ? restriction_->screen(hot_) : 0;
        accept = sc != 0 ? sc > 0 : restriction_->eval(state_);
    }
    if (accept) {
        refresh_rates_around(site);
        last_site_ = site;
    } else {
        hot_.apply_flip(site); // revert the suppressed proposal
    }
    if (proposals_ % 10000 == 0) audit();
    return accept ? StepOutcome::Flip : StepOutcome::Suppressed;
}

Trajectory simulate(const SpinConfig& init, const BoundaryCondition& bc, const ModelParams& params,
                    double horizon, Rng& rng, const RegionPredicate* restriction) {
    if (horizon < 0.0) throw std::invalid_argument("horizon must be nonnegative");
    Simulator sim(init, bc, params, restriction);
    Trajectory traj{init, bc, params, {}, horizon, rng.seed(), 0, };
    while (true) {
        StepOutcome o = sim.step(rng, horizon);
        if (o == StepOutcome::Horizon) break;
        if (o == StepOutcome::Flip)
            traj.events.push_back({sim.time(), static_cast<uint32_t>(sim.last_site()),
                                   sim.state().at(sim.last_site())});
    }
    return traj;
}

SpinConfig Trajectory::state_at(double t) const {
    SpinConfig s = initial;
    for (const Event& e : events) {
        if (e.time > t) break;
        s.s[e.site] = e.spin;
    }
    return s;
}

SpinConfig Trajectory::final_state() const {
    SpinConfig s = initial;
    for (const Event& e : events) s.s[e.site] = e.spin;
    return s;
}

double LocalTime::at(double t) const {
    if (t < 0.0 || t > horizon * (1.0 + 1e-12) + 1e-12)
        throw std::out_of_range("local time queried beyond the horizon");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return values.front();
    if (it == times.end()) return values.back();
    size_t k = static_cast<size_t>(it - times.begin());
    double t0 = times[k - 1], t1 = times[k];
    double v0 = values[k - 1], v1 = values[k];
    if (t1 <= t0) return v1;
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

LocalTime local_time(const Trajectory& traj, const RegionPredicate& region) {
    LocalTime lt;
    lt.horizon = traj.horizon;
    lt.times = {0.0};
    lt.values = {0.0};
    SpinConfig s = traj.initial;
    bool in = region.eval(s);
    double t_prev = 0.0, acc = 0.0;
    for (const Event& e : traj.events) {
        if (in) acc += e.time - t_prev;
        t_prev = e.time;
        s.s[e.site] = e.spin;
        bool now = region.eval(s);
        if (now != in) {
            lt.times.push_back(e.time);
            lt.values.push_back(acc);
            in = now;
        }
    }
    if (in) acc += traj.horizon - t_prev;
    if (lt.times.back() < traj.horizon || lt.values.back() != acc) {
        lt.times.push_back(traj.horizon);
        lt.values.push_back(acc);
    }
    return lt;
}

TimedResult killing_time(const Trajectory& traj, const RegionPredicate& region, double lambda,
                         Rng& mark_rng) {
    if (lambda <= 0.0) throw std::invalid_argument("killing rate must be positive");
    double mark = mark_rng.exponential(1.0 / lambda);
    LocalTime lt = local_time(traj, region);
    if (lt.values.back() < mark) return {traj.horizon, true};
    for (size_t k = 1; k < lt.times.size(); ++k) {
        if (lt.values[k] >= mark) {
            double v0 = lt.values[k - 1], v1 = lt.values[k];
            double t0 = lt.times[k - 1], t1 = lt.times[k];
            double frac = v1 > v0 ? (mark - v0) / (v1 - v0) : 1.0;
            return {t0 + frac * (t1 - t0), false};
        }
    }
    return {traj.horizon, true};
}

TimedResult hitting_time(const Trajectory& traj, const RegionPredicate& region) {
    SpinConfig s = traj.initial;
    if (region.eval(s)) return {0.0, false};
    for (const Event& e : traj.events) {
        s.s[e.site] = e.spin;
        if (region.eval(s)) return {e.time, false};
    }
    return {traj.horizon, true};
}

double time_average(const Trajectory& traj, const std::function<double(const SpinConfig&)>& f,
                    double t, double theta) {
    if (theta <= 0.0) throw std::invalid_argument("window length must be positive");
    if (t < 0.0 || t + theta > traj.horizon * (1.0 + 1e-12) + 1e-12)
        throw std::out_of_range("averaging window exceeds the horizon");
    double t_end = t + theta;
    SpinConfig s = traj.initial;
    double acc = 0.0, seg_start = 0.0;
    auto add = [&](double a, double b, const SpinConfig& state) {
        double lo = std::max(a, t), hi = std::min(b, t_end);
        if (hi > lo) acc += f(state) * (hi - lo);
    };
    for (const Event& e : traj.events) {
        add(seg_start, e.time, s);
        s.s[e.site] = e.spin;
        seg_start = e.time;
        if (seg_start >= t_end) break;
    }
    add(seg_start, traj.horizon, s);
    return acc / theta;
}

TimedResult run_killed_replica(const std::function<SpinConfig(Rng&)>& sampler,
                               const BoundaryCondition& bc, const ModelParams& params,
                               const RegionPredicate* restriction,
                               const RegionPredicate& kill_region, double lambda, double horizon,
                               uint64_t seed, uint32_t replica) {
    if (lambda <= 0.0) throw std::invalid_argument("killing rate must be positive");
    Rng init_rng = Rng::for_replica(seed, replica, Rng::kInit);
    Rng dyn_rng = Rng::for_replica(seed, replica, Rng::kDynamics);
    Rng kill_rng = Rng::for_replica(seed, replica, Rng::kKilling);
    double mark = kill_rng.exponential(1.0 / lambda);

    Simulator sim(sampler(init_rng), bc, params, restriction);
    bool in = region_test(kill_region, sim.hot());
    double ell = 0.0;
    while (true) {
        double seg_start = sim.time();
        StepOutcome o = sim.step(dyn_rng, horizon);
        if (in) {
            double seg = sim.time() - seg_start;
            if (ell + seg >= mark) return {seg_start + (mark - ell), false};
            ell += seg;
        }
        if (o == StepOutcome::Horizon) return {horizon, true};
        if (o == StepOutcome::Flip) in = region_test(kill_region, sim.hot());
    }
}

BatchResult batch_exit_times(const std::function<SpinConfig(Rng&)>& sampler,
                             const BoundaryCondition& bc, const ModelParams& params,
                             const RegionPredicate* restriction, const RegionPredicate& kill_region,
                             double lambda, int n_replicas, double horizon, uint64_t seed,
                             int threads) {
    if (n_replicas < 1) throw std::invalid_argument("need at least one replica");
    BatchResult out;
    out.samples.resize(static_cast<size_t>(n_replicas));
    threads = std::clamp(threads, 1, n_replicas);
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        try {
            for (int i = next.fetch_add(1); i < n_replicas; i = next.fetch_add(1))
                out.samples[static_cast<size_t>(i)] =
                    run_killed_replica(sampler, bc, params, restriction, kill_region, lambda,
                                       horizon, seed, static_cast<uint32_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    for (const TimedResult& r : out.samples) out.censored += r.censored ? 1 : 0;
    return out;
}

BatchResult batch_exit_times(const SpinConfig& init, const BoundaryCondition& bc,
                             const ModelParams& params, const RegionPredicate* restriction,
                             const RegionPredicate& kill_region, double lambda, int n_replicas,
                             double horizon, uint64_t seed, int threads) {
    return batch_exit_times([init](Rng&) { return init; }, bc, params, restriction, kill_region,
                            lambda, n_replicas, horizon, seed, threads);
}

namespace {

void put_raw(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_raw(os, b, 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_raw(os, b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<uint64_t>(v)); }

void get_raw(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n))
        throw std::runtime_error("truncated event log");
}

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    get_raw(is, b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    get_raw(is, b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

const char kMagic[5] = {'M', 'G', 'E', 'V', '1'};

std::string family_name(RateFamily f) {
    switch (f) {
        case RateFamily::Metropolis: return "metropolis";
        case RateFamily::HeatBath: return "heat_bath";
        default: return "custom";
    }
}

} // namespace

void write_event_log(std::ostream& os, const Trajectory& traj) {
    const Domain& d = *traj.initial.domain;
    nlohmann::json h;
    if (d.kind() == DomainKind::Rectangle) {
        h["domain"] = {{"kind", "rectangle"}, {"w", d.width()}, {"h", d.height()}};
    } else {
        nlohmann::json sites = nlohmann::json::array();
        for (Coord c : d.sites()) sites.push_back({c.x, c.y});
        h["domain"] = {{"kind", "sites"}, {"sites", std::move(sites)}};
    }
    switch (traj.bc.kind()) {
        case BoundaryCondition::Kind::UniformMinus: h["bc"] = {{"kind", "minus"}}; break;
        case BoundaryCondition::Kind::UniformPlus: h["bc"] = {{"kind", "plus"}}; break;
        case BoundaryCondition::Kind::Split:
            h["bc"] = {{"kind", "split"},
                       {"theta", traj.bc.theta()},
                       {"cx", traj.bc.split_center().x},
                       {"cy", traj.bc.split_center().y}};
            break;
        default:
            throw std::invalid_argument("this boundary condition cannot be serialized");
    }
    if (traj.params.family == RateFamily::CustomBounded)
        throw std::invalid_argument("custom rate families cannot be serialized");
    h["params"] = {{"beta", traj.params.beta},   {"h", traj.params.h},
                   {"b", traj.params.b_exp},     {"r", traj.params.r_exp},
                   {"B_plus", traj.params.B_plus}, {"family", family_name(traj.params.family)}};
    h["horizon"] = traj.horizon;
    h["seed"] = traj.seed;
    h["replica"] = traj.replica;
    std::vector<int> bits(static_cast<size_t>(d.size()));
    for (int i = 0; i < d.size(); ++i) bits[static_cast<size_t>(i)] = traj.initial.at(i) > 0 ? 1 : 0;
    h["initial"] = bits;

    std::string header = h.dump();
    put_raw(os, kMagic, 5);
    put_u32(os, static_cast<uint32_t>(header.size()));
    put_raw(os, header.data(), header.size());
    put_u64(os, traj.events.size());
    for (const Event& e : traj.events) {
        put_f64(os, e.time);
        put_u32(os, e.site);
        char spin = static_cast<char>(e.spin);
        put_raw(os, &spin, 1);
    }
}

Trajectory read_event_log(std::istream& is) {
    char magic[5];
    get_raw(is, magic, 5);
    if (!std::equal(magic, magic + 5, kMagic)) throw std::runtime_error("bad event-log magic");
    uint32_t hlen = get_u32(is);
    std::string header(hlen, '\0');
    get_raw(is, header.data(), hlen);
    nlohmann::json h = nlohmann::json::parse(header);

    DomainPtr domain;
    if (h.at("domain").at("kind") == "rectangle") {
        domain = std::make_shared<Domain>(
            Domain::rectangle(h["domain"]["w"].get<int>(), h["domain"]["h"].get<int>()));
    } else {
        std::vector<Coord> sites;
        for (const auto& s : h["domain"]["sites"]) sites.push_back({s[0].get<int>(), s[1].get<int>()});
        domain = std::make_shared<Domain>(Domain::explicit_sites(std::move(sites)));
    }
    BoundaryCondition bc = BoundaryCondition::minus();
    std::string bk = h.at("bc").at("kind").get<std::string>();
    if (bk == "plus") bc = BoundaryCondition::plus();
    else if (bk == "split")
        bc = BoundaryCondition::split(h["bc"]["theta"].get<double>(),
                                      {h["bc"]["cx"].get<double>(), h["bc"]["cy"].get<double>()});
    else if (bk != "minus") throw std::runtime_error("unknown boundary kind in event log");

    ModelParams p;
    p.beta = h.at("params").at("beta").get<double>();
    p.h = h["params"]["h"].get<double>();
    p.b_exp = h["params"]["b"].get<double>();
    p.r_exp = h["params"]["r"].get<double>();
    p.B_plus = h["params"]["B_plus"].get<double>();
    std::string fam = h["params"]["family"].get<std::string>();
    if (fam == "metropolis") p.family = RateFamily::Metropolis;
    else if (fam == "heat_bath") p.family = RateFamily::HeatBath;
    else throw std::runtime_error("unknown rate family in event log");

    Trajectory traj{SpinConfig::uniform(domain, -1), bc, p, {}, h.at("horizon").get<double>(),
                    h.at("seed").get<uint64_t>(), h.at("replica").get<uint32_t>()};
    const auto& bits = h.at("initial");
    if (static_cast<int>(bits.size()) != domain->size())
        throw std::runtime_error("initial state size mismatch in event log");
    for (int i = 0; i < domain->size(); ++i)
        traj.initial.s[static_cast<size_t>(i)] = bits[static_cast<size_t>(i)].get<int>() ? 1 : -1;

    uint64_t n = get_u64(is);
    traj.events.reserve(n);
    double prev = 0.0;
    for (uint64_t k = 0; k < n; ++k) {
        Event e;
        e.time = get_f64(is);
        e.site = get_u32(is);
        char spin;
        get_raw(is, &spin, 1);
        e.spin = static_cast<int8_t>(spin);
        if (e.time <= prev || e.time > traj.horizon || e.site >= static_cast<uint32_t>(domain->size()) ||
            (e.spin != 1 && e.spin != -1))
            throw std::runtime_error("corrupt event record");
        prev = e.time;
        traj.events.push_back(e);
    }
    return traj;
}

} // namespace ilab
