// Event-driven continuous-time single-spin-flip dynamics with optional
// restriction to a region, local times, killing and hitting times, and
// binary event logs.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "isinglab/contour.hpp"
#include "isinglab/model.hpp"
#include "isinglab/rng.hpp"

namespace ilab {

struct Event {
    double time = 0.0;
    uint32_t site = 0;
    int8_t spin = 0; // value after the flip
};

struct Trajectory {
    SpinConfig initial;
    BoundaryCondition bc;
    ModelParams params;
    std::vector<Event> events; // strictly increasing times, all <= horizon
    double horizon = 0.0;
    uint64_t seed = 0;
    uint32_t replica = 0;

    SpinConfig state_at(double t) const; // latest state with event time <= t
    SpinConfig final_state() const;
};

// Incremental statistics maintained by the simulator, cheap enough to consult
// on every proposed flip. Region screens run against the proposed state.
class HotState {
public:
    explicit HotState(SpinConfig* cfg);
    const SpinConfig& config() const { return *cfg_; }
    const Domain& domain() const { return *cfg_->domain; }
    int plus_count() const { return plus_; }
    long long magnetization() const { return 2LL * plus_ - cfg_->domain->size(); }
    double magnetization_density() const {
        return static_cast<double>(magnetization()) / cfg_->domain->size();
    }
    // bounding box of plus sites; false when there are none
    bool plus_bbox(int& x0, int& y0, int& x1, int& y1) const;
    double plus_bbox_area() const; // 0 when there are no plus sites
    // length of the longest block of consecutive rows (columns) that each
    // contain at least min_count plus sites. Any single plus cluster occupies
    // such a block at least as tall/wide as its own bbox (with min_count = 2,
    // as its rows at least two cells wide), so these bound the largest
    // connected droplet from above.
    int longest_occupied_row_run(int min_count = 1) const;
    int longest_occupied_col_run(int min_count = 1) const;

    void apply_flip(int site); // keeps the counts in sync with the config
    void rebuild();            // recompute everything; used by audits
    bool consistent() const;   // counts match a from-scratch recomputation

private:
    SpinConfig* cfg_;
    int plus_ = 0;
    std::vector<int> row_plus_, col_plus_; // indexed from the domain bbox
};

// Pure, deterministic predicate over configurations. `screen` is an optional
// exact fast path: +1 definitely inside, -1 definitely outside, 0 unknown
// (fall back to `eval`).
struct RegionPredicate {
    std::string name;
    std::function<bool(const SpinConfig&)> eval;
    std::function<int(const HotState&)> screen;
};

bool region_test(const RegionPredicate& r, const HotState& hot);

RegionPredicate region_all();
RegionPredicate region_custom(std::string name, std::function<bool(const SpinConfig&)> eval);
RegionPredicate region_complement(RegionPredicate r);
// thresholds on magnetization density m(sigma)/N
RegionPredicate region_magnetization_at_most(double density);
RegionPredicate region_magnetization_at_least(double density);
// contour-based regions; screens decide via the plus bounding box when the
// box is too small to host a vertebrate contour
RegionPredicate region_in_I(BoundaryCondition bc, ModelParams p);
RegionPredicate region_in_R(BoundaryCondition bc, ModelParams p, WulffBasisPtr basis);
RegionPredicate region_in_R_minus(BoundaryCondition bc, ModelParams p, FreeEnergyScalars scalars);
RegionPredicate region_in_S(BoundaryCondition bc, ModelParams p, WulffBasisPtr basis,
                            FreeEnergyScalars scalars);

enum class StepOutcome { Flip, Suppressed, Horizon };

// One continuous-time trajectory, advanced event by event. Site selection
// uses a binary-indexed tree over per-site rates; restriction is realized by
// thinning: the proposed flip is suppressed when the target configuration
// leaves the region, which yields exactly the restricted generator. Every
// 10^4 proposals the incremental state is audited against a full recompute.
class Simulator {
public:
    Simulator(SpinConfig init, BoundaryCondition bc, ModelParams params,
              const RegionPredicate* restriction = nullptr);

    StepOutcome step(Rng& rng, double horizon);
    double time() const { return time_; }
    const SpinConfig& state() const { return state_; }
    const HotState& hot() const { return hot_; }
    int last_site() const { return last_site_; } // -1 unless the last step flipped
    double total_rate() const;
    uint64_t proposals() const { return proposals_; }

private:
    void refresh_rates_around(int site);
    void audit();

    SpinConfig state_;
    BoundaryCondition bc_;
    ModelParams params_;
    const RegionPredicate* restriction_;
    NeighborTable table_;
    HotState hot_;
    std::vector<double> tree_, rates_;
    double time_ = 0.0;
    int last_site_ = -1;
    uint64_t proposals_ = 0;
};

Trajectory simulate(const SpinConfig& init, const BoundaryCondition& bc, const ModelParams& params,
                    double horizon, Rng& rng, const RegionPredicate* restriction = nullptr);

// Lebesgue time spent in a region, as a piecewise-linear function of time
// with slopes 0 and 1.
struct LocalTime {
    std::vector<double> times;  // breakpoints, starting at 0
    std::vector<double> values; // local time at the breakpoints
    double horizon = 0.0;
    double at(double t) const; // throws std::out_of_range beyond the horizon
};
LocalTime local_time(const Trajectory& traj, const RegionPredicate& region);

struct TimedResult {
    double time = 0.0;
    bool censored = false;
};

// Killing time with one exponential mark of mean 1/lambda drawn from
// `mark_rng`: the first time the local time in `region` reaches the mark.
TimedResult killing_time(const Trajectory& traj, const RegionPredicate& region, double lambda,
                         Rng& mark_rng);

// First time the trajectory state lies in the region (0 if it starts there).
TimedResult hitting_time(const Trajectory& traj, const RegionPredicate& region);

// (1/theta) * integral of f over [t, t+theta] along the trajectory.
double time_average(const Trajectory& traj, const std::function<double(const SpinConfig&)>& f,
                    double t, double theta);

// Online single-replica run: restricted dynamics plus killing clock, without
// storing the trajectory. Streams are derived from (seed, replica).
TimedResult run_killed_replica(const std::function<SpinConfig(Rng&)>& sampler,
                               const BoundaryCondition& bc, const ModelParams& params,
                               const RegionPredicate* restriction,
                               const RegionPredicate& kill_region, double lambda, double horizon,
                               uint64_t seed, uint32_t replica);

struct BatchResult {
    std::vector<TimedResult> samples; // ordered by replica index
    int censored = 0;
};

BatchResult batch_exit_times(const std::function<SpinConfig(Rng&)>& sampler,
                             const BoundaryCondition& bc, const ModelParams& params,
                             const RegionPredicate* restriction, const RegionPredicate& kill_region,
                             double lambda, int n_replicas, double horizon, uint64_t seed,
                             int threads = 1);
BatchResult batch_exit_times(const SpinConfig& init, const BoundaryCondition& bc,
                             const ModelParams& params, const RegionPredicate* restriction,
                             const RegionPredicate& kill_region, double lambda, int n_replicas,
                             double horizon, uint64_t seed, int threads = 1);

// Binary event log, magic "MGEV1": u32 header length, JSON header (domain,
// boundary, params, seed, initial state), u64 event count, then packed
// little-endian records (f64 time, u32 site, i8 spin).
void write_event_log(std::ostream& os, const Trajectory& traj);
Trajectory read_event_log(std::istream& is);

} // namespace ilab
