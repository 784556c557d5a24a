#pragma once
// Path ensembles and flow-based bounds: canonical paths, the congestion
// bound on relaxation times, the single-site congestion lemma, and block
// paths built from exact conditional Gibbs milestones.

#include <cstdint>
#include <functional>
#include <vector>

#include "isinglab/chain.hpp"
#include "isinglab/potential.hpp"

namespace ilab {

// A random path of configurations with prescribed endpoint laws.  sample
// returns the visited configurations in order (length 0 paths are a single
// configuration).  enumerate, when present, visits every support path with
// its probability; it stays null for ensembles that can only be sampled.
struct PathEnsemble {
    int length_bound = 0; // sup of |Pi| over the support, in edges
    std::function<std::vector<SpinConfig>(Rng&)> sample;
    std::function<void(const std::function<void(const std::vector<SpinConfig>&, double)>&)>
        enumerate;
};

// pi_{sigma,sigma'} flips the disagreement sites in the given order; the
// pair (sigma, sigma') carries weight mu(sigma) mu(sigma').  Every
// intermediate configuration must stay inside the chain.
PathEnsemble canonical_paths(const ChainModel& chain, const std::vector<int>& site_order);

struct SinclairBound {
    double value = 0;     // upper bound on 1/gamma
    double std_error = 0; // 0 when computed exactly
    bool exact = false;
};

// (max path length / w_min) * max_e P(e in Pi) / (mu(i) v mu(j)), with edge
// membership counted in either direction.  Exact by support enumeration on
// small chains, otherwise sampled on a fixed budget with the Wilson upper
// confidence value per edge.
SinclairBound sinclair_bound(const ChainModel& chain, const PathEnsemble& ensemble, Rng& rng,
                             int sample_budget = 100000);

struct CongestionCheck {
    double lhs = 0;
    double rhs = 0;
};

// Exhaustive weight of canonical paths through the directed edge
// (sigma0, sigma0 flipped at x), relative to mu(sigma0), against the
// boundary-cut bound exp(2 beta |cut edges below x|).
CongestionCheck congestion_lemma_check(const Domain& d, const BoundaryCondition& bc,
                                       const ModelParams& p, const std::vector<int>& site_order,
                                       const SpinConfig& sigma0, int x, int cap = 12);

// Block paths: milestones M_{j+1} drawn from the exact conditional Gibbs
// law on block j given M_j, joined by canonical paths inside each block (in
// the block's listed site order).  The start law is prescribed by the
// caller; the endpoint law is whatever the schedule induces.
PathEnsemble block_path_ensemble(DomainPtr d, const BoundaryCondition& bc, const ModelParams& p,
                                 std::vector<std::vector<int>> schedule,
                                 std::function<SpinConfig(Rng&)> start, int cap = 20);

// Averages n loop-erased sample paths into a unit flow on the chain's
// extended graph (sources at the observed starts, sinks at the observed
// ends).  Every step must be a chain edge.
Flow induced_flow(const ChainModel& chain, const PathEnsemble& ensemble, int n_samples, Rng& rng);

} // namespace ilab
