#pragma once
// Exact potential theory on enumerated chains: spectral gaps, Dirichlet
// forms, extinction rates with soft or hard killing, soft capacities from
// both variational sides, and mixing times.  Everything here is dense or
// sparse linear algebra on a ChainModel; nothing samples.

#include <cstdint>
#include <limits>
#include <vector>

#include "isinglab/chain.hpp"

namespace ilab {

// symbolic absorption rate for extinction_rate / soft_capacity
inline constexpr double kAbsorbing = std::numeric_limits<double>::infinity();

// Smallest nonzero eigenvalue of -L in the mu-weighted inner product.
// Dense symmetric solve up to dense_cap states, then shifted inverse
// iteration on the sparse symmetrized form.  Reducible chains are rejected.
double spectral_gap(const ChainModel& chain, int dense_cap = 2000);

// (1/2) sum_{sigma,sigma'} c(sigma,sigma') [f(sigma)-f(sigma')]^2
double dirichlet_form(const ChainModel& chain, const std::vector<double>& f);
double mu_variance(const ChainModel& chain, const std::vector<double>& f);

struct ExtinctionResult {
    double phi_star = 0;
    std::vector<double> qs; // quasi-stationary measure, sums to 1
};

// Principal eigenvalue and left eigenvector of the generator killed at the
// given rate on the region.  rate = kAbsorbing means absorption: the
// Dirichlet principal eigenvalue on the complement, with qs supported there.
ExtinctionResult extinction_rate(const ChainModel& chain, const std::vector<std::uint8_t>& killed,
                                 double rate);

// P_nu(T > s) for the killed process, by dense spectral calculus.  With nu
// the quasi-stationary measure this is exactly exp(-phi_star s).
double survival_probability(const ChainModel& chain, const std::vector<std::uint8_t>& killed,
                            double rate, const std::vector<double>& initial, double s);

// sum_{sigma in region} mu(sigma | region) sum_{j in target} w(sigma, j):
// the mean escape rate toward the target under the conditioned measure.
// Upper-bounds the absorbed extinction rate of the region.
double mean_exit_bound(const ChainModel& chain, const std::vector<std::uint8_t>& region,
                       const std::vector<std::uint8_t>& target);

struct CapacityResult {
    double value = 0;
    std::vector<double> f; // minimizer of the soft Dirichlet functional
};

// min_f  D(f) + kappa sum_R mu (f-1)^2 + lambda sum_S mu f^2, solved as an
// SPD system by Jacobi-preconditioned conjugate gradients (residual 1e-12)
// with a dense fallback.  kappa or lambda may be kAbsorbing, which pins
// f = 1 on R resp. f = 0 on S by row elimination.
CapacityResult soft_capacity(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                             const std::vector<std::uint8_t>& S, double kappa, double lambda);

// Unit flow on the extended graph: every state of R gains an external bar
// node (rate kappa) and every state of S an external breve node (rate
// lambda).  source(i) is the flow entering i from its bar node, sink(i) the
// flow leaving i to its breve node, edge(k) the signed flow i -> j along
// chain.edges()[k].
struct Flow {
    std::vector<double> edge;
    std::vector<double> source;
    std::vector<double> sink;
};

// Checks antisymmetric bookkeeping: source supported on R and nonnegative,
// sink supported on S and nonnegative, both summing to one, and zero
// divergence at every state.  Throws std::invalid_argument otherwise.
void validate_unit_flow(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                        const std::vector<std::uint8_t>& S, const Flow& flow, double tol = 1e-8);

// 1 / (energy dissipated by the flow); never exceeds the soft capacity and
// matches it for the harmonic flow.
double thomson_value(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                     const std::vector<std::uint8_t>& S, double kappa, double lambda,
                     const Flow& flow);

// The optimal flow, built from the soft-capacity minimizer.
Flow harmonic_flow(const ChainModel& chain, const std::vector<std::uint8_t>& R,
                   const std::vector<std::uint8_t>& S, double kappa, double lambda);

// Smallest t with worst-start total variation distance <= epsilon, by
// bisection on dense spectral exponentials (<= 2000 states).
double mixing_time(const ChainModel& chain, double epsilon = 0.36787944117144233);

// max over the region of 1 / mu(sigma | region)
double chi_max(const ChainModel& chain, const std::vector<std::uint8_t>& region);

} // namespace ilab
