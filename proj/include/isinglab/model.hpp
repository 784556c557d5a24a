#pragma once
// Ising model core: parameters, finite domains with boundary conditions,
// spin configurations, energies, single-flip rates, partition functions and
// exact Gibbs sampling at enumerable sizes.
//
// Convention: H(sigma) = -1/2 sum_{internal pairs} sigma sigma
//                        -1/2 sum_{boundary pairs} sigma eta
//                        -h/2 sum sigma,
// so one broken bond costs 1 and a single spin flip in the bulk costs
// |4 -+ h| depending on alignment.

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "isinglab/geometry.hpp"
#include "isinglab/rng.hpp"

namespace ilab {

enum class RateFamily { Metropolis, HeatBath, CustomBounded };

struct ModelParams {
    double beta = 1.0;
    double h = 0.0;
    // droplet-scale exponents: vertebrate threshold h^{-2b}, skeleton step h^{-r}
    double b_exp = 0.24;
    double r_exp = 0.1;
    double B_plus = 0.0; // cover budget scale; B_minus = 2 B_c - B_plus is derived
    RateFamily family = RateFamily::Metropolis;
    // declared bounds for CustomBounded rates (verified per call, not enforced)
    double w_min = 0.0;
    double w_max = 1.0;
    std::function<double(double beta, double delta_H)> custom_rate;

    void validate() const;
    double vertebrate_threshold() const; // h^{-2 b_exp}, requires h > 0
    double skeleton_step() const;        // h^{-r_exp}, requires h > 0
};

inline double derived_B_minus(const ModelParams& p, double B_c) {
    return 2.0 * B_c - p.B_plus;
}

struct Coord {
    int x = 0, y = 0;
    bool operator==(const Coord&) const = default;
};

enum class DomainKind { Rectangle, WulffBox, Annulus, Explicit };

// Finite subset of the lattice with row-major site indexing (sorted by y,
// then x) and an O(1) membership grid over its bounding box.
class Domain {
public:
    static Domain rectangle(int width, int height);
    static Domain wulff_box(const WulffBasisPtr& basis, double B_max, double h);
    static Domain annulus(const WulffBasisPtr& basis, double B1, double B2, double h);
    static Domain explicit_sites(std::vector<Coord> sites);

    DomainKind kind() const { return kind_; }
    int size() const { return static_cast<int>(sites_.size()); }
    const std::vector<Coord>& sites() const { return sites_; }
    Coord site(int i) const { return sites_[static_cast<size_t>(i)]; }
    int index_of(Coord c) const; // -1 if not in the domain
    bool contains(Coord c) const { return index_of(c) >= 0; }
    Vec2 center() const { return center_; }
    int width() const { return width_; }   // rectangle only
    int height() const { return height_; } // rectangle only
    // bounding box, inclusive
    int x0() const { return x0_; }
    int y0() const { return y0_; }
    int x1() const { return x1_; }
    int y1() const { return y1_; }
    // shapes that defined a WulffBox / Annulus domain (null basis otherwise)
    const WulffShape& outer_shape() const { return outer_; }
    const WulffShape& inner_shape() const { return inner_; }

private:
    void finalize();
    DomainKind kind_ = DomainKind::Explicit;
    std::vector<Coord> sites_;
    std::vector<int32_t> grid_; // over bbox, -1 when absent
    int x0_ = 0, y0_ = 0, x1_ = -1, y1_ = -1;
    int width_ = 0, height_ = 0;
    Vec2 center_{0, 0};
    WulffShape outer_{};
    WulffShape inner_{};
};
using DomainPtr = std::shared_ptr<const Domain>;

class BoundaryCondition {
public:
    enum class Kind { UniformMinus, UniformPlus, Split, Pair, Explicit };

    static BoundaryCondition minus();
    static BoundaryCondition plus();
    // eta_theta: +1 on the half plane (c - center) . (cos theta, sin theta) <= 0
    static BoundaryCondition split(double theta, Vec2 center);
    // annulus: one sign inside the inner shape, the other outside
    static BoundaryCondition pair(int inner_sign, int outer_sign, WulffShape inner_shape);
    static BoundaryCondition explicit_map(std::unordered_map<int64_t, int8_t> spins);
    static int64_t key(Coord c) {
        return (static_cast<int64_t>(c.x) << 32) ^ (static_cast<uint32_t>(c.y));
    }

    Kind kind() const { return kind_; }
    int spin_at(Coord c) const;
    double theta() const { return theta_; }
    Vec2 split_center() const { return center_; }

private:
    Kind kind_ = Kind::UniformMinus;
    double theta_ = 0;
    Vec2 center_{0, 0};
    int inner_sign_ = 1, outer_sign_ = -1;
    WulffShape inner_shape_{};
    std::shared_ptr<const std::unordered_map<int64_t, int8_t>> map_;
};

struct SpinConfig {
    DomainPtr domain;
    std::vector<int8_t> s; // aligned with domain->sites(), values +-1

    static SpinConfig uniform(DomainPtr d, int8_t value);
    static SpinConfig from_bits(DomainPtr d, uint64_t bits); // bit i set -> +1
    uint64_t bits() const; // requires size <= 64
    int8_t at(int i) const { return s[static_cast<size_t>(i)]; }
    void flip(int i) { s[static_cast<size_t>(i)] = static_cast<int8_t>(-s[static_cast<size_t>(i)]); }
    long long magnetization() const;
    double magnetization_density() const;
    bool operator==(const SpinConfig& o) const { return s == o.s; }
};

// Precomputed neighbor structure for one (domain, boundary) pair. Neighbor
// entries are internal site indices, or -(g+1) pointing into the resolved
// ghost-spin frame.
struct NeighborTable {
    std::vector<int32_t> nbr;       // 4 entries per site: E, W, N, S
    std::vector<Coord> ghost_coords;
    std::vector<int8_t> ghost_spins;

    int8_t spin_of_entry(const SpinConfig& c, int32_t e) const {
        return e >= 0 ? c.s[static_cast<size_t>(e)]
                      : ghost_spins[static_cast<size_t>(-e - 1)];
    }
};
NeighborTable build_neighbor_table(const Domain& d, const BoundaryCondition& bc);

// ---- energies and rates ----

double hamiltonian(const SpinConfig& config, const ModelParams& p, const BoundaryCondition& bc);
double delta_energy(const SpinConfig& config, const NeighborTable& t, const ModelParams& p, int site);
double delta_energy(const SpinConfig& config, const ModelParams& p, const BoundaryCondition& bc, int site);
// Rate of accepting the flip with energy increment delta_H.
double flip_rate(const ModelParams& p, double delta_H);

// ---- partition functions and exact sampling ----

enum class ZMethod { Enumerate, TransferMatrix };

// log Z with boundary condition and field; Enumerate caps at `cap` sites,
// TransferMatrix needs a rectangle with min(width, height) <= 22.
double log_partition_function(const Domain& d, const BoundaryCondition& bc,
                              const ModelParams& p, ZMethod method, int cap = 20);

// Exact finite-volume Gibbs sampler by full enumeration (<= cap sites).
class ExactGibbsSampler {
public:
    ExactGibbsSampler(DomainPtr d, const BoundaryCondition& bc, const ModelParams& p,
                      int cap = 20);
    SpinConfig sample(Rng& rng) const;
    double probability(uint64_t bits) const;
    double log_Z() const { return log_Z_; }

private:
    DomainPtr domain_;
    std::vector<double> cumulative_;
    double log_Z_ = 0;
};

// Exact conditional Gibbs resampling of a block of sites given the rest of
// the configuration (and the boundary condition).
class BlockConditionalSampler {
public:
    BlockConditionalSampler(const SpinConfig& base, std::vector<int> block_sites,
                            const BoundaryCondition& bc, const ModelParams& p,
                            int cap = 20);
    SpinConfig sample(Rng& rng) const;

private:
    SpinConfig base_;
    std::vector<int> block_;
    std::vector<double> cumulative_;
};

} // namespace ilab
