#pragma once
// Finite reversible chains as weighted graphs: a normalized stationary
// vector mu and symmetric conductances c(i,j) = mu(i) w(i,j).  Chains are
// immutable after construction; all solvers in potential.hpp take them by
// const reference and may run concurrently.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "isinglab/model.hpp"

namespace ilab {

class ChainModel {
public:
    struct Edge {
        int i = 0, j = 0; // i < j
        double c = 0;
    };

    // Conductance triplets may list an unordered pair once or in both
    // directions; the two directed values must agree to 1e-12 (relative).
    ChainModel(std::vector<double> mu, const std::vector<std::tuple<int, int, double>>& triplets);

    int size() const { return static_cast<int>(mu_.size()); }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<Edge>& edges() const { return edges_; }
    // per-state list of (neighbor, conductance)
    const std::vector<std::vector<std::pair<int, double>>>& adjacency() const { return adj_; }
    int edge_index(int i, int j) const; // -1 if (i,j) is not an edge

    bool connected() const { return components_ == 1; }
    int components() const { return components_; }
    // components of the subgraph induced by mask (edges with both ends set)
    int component_count(const std::vector<std::uint8_t>& mask) const;
    double mass(const std::vector<std::uint8_t>& mask) const;

    // optional region masks, keyed by label; set during setup, read-only after
    std::map<std::string, std::vector<std::uint8_t>> masks;

    // Attachment present when the chain was enumerated from a spin system.
    struct SpinContext {
        DomainPtr domain;
        BoundaryCondition bc = BoundaryCondition::minus();
        ModelParams params;
        std::vector<SpinConfig> configs;         // state index -> configuration
        std::unordered_map<uint64_t, int> index; // config bits -> state index
    };
    const SpinContext* spin() const { return spin_.get(); }
    int state_of(const SpinConfig& c) const; // -1 if absent or no spin context

private:
    friend ChainModel enumerate_chain(DomainPtr, const BoundaryCondition&, const ModelParams&,
                                      const std::function<bool(const SpinConfig&)>&, int);

    std::vector<double> mu_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<int, double>>> adj_;
    std::unordered_map<std::uint64_t, int> edge_ix_;
    int components_ = 1;
    std::shared_ptr<const SpinContext> spin_;

    void finish(); // builds adjacency, edge index and component count
};

// Enumerates the Gibbs chain on a domain, optionally filtered by a
// predicate on configurations.  Conductances come from mu(sigma) times the
// single-flip rate; both directed products are compared and must agree
// (a non-reversible custom rate family is rejected).  A disconnected
// filtered set is not an error; the chain records its component count.
// Throws std::length_error past the cap.
ChainModel enumerate_chain(DomainPtr d, const BoundaryCondition& bc, const ModelParams& p,
                           const std::function<bool(const SpinConfig&)>& restriction = nullptr,
                           int cap = 4096);

// mask helpers
std::vector<std::uint8_t> mask_of(const ChainModel& chain,
                                  const std::function<bool(const SpinConfig&)>& pred);
std::vector<std::uint8_t> mask_not(const std::vector<std::uint8_t>& m);

// Sparse triplet text exchange: a "chain n m" header, n stationary weights,
// then one "i j c" line per undirected edge.  Masks and spin attachments are
// not part of the format; it exists to cross-check against external solvers.
void export_chain(const ChainModel& chain, std::ostream& os);
ChainModel import_chain(std::istream& is);

} // namespace ilab
