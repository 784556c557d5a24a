#pragma once
// Dual-lattice contours. Extraction walks the dual edges separating opposite
// spins and resolves four-edge crossings by rounding the corners of plus
// clusters (the SW-NE deformation), so plus clusters touching diagonally stay
// separated and minus clusters connect. Membership predicates for the
// restricted sets (only-invertebrate, covered-by-few-Wulff-shapes, small
// external volumes, supercritical-droplet) and droplet events live here too.
//
// Corner (i, j) of the dual lattice is the continuum point (i-1/2, j-1/2);
// the four corners of cell (x, y) are (x, y) .. (x+1, y+1).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "isinglab/geometry.hpp"
#include "isinglab/model.hpp"

namespace ilab {

struct Contour {
    std::vector<Coord> loop; // corner cycle, CCW, closed implicitly
    long long interior_sites = 0;
    int nesting_depth = 0; // number of enclosing contours in the family
    Coord bbox_min{0, 0}, bbox_max{0, 0}; // over corners
    // vertical-edge crossings per cell row: rows[k] = {y, sorted corner-x list};
    // consecutive pairs delimit interior runs of cells [x_a, x_b)
    std::vector<std::pair<int, std::vector<int>>> rows;

    bool is_external() const { return nesting_depth == 0; }
    int length() const { return static_cast<int>(loop.size()); }
    std::string direction_string() const; // unit steps as N/E/S/W
    Vec2 corner_point(int k) const {
        return {loop[static_cast<size_t>(k)].x - 0.5, loop[static_cast<size_t>(k)].y - 0.5};
    }
    bool encloses_cell(Coord cell) const;
    std::vector<Coord> interior_cells() const;
};

struct ContourFamily {
    DomainPtr domain;
    std::vector<Contour> contours;

    std::vector<const Contour*> externals() const;
    std::vector<const Contour*> vertebrates(const ModelParams& p) const;
    size_t total_edges() const;
};

// Extraction records every dual edge separating opposite spins with at least
// one endpoint in the domain. Throws if the loops do not close (a boundary
// condition whose sign changes continue outside the domain, e.g. split).
ContourFamily extract_contours(const SpinConfig& config, const BoundaryCondition& bc);

// Inverse of extraction: spins from the boundary signs flipped once per
// crossing. Throws if the family is inconsistent with the boundary condition.
SpinConfig reconstruct(const ContourFamily& family, const BoundaryCondition& bc);

enum class Backbone { Invertebrate, Vertebrate };
// Vertebrate iff interior_sites >= h^(-2b).
Backbone classify_vertebrate(const Contour& c, const ModelParams& p);

// Lattice cells whose centers lie in the closed Wulff shape of volume B^2
// centered at `center`.
std::vector<Coord> discretized_wulff_polyomino(const WulffBasisPtr& basis, double B,
                                               Vec2 center = {0, 0});

// Row/column profile of a polyomino, for cheap necessary conditions on any
// region whose interior must hold a translate of it. runs1 counts the longest
// block of consecutive rows each containing a cell, runs2 the longest block of
// rows at least two cells wide (a shape row of width >= 2 forces two distinct
// plus sites on the inner boundary of the enclosing contour).
struct PolyominoProfile {
    long long cells = 0;
    int width = 0, height = 0;
    int row_runs1 = 0, row_runs2 = 0;
    int col_runs1 = 0, col_runs2 = 0;
};
PolyominoProfile polyomino_profile(const std::vector<Coord>& cells);

// Containment tester compiled once from a fixed polyomino; returns whether
// some external contour interior holds an integer translate of it.
std::function<bool(const ContourFamily&)> polyomino_interior_tester(std::vector<Coord> cells);

// no vertebrate contour at all
bool in_I(const ContourFamily& f, const ModelParams& p);
// some external contour interior contains a translate of the discretized
// Wulff polyomino of volume (B_minus/h)^2, tested by erosion
bool in_S(const ContourFamily& f, const ModelParams& p, const WulffBasisPtr& basis,
          const FreeEnergyScalars& scalars);
// conservative cover test: smallest enclosing Wulff shape per vertebrate
// contour, greedy merge (largest first) until pairwise gauge-disjoint, then
// count <= floor(h^-(1-b/2)) and sum B_j^2 <= (B_plus/h)^2
bool in_R(const ContourFamily& f, const ModelParams& p, const WulffBasisPtr& basis);
// every external contour has interior_sites < (B_c/h)^2
bool in_R_minus(const ContourFamily& f, const ModelParams& p, const FreeEnergyScalars& scalars);
// exactly one external vertebrate contour, surrounding the discretized
// (1-delta)B/h shape and contained in the (1+delta)B/h shape, both centered
// at the domain center; strict additionally forbids any other vertebrate
bool in_droplet_event(const ContourFamily& f, double B, double delta, const ModelParams& p,
                      const WulffBasisPtr& basis, bool strict = false);

// convenience wrappers that extract first
bool in_I(const SpinConfig& c, const BoundaryCondition& bc, const ModelParams& p);
bool in_S(const SpinConfig& c, const BoundaryCondition& bc, const ModelParams& p,
          const WulffBasisPtr& basis, const FreeEnergyScalars& scalars);
bool in_R(const SpinConfig& c, const BoundaryCondition& bc, const ModelParams& p,
          const WulffBasisPtr& basis);
bool in_R_minus(const SpinConfig& c, const BoundaryCondition& bc, const ModelParams& p,
                const FreeEnergyScalars& scalars);
bool in_droplet_event(const SpinConfig& c, const BoundaryCondition& bc, double B, double delta,
                      const ModelParams& p, const WulffBasisPtr& basis, bool strict = false);

// cells enclosed by an odd number of the given contours
std::vector<Coord> odd_enclosed_cells(const std::vector<const Contour*>& contours);
long long odd_enclosed_count(const std::vector<const Contour*>& contours);

// One record per line: {"start":[x,y],"path":"ENWS...","interior":n,"depth":d}.
void dump_contours(const ContourFamily& f, std::ostream& out);
// Rebuilds contours from start+path, recomputes classification and verifies
// it against the stored fields; mismatch is an integrity error.
ContourFamily load_contours(std::istream& in, DomainPtr domain);

} // namespace ilab
