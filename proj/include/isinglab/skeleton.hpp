// Skeleton approximation of vertebrate contours: coarse polygons whose side
// lengths live on the scale 1/h^r, plus the surface and volume free-energy
// quantities attached to a skeleton family.
#pragma once

#include <iosfwd>
#include <vector>

#include "isinglab/contour.hpp"
#include "isinglab/geometry.hpp"
#include "isinglab/model.hpp"

namespace ilab {

struct Skeleton {
    std::vector<Vec2> vertices;       // ordered points on the source contour
    Contour source;                   // the contour the skeleton approximates
    std::vector<double> side_lengths; // side k joins vertices[k] to vertices[k+1], cyclic
    double hausdorff = 0.0;           // certified upper bound on d_H(contour, polygon)

    Polygon polygon() const;
    double min_side() const;
    double max_side() const;
};

struct SkeletonFamily {
    DomainPtr domain;
    std::vector<Skeleton> skeletons;

    // odd-crossing rule with respect to the union of all skeleton polygons
    bool plus_parity(Vec2 p) const;
    size_t vertex_count() const;
};

// Greedy arc-length marching along the contour. Starts at the
// lexicographically smallest corner, repeatedly advances to the farthest
// corner within arc length 1/h^r whose chord is at least 1/(12 h^r), and
// merges or splits the final side if the plain closing chord is out of range.
// Requires the contour diameter to exceed 1/h^r.
Skeleton build_skeleton(const Contour& contour, const ModelParams& p);

// One skeleton per vertebrate contour, external and internal alike.
SkeletonFamily skeleton_family(const ContourFamily& family, const ModelParams& p);
SkeletonFamily skeleton_family(const SpinConfig& config, const BoundaryCondition& bc,
                               const ModelParams& p);

// Sum of the anisotropic boundary energies of the skeleton polygons. Polygons
// may self-intersect; the quarter symmetry of the tension makes the
// orientation choice irrelevant.
double surface_energy(const SkeletonFamily& family, const SurfaceTension& tension);

struct PhaseVolumes {
    double v_g = 0.0;     // sites in the plus-components of the vertebrate contours
    double v_hat = 0.0;   // area of the plus-components of the skeleton union
    double v_check = 0.0; // sites in skeleton plus-components farther than 1/h^r from it
};

PhaseVolumes phase_volumes(const SkeletonFamily& family, const ContourFamily& contours,
                           const ModelParams& p);
PhaseVolumes phase_volumes(const SkeletonFamily& family, const SpinConfig& config,
                           const BoundaryCondition& bc, const ModelParams& p);

struct FreeEnergyPair {
    double surface = 0.0; // W(S)
    double volume = 0.0;  // h * m_star * V_check(S)
    double combination(double eps) const { return surface - (1.0 + eps) * volume; }
};

FreeEnergyPair skeleton_free_energy(const SkeletonFamily& family, const ContourFamily& contours,
                                    const SurfaceTension& tension, double m_star,
                                    const ModelParams& p);

// One line per skeleton (vertices plus cached diagnostics) and a footer line
// with the family free-energy pair.
void dump_skeletons(const SkeletonFamily& family, const FreeEnergyPair& energy, std::ostream& os);

} // namespace ilab
