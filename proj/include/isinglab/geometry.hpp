#pragma once
// Continuum geometry: surface-tension models, Wulff shapes built as
// half-plane intersections of the support function rho*tau, the Wulff
// functional, free-energy scalars, Blaschke bounds and the shape
// constructions (merge, inscribed/enclosing fits, annulus, tangent shift).

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ilab {

struct Vec2 {
    double x = 0, y = 0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

struct Polygon {
    std::vector<Vec2> v; // closed implicitly (v.back() connects to v.front())

    double signed_area() const;
    double area() const { return std::fabs(signed_area()); }
    double perimeter() const;
    bool contains(Vec2 p) const; // even-odd rule
    double support(Vec2 dir) const; // max_v v.dot(dir)
    Polygon scaled(double s, Vec2 center = {0, 0}) const;
    Polygon translated(Vec2 t) const;
    bool is_convex(double eps = 1e-12) const;
};

Polygon convex_hull(std::vector<Vec2> pts);
double points_diameter(const std::vector<Vec2>& pts);
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

// Direction-dependent surface tension. Tabulated models take a two-column
// (theta, tau) table; a table confined to [0, pi/2) is extended by the lattice
// symmetry, a full-circle table is used as given and its pi/2-symmetry can be
// checked (violations are reported, not rejected).
class SurfaceTension {
public:
    static SurfaceTension constant(double tau0);
    static SurfaceTension tabulated(std::vector<std::pair<double, double>> table);
    static SurfaceTension from_file(const std::string& path);

    double operator()(double theta) const;
    double min_value() const { return min_; }
    double max_value() const { return max_; }
    bool is_constant() const { return table_.empty(); }

    struct SymmetryReport {
        bool symmetric = true;
        double worst = 0;    // max |tau(theta) - tau(theta + pi/2)| over samples
        double at_theta = 0;
    };
    SymmetryReport check_quarter_symmetry(int samples = 720) const;

private:
    double value_ = 1.0;                          // constant model
    std::vector<std::pair<double, double>> table_; // sorted, with period_
    double period_ = 0;                            // pi/2 or 2*pi
    double min_ = 1.0, max_ = 1.0;
};

// Shared per-tau construction data: the rho = 1 polygon, its support samples
// at the construction directions and the derived scalars.
struct WulffBasis {
    SurfaceTension tau;
    int n_dirs = 0;
    std::vector<double> dir_theta;  // construction angles, increasing in [0, 2pi)
    std::vector<double> tau_at_dir; // tau(dir_theta[k])
    Polygon unit;                   // W_1
    double area1 = 0;               // |W_1|
    double w_beta = 0;              // W(boundary of unit-volume shape)
    std::vector<double> vertex_angle; // atan2 of unit.v, increasing (for gauge)

    double support_exact(Vec2 dir) const; // via polygon vertices, O(n)
    double gauge(Vec2 p) const;           // Minkowski gauge of W_1, O(log n)
};
using WulffBasisPtr = std::shared_ptr<const WulffBasis>;

WulffBasisPtr build_wulff_basis(const SurfaceTension& tau, int n_dirs = 4096);

// A translate of a scaled Wulff shape: center + W_rho, with |W_rho| = B^2 and
// B = (w_beta / 2) rho.
struct WulffShape {
    WulffBasisPtr basis;
    Vec2 center{0, 0};
    double rho = 0;

    double B() const { return basis->w_beta * rho / 2.0; }
    double area() const { return rho * rho * basis->area1; }
    double support(int dir_index) const; // of the translated shape, at basis direction k
    double gauge_from_center(Vec2 p) const; // gauge of (p - center); infinity when rho = 0
    bool contains(Vec2 p, double tol = 1e-9) const;
    Polygon polygon() const;
    // Every basis-direction support of this shape is <= that of `other` + tol.
    bool contained_in(const WulffShape& other, double tol = 1e-9) const;
};

WulffShape make_wulff_shape(WulffBasisPtr basis, Vec2 center, double rho);
WulffShape wulff_shape_of_B(WulffBasisPtr basis, Vec2 center, double B);

// Surface free energy of a closed polygonal curve. Throws on open/degenerate
// input (fewer than 3 vertices).
double wulff_functional(const Polygon& curve, const SurfaceTension& tau);

struct FreeEnergyScalars {
    double w_beta = 0;
    double m_star = 0;
    double B_c = 0; // w_beta / (2 m_star)
    double A = 0;   // w_beta^2 / (4 m_star) = phi(B_c)
};

FreeEnergyScalars unit_volume_scalars(const SurfaceTension& tau, double m_star,
                                      int n_dirs = 4096);
FreeEnergyScalars scalars_from_basis(const WulffBasis& basis, double m_star);
inline double phi_free_energy(const FreeEnergyScalars& s, double B) {
    return s.w_beta * B - s.m_star * B * B;
}

struct BlaschkeBounds {
    double wulff_energy = 0; // W(boundary of D)
    double B_in = 0;         // B of largest inscribed Wulff shape
    double B_out = 0;        // B of smallest enclosing Wulff shape
    double bound_in = 0;     // (w_beta/2)(|D|/B_in + B_in)
    double bound_out = 0;    // (w_beta/2)(|D|/B_out + B_out)
};
// D must be a simple polygon; B_in additionally assumes D convex.
BlaschkeBounds blaschke_bounds(const Polygon& D, const WulffBasisPtr& basis);

WulffShape smallest_enclosing_wulff(const std::vector<Vec2>& pts, const WulffBasisPtr& basis);
WulffShape largest_inscribed_wulff(const Polygon& convex_poly, const WulffBasisPtr& basis);

// Enclosing shape without the generic minimization: the exact smallest
// enclosing circle scaled by the inradius of W_1. Always a valid cover; for a
// near-round basis (inradius/circumradius within 1e-3) it is also within that
// factor of minimal, so the per-proposal region predicates use it. Falls back
// to smallest_enclosing_wulff for anisotropic bases.
WulffShape enclosing_wulff_quick(const std::vector<Vec2>& pts, const WulffBasisPtr& basis);

// Union of two intersecting shapes is contained in the returned shape of
// gauge radius rho1 + rho2 (volume (B1 + B2)^2). Throws if the inputs are
// gauge-disjoint.
WulffShape merge_wulff(const WulffShape& a, const WulffShape& b);

// Largest Wulff shape fitting in the annulus B2*W \ B1*W.
double annulus_inscribed_B(double B1, double B2);
// Independent cross-check: discretized center grid + bisection on the radius,
// with exact gauge fit tests per candidate center.
double annulus_inscribed_B_erosion(const WulffBasisPtr& basis, double B1, double B2,
                                   int grid = 129);

struct TangentShiftResult {
    WulffShape enlarged;  // x' + W_{rho + d}
    Vec2 tangent_point;   // y on the common boundary
    Vec2 direction;       // outward normal used
};
// Shifted enlarged shape sharing the tangent line with external normal at
// angle theta; requires d < rho / 3.
TangentShiftResult tangent_shift(const WulffShape& shape, double theta, double d);

} // namespace ilab
