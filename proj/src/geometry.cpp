#include "isinglab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ilab {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;
constexpr double kTwoPi = 2.0 * kPi;
} // namespace

// ---------------------------------------------------------------- Polygon

double Polygon::signed_area() const {
    double a = 0;
    size_t n = v.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = v[i];
        const Vec2& q = v[(i + 1) % n];
        a += p.cross(q);
    }
    return a / 2.0;
}

double Polygon::perimeter() const {
    double p = 0;
    size_t n = v.size();
    for (size_t i = 0; i < n; ++i) p += (v[(i + 1) % n] - v[i]).norm();
    return p;
}

bool Polygon::contains(Vec2 p) const {
    bool in = false;
    size_t n = v.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        bool above_i = v[i].y > p.y;
        bool above_j = v[j].y > p.y;
        if (above_i != above_j) {
            double xc = v[j].x + (v[i].x - v[j].x) * (p.y - v[j].y) / (v[i].y - v[j].y);
            if (p.x < xc) in = !in;
        }
    }
    return in;
}

double Polygon::support(Vec2 dir) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec2& p : v) best = std::max(best, p.dot(dir));
    return best;
}

Polygon Polygon::scaled(double s, Vec2 center) const {
    Polygon out;
    out.v.reserve(v.size());
    for (const Vec2& p : v) out.v.push_back(center + (p - center) * s);
    return out;
}

Polygon Polygon::translated(Vec2 t) const {
    Polygon out;
    out.v.reserve(v.size());
    for (const Vec2& p : v) out.v.push_back(p + t);
    return out;
}

bool Polygon::is_convex(double eps) const {
    size_t n = v.size();
    if (n < 3) return false;
    int sign = 0;
    for (size_t i = 0; i < n; ++i) {
        Vec2 a = v[(i + 1) % n] - v[i];
        Vec2 b = v[(i + 2) % n] - v[(i + 1) % n];
        double c = a.cross(b);
        if (std::fabs(c) <= eps) continue;
        int s = c > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
                  return a.x == b.x && a.y == b.y;
              }),
              pts.end());
    size_t n = pts.size();
    if (n < 3) {
        Polygon p;
        p.v = pts;
        return p;
    }
    std::vector<Vec2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    Polygon p;
    p.v.assign(hull.begin(), hull.begin() + static_cast<long>(k - 1));
    return p;
}

double points_diameter(const std::vector<Vec2>& pts) {
    Polygon h = convex_hull(pts);
    const std::vector<Vec2>& v = h.v.empty() ? pts : h.v;
    double best = 0;
    for (size_t i = 0; i < v.size(); ++i)
        for (size_t j = i + 1; j < v.size(); ++j)
            best = std::max(best, (v[i] - v[j]).norm());
    return best;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len2 = ab.dot(ab);
    if (len2 <= 0) return (p - a).norm();
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

// ---------------------------------------------------------- SurfaceTension

SurfaceTension SurfaceTension::constant(double tau0) {
    if (!(tau0 > 0)) throw std::invalid_argument("surface tension must be positive");
    SurfaceTension t;
    t.value_ = tau0;
    t.min_ = t.max_ = tau0;
    return t;
}

SurfaceTension SurfaceTension::tabulated(std::vector<std::pair<double, double>> table) {
    if (table.size() < 2) throw std::invalid_argument("tau table needs at least two rows");
    for (size_t i = 0; i < table.size(); ++i) {
        if (!(table[i].second > 0))
            throw std::invalid_argument("tau table has a non-positive value");
        if (i > 0 && !(table[i].first > table[i - 1].first))
            throw std::invalid_argument("tau table angles must be strictly increasing");
    }
    if (!(table.front().first >= 0))
        throw std::invalid_argument("tau table angles must start at or above 0");
    SurfaceTension t;
    t.period_ = (table.back().first < kHalfPi) ? kHalfPi : kTwoPi;
    if (table.back().first >= t.period_)
        throw std::invalid_argument("tau table angles must stay below the period");
    t.table_ = std::move(table);
    t.min_ = t.max_ = t.table_[0].second;
    for (auto& [th, val] : t.table_) {
        t.min_ = std::min(t.min_, val);
        t.max_ = std::max(t.max_, val);
    }
    return t;
}

SurfaceTension SurfaceTension::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tau table: " + path);
    std::vector<std::pair<double, double>> table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double theta, val;
        if (!(ss >> theta)) continue; // blank
        if (!(ss >> val))
            throw std::runtime_error("tau table " + path + ": line " +
                                     std::to_string(lineno) + " needs two columns");
        table.emplace_back(theta, val);
    }
    return tabulated(std::move(table));
}

double SurfaceTension::operator()(double theta) const {
    if (table_.empty()) return value_;
    double t = std::fmod(theta, period_);
    if (t < 0) t += period_;
    // locate segment [i, i+1) with wraparound to front
    size_t n = table_.size();
    size_t hi = static_cast<size_t>(
        std::upper_bound(table_.begin(), table_.end(), t,
                         [](double x, const std::pair<double, double>& row) {
                             return x < row.first;
                         }) -
        table_.begin());
    double t0, v0, t1, v1;
    if (hi == 0) { // before first knot: wrap from last
        t0 = table_[n - 1].first - period_;
        v0 = table_[n - 1].second;
        t1 = table_[0].first;
        v1 = table_[0].second;
    } else if (hi == n) { // after last knot: wrap to first
        t0 = table_[n - 1].first;
        v0 = table_[n - 1].second;
        t1 = table_[0].first + period_;
        v1 = table_[0].second;
    } else {
        t0 = table_[hi - 1].first;
        v0 = table_[hi - 1].second;
        t1 = table_[hi].first;
        v1 = table_[hi].second;
    }
    double w = (t - t0) / (t1 - t0);
    return v0 + (v1 - v0) * w;
}

SurfaceTension::SymmetryReport SurfaceTension::check_quarter_symmetry(int samples) const {
    SymmetryReport rep;
    for (int i = 0; i < samples; ++i) {
        double th = kTwoPi * i / samples;
        double d = std::fabs((*this)(th) - (*this)(th + kHalfPi));
        if (d > rep.worst) {
            rep.worst = d;
            rep.at_theta = th;
        }
    }
    rep.symmetric = rep.worst <= 1e-9 * std::max(1.0, max_value());
    return rep;
}

// ------------------------------------------------- half-plane intersection

namespace {

struct HLine {
    Vec2 p, d; // directed line through p along d, keeps the left side
    double ang;
};

Vec2 line_intersection(const HLine& a, const HLine& b) {
    double denom = a.d.cross(b.d);
    double t = (b.p - a.p).cross(b.d) / denom;
    return a.p + a.d * t;
}

bool strictly_right(const HLine& l, Vec2 pt, double eps) {
    return l.d.cross(pt - l.p) < -eps;
}

// Intersection of half-planes x . n_k <= h_k, h_k > 0, angles distinct.
Polygon half_plane_intersection(const std::vector<Vec2>& normals,
                                const std::vector<double>& offsets) {
    size_t n = normals.size();
    std::vector<HLine> lines(n);
    for (size_t i = 0; i < n; ++i) {
        Vec2 nk = normals[i];
        Vec2 dk{-nk.y, nk.x};
        lines[i] = {nk * offsets[i], dk, std::atan2(dk.y, dk.x)};
    }
    std::sort(lines.begin(), lines.end(),
              [](const HLine& a, const HLine& b) { return a.ang < b.ang; });

    const double eps = 1e-12;
    std::deque<HLine> dq;
    for (const HLine& l : lines) {
        while (dq.size() >= 2 &&
               strictly_right(l, line_intersection(dq[dq.size() - 1], dq[dq.size() - 2]), eps))
            dq.pop_back();
        while (dq.size() >= 2 && strictly_right(l, line_intersection(dq[0], dq[1]), eps))
            dq.pop_front();
        dq.push_back(l);
    }
    while (dq.size() >= 3 &&
           strictly_right(dq[0], line_intersection(dq[dq.size() - 1], dq[dq.size() - 2]), eps))
        dq.pop_back();
    while (dq.size() >= 3 &&
           strictly_right(dq[dq.size() - 1], line_intersection(dq[0], dq[1]), eps))
        dq.pop_front();
    if (dq.size() < 3) throw std::runtime_error("half-plane intersection degenerated");

    Polygon poly;
    poly.v.reserve(dq.size());
    for (size_t i = 0; i < dq.size(); ++i)
        poly.v.push_back(line_intersection(dq[i], dq[(i + 1) % dq.size()]));

    // collapse duplicate and collinear vertices left by redundant support lines
    Polygon clean;
    size_t m = poly.v.size();
    for (size_t i = 0; i < m; ++i) {
        Vec2 prev = poly.v[(i + m - 1) % m];
        Vec2 cur = poly.v[i];
        Vec2 next = poly.v[(i + 1) % m];
        if ((cur - prev).norm() < 1e-11) continue;
        if (std::fabs((cur - prev).cross(next - cur)) < 1e-13 &&
            (next - cur).dot(cur - prev) > 0)
            continue;
        clean.v.push_back(cur);
    }
    if (clean.v.size() < 3) throw std::runtime_error("half-plane intersection degenerated");
    if (clean.signed_area() < 0) std::reverse(clean.v.begin(), clean.v.end());
    return clean;
}

} // namespace

// --------------------------------------------------------------- WulffBasis

double WulffBasis::support_exact(Vec2 dir) const { return unit.support(dir); }

double WulffBasis::gauge(Vec2 p) const {
    if (p.x == 0 && p.y == 0) return 0;
    double ang = std::atan2(p.y, p.x);
    // locate the wedge [vertex_angle[i], vertex_angle[i+1]) containing ang
    size_t n = vertex_angle.size();
    size_t i;
    if (ang < vertex_angle.front() || ang >= vertex_angle.back()) {
        i = n - 1; // wedge from last vertex back to first (wrapping)
    } else {
        i = static_cast<size_t>(std::upper_bound(vertex_angle.begin(), vertex_angle.end(), ang) -
                                vertex_angle.begin()) -
            1;
    }
    Vec2 a = unit.v[i];
    Vec2 b = unit.v[(i + 1) % n];
    double denom = a.cross(b);
    return p.cross(b - a) / denom;
}

WulffBasisPtr build_wulff_basis(const SurfaceTension& tau, int n_dirs) {
    if (n_dirs < 8) throw std::invalid_argument("build_wulff_basis: too few directions");
    auto basis = std::make_shared<WulffBasis>();
    basis->tau = tau;
    basis->n_dirs = n_dirs;
    basis->dir_theta.resize(n_dirs);
    basis->tau_at_dir.resize(n_dirs);
    std::vector<Vec2> normals(n_dirs);
    for (int k = 0; k < n_dirs; ++k) {
        double th = kTwoPi * k / n_dirs;
        basis->dir_theta[k] = th;
        basis->tau_at_dir[k] = tau(th);
        normals[k] = {std::cos(th), std::sin(th)};
    }
    basis->unit = half_plane_intersection(normals, basis->tau_at_dir);
    basis->area1 = basis->unit.area();

    // rotate vertex list so the atan2 angles are increasing, for gauge lookups
    size_t n = basis->unit.v.size();
    std::vector<double> angs(n);
    for (size_t i = 0; i < n; ++i) angs[i] = std::atan2(basis->unit.v[i].y, basis->unit.v[i].x);
    size_t start = static_cast<size_t>(std::min_element(angs.begin(), angs.end()) - angs.begin());
    std::rotate(basis->unit.v.begin(), basis->unit.v.begin() + static_cast<long>(start),
                basis->unit.v.end());
    basis->vertex_angle.resize(n);
    for (size_t i = 0; i < n; ++i)
        basis->vertex_angle[i] = std::atan2(basis->unit.v[i].y, basis->unit.v[i].x);

    double rho_star = 1.0 / std::sqrt(basis->area1);
    basis->w_beta = rho_star * wulff_functional(basis->unit, tau);
    return basis;
}

// --------------------------------------------------------------- WulffShape

double WulffShape::support(int k) const {
    Vec2 u{std::cos(basis->dir_theta[k]), std::sin(basis->dir_theta[k])};
    return center.dot(u) + rho * basis->tau_at_dir[k];
}

double WulffShape::gauge_from_center(Vec2 p) const { return basis->gauge(p - center); }

bool WulffShape::contains(Vec2 p, double tol) const {
    if (rho <= 0) return (p - center).norm() <= tol;
    return basis->gauge(p - center) <= rho + tol * std::max(1.0, rho);
}

Polygon WulffShape::polygon() const {
    if (rho <= 0) return Polygon{{center}};
    return basis->unit.scaled(rho).translated(center);
}

bool WulffShape::contained_in(const WulffShape& other, double tol) const {
    if (basis != other.basis)
        throw std::invalid_argument("contained_in: shapes from different bases");
    for (int k = 0; k < basis->n_dirs; ++k)
        if (support(k) > other.support(k) + tol) return false;
    return true;
}

WulffShape make_wulff_shape(WulffBasisPtr basis, Vec2 center, double rho) {
    if (!basis) throw std::invalid_argument("make_wulff_shape: null basis");
    if (rho < 0) throw std::invalid_argument("make_wulff_shape: negative rho");
    return WulffShape{std::move(basis), center, rho};
}

WulffShape wulff_shape_of_B(WulffBasisPtr basis, Vec2 center, double B) {
    if (!basis) throw std::invalid_argument("wulff_shape_of_B: null basis");
    if (B < 0) throw std::invalid_argument("wulff_shape_of_B: negative B");
    double rho = 2.0 * B / basis->w_beta;
    return WulffShape{std::move(basis), center, rho};
}

// ---------------------------------------------------------------- functional

double wulff_functional(const Polygon& curve, const SurfaceTension& tau) {
    if (curve.v.size() < 3)
        throw std::invalid_argument("wulff_functional: need a closed curve (>= 3 vertices)");
    Polygon c = curve;
    if (c.signed_area() < 0) std::reverse(c.v.begin(), c.v.end());
    double energy = 0;
    size_t n = c.v.size();
    for (size_t i = 0; i < n; ++i) {
        Vec2 e = c.v[(i + 1) % n] - c.v[i];
        double len = e.norm();
        if (len <= 0) continue;
        // outward normal of a counterclockwise polygon
        double theta = std::atan2(-e.x, e.y);
        energy += len * tau(theta);
    }
    return energy;
}

FreeEnergyScalars scalars_from_basis(const WulffBasis& basis, double m_star) {
    if (!(m_star > 0)) throw std::invalid_argument("unit_volume_scalars: m_star must be positive");
    FreeEnergyScalars s;
    s.w_beta = basis.w_beta;
    s.m_star = m_star;
    s.B_c = s.w_beta / (2.0 * m_star);
    s.A = s.w_beta * s.w_beta / (4.0 * m_star);
    return s;
}

FreeEnergyScalars unit_volume_scalars(const SurfaceTension& tau, double m_star, int n_dirs) {
    return scalars_from_basis(*build_wulff_basis(tau, n_dirs), m_star);
}

// ------------------------------------------------------------ convex fitting

namespace {

double golden_section(const std::function<double(double)>& g, double a, double b, int iters) {
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = g(x1), f2 = g(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = g(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

// Cyclic line search over a fan of directions; adequate for the convex
// minimax objectives used here (the fan avoids axis-descent stalls).
Vec2 minimize_convex_2d(const std::function<double(Vec2)>& f, Vec2 x0, double scale) {
    constexpr int kDirs = 16;
    Vec2 x = x0;
    double fx = f(x);
    double range = std::max(scale, 1e-12);
    for (int pass = 0; pass < 60; ++pass) {
        double before = fx;
        for (int k = 0; k < kDirs; ++k) {
            double th = kPi * k / kDirs;
            Vec2 d{std::cos(th), std::sin(th)};
            auto g = [&](double t) { return f(x + d * t); };
            double t = golden_section(g, -range, range, 40);
            double ft = g(t);
            if (ft < fx) {
                fx = ft;
                x = x + d * t;
            }
        }
        range *= 0.5;
        if (before - fx < 1e-13 * std::max(1.0, std::fabs(fx)) && range < 1e-9 * scale) break;
    }
    return x;
}

} // namespace

WulffShape smallest_enclosing_wulff(const std::vector<Vec2>& pts, const WulffBasisPtr& basis) {
    if (pts.empty()) throw std::invalid_argument("smallest_enclosing_wulff: no points");
    if (!basis) throw std::invalid_argument("smallest_enclosing_wulff: null basis");
    Vec2 lo = pts[0], hi = pts[0];
    for (const Vec2& p : pts) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    Vec2 mid = (lo + hi) * 0.5;
    double scale = std::max({hi.x - lo.x, hi.y - lo.y, 1e-9});
    auto f = [&](Vec2 x) {
        double worst = 0;
        for (const Vec2& p : pts) worst = std::max(worst, basis->gauge(p - x));
        return worst;
    };
    Vec2 best = minimize_convex_2d(f, mid, scale);
    return WulffShape{basis, best, f(best)};
}

namespace {

struct Circle {
    Vec2 c{0, 0};
    double r2 = -1; // negative: empty
};

bool circle_covers(const Circle& C, Vec2 p) {
    if (C.r2 < 0) return false;
    Vec2 d = p - C.c;
    return d.dot(d) <= C.r2 * (1 + 1e-12) + 1e-24;
}

Circle circle_2(Vec2 a, Vec2 b) {
    Vec2 c = (a + b) * 0.5;
    Vec2 d = a - c;
    return {c, d.dot(d)};
}

Circle circle_3(Vec2 a, Vec2 b, Vec2 c) {
    double det = 2.0 * (b - a).cross(c - a);
    if (std::fabs(det) < 1e-14) {
        // collinear: the diameter of the farthest pair covers all three
        Circle best = circle_2(a, b);
        for (const Circle& cand : {circle_2(a, c), circle_2(b, c)})
            if (cand.r2 > best.r2) best = cand;
        return best;
    }
    double a2 = a.dot(a), b2 = b.dot(b), c2 = c.dot(c);
    Vec2 u{(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / det,
           (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / det};
    Vec2 d = a - u;
    return {u, d.dot(d)};
}

// Welzl's smallest enclosing circle over a deterministically permuted copy
Circle smallest_enclosing_circle(std::vector<Vec2> pts) {
    uint64_t s = 0x9E3779B97F4A7C15ull;
    for (size_t i = pts.size(); i > 1; --i) {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        std::swap(pts[i - 1], pts[(s >> 33) % i]);
    }
    Circle C;
    for (size_t i = 0; i < pts.size(); ++i) {
        if (circle_covers(C, pts[i])) continue;
        C = {pts[i], 0};
        for (size_t j = 0; j < i; ++j) {
            if (circle_covers(C, pts[j])) continue;
            C = circle_2(pts[i], pts[j]);
            for (size_t k = 0; k < j; ++k) {
                if (circle_covers(C, pts[k])) continue;
                C = circle_3(pts[i], pts[j], pts[k]);
            }
        }
    }
    return C;
}

} // namespace

WulffShape enclosing_wulff_quick(const std::vector<Vec2>& pts, const WulffBasisPtr& basis) {
    if (pts.empty()) throw std::invalid_argument("enclosing_wulff_quick: no points");
    if (!basis) throw std::invalid_argument("enclosing_wulff_quick: null basis");
    size_t n = basis->unit.v.size();
    double r_in = std::numeric_limits<double>::infinity(), r_out = 0;
    for (size_t i = 0; i < n; ++i) {
        Vec2 a = basis->unit.v[i], b = basis->unit.v[(i + 1) % n];
        Vec2 e = b - a;
        double len = e.norm();
        if (len > 1e-14) r_in = std::min(r_in, std::fabs(a.cross(b)) / len);
        r_out = std::max(r_out, a.norm());
    }
    if (!(r_in > 0) || r_out > r_in * 1.001) return smallest_enclosing_wulff(pts, basis);
    Circle C = smallest_enclosing_circle(pts);
    return WulffShape{basis, C.c, std::sqrt(std::max(0.0, C.r2)) / r_in};
}

WulffShape largest_inscribed_wulff(const Polygon& poly, const WulffBasisPtr& basis) {
    if (!basis) throw std::invalid_argument("largest_inscribed_wulff: null basis");
    if (poly.v.size() < 3) throw std::invalid_argument("largest_inscribed_wulff: degenerate polygon");
    if (!poly.is_convex(1e-9)) throw std::invalid_argument("largest_inscribed_wulff: polygon not convex");
    Polygon c = poly;
    if (c.signed_area() < 0) std::reverse(c.v.begin(), c.v.end());
    size_t n = c.v.size();
    struct Face {
        Vec2 nu;
        double off;
        double supp;
    };
    std::vector<Face> faces;
    faces.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Vec2 e = c.v[(i + 1) % n] - c.v[i];
        double len = e.norm();
        if (len <= 1e-14) continue;
        Vec2 nu{e.y / len, -e.x / len};
        faces.push_back({nu, c.v[i].dot(nu), basis->support_exact(nu)});
    }
    auto fit = [&](Vec2 x) {
        double rho = std::numeric_limits<double>::infinity();
        for (const Face& fc : faces) rho = std::min(rho, (fc.off - x.dot(fc.nu)) / fc.supp);
        return rho;
    };
    Vec2 centroid{0, 0};
    for (const Vec2& p : c.v) centroid = centroid + p;
    centroid = centroid * (1.0 / static_cast<double>(c.v.size()));
    double scale = std::max(points_diameter(c.v), 1e-9);
    Vec2 best = minimize_convex_2d([&](Vec2 x) { return -fit(x); }, centroid, scale);
    double rho = std::max(0.0, fit(best));
    return WulffShape{basis, best, rho};
}

BlaschkeBounds blaschke_bounds(const Polygon& D, const WulffBasisPtr& basis) {
    BlaschkeBounds b;
    b.wulff_energy = wulff_functional(D, basis->tau);
    double vol = D.area();
    double w = basis->w_beta;
    b.B_in = largest_inscribed_wulff(D, basis).B();
    b.B_out = smallest_enclosing_wulff(D.v, basis).B();
    b.bound_in = (w / 2.0) * (vol / b.B_in + b.B_in);
    b.bound_out = (w / 2.0) * (vol / b.B_out + b.B_out);
    return b;
}

WulffShape merge_wulff(const WulffShape& a, const WulffShape& b) {
    if (a.basis != b.basis) throw std::invalid_argument("merge_wulff: different bases");
    const WulffBasisPtr& basis = a.basis;
    double g = basis->gauge(b.center - a.center);
    double eps = 1e-12 * std::max(1.0, a.rho + b.rho);
    if (g > a.rho + b.rho + eps)
        throw std::invalid_argument("merge_wulff: shapes are gauge-disjoint");
    Vec2 x0;
    if (g <= eps) {
        x0 = a.center;
    } else {
        double slo = std::max(0.0, 1.0 - a.rho / g);
        double shi = std::min(1.0, b.rho / g);
        double s = (slo + shi) / 2.0;
        x0 = a.center + (b.center - a.center) * s;
    }
    WulffShape merged{basis, x0, a.rho + b.rho};
    return merged;
}

double annulus_inscribed_B(double B1, double B2) {
    if (!(B2 >= B1) || B1 < 0)
        throw std::invalid_argument("annulus_inscribed_B: need 0 <= B1 <= B2");
    return (B2 - B1) / 2.0;
}

double annulus_inscribed_B_erosion(const WulffBasisPtr& basis, double B1, double B2,
                                   int grid) {
    if (!basis) throw std::invalid_argument("annulus_inscribed_B_erosion: null basis");
    if (!(B2 >= B1) || B1 < 0)
        throw std::invalid_argument("annulus_inscribed_B_erosion: need 0 <= B1 <= B2");
    if (grid < 3) throw std::invalid_argument("annulus_inscribed_B_erosion: grid too small");
    double rho1 = 2.0 * B1 / basis->w_beta;
    double rho2 = 2.0 * B2 / basis->w_beta;
    double reach = 0;
    for (const Vec2& p : basis->unit.v) reach = std::max(reach, p.norm());
    double half = rho2 * reach;
    // A translate x + W_rho fits in the annulus exactly when
    // rho1 + rho <= gauge(x) <= rho2 - rho; scan candidate centers on a grid.
    double best = 0;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            Vec2 x{-half + 2 * half * i / (grid - 1), -half + 2 * half * j / (grid - 1)};
            double g = basis->gauge(x);
            double rho = std::min(g - rho1, rho2 - g);
            best = std::max(best, rho);
        }
    }
    return basis->w_beta * std::max(0.0, best) / 2.0;
}

TangentShiftResult tangent_shift(const WulffShape& shape, double theta, double d) {
    if (!(shape.rho > 0)) throw std::invalid_argument("tangent_shift: degenerate shape");
    if (!(d >= 0) || d >= shape.rho / 3.0)
        throw std::invalid_argument("tangent_shift: requires 0 <= d < rho / 3");
    const WulffBasisPtr& basis = shape.basis;
    Vec2 n{std::cos(theta), std::sin(theta)};
    // support point of W_1 in direction n
    Vec2 s{0, 0};
    double bestdot = -std::numeric_limits<double>::infinity();
    for (const Vec2& p : basis->unit.v) {
        double dd = p.dot(n);
        if (dd > bestdot) {
            bestdot = dd;
            s = p;
        }
    }
    TangentShiftResult r;
    r.direction = n;
    r.tangent_point = shape.center + s * shape.rho;
    Vec2 xprime = shape.center - s * d;
    r.enlarged = WulffShape{basis, xprime, shape.rho + d};
    return r;
}

} // namespace ilab
