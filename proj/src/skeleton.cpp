#include "isinglab/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace ilab {

namespace {

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<Vec2> contour_corners(const Contour& c) {
    std::vector<Vec2> pts;
    pts.reserve(c.loop.size());
    for (int k = 0; k < static_cast<int>(c.loop.size()); ++k) pts.push_back(c.corner_point(k));
    return pts;
}

double dist_to_closed_polyline(Vec2 q, const std::vector<Vec2>& pts) {
    double best = std::numeric_limits<double>::infinity();
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance(q, pts[i], pts[(i + 1) % n]));
    return best;
}

// Upper bound on the Hausdorff distance between the contour polyline and the
// skeleton polygon: endpoint evaluations plus Lipschitz slack of half a
// subdivision step on either curve.
double hausdorff_bound(const std::vector<Vec2>& contour, const std::vector<Vec2>& skel) {
    double a = 0.0;
    for (const Vec2& c : contour) a = std::max(a, dist_to_closed_polyline(c, skel));
    a += 0.5; // contour segments have unit length

    double b = 0.0;
    const size_t m = skel.size();
    for (size_t i = 0; i < m; ++i) {
        Vec2 p = skel[i], q = skel[(i + 1) % m];
        double chord = dist(p, q);
        int pieces = std::max(1, static_cast<int>(std::ceil(chord * 2.0)));
        double worst = 0.0;
        for (int k = 0; k <= pieces; ++k) {
            double t = static_cast<double>(k) / pieces;
            Vec2 s{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
            worst = std::max(worst, dist_to_closed_polyline(s, contour));
        }
        b = std::max(b, worst + 0.5 * chord / pieces);
    }
    return std::max(a, b);
}

bool polygon_parity(const std::vector<Vec2>& verts, Vec2 p) {
    bool in = false;
    const size_t n = verts.size();
    for (size_t i = 0; i < n; ++i) {
        Vec2 a = verts[i], b = verts[(i + 1) % n];
        if ((a.y > p.y) != (b.y > p.y)) {
            double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (xc > p.x) in = !in;
        }
    }
    return in;
}

struct Seg {
    Vec2 a, b;
};

std::vector<Seg> family_segments(const SkeletonFamily& family) {
    std::vector<Seg> segs;
    for (const Skeleton& s : family.skeletons) {
        const size_t m = s.vertices.size();
        for (size_t i = 0; i < m; ++i) segs.push_back({s.vertices[i], s.vertices[(i + 1) % m]});
    }
    return segs;
}

// Exact even-odd area of the union of (possibly self-intersecting) closed
// polygons via a vertical slab decomposition: slab boundaries at every vertex
// and every pairwise segment crossing, so that segments never cross inside a
// slab and the bands sorted by height alternate parity.
double even_odd_area(const std::vector<Seg>& segs) {
    if (segs.empty()) return 0.0;
    std::vector<double> xs;
    for (const Seg& s : segs) {
        xs.push_back(s.a.x);
        xs.push_back(s.b.x);
    }
    for (size_t i = 0; i < segs.size(); ++i)
        for (size_t j = i + 1; j < segs.size(); ++j) {
            Vec2 p = segs[i].a, r{segs[i].b.x - p.x, segs[i].b.y - p.y};
            Vec2 q = segs[j].a, s{segs[j].b.x - q.x, segs[j].b.y - q.y};
            double denom = r.x * s.y - r.y * s.x;
            if (std::abs(denom) < 1e-14) continue;
            double t = ((q.x - p.x) * s.y - (q.y - p.y) * s.x) / denom;
            double u = ((q.x - p.x) * r.y - (q.y - p.y) * r.x) / denom;
            if (t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0) xs.push_back(p.x + t * r.x);
        }
    std::sort(xs.begin(), xs.end());

    double area = 0.0;
    for (size_t k = 0; k + 1 < xs.size(); ++k) {
        double x0 = xs[k], x1 = xs[k + 1];
        if (x1 - x0 <= 1e-12) continue;
        double xm = 0.5 * (x0 + x1);
        struct Band {
            double ym, y0, y1;
        };
        std::vector<Band> bands;
        for (const Seg& s : segs) {
            double lo = std::min(s.a.x, s.b.x), hi = std::max(s.a.x, s.b.x);
            if (!(lo < xm && xm < hi)) continue;
            double slope = (s.b.y - s.a.y) / (s.b.x - s.a.x);
            bands.push_back({s.a.y + slope * (xm - s.a.x), s.a.y + slope * (x0 - s.a.x),
                             s.a.y + slope * (x1 - s.a.x)});
        }
        std::sort(bands.begin(), bands.end(), [](const Band& a, const Band& b) { return a.ym < b.ym; });
        for (size_t t = 0; t + 1 < bands.size(); t += 2)
            area += 0.5 * ((bands[t + 1].y0 - bands[t].y0) + (bands[t + 1].y1 - bands[t].y1)) *
                    (x1 - x0);
    }
    return area;
}

} // namespace

Polygon Skeleton::polygon() const { return Polygon{vertices}; }

double Skeleton::min_side() const {
    return side_lengths.empty() ? 0.0 : *std::min_element(side_lengths.begin(), side_lengths.end());
}

double Skeleton::max_side() const {
    return side_lengths.empty() ? 0.0 : *std::max_element(side_lengths.begin(), side_lengths.end());
}

bool SkeletonFamily::plus_parity(Vec2 p) const {
    bool odd = false;
    for (const Skeleton& s : skeletons)
        if (polygon_parity(s.vertices, p)) odd = !odd;
    return odd;
}

size_t SkeletonFamily::vertex_count() const {
    size_t n = 0;
    for (const Skeleton& s : skeletons) n += s.vertices.size();
    return n;
}

Skeleton build_skeleton(const Contour& contour, const ModelParams& p) {
    p.validate();
    const double ell = p.skeleton_step();
    const double lo = ell / 12.0;
    const std::vector<Vec2> pts = contour_corners(contour);
    const long n = static_cast<long>(pts.size());
    if (points_diameter(pts) <= ell)
        throw std::invalid_argument("contour diameter does not exceed the skeleton step");

    long start = 0;
    for (long k = 1; k < n; ++k)
        if (pts[k].x < pts[start].x || (pts[k].x == pts[start].x && pts[k].y < pts[start].y))
            start = k;
    auto at = [&](long t) -> const Vec2& { return pts[(start + t) % n]; };

    const long step_max = std::max<long>(1, static_cast<long>(std::floor(ell)));
    std::vector<long> marks{0};
    bool closed = false;
    while (true) {
        long cur = marks.back();
        long rem = n - cur;
        if (rem <= step_max && dist(at(cur), at(0)) >= lo) {
            closed = true;
            break;
        }
        long next = -1;
        for (long d = std::min(step_max, rem - 1); d >= 1; --d)
            if (dist(at(cur + d), at(cur)) >= lo) {
                next = d;
                break;
            }
        if (next < 0) break;
        marks.push_back(cur + next);
    }

    while (!closed) {
        long prev = marks.back();
        long rem = n - prev;
        double chord = dist(at(prev), at(0));
        if (chord >= lo && chord <= ell && rem <= 2 * step_max) {
            closed = true; // merged closing side, Hausdorff still within one step
        } else if (chord > ell && rem <= 2 * step_max) {
            // split the overlong closing arc near its midpoint
            long t_lo = std::max(prev + 1, n - step_max);
            long t_hi = std::min(prev + step_max, n - 1);
            long mid = (prev + n) / 2;
            long pick = -1;
            for (long off = 0; off <= n && pick < 0; ++off)
                for (long t : {mid + off, mid - off}) {
                    if (t < t_lo || t > t_hi) continue;
                    double c1 = dist(at(prev), at(t));
                    double c2 = dist(at(t), at(0));
                    if (c1 >= lo && c1 <= ell && c2 >= lo && c2 <= ell) {
                        pick = t;
                        break;
                    }
                }
            if (pick < 0) throw std::runtime_error("skeleton marching got stuck while closing");
            marks.push_back(pick);
            closed = true;
        } else {
            if (marks.size() < 2 || n - marks[marks.size() - 2] > 2 * step_max)
                throw std::runtime_error("skeleton marching got stuck");
            marks.pop_back();
        }
    }

    Skeleton s;
    s.source = contour;
    s.vertices.reserve(marks.size());
    for (long t : marks) s.vertices.push_back(at(t));
    const size_t m = s.vertices.size();
    s.side_lengths.resize(m);
    for (size_t i = 0; i < m; ++i) s.side_lengths[i] = dist(s.vertices[i], s.vertices[(i + 1) % m]);
    s.hausdorff = hausdorff_bound(pts, s.vertices);
    return s;
}

SkeletonFamily skeleton_family(const ContourFamily& family, const ModelParams& p) {
    SkeletonFamily out;
    out.domain = family.domain;
    for (const Contour& c : family.contours)
        if (classify_vertebrate(c, p) == Backbone::Vertebrate)
            out.skeletons.push_back(build_skeleton(c, p));
    return out;
}

SkeletonFamily skeleton_family(const SpinConfig& config, const BoundaryCondition& bc,
                               const ModelParams& p) {
    return skeleton_family(extract_contours(config, bc), p);
}

double surface_energy(const SkeletonFamily& family, const SurfaceTension& tension) {
    double w = 0.0;
    for (const Skeleton& s : family.skeletons) w += wulff_functional(s.polygon(), tension);
    return w;
}

PhaseVolumes phase_volumes(const SkeletonFamily& family, const ContourFamily& contours,
                           const ModelParams& p) {
    PhaseVolumes out;
    out.v_g = static_cast<double>(odd_enclosed_count(contours.vertebrates(p)));
    const std::vector<Seg> segs = family_segments(family);
    out.v_hat = even_odd_area(segs);
    if (segs.empty()) return out;

    double minx = segs[0].a.x, maxx = minx, miny = segs[0].a.y, maxy = miny;
    for (const Seg& s : segs) {
        minx = std::min({minx, s.a.x, s.b.x});
        maxx = std::max({maxx, s.a.x, s.b.x});
        miny = std::min({miny, s.a.y, s.b.y});
        maxy = std::max({maxy, s.a.y, s.b.y});
    }
    const double ell = p.skeleton_step();
    long count = 0;
    for (long y = static_cast<long>(std::ceil(miny)); y <= static_cast<long>(std::floor(maxy)); ++y)
        for (long x = static_cast<long>(std::ceil(minx)); x <= static_cast<long>(std::floor(maxx));
             ++x) {
            Vec2 site{static_cast<double>(x), static_cast<double>(y)};
            if (!family.plus_parity(site)) continue;
            double d = std::numeric_limits<double>::infinity();
            for (const Seg& s : segs) {
                d = std::min(d, point_segment_distance(site, s.a, s.b));
                if (d <= ell) break;
            }
            if (d > ell) ++count;
        }
    out.v_check = static_cast<double>(count);
    return out;
}

PhaseVolumes phase_volumes(const SkeletonFamily& family, const SpinConfig& config,
                           const BoundaryCondition& bc, const ModelParams& p) {
    return phase_volumes(family, extract_contours(config, bc), p);
}

FreeEnergyPair skeleton_free_energy(const SkeletonFamily& family, const ContourFamily& contours,
                                    const SurfaceTension& tension, double m_star,
                                    const ModelParams& p) {
    PhaseVolumes pv = phase_volumes(family, contours, p);
    return {surface_energy(family, tension), p.h * m_star * pv.v_check};
}

void dump_skeletons(const SkeletonFamily& family, const FreeEnergyPair& energy, std::ostream& os) {
    for (const Skeleton& s : family.skeletons) {
        nlohmann::json j;
        auto& verts = j["vertices"];
        verts = nlohmann::json::array();
        for (const Vec2& v : s.vertices) verts.push_back({v.x, v.y});
        j["min_side"] = s.min_side();
        j["max_side"] = s.max_side();
        j["hausdorff"] = s.hausdorff;
        os << j.dump() << '\n';
    }
    nlohmann::json tail;
    tail["surface"] = energy.surface;
    tail["volume"] = energy.volume;
    os << tail.dump() << '\n';
}

} // namespace ilab
