#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "isinglab/geometry.hpp"
#include "isinglab/rng.hpp"

using namespace ilab;

namespace {
constexpr double kPi = 3.14159265358979323846;

Polygon rectangle_poly(double w, double h, Vec2 c = {0, 0}) {
    return Polygon{{{c.x - w / 2, c.y - h / 2},
                    {c.x + w / 2, c.y - h / 2},
                    {c.x + w / 2, c.y + h / 2},
                    {c.x - w / 2, c.y + h / 2}}};
}
} // namespace

TEST_CASE("polygon basics") {
    Polygon sq = rectangle_poly(2, 2);
    CHECK(sq.area() == doctest::Approx(4.0));
    CHECK(sq.perimeter() == doctest::Approx(8.0));
    CHECK(sq.contains({0, 0}));
    CHECK(sq.contains({0.99, 0.99}));
    CHECK(!sq.contains({1.5, 0}));
    CHECK(sq.support({1, 0}) == doctest::Approx(1.0));
    CHECK(sq.support({1, 1}) == doctest::Approx(2.0));
    CHECK(sq.is_convex());

    Polygon bow{{{0, 0}, {2, 2}, {2, 0}, {0, 2}}};
    CHECK(!bow.is_convex());

    Polygon hull = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.2, 0.9}});
    CHECK(hull.v.size() == 4);
    CHECK(hull.area() == doctest::Approx(1.0));
    CHECK(points_diameter({{0, 0}, {3, 4}, {1, 1}}) == doctest::Approx(5.0));
    CHECK(point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
    CHECK(point_segment_distance({3, 0}, {-1, 0}, {1, 0}) == doctest::Approx(2.0));
}

TEST_CASE("isotropic tension gives the disk") {
    auto tau = SurfaceTension::constant(1.0);
    auto basis = build_wulff_basis(tau, 4096);
    CHECK(basis->area1 == doctest::Approx(kPi).epsilon(1e-4));
    // perimeter of the unit-gauge shape approaches 2 pi
    CHECK(basis->unit.perimeter() == doctest::Approx(2 * kPi).epsilon(1e-4));
    // w_beta = surface energy of the unit-area disk = 2 sqrt(pi)
    CHECK(basis->w_beta == doctest::Approx(2 * std::sqrt(kPi)).epsilon(1e-3));

    FreeEnergyScalars s = scalars_from_basis(*basis, 1.0);
    CHECK(s.B_c == doctest::Approx(std::sqrt(kPi)).epsilon(1e-3));
    CHECK(s.A == doctest::Approx(kPi).epsilon(2e-3));
    // the maximum of phi is attained at B_c and equals A
    CHECK(phi_free_energy(s, s.B_c) == doctest::Approx(s.A).epsilon(1e-12));
    CHECK(phi_free_energy(s, 0.9 * s.B_c) < s.A);
    CHECK(phi_free_energy(s, 1.1 * s.B_c) < s.A);
}

TEST_CASE("axis-aligned tension gives the square") {
    // tau(theta) = |cos| + |sin| has the unit square [-1,1]^2 as gauge body
    auto tau = SurfaceTension::tabulated([] {
        std::vector<std::pair<double, double>> t;
        for (int i = 0; i < 2000; ++i) {
            double th = 2 * kPi * i / 2000.0;
            t.emplace_back(th, std::fabs(std::cos(th)) + std::fabs(std::sin(th)));
        }
        return t;
    }());
    auto basis = build_wulff_basis(tau, 4096);
    // the gauge-1 body is the square [-1,1]^2
    CHECK(basis->unit.area() == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(basis->unit.support({1, 0}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(basis->unit.support({0, 1}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(basis->unit.support({1, 1}) == doctest::Approx(2.0).epsilon(1e-3));
    // the unit-volume shape is the side-1 square, each side at tension 1
    CHECK(basis->w_beta == doctest::Approx(4.0).epsilon(1e-6));

    // gauge of the square [-1,1]^2 is max(|x|, |y|)
    WulffShape one = make_wulff_shape(basis, {0, 0}, 1.0);
    CHECK(one.gauge_from_center({0.5, 0.3}) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(one.gauge_from_center({0.2, -0.1}) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("wulff functional on explicit curves") {
    auto tau = SurfaceTension::constant(1.0);
    CHECK(wulff_functional(rectangle_poly(1, 1), tau) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(wulff_functional(rectangle_poly(2, 1), tau) == doctest::Approx(6.0).epsilon(1e-12));
    // orientation must not matter
    Polygon rev = rectangle_poly(2, 1);
    std::reverse(rev.v.begin(), rev.v.end());
    CHECK(wulff_functional(rev, tau) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK_THROWS(wulff_functional(Polygon{{{0, 0}, {1, 0}}}, tau));

    // anisotropic: square tension on the unit square counts tau(axis)=1 per side
    auto tsq = SurfaceTension::tabulated({{0.0, 1.0}, {kPi / 4, std::sqrt(2.0)}});
    CHECK(wulff_functional(rectangle_poly(1, 1), tsq) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("scaling identities for the wulff shape") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 2048);
    for (double rho : {0.5, 1.0, 3.7}) {
        WulffShape w = make_wulff_shape(basis, {1.0, -2.0}, rho);
        // rho W(boundary of W_rho) = 2 |W_rho|
        double energy = wulff_functional(basis->unit.scaled(rho), basis->tau);
        CHECK(rho * energy == doctest::Approx(2.0 * w.area()).epsilon(1e-3));
        // B = (w_beta/2) rho = sqrt(area)
        CHECK(w.B() == doctest::Approx(std::sqrt(w.area())).epsilon(1e-6));
    }
    // round trip of the B parametrization
    WulffShape wb = wulff_shape_of_B(basis, {0, 0}, 2.5);
    CHECK(wb.B() == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(wb.area() == doctest::Approx(6.25).epsilon(1e-6));
}

TEST_CASE("blaschke bounds") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 2048);

    // 2 x 1 rectangle: energy 6, area 2, inscribed disk radius 1/2
    BlaschkeBounds b = blaschke_bounds(rectangle_poly(2, 1), basis);
    CHECK(b.wulff_energy == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(b.B_in == doctest::Approx(std::sqrt(kPi) / 2).epsilon(1e-3));
    CHECK(b.bound_in == doctest::Approx(4.0 + kPi / 2.0).epsilon(1e-3));
    CHECK(b.wulff_energy >= b.bound_in - 1e-9);
    CHECK(b.wulff_energy >= b.bound_out - 1e-9);
    // enclosing disk of the 2x1 rectangle has radius sqrt(5)/2
    CHECK(b.B_out == doctest::Approx(std::sqrt(kPi * 5.0 / 4.0)).epsilon(1e-3));

    // the wulff shape itself meets both bounds with equality
    Polygon wp = basis->unit.scaled(3.0);
    BlaschkeBounds eq = blaschke_bounds(wp, basis);
    CHECK(eq.wulff_energy == doctest::Approx(eq.bound_in).epsilon(1e-3));
    CHECK(eq.wulff_energy == doctest::Approx(eq.bound_out).epsilon(1e-3));

    // random convex polygons: both bounds hold
    Rng rng(31, 0);
    for (int rep = 0; rep < 12; ++rep) {
        std::vector<Vec2> pts;
        for (int i = 0; i < 20; ++i)
            pts.push_back({rng.uniform(-3, 3), rng.uniform(-2, 2)});
        Polygon hull = convex_hull(pts);
        if (hull.v.size() < 3) continue;
        BlaschkeBounds rb = blaschke_bounds(hull, basis);
        CHECK(rb.wulff_energy >= rb.bound_in - 1e-6);
        CHECK(rb.wulff_energy >= rb.bound_out - 1e-6);
        CHECK(rb.B_in <= rb.B_out + 1e-9);
    }

    // anisotropic tension: same inequalities
    auto tan = SurfaceTension::tabulated([] {
        std::vector<std::pair<double, double>> t;
        for (int i = 0; i < 720; ++i) {
            double th = 2 * kPi * i / 720.0;
            t.emplace_back(th, 1.0 + 0.3 * std::cos(4 * th));
        }
        return t;
    }());
    auto ab = build_wulff_basis(tan, 2048);
    BlaschkeBounds an = blaschke_bounds(rectangle_poly(2.5, 1.5), ab);
    CHECK(an.wulff_energy >= an.bound_in - 1e-6);
    CHECK(an.wulff_energy >= an.bound_out - 1e-6);
    Polygon awp = ab->unit.scaled(2.0).translated({0.4, -0.2});
    BlaschkeBounds aeq = blaschke_bounds(awp, ab);
    CHECK(aeq.wulff_energy == doctest::Approx(aeq.bound_in).epsilon(2e-3));
    CHECK(aeq.wulff_energy == doctest::Approx(aeq.bound_out).epsilon(2e-3));
}

TEST_CASE("inscribed and enclosing fits") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 1024);

    WulffShape in = largest_inscribed_wulff(rectangle_poly(2, 1, {3, 3}), basis);
    CHECK(in.rho == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(in.center.y == doctest::Approx(3.0).epsilon(1e-3));

    WulffShape out = smallest_enclosing_wulff(rectangle_poly(2, 1, {3, 3}).v, basis);
    CHECK(out.rho == doctest::Approx(std::sqrt(5.0) / 2).epsilon(1e-4));
    CHECK(out.center.x == doctest::Approx(3.0).epsilon(1e-3));
    CHECK(out.center.y == doctest::Approx(3.0).epsilon(1e-3));

    // enclosing a wulff shape recovers it
    WulffShape w = make_wulff_shape(basis, {-1, 2}, 1.7);
    WulffShape rec = smallest_enclosing_wulff(w.polygon().v, basis);
    CHECK(rec.rho == doctest::Approx(1.7).epsilon(1e-3));
    CHECK((rec.center - w.center).norm() < 2e-3);
}

TEST_CASE("merge covers the union exactly when shapes intersect") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 1024);
    WulffShape a = make_wulff_shape(basis, {0, 0}, 1.0);
    WulffShape b = make_wulff_shape(basis, {2.0, 0}, 2.0); // tangent internally? dist 2 = 1+... intersects
    WulffShape m = merge_wulff(a, b);
    CHECK(m.rho == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(a.contained_in(m, 1e-6));
    CHECK(b.contained_in(m, 1e-6));
    // B adds up: volume of the merge is (B_a + B_b)^2
    CHECK(m.B() == doctest::Approx(a.B() + b.B()).epsilon(1e-9));

    WulffShape far = make_wulff_shape(basis, {10, 0}, 1.0);
    CHECK_THROWS(merge_wulff(a, far));

    // concentric: merge of nested shapes still contains both
    WulffShape inner = make_wulff_shape(basis, {0.2, 0.1}, 0.5);
    WulffShape m2 = merge_wulff(a, inner);
    CHECK(a.contained_in(m2, 1e-6));
    CHECK(inner.contained_in(m2, 1e-6));

    // anisotropic: random intersecting pairs stay covered
    auto ab = build_wulff_basis(SurfaceTension::tabulated([] {
                                    std::vector<std::pair<double, double>> t;
                                    for (int i = 0; i < 720; ++i) {
                                        double th = 2 * kPi * i / 720.0;
                                        t.emplace_back(th, 1.0 + 0.25 * std::cos(4 * th));
                                    }
                                    return t;
                                }()),
                                1024);
    Rng rng(17, 0);
    for (int rep = 0; rep < 10; ++rep) {
        WulffShape u = make_wulff_shape(ab, {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                        rng.uniform(0.5, 1.5));
        WulffShape v = make_wulff_shape(ab, {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                        rng.uniform(0.5, 1.5));
        double g = ab->gauge(v.center - u.center);
        if (g > u.rho + v.rho) {
            CHECK_THROWS(merge_wulff(u, v));
            continue;
        }
        WulffShape mu = merge_wulff(u, v);
        CHECK(u.contained_in(mu, 1e-6));
        CHECK(v.contained_in(mu, 1e-6));
        CHECK(mu.B() == doctest::Approx(u.B() + v.B()).epsilon(1e-9));
    }
}

TEST_CASE("annulus fit: closed form against erosion search") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 1024);
    CHECK(annulus_inscribed_B(1.0, 3.0) == doctest::Approx(1.0));
    CHECK(annulus_inscribed_B_erosion(basis, 1.0, 3.0) ==
          doctest::Approx(1.0).epsilon(0.02));
    CHECK(annulus_inscribed_B_erosion(basis, 0.5, 2.0) ==
          doctest::Approx(annulus_inscribed_B(0.5, 2.0)).epsilon(0.02));

    auto ab = build_wulff_basis(SurfaceTension::tabulated([] {
                                    std::vector<std::pair<double, double>> t;
                                    for (int i = 0; i < 720; ++i) {
                                        double th = 2 * kPi * i / 720.0;
                                        t.emplace_back(th, 1.0 + 0.2 * std::cos(4 * th));
                                    }
                                    return t;
                                }()),
                                1024);
    CHECK(annulus_inscribed_B_erosion(ab, 1.0, 2.5) ==
          doctest::Approx(annulus_inscribed_B(1.0, 2.5)).epsilon(0.02));
}

TEST_CASE("tangent shift encloses the original shape") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 2048);
    WulffShape w = make_wulff_shape(basis, {1, 1}, 3.0);

    CHECK_THROWS(tangent_shift(w, 0.3, 1.0)); // d >= rho/3

    for (double theta : {0.0, 0.7, 2.3, 4.0}) {
        auto ts = tangent_shift(w, theta, 0.5);
        CHECK(ts.enlarged.rho == doctest::Approx(3.5).epsilon(1e-12));
        // the original stays inside the shifted enlargement
        CHECK(w.contained_in(ts.enlarged, 1e-6));
        // the tangent point lies on both boundaries
        CHECK(w.gauge_from_center(ts.tangent_point) == doctest::Approx(w.rho).epsilon(1e-6));
        CHECK(ts.enlarged.gauge_from_center(ts.tangent_point) ==
              doctest::Approx(ts.enlarged.rho).epsilon(1e-6));
        // for the disk, the support point in direction theta
        Vec2 expect{1 + 3.0 * std::cos(theta), 1 + 3.0 * std::sin(theta)};
        CHECK((ts.tangent_point - expect).norm() < 5e-3);
    }

    // anisotropic randomized containment, including the shrunken containment
    // x' + W_{rho-3d} inside x + W_{rho-2d}
    auto ab = build_wulff_basis(SurfaceTension::tabulated([] {
                                    std::vector<std::pair<double, double>> t;
                                    for (int i = 0; i < 720; ++i) {
                                        double th = 2 * kPi * i / 720.0;
                                        t.emplace_back(th, 1.2 + 0.3 * std::sin(2 * th) *
                                                                     std::sin(2 * th));
                                    }
                                    return t;
                                }()),
                                2048);
    Rng rng(77, 0);
    for (int rep = 0; rep < 16; ++rep) {
        double rho = rng.uniform(1.0, 4.0);
        double d = rng.uniform(0.01, rho / 3.0 * 0.99);
        double theta = rng.uniform(0.0, 2 * kPi);
        WulffShape s = make_wulff_shape(ab, {rng.uniform(-2, 2), rng.uniform(-2, 2)}, rho);
        auto ts = tangent_shift(s, theta, d);
        CHECK(s.contained_in(ts.enlarged, 1e-9));
        WulffShape shrunk_shifted = make_wulff_shape(ab, ts.enlarged.center, rho - 3 * d);
        WulffShape shrunk = make_wulff_shape(ab, s.center, rho - 2 * d);
        CHECK(shrunk_shifted.contained_in(shrunk, 1e-9));
    }
}

TEST_CASE("surface tension tables and symmetry report") {
    // quarter table is extended by symmetry
    auto q = SurfaceTension::tabulated({{0.0, 1.0}, {kPi / 4, 1.4}});
    CHECK(q(0.0) == doctest::Approx(1.0));
    CHECK(q(kPi / 2) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(q(kPi) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(q(kPi / 4 + kPi) == doctest::Approx(1.4).epsilon(1e-9));
    CHECK(q.check_quarter_symmetry().symmetric);

    // file round trip
    std::string path = "tension_table_test.tmp";
    {
        std::ofstream f(path);
        f << "# theta tau\n";
        for (int i = 0; i < 90; ++i) {
            double th = (kPi / 2) * i / 90.0;
            f << th << " " << 1.0 + 0.1 * std::cos(4 * th) << "\n";
        }
    }
    auto ft = SurfaceTension::from_file(path);
    std::remove(path.c_str());
    CHECK(ft(0.0) == doctest::Approx(1.1).epsilon(1e-6));
    CHECK(ft(kPi / 4) == doctest::Approx(0.9).epsilon(1e-3));
    CHECK(ft(1.3 + kPi / 2) == doctest::Approx(ft(1.3)).epsilon(1e-9));
    CHECK(ft.min_value() <= 0.91);
    CHECK(ft.max_value() >= 1.09);

    // full-circle asymmetric table is reported, not rejected
    auto asym = SurfaceTension::tabulated([] {
        std::vector<std::pair<double, double>> t;
        for (int i = 0; i < 720; ++i) {
            double th = 2 * kPi * i / 720.0;
            t.emplace_back(th, 1.0 + 0.2 * std::cos(th));
        }
        return t;
    }());
    auto rep = asym.check_quarter_symmetry();
    CHECK(!rep.symmetric);
    CHECK(rep.worst > 0.1);
}
