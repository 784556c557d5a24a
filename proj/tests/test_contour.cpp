#include "doctest.h"

#include <cmath>
#include <sstream>

#include "isinglab/contour.hpp"
#include "isinglab/rng.hpp"

using namespace ilab;

namespace {
constexpr double kPi = 3.14159265358979323846;

ModelParams params(double h, double b = 0.24) {
    ModelParams p;
    p.beta = 1.0;
    p.h = h;
    p.b_exp = b;
    p.r_exp = b / 2.1;
    return p;
}

SpinConfig with_plus(DomainPtr d, const std::vector<Coord>& plus) {
    SpinConfig c = SpinConfig::uniform(d, -1);
    for (Coord s : plus) c.s[static_cast<size_t>(d->index_of(s))] = 1;
    return c;
}

size_t opposite_pairs(const SpinConfig& c, const BoundaryCondition& bc) {
    const Domain& d = *c.domain;
    size_t n = 0;
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int i = 0; i < d.size(); ++i) {
        Coord s = d.site(i);
        for (int k = 0; k < 4; ++k) {
            Coord nb{s.x + dx[k], s.y + dy[k]};
            int j = d.index_of(nb);
            if (j >= 0) {
                if (k == 0 || k == 2) n += c.at(i) != c.at(j) ? 1 : 0; // internal once
            } else {
                n += c.at(i) != bc.spin_at(nb) ? 1 : 0;
            }
        }
    }
    return n;
}
} // namespace

TEST_CASE("extraction basics") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(8, 8));
    auto bc = BoundaryCondition::minus();

    auto empty = extract_contours(SpinConfig::uniform(dom, -1), bc);
    CHECK(empty.contours.empty());

    auto one = extract_contours(with_plus(dom, {{3, 3}}), bc);
    REQUIRE(one.contours.size() == 1);
    const Contour& c = one.contours[0];
    CHECK(c.length() == 4);
    CHECK(c.interior_sites == 1);
    CHECK(c.is_external());
    CHECK(c.loop[0] == Coord{3, 3});
    CHECK(c.direction_string() == "ENWS");
    CHECK(c.bbox_min == Coord{3, 3});
    CHECK(c.bbox_max == Coord{4, 4});
    CHECK(c.encloses_cell({3, 3}));
    CHECK(!c.encloses_cell({4, 3}));
    CHECK(!c.encloses_cell({2, 3}));

    // a plus domino produces a single 6-edge loop
    auto dom2 = extract_contours(with_plus(dom, {{2, 2}, {3, 2}}), bc);
    REQUIRE(dom2.contours.size() == 1);
    CHECK(dom2.contours[0].length() == 6);
    CHECK(dom2.contours[0].interior_sites == 2);
}

TEST_CASE("splitting rule separates diagonal plus pairs and joins minus holes") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(8, 8));
    auto minus = BoundaryCondition::minus();
    auto plus = BoundaryCondition::plus();

    // both diagonal orientations: two 4-edge contours each
    for (auto pair : {std::vector<Coord>{{2, 2}, {3, 3}}, std::vector<Coord>{{3, 2}, {2, 3}}}) {
        auto fam = extract_contours(with_plus(dom, pair), minus);
        REQUIRE(fam.contours.size() == 2);
        CHECK(fam.contours[0].length() == 4);
        CHECK(fam.contours[1].length() == 4);
        CHECK(fam.contours[0].interior_sites == 1);
        CHECK(fam.contours[1].interior_sites == 1);
    }

    // dual picture: two diagonal minus holes in a plus sea join into one
    // 8-edge contour of interior 2 (the plus corners between them are rounded)
    SpinConfig holes = SpinConfig::uniform(dom, 1);
    holes.s[static_cast<size_t>(dom->index_of({4, 4}))] = -1;
    holes.s[static_cast<size_t>(dom->index_of({5, 5}))] = -1;
    auto fam = extract_contours(holes, plus);
    REQUIRE(fam.contours.size() == 1);
    CHECK(fam.contours[0].length() == 8);
    CHECK(fam.contours[0].interior_sites == 2);
}

TEST_CASE("round trip on random configurations") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(8, 8));
    Rng rng(101, 0);
    for (const auto& bc : {BoundaryCondition::minus(), BoundaryCondition::plus()}) {
        for (int rep = 0; rep < 5000; ++rep) {
            SpinConfig c = SpinConfig::uniform(dom, -1);
            for (auto& s : c.s) s = rng.uniform() < 0.5 ? int8_t(1) : int8_t(-1);
            auto fam = extract_contours(c, bc);
            CHECK(reconstruct(fam, bc) == c);
            CHECK(fam.total_edges() == opposite_pairs(c, bc));
        }
    }
}

TEST_CASE("round trip on an annulus domain with pair boundary") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 512);
    auto dom = std::make_shared<Domain>(Domain::annulus(basis, 1.0, 3.0, 0.2));
    auto bc = BoundaryCondition::pair(1, -1, dom->inner_shape());

    // all-minus: one contour hugging the plus hole
    auto fam = extract_contours(SpinConfig::uniform(dom, -1), bc);
    REQUIRE(fam.contours.size() == 1);
    CHECK(reconstruct(fam, bc) == SpinConfig::uniform(dom, -1));

    Rng rng(55, 0);
    for (int rep = 0; rep < 300; ++rep) {
        SpinConfig c = SpinConfig::uniform(dom, -1);
        for (auto& s : c.s) s = rng.uniform() < 0.3 ? int8_t(1) : int8_t(-1);
        auto f = extract_contours(c, bc);
        CHECK(reconstruct(f, bc) == c);
    }
}

TEST_CASE("split boundary does not close and is rejected") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(6, 6));
    auto bc = BoundaryCondition::split(0.0, {2.5, 2.5});
    CHECK_THROWS_AS(extract_contours(SpinConfig::uniform(dom, -1), bc), std::invalid_argument);
}

TEST_CASE("parity and nesting invariants") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(10, 10));
    auto bc = BoundaryCondition::minus();
    Rng rng(7, 0);
    for (int rep = 0; rep < 200; ++rep) {
        SpinConfig c = SpinConfig::uniform(dom, -1);
        for (auto& s : c.s) s = rng.uniform() < 0.45 ? int8_t(1) : int8_t(-1);
        auto fam = extract_contours(c, bc);
        for (int i = 0; i < dom->size(); ++i) {
            Coord s = dom->site(i);
            int cnt = 0;
            for (const auto& g : fam.contours) cnt += g.encloses_cell(s) ? 1 : 0;
            CHECK(c.at(i) == (cnt % 2 == 1 ? 1 : -1));
        }
        // depth tags match the enclosing counts of the representative cells
        for (const auto& g : fam.contours) {
            Coord rep_cell{g.rows.front().second.front(), g.rows.front().first};
            int depth = 0;
            for (const auto& other : fam.contours) {
                if (&other == &g) continue;
                depth += other.encloses_cell(rep_cell) ? 1 : 0;
            }
            CHECK(g.nesting_depth == depth);
        }
        // externals are pairwise non-nested
        auto ext = fam.externals();
        for (const Contour* a : ext)
            for (const Contour* b : ext) {
                if (a == b) continue;
                Coord rep_cell{b->rows.front().second.front(), b->rows.front().first};
                CHECK(!a->encloses_cell(rep_cell));
            }
    }
}

TEST_CASE("vertebrate thresholds") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(8, 8));
    auto bc = BoundaryCondition::minus();
    auto size_n = [&](int n) { // a 1 x n plus bar
        std::vector<Coord> plus;
        for (int k = 0; k < n; ++k) plus.push_back({1 + k, 3});
        return extract_contours(with_plus(dom, plus), bc).contours[0];
    };

    // h=0.2, b=0.2: threshold 5^0.4 ~ 1.9037
    auto p02 = params(0.2, 0.2);
    CHECK(p02.vertebrate_threshold() == doctest::Approx(std::pow(5.0, 0.4)));
    CHECK(classify_vertebrate(size_n(1), p02) == Backbone::Invertebrate);
    CHECK(classify_vertebrate(size_n(2), p02) == Backbone::Vertebrate);

    // h=0.05, b=0.2: threshold 20^0.4 ~ 3.3145
    auto p005 = params(0.05, 0.2);
    CHECK(classify_vertebrate(size_n(3), p005) == Backbone::Invertebrate);
    CHECK(classify_vertebrate(size_n(4), p005) == Backbone::Vertebrate);

    // interior 1 is invertebrate whenever the threshold exceeds one
    CHECK(classify_vertebrate(size_n(1), params(0.5, 0.2)) == Backbone::Invertebrate);
}

TEST_CASE("in_I") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(16, 16));
    auto bc = BoundaryCondition::minus();
    auto p = params(0.2);
    CHECK(in_I(SpinConfig::uniform(dom, -1), bc, p));

    std::vector<Coord> big;
    for (int y = 3; y < 13; ++y)
        for (int x = 3; x < 13; ++x) big.push_back({x, y});
    CHECK(!in_I(with_plus(dom, big), bc, p));

    // random sprinkles against the per-contour oracle
    Rng rng(2, 0);
    for (int rep = 0; rep < 100; ++rep) {
        SpinConfig c = SpinConfig::uniform(dom, -1);
        for (auto& s : c.s) s = rng.uniform() < 0.08 ? int8_t(1) : int8_t(-1);
        auto fam = extract_contours(c, bc);
        bool oracle = true;
        for (const auto& g : fam.contours)
            if (classify_vertebrate(g, p) == Backbone::Vertebrate) oracle = false;
        CHECK(in_I(fam, p) == oracle);
    }
}

TEST_CASE("in_S slides the discretized critical shape inside external contours") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 1024);
    FreeEnergyScalars sc = scalars_from_basis(*basis, 1.0); // B_c = sqrt(pi)
    auto dom = std::make_shared<Domain>(Domain::rectangle(64, 64));
    auto bc = BoundaryCondition::minus();

    // choose B_plus so B_minus/h requires a disk of radius 4.5
    ModelParams p = params(0.1);
    p.B_plus = 2.0 * sc.B_c - 0.45 * std::sqrt(kPi);
    double need = derived_B_minus(p, sc.B_c) / p.h;
    CHECK(need == doctest::Approx(4.5 * std::sqrt(kPi)).epsilon(1e-12));
    CHECK(discretized_wulff_polyomino(basis, need).size() == 69); // radius-4.5 disk

    CHECK(!in_S(SpinConfig::uniform(dom, -1), bc, p, basis, sc));
    CHECK(!in_S(with_plus(dom, {{5, 5}}), bc, p, basis, sc));

    auto square = [&](int w, int h) {
        std::vector<Coord> plus;
        for (int y = 20; y < 20 + h; ++y)
            for (int x = 20; x < 20 + w; ++x) plus.push_back({x, y});
        return with_plus(dom, plus);
    };
    CHECK(in_S(square(20, 20), bc, p, basis, sc));
    CHECK(in_S(square(9, 9), bc, p, basis, sc)); // tight fit
    // a long thin slab has plenty of area but cannot hold the disk
    CHECK(!in_S(square(8, 30), bc, p, basis, sc));
    // interior counts nested minus holes as part of the enclosed volume
    SpinConfig holed = square(11, 11);
    holed.s[static_cast<size_t>(dom->index_of({25, 25}))] = -1;
    CHECK(in_S(holed, bc, p, basis, sc));
}

TEST_CASE("in_R covers vertebrates by merged wulff shapes") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 1024);
    auto dom = std::make_shared<Domain>(Domain::rectangle(32, 32));
    auto bc = BoundaryCondition::minus();

    ModelParams p = params(0.2); // b = 0.24: count cap floor(0.2^-0.88) = 4
    p.B_plus = 2.0;
    CHECK(in_R(SpinConfig::uniform(dom, -1), bc, p, basis));

    // sprinkled single pluses are invertebrate: still true
    CHECK(in_R(with_plus(dom, {{3, 3}, {10, 20}, {25, 7}}), bc, p, basis));

    auto blocks = [&](int count) { // well-separated 2x2 vertebrate droplets
        std::vector<Coord> plus;
        const Coord at[5] = {{2, 2}, {14, 2}, {26, 2}, {2, 20}, {14, 20}};
        for (int k = 0; k < count; ++k)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) plus.push_back({at[k].x + dx, at[k].y + dy});
        return with_plus(dom, plus);
    };
    CHECK(in_R(blocks(4), bc, p, basis));
    CHECK(!in_R(blocks(5), bc, p, basis)); // count cap is 4

    // single vertebrate whose enclosing shape exceeds the volume budget
    ModelParams tight = p;
    tight.B_plus = 0.4; // budget (0.4/0.2)^2 = 4 < 2 pi
    CHECK(!in_R(blocks(1), bc, tight, basis));

    // two adjacent droplets merge into one shape and pass the count cap
    std::vector<Coord> pair;
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            pair.push_back({8 + dx, 8 + dy});
            pair.push_back({12 + dx, 8 + dy});
        }
    ModelParams merged = p;
    merged.b_exp = 0.01; // count cap floor(0.2^-0.995) = 4, unchanged intent
    CHECK(in_R(with_plus(dom, pair), bc, p, basis));

    // monotone in B_plus on random configurations
    Rng rng(13, 0);
    for (int rep = 0; rep < 40; ++rep) {
        SpinConfig c = SpinConfig::uniform(dom, -1);
        for (auto& s : c.s) s = rng.uniform() < 0.1 ? int8_t(1) : int8_t(-1);
        auto fam = extract_contours(c, bc);
        bool prev = false;
        for (double bp : {0.5, 1.0, 2.0, 4.0, 8.0}) {
            ModelParams q = p;
            q.B_plus = bp;
            bool now = in_R(fam, q, basis);
            if (prev) CHECK(now); // once true, stays true as B_plus grows
            prev = now;
        }
    }
}

TEST_CASE("in_R_minus thresholds external volumes") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 512);
    FreeEnergyScalars sc = scalars_from_basis(*basis, 1.0);
    auto dom = std::make_shared<Domain>(Domain::rectangle(20, 20));
    auto bc = BoundaryCondition::minus();
    ModelParams p = params(0.5); // (B_c/h)^2 = 4 pi ~ 12.566

    CHECK(in_R_minus(SpinConfig::uniform(dom, -1), bc, p, sc));

    auto bar = [&](int n) {
        std::vector<Coord> plus;
        for (int k = 0; k < n; ++k) plus.push_back({2 + k, 9});
        return with_plus(dom, plus);
    };
    CHECK(in_R_minus(bar(12), bc, p, sc));  // 12 < 12.566
    CHECK(!in_R_minus(bar(13), bc, p, sc)); // ceil((B_c/h)^2) = 13 is too big

    // random configs against the direct external check
    Rng rng(3, 0);
    for (int rep = 0; rep < 60; ++rep) {
        SpinConfig c = SpinConfig::uniform(dom, -1);
        for (auto& s : c.s) s = rng.uniform() < 0.2 ? int8_t(1) : int8_t(-1);
        auto fam = extract_contours(c, bc);
        bool oracle = true;
        for (const auto& g : fam.contours)
            if (g.is_external() &&
                static_cast<double>(g.interior_sites) >= (sc.B_c / p.h) * (sc.B_c / p.h))
                oracle = false;
        CHECK(in_R_minus(fam, p, sc) == oracle);
    }
}

TEST_CASE("droplet events") {
    auto basis = build_wulff_basis(SurfaceTension::constant(1.0), 1024);
    auto dom = std::make_shared<Domain>(Domain::rectangle(24, 24));
    auto bc = BoundaryCondition::minus();
    ModelParams p = params(0.1); // vertebrate threshold ~ 3.02

    double B = 5.0 * std::sqrt(kPi) * p.h; // B/h-shape is the radius-5 disk

    CHECK(!in_droplet_event(SpinConfig::uniform(dom, -1), bc, B, 0.2, p, basis));

    auto cells = discretized_wulff_polyomino(basis, B / p.h, dom->center());
    SpinConfig filled = with_plus(dom, cells);
    CHECK(in_droplet_event(filled, bc, B, 0.2, p, basis));
    CHECK(in_droplet_event(filled, bc, B, 0.2, p, basis, true));

    // a second distant vertebrate droplet breaks the event
    SpinConfig second = filled;
    for (Coord c : {Coord{1, 1}, Coord{2, 1}, Coord{1, 2}, Coord{2, 2}})
        second.s[static_cast<size_t>(dom->index_of(c))] = 1;
    CHECK(!in_droplet_event(second, bc, B, 0.2, p, basis));

    // an internal vertebrate hole only breaks the strict variant
    SpinConfig holed = filled;
    for (Coord c : {Coord{11, 11}, Coord{12, 11}, Coord{11, 12}, Coord{12, 12}})
        holed.s[static_cast<size_t>(dom->index_of(c))] = -1;
    CHECK(in_droplet_event(holed, bc, B, 0.2, p, basis));
    CHECK(!in_droplet_event(holed, bc, B, 0.2, p, basis, true));

    // outer shape spilling out of the domain is an argument error
    CHECK_THROWS_AS(in_droplet_event(filled, bc, 3.0, 0.2, p, basis), std::invalid_argument);
}

TEST_CASE("odd enclosed cells over contour collections") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(12, 12));
    auto bc = BoundaryCondition::minus();
    // plus ring: 5x5 block with the middle 3x3 removed, then center plus
    std::vector<Coord> plus;
    for (int y = 3; y < 8; ++y)
        for (int x = 3; x < 8; ++x)
            if (x == 3 || x == 7 || y == 3 || y == 7) plus.push_back({x, y});
    plus.push_back({5, 5});
    auto fam = extract_contours(with_plus(dom, plus), bc);
    REQUIRE(fam.contours.size() == 3); // outer ring, inner ring, center
    std::vector<const Contour*> all;
    for (const auto& c : fam.contours) all.push_back(&c);
    // odd region: ring band (25 - 9) plus ... outer encloses 25, middle 9, center 1
    CHECK(odd_enclosed_count(all) == 25 - 9 + 1);
    CHECK(odd_enclosed_cells(all).size() == 17);
}

TEST_CASE("dump and load round trip with integrity checks") {
    auto dom = std::make_shared<Domain>(Domain::rectangle(10, 10));
    auto bc = BoundaryCondition::minus();
    Rng rng(42, 0);
    SpinConfig c = SpinConfig::uniform(dom, -1);
    for (auto& s : c.s) s = rng.uniform() < 0.4 ? int8_t(1) : int8_t(-1);
    auto fam = extract_contours(c, bc);

    std::stringstream ss;
    dump_contours(fam, ss);
    auto loaded = load_contours(ss, dom);
    REQUIRE(loaded.contours.size() == fam.contours.size());
    for (size_t i = 0; i < fam.contours.size(); ++i) {
        CHECK(loaded.contours[i].loop == fam.contours[i].loop);
        CHECK(loaded.contours[i].interior_sites == fam.contours[i].interior_sites);
        CHECK(loaded.contours[i].nesting_depth == fam.contours[i].nesting_depth);
    }
    CHECK(reconstruct(loaded, bc) == c);

    // tampered interior count must be rejected
    std::stringstream good;
    dump_contours(fam, good);
    std::string text = good.str();
    auto pos = text.find("\"interior\":");
    REQUIRE(pos != std::string::npos);
    text.insert(pos + 11, "9");
    std::stringstream bad(text);
    CHECK_THROWS(load_contours(bad, dom));

    // open path must be rejected
    std::stringstream open("{\"start\":[0,0],\"path\":\"ENW\",\"interior\":1,\"depth\":0}\n");
    CHECK_THROWS(load_contours(open, dom));
}
