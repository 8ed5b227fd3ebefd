#include "doctest.h"
#include "kcm/lattice.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace kcm;

TEST_CASE("neighbors wrap on the torus") {
    const Geometry g = Geometry::torus(2, 4);
    const auto nb = neighbors(g, Coord{0, 0});
    std::set<Vertex> got(nb.begin(), nb.end());
    std::set<Vertex> want{g.index({1, 0}), g.index({3, 0}), g.index({0, 1}), g.index({0, 3})};
    CHECK(got == want);
}

TEST_CASE("neighbors on a free corner and degenerate ring") {
    const Geometry box = Geometry::box({3, 3});
    const auto nb = neighbors(box, Coord{0, 0});
    CHECK(nb == std::vector<Vertex>{box.index({0, 1}), box.index({1, 0})});
    const Geometry ring = Geometry::torus(1, 2);
    CHECK(neighbors(ring, Vertex{0}) == std::vector<Vertex>{1});
    CHECK_THROWS(neighbors(box, Coord{3, 0}));
}

TEST_CASE("neighbor relation is symmetric") {
    for (const Geometry& g : {Geometry::torus(2, 5), Geometry::box({3, 4, 2}), Geometry::torus(3, 2), Geometry::torus(1, 1)}) {
        for (Vertex x = 0; x < g.volume(); ++x)
            for (Vertex y : neighbors(g, x)) {
                const auto back = neighbors(g, y);
                CHECK(std::find(back.begin(), back.end(), x) != back.end());
            }
    }
}

TEST_CASE("region constructors") {
    const Geometry g3 = Geometry::box({3, 3, 3});
    const Region e1 = edge_region(g3, 1);
    CHECK(e1.size() == 3);
    for (Vertex v : e1) {
        const Coord x = g3.coords(v);
        CHECK(x[0] == 0);
        CHECK(x[2] == 0);
    }
    const Geometry g2 = Geometry::box({3, 3});
    const Region s = slice_region(g2, 1, 2);
    CHECK(s.size() == 3);
    for (Vertex v : s) CHECK(g2.coords(v)[1] == 2);
    CHECK(cross_region(g2, Coord{2, 2}).size() == 5);

    const Geometry g = Geometry::box({4, 5, 3});
    CHECK(cross_region(g, Coord{1, 2, 0}).size() == 4 + 5 + 3 - 2);
    for (int i = 0; i < 3; ++i) {
        CHECK(edge_region(g, i).size() == static_cast<std::size_t>(g.side(i)));
        std::size_t prod = 1;
        for (int k = 0; k < 3; ++k)
            if (k != i) prod *= static_cast<std::size_t>(g.side(k));
        for (int j = 0; j < g.side(i); ++j) {
            const Region sl = slice_region(g, i, j);
            CHECK(sl.size() == prod);
            const Region fr = frame_region(g, i, j);
            for (Vertex v : fr) CHECK(sl.contains(v));
        }
    }
    CHECK_THROWS(slice_region(g, 3, 0));
    CHECK_THROWS(slice_region(g, 0, 4));
}

TEST_CASE("frames of a sub-box") {
    const Geometry g = Geometry::box({6, 6});
    const SubBox b{{2, 1}, {3, 3}};
    const Region fr = frame_region(g, b, 0, 1);
    // slice x_0 = 3 within the box; frame = sites with local x_1 == 0
    CHECK(fr.size() == 1);
    CHECK(fr.vertices().front() == g.index({3, 1}));
}

TEST_CASE("random configurations") {
    const Geometry g = Geometry::torus(2, 64);
    CHECK(random_configuration(g, 0.0, 3).count_empty() == 0);
    CHECK(random_configuration(g, 1.0, 3).count_empty() == g.volume());
    const auto c = random_configuration(g, 0.5, 11);
    const double n = static_cast<double>(g.volume());
    CHECK(std::abs(static_cast<double>(c.count_empty()) - 0.5 * n) <= 4.0 * std::sqrt(n * 0.25));
    CHECK(c == random_configuration(g, 0.5, 11));
}

TEST_CASE("coupled monotonicity in q") {
    const Geometry g = Geometry::torus(2, 16);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = random_configuration(g, 0.2, seed);
        const auto b = random_configuration(g, 0.35, seed);
        for (Vertex v = 0; v < g.volume(); ++v)
            if (a.is_empty(v)) CHECK(b.is_empty(v));
    }
}

TEST_CASE("grid format round trip") {
    for (const Geometry& g : {Geometry::torus(2, 5), Geometry::box({2, 3, 4}), Geometry::box({7})}) {
        const auto c = random_configuration(g, 0.4, 9);
        const std::string text = grid_to_string(c);
        const auto back = grid_from_string(text);
        CHECK(back == c);
        CHECK(grid_to_string(back) == text);
    }
    CHECK_THROWS(grid_from_string("2 2 2 torus\n01\n0\n"));
    CHECK_THROWS(grid_from_string("2 2 2 torus\n01\n02\n"));
}
