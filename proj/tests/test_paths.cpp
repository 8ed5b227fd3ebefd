#include "doctest.h"
#include "kcm/bootstrap.hpp"
#include "kcm/paths.hpp"

#include <sstream>

using namespace kcm;

namespace {

void check_legal(const LegalPath& p, const UpdateFamily& fam) {
    const auto rep = verify_legal(p, fam);
    INFO("flip " << rep.index << " at " << rep.vertex << ": " << rep.reason);
    CHECK(rep.ok);
}

BlockSpec spec_of(BlockModel m, int d, int k, std::vector<int> dims, double q) {
    BlockSpec s;
    s.model = m;
    s.d = d;
    s.k = k;
    s.dims = std::move(dims);
    s.q = q;
    return s;
}

} // namespace

TEST_CASE("paths: verify_legal") {
    const Geometry ring = Geometry::box({4});
    Configuration c(ring, 1);
    c.set(Vertex{0}, 0);
    const auto fam = fa_kf(1, 1);
    CHECK(verify_legal(LegalPath{c, {{1, 0}, {2, 0}}}, fam).ok);
    auto bad = verify_legal(LegalPath{c, {{2, 0}}}, fam);
    CHECK_FALSE(bad.ok);
    CHECK(bad.reason == "constraint not satisfied");
    CHECK(verify_legal(LegalPath{c, {{1, 1}}}, fam).reason == "flip does not change the value");
    CHECK(verify_legal(LegalPath{c, {{1, 0}, {1, 1}}}, fam).reason == "configuration repeats");
    CHECK_FALSE(verify_legal(LegalPath{c, {{9, 0}}}, fam).ok);
}

TEST_CASE("paths: loop erasure") {
    const Geometry ring = Geometry::box({5});
    Configuration c(ring, 1);
    c.set(Vertex{0}, 0);
    const LegalPath p{c, {{1, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 0}, {2, 0}, {3, 0}}};
    const LegalPath e = loop_erase(p);
    CHECK(e.end() == p.end());
    CHECK(e.size() == 3);
    check_legal(e, fa_kf(1, 1));
    const LegalPath r = e.reversed();
    CHECK(r.start == e.end());
    CHECK(r.end() == e.start);
    CHECK(r.increasing());
    check_legal(r, fa_kf(1, 1));
}

TEST_CASE("paths: region emptying schedule") {
    const Geometry g = Geometry::box({6, 6});
    const Region r = box_region(g, SubBox{{1, 1}, {4, 4}});
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto c = random_configuration(g, 0.35, s);
        // Oracle: repeatedly empty any site of r whose constraint holds.
        Configuration o = c;
        for (bool changed = true; changed;) {
            changed = false;
            for (Vertex v : r)
                if (!o.is_empty(v) && constraint_satisfied(o, fa_kf(2, 2), v)) {
                    o.set(v, 0);
                    changed = true;
                }
        }
        bool reachable = true;
        for (Vertex v : r) reachable = reachable && o.is_empty(v);
        if (is_internally_spanned(c, fa_kf(2, 2), r)) CHECK(reachable);
        if (!reachable) {
            CHECK_THROWS_AS(empty_region_schedule(c, fa_kf(2, 2), r), PathError);
            continue;
        }
        const auto p = empty_region_schedule(c, fa_kf(2, 2), r);
        check_legal(p, fa_kf(2, 2));
        CHECK(p.decreasing());
        CHECK(p.size() <= r.size());
        const auto e = p.end();
        for (Vertex v = 0; v < g.volume(); ++v) CHECK(e[v] == (r.contains(v) ? 0 : c[v]));
    }
}

TEST_CASE("paths: chain of crosses is confined and short") {
    const Geometry g = Geometry::box({5, 5});
    const SubBox b = whole_box(g);
    std::vector<Region> regions;
    for (Coord x : {Coord{0, 0}, Coord{1, 0}, Coord{2, 0}, Coord{2, 1}, Coord{2, 2}, Coord{3, 2}}) regions.push_back(cross_region(g, b, x));
    int ran = 0;
    for (std::uint64_t s = 0; s < 60; ++s) {
        auto c = random_configuration(g, 0.3, s);
        for (Vertex v : regions.front()) c.set(v, 0);
        const auto res = chain_schedule(c, fa_kf(2, 2), regions);
        ++ran;
        check_legal(res.path, fa_kf(2, 2));
        CHECK(res.confined);
        CHECK(res.path.size() <= res.bound);
        const auto e = res.path.end();
        for (Vertex v = 0; v < g.volume(); ++v) CHECK(e[v] == (regions.back().contains(v) ? 0 : c[v]));
    }
    CHECK(ran == 60);
    Configuration full(g, 1);
    CHECK_THROWS_AS(chain_schedule(full, fa_kf(2, 2), regions), PathError);
}

TEST_CASE("paths: slice and cross moves") {
    const Geometry g = Geometry::box({4, 4, 4});
    const SubBox b = whole_box(g);
    const auto fam = fa_kf(3, 2);
    for (std::uint64_t s = 0; s < 30; ++s) {
        auto c = random_configuration(g, 0.2, s);
        for (Vertex v : slice_region(g, b, 2, 0)) c.set(v, 0);
        const Region target = slice_region(g, b, 2, 1);
        bool any = false;
        for (Vertex v : target) any = any || c.is_empty(v);
        if (!any) {
            CHECK_THROWS_AS(slice_schedule(c, fam, b, 2, 0, 1), PathError);
            continue;
        }
        const auto p = slice_schedule(c, fam, b, 2, 0, 1);
        check_legal(p, fam);
        for (const auto& f : p.flips) CHECK(target.contains(f.vertex));
        for (Vertex v : target) CHECK(p.end().is_empty(v));
    }
    CHECK_THROWS_AS(slice_schedule(Configuration(g, 0), fam, b, 2, 3, 1), std::out_of_range);

    const Geometry h = Geometry::box({6, 6});
    const SubBox hb = whole_box(h);
    for (std::uint64_t s = 0; s < 30; ++s) {
        auto c = random_configuration(h, 0.3, s);
        const Coord x{2, 3}, y{2, 4};
        for (Vertex v : cross_region(h, hb, x)) c.set(v, 0);
        const auto p = cross_schedule(c, fa_kf(2, 2), hb, x, y);
        check_legal(p, fa_kf(2, 2));
        CHECK(p.size() <= 2 * 2 * 6);
        const Region cy = cross_region(h, hb, y);
        for (Vertex v : cy) CHECK(p.end().is_empty(v));
    }
    CHECK_THROWS_AS(cross_schedule(Configuration(h, 0), fa_kf(2, 2), hb, {0, 0}, {1, 1}), std::invalid_argument);
}

TEST_CASE("paths: gg column moves") {
    const Geometry g = Geometry::box({6, 5});
    auto base = [&](std::uint64_t s) {
        auto c = random_configuration(g, 0.3, s);
        for (int y = 0; y < 4; ++y) {
            c.set(Coord{2, y}, 0);
            c.set(Coord{3, y}, 0);
        }
        return c;
    };
    for (std::uint64_t s = 0; s < 40; ++s) {
        auto c = base(s);
        c.set(Coord{4, static_cast<int>(s % 4)}, 0);
        const auto p = gg_column_moves(c, ColumnMove::obs1, 2, 1, 0, 4);
        check_legal(p, gg());
        for (int y = 0; y < 4; ++y) CHECK(p.end().at({4, y}) == 0);
        c.set(Coord{1, static_cast<int>(s % 4)}, 0);
        const auto q = gg_column_moves(c, ColumnMove::obs1, 2, -1, 0, 4);
        check_legal(q, gg());
        for (int y = 0; y < 4; ++y) CHECK(q.end().at({1, y}) == 0);

        auto d = base(s);
        d.set(Coord{4, 4}, 0);
        d.set(Coord{5, 4}, 0);
        const auto r = gg_column_moves(d, ColumnMove::obs2, 2, 1, 0, 4);
        check_legal(r, gg());
        for (int y = 0; y < 4; ++y) CHECK((r.end().at({4, y}) == 0 && r.end().at({5, y}) == 0));
    }
    Configuration c(g, 1);
    CHECK_THROWS_AS(gg_column_moves(c, ColumnMove::obs1, 2, 1, 0, 4), PathError);
}

TEST_CASE("paths: block geometry helpers") {
    const auto spec = spec_of(BlockModel::gg, 2, 2, {6, 4}, 0.4);
    CHECK(path_B_geometry(spec, 1).dims() == std::vector<int>{6, 8});
    CHECK(path_A_geometry(spec).dims() == std::vector<int>{12, 8});
    const SubBox b = block_at(spec, {1, 0});
    CHECK(b.corner == Coord{6, 0});
    std::uint64_t st = 3;
    const auto cfg = sample_path_A_input(spec, st);
    CHECK(classify_block(extract_block(cfg, block_at(spec, {1, 0})), spec) == BlockClass::supergood);
    CHECK(classify_block(extract_block(cfg, block_at(spec, {0, 1})), spec) == BlockClass::supergood);
    Configuration copy = cfg;
    place_block(copy, b, extract_block(cfg, b));
    CHECK(copy == cfg);
}

TEST_CASE("paths: path_B reaches Phi") {
    const std::vector<BlockSpec> specs{spec_of(BlockModel::fa2, 2, 2, {4, 4}, 0.45), spec_of(BlockModel::fa2, 3, 2, {3, 3, 3}, 0.45),
                                       spec_of(BlockModel::gg, 2, 2, {6, 4}, 0.45), spec_of(BlockModel::fakf, 2, 2, {4, 4}, 0.5),
                                       spec_of(BlockModel::fakf, 3, 3, {3, 3, 3}, 0.6)};
    for (const auto& spec : specs) {
        std::uint64_t st = 11;
        for (int axis = 0; axis < spec.d; ++axis)
            for (int t = 0; t < 15; ++t) {
                const auto cfg = sample_path_B_input(spec, axis, st);
                INFO(to_string(spec.model) << " d=" << spec.d << " axis " << axis << " sample " << t);
                LegalPath p;
                REQUIRE_NOTHROW(p = path_B(cfg, spec, axis));
                check_legal(p, spec.family());
                CHECK(p.end() == path_B_target(cfg, spec));
                check_legal(p.reversed(), spec.family());
            }
    }
}

TEST_CASE("paths: path_A flips a single site") {
    const std::vector<BlockSpec> specs{spec_of(BlockModel::fa2, 2, 2, {4, 4}, 0.45), spec_of(BlockModel::gg, 2, 2, {6, 4}, 0.45),
                                       spec_of(BlockModel::fakf, 2, 2, {4, 4}, 0.5), spec_of(BlockModel::fakf, 3, 3, {3, 3, 3}, 0.6)};
    for (const auto& spec : specs) {
        std::uint64_t st = 5;
        const Geometry blk = spec.geometry();
        for (int t = 0; t < 4; ++t) {
            const auto cfg = sample_path_A_input(spec, st);
            for (Vertex zv = 0; zv < blk.volume(); ++zv) {
                const Coord z = blk.coords(zv);
                INFO(to_string(spec.model) << " sample " << t << " z index " << zv);
                LegalPath p;
                REQUIRE_NOTHROW(p = path_A(cfg, spec, z));
                check_legal(p, spec.family());
                Configuration want = cfg;
                want.set(z, cfg.at(z) ? 0 : 1);
                CHECK(p.end() == want);
            }
        }
    }
    const auto fakf4 = spec_of(BlockModel::fakf, 2, 3, {4, 4}, 0.5);
    Configuration c(path_A_geometry(fakf4), 0);
    CHECK_THROWS_AS(path_A(c, fakf4, {0, 0}), std::invalid_argument);
}

TEST_CASE("paths: congestion exact matches brute force and the chain bound") {
    const Geometry g = Geometry::box({2, 3});
    std::vector<Region> regions;
    for (int j = 0; j < 3; ++j) regions.push_back(slice_region(g, 1, j));
    const auto starts = enumerate_configurations(g, [&](const Configuration& c) {
        for (Vertex v : regions.front())
            if (!c.is_empty(v)) return false;
        return true;
    });
    CHECK(starts.size() == 16);
    const PathBuilder build = [&](const Configuration& c) { return chain_schedule(c, fa_kf(2, 1), regions).path; };
    for (double q : {0.3, 0.5}) {
        const auto rep = congestion_exact(starts, build, q);
        CHECK(rep.paths == 16);
        CHECK(rep.rho == doctest::Approx(congestion_bruteforce(starts, build, q)).epsilon(1e-12));
        CHECK(rep.rho <= chain_congestion_bound(regions, q));
        CHECK(rep.rho >= 1.0);
    }
    // A single path: rho = max over its waypoints of mu(s)/mu(w), the start included.
    Configuration s(g, 0);
    const std::vector<Configuration> one{s};
    const PathBuilder fill = [&](const Configuration& c) { return LegalPath{c, {{0, 1}}}; };
    CHECK(congestion_exact(one, fill, 0.2).rho == doctest::Approx(1.0));
    CHECK(congestion_exact(one, fill, 0.8).rho == doctest::Approx(0.8 / 0.2));
}

TEST_CASE("paths: dump round trip") {
    const auto spec = spec_of(BlockModel::fa2, 2, 2, {4, 4}, 0.45);
    std::uint64_t st = 9;
    const auto cfg = sample_path_B_input(spec, 0, st);
    const auto p = path_B(cfg, spec, 0);
    std::stringstream ss;
    write_path(ss, p);
    const auto back = read_path(ss);
    CHECK(back.start == p.start);
    REQUIRE(back.size() == p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        CHECK(back.flips[t].vertex == p.flips[t].vertex);
        CHECK(back.flips[t].new_value == p.flips[t].new_value);
    }
    std::stringstream bad;
    write_grid(bad, cfg);
    bad << "0 3 1\n2 4 0\n";
    CHECK_THROWS(read_path(bad));
}
