#include "kcm/paths.hpp"
#include "kcm/bootstrap.hpp"
#include "kcm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace kcm {

namespace {

std::string state_key(const Configuration& c) {
    const auto& b = c.bits();
    return std::string(b.begin(), b.end());
}

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

Region make_region(const Geometry& g, std::vector<Vertex> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return Region(g, std::move(v));
}

bool all_empty(const Configuration& c, const Region& r) {
    return std::all_of(r.begin(), r.end(), [&](Vertex v) { return c.is_empty(v); });
}

void require_same_dims(const BlockSpec& spec) {
    for (int n : spec.dims)
        if (n != spec.dims.front()) throw std::invalid_argument("this block model needs a cubic block");
}

} // namespace

Configuration LegalPath::end() const {
    Configuration c = start;
    for (const auto& f : flips) c.set(f.vertex, f.new_value);
    return c;
}

bool LegalPath::decreasing() const noexcept {
    return std::all_of(flips.begin(), flips.end(), [](const Flip& f) { return f.new_value == 0; });
}

bool LegalPath::increasing() const noexcept {
    return std::all_of(flips.begin(), flips.end(), [](const Flip& f) { return f.new_value == 1; });
}

LegalPath LegalPath::reversed() const {
    LegalPath out{end(), {}};
    Configuration c = start;
    std::vector<std::uint8_t> before;
    before.reserve(flips.size());
    for (const auto& f : flips) {
        before.push_back(c[f.vertex]);
        c.set(f.vertex, f.new_value);
    }
    for (std::size_t t = flips.size(); t-- > 0;) out.flips.push_back(Flip{flips[t].vertex, before[t], flips[t].region});
    return out;
}

LegalityReport verify_legal(const LegalPath& path, const UpdateFamily& fam, OutsideMode mode) {
    const Geometry& g = path.start.geometry();
    const CompiledFamily cf(g, fam, mode);
    Configuration c = path.start;
    std::unordered_set<std::string> seen{state_key(c)};
    for (std::size_t t = 0; t < path.flips.size(); ++t) {
        const Flip& f = path.flips[t];
        auto fail = [&](std::string why) { return LegalityReport{false, t, f.vertex, std::move(why)}; };
        if (f.vertex >= g.volume()) return fail("vertex out of range");
        if (c[f.vertex] == (f.new_value ? 1 : 0)) return fail("flip does not change the value");
        if (!cf.satisfied(c, f.vertex)) return fail("constraint not satisfied");
        c.set(f.vertex, f.new_value);
        if (!seen.insert(state_key(c)).second) return fail("configuration repeats");
    }
    return {};
}

LegalPath loop_erase(const LegalPath& path) {
    LegalPath out{path.start, {}};
    Configuration c = path.start;
    std::vector<std::string> keys{state_key(c)};
    std::unordered_map<std::string, std::size_t> at{{keys.front(), 0}};
    for (const auto& f : path.flips) {
        c.set(f.vertex, f.new_value);
        std::string k = state_key(c);
        if (auto it = at.find(k); it != at.end()) {
            const std::size_t p = it->second;
            for (std::size_t i = p + 1; i < keys.size(); ++i) at.erase(keys[i]);
            keys.resize(p + 1);
            out.flips.resize(p);
            continue;
        }
        at.emplace(k, keys.size());
        keys.push_back(std::move(k));
        out.flips.push_back(f);
    }
    return out;
}

PathRunner::PathRunner(const CompiledFamily& cf, Configuration start)
    : cf_(cf), cur_(start), ref_(std::move(start)), keep_(cur_.size(), 0) {
    if (cf.volume() != cur_.size()) throw std::invalid_argument("compiled family does not match the configuration");
}

void PathRunner::apply(Vertex v, std::uint8_t value, int tag) {
    if (!cf_.satisfied(cur_, v)) throw std::logic_error("path runner produced an illegal flip");
    cur_.set(v, value);
    flips_.push_back(Flip{v, value, tag});
}

void PathRunner::empty(const Region& r, int tag) {
    const auto mask = region_mask(cur_.geometry(), r);
    for (const auto& round : closure_rounds(cur_, cf_, &mask))
        for (Vertex v : round) apply(v, 0, tag);
    std::size_t left = 0;
    for (Vertex v : r) left += !cur_.is_empty(v);
    if (left > 0) throw PathError("cannot empty region: " + std::to_string(left) + " sites stay occupied");
}

void PathRunner::restore(const Region& r, int tag) {
    std::vector<std::uint8_t> to_empty(cur_.size(), 0), to_fill(cur_.size(), 0);
    std::size_t n_empty = 0, n_fill = 0;
    for (Vertex v : r) {
        if (keep_[v] || cur_[v] == ref_[v]) continue;
        if (ref_[v] == 0) {
            to_empty[v] = 1;
            ++n_empty;
        } else {
            to_fill[v] = 1;
            ++n_fill;
        }
    }
    if (n_empty > 0) {
        for (const auto& round : closure_rounds(cur_, cf_, &to_empty))
            for (Vertex v : round) apply(v, 0, tag);
        for (Vertex v = 0; v < cur_.size(); ++v)
            if (to_empty[v] && !cur_.is_empty(v)) throw PathError("cannot restore region: an empty site is unreachable");
    }
    if (n_fill == 0) return;
    // Fill by reversing a legal emptying of the fill set from the filled state.
    Configuration sigma = cur_;
    for (Vertex v = 0; v < cur_.size(); ++v)
        if (to_fill[v]) sigma.set(v, 1);
    std::vector<Vertex> order;
    for (const auto& round : closure_rounds(sigma, cf_, &to_fill)) order.insert(order.end(), round.begin(), round.end());
    if (order.size() != n_fill) throw PathError("cannot restore region: fill set is not reachable");
    for (auto it = order.rbegin(); it != order.rend(); ++it) apply(*it, 1, tag);
}

void PathRunner::flip(Vertex v, int tag) {
    if (!cf_.satisfied(cur_, v)) throw PathError("constraint fails at vertex " + std::to_string(v));
    apply(v, cur_[v] ? 0 : 1, tag);
}

void PathRunner::keep(const Region& r) {
    for (Vertex v : r) keep_[v] = 1;
}

void run_chain(PathRunner& runner, const std::vector<Region>& regions, int tag_base, const std::vector<Region>* keep) {
    if (regions.empty()) return;
    if (keep != nullptr && keep->size() != regions.size()) throw std::invalid_argument("keep list must match the regions");
    if (!all_empty(runner.current(), regions.front())) throw PathError("chain: first region is not empty");
    for (std::size_t j = 1; j < regions.size(); ++j) {
        const int tag = tag_base + static_cast<int>(j);
        try {
            runner.empty(regions[j], tag);
            Region back = region_difference(regions[j - 1], regions[j]);
            if (keep != nullptr) back = region_difference(back, (*keep)[j - 1]);
            runner.restore(back, tag);
        } catch (const PathError& e) {
            throw PathError("chain step " + std::to_string(j) + ": " + e.what());
        }
    }
}

LegalPath empty_region_schedule(const Configuration& cfg, const UpdateFamily& fam, const Region& r) {
    const CompiledFamily cf(cfg.geometry(), fam);
    PathRunner runner(cf, cfg);
    runner.empty(r, 0);
    LegalPath p = runner.path();
    if (p.size() > r.size()) throw std::logic_error("emptying schedule longer than the region");
    return p;
}

ChainResult chain_schedule(const Configuration& cfg, const UpdateFamily& fam, const std::vector<Region>& regions) {
    const CompiledFamily cf(cfg.geometry(), fam);
    PathRunner runner(cf, cfg);
    run_chain(runner, regions);
    ChainResult out;
    for (const auto& r : regions) out.bound += 2 * r.size();
    out.path = loop_erase(runner.path());
    if (out.path.size() > out.bound) throw std::logic_error("chain path exceeds 2 sum |regions|");

    const std::size_t N = regions.size();
    std::vector<std::vector<std::uint8_t>> masks;
    for (const auto& r : regions) masks.push_back(region_mask(cfg.geometry(), r));
    Configuration c = cfg;
    std::vector<Vertex> diff;
    for (const auto& f : out.path.flips) {
        c.set(f.vertex, f.new_value);
        const auto k = static_cast<std::size_t>(f.region);
        std::size_t lo = k > 0 ? k - 1 : 0;
        std::size_t hi = k + 1 < N ? k + 1 : N - 1;
        if (k + 1 == N) lo = k > 0 ? k - 1 : 0;
        for (Vertex v = 0; v < c.size() && out.confined; ++v) {
            if (c[v] == cfg[v]) continue;
            bool inside = false;
            for (std::size_t i = lo; i <= hi; ++i) inside = inside || masks[i][v];
            if (!inside) out.confined = false;
        }
    }
    return out;
}

namespace {

Configuration project_slice(const Configuration& c, const SubBox& b, int axis, int j) {
    const int d = static_cast<int>(b.dims.size());
    std::vector<int> dims;
    for (int l = 0; l < d; ++l)
        if (l != axis) dims.push_back(b.dims[sz(l)]);
    const Geometry small = Geometry::box(dims);
    Configuration out(small, 1);
    Coord y(sz(d - 1)), x(sz(d));
    for (Vertex v = 0; v < small.volume(); ++v) {
        small.coords(v, y);
        for (int l = 0, t = 0; l < d; ++l) x[sz(l)] = b.corner[sz(l)] + (l == axis ? j : y[sz(t++)]);
        out.set(v, c.at(x));
    }
    return out;
}

} // namespace

LegalPath slice_schedule(const Configuration& cfg, const UpdateFamily& fam, const SubBox& block, int axis, int j,
                         int direction) {
    const Geometry& g = cfg.geometry();
    if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +1 or -1");
    const int t = j + direction;
    if (t < 0 || t >= block.dims.at(sz(axis))) throw std::out_of_range("target slice outside the block");
    if (!all_empty(cfg, slice_region(g, block, axis, j))) throw PathError("source slice is not empty");
    const int k = static_cast<int>(fam.max_rule_size());
    if (k > 1 && g.dim() > 1) {
        const Configuration s = project_slice(cfg, block, axis, t);
        if (closure(s, fa_kf(g.dim() - 1, k - 1)).count_empty() != s.size())
            throw PathError("target slice is not internally spanned");
    }
    const CompiledFamily cf(g, fam);
    PathRunner runner(cf, cfg);
    runner.empty(slice_region(g, block, axis, t), 0);
    return runner.path();
}

LegalPath cross_schedule(const Configuration& cfg, const UpdateFamily& fam, const SubBox& block, const Coord& x,
                         const Coord& y) {
    const Geometry& g = cfg.geometry();
    int dist = 0;
    for (std::size_t i = 0; i < x.size(); ++i) dist += std::abs(x[i] - y[i]);
    if (x.size() != y.size() || dist != 1) throw std::invalid_argument("cross centres must be adjacent");
    if (!all_empty(cfg, cross_region(g, block, x))) throw PathError("source cross is not empty");
    const CompiledFamily cf(g, fam);
    PathRunner runner(cf, cfg);
    runner.empty(cross_region(g, block, y), 0);
    const int n = *std::max_element(block.dims.begin(), block.dims.end());
    LegalPath p = runner.path();
    if (p.size() > sz(2 * g.dim() * n)) throw std::logic_error("cross schedule longer than 2dn");
    return p;
}

namespace {

Region column_rows(const Geometry& g, int c, int y0, int y1) {
    if (y1 <= y0) return Region{};
    return box_region(g, SubBox{{c, y0}, {1, y1 - y0}});
}

} // namespace

LegalPath gg_column_moves(const Configuration& cfg, ColumnMove variant, int pair, int side, int rows_begin, int rows_end) {
    const Geometry& g = cfg.geometry();
    if (g.dim() != 2) throw std::invalid_argument("column moves need a two-dimensional box");
    if (side != 1 && side != -1) throw std::invalid_argument("side must be +1 or -1");
    const int w = g.side(0);
    if (pair < 0 || pair + 1 >= w || rows_begin < 0 || rows_end > g.side(1) || rows_begin >= rows_end)
        throw std::out_of_range("column pair or rows out of range");
    if (!all_empty(cfg, region_union(column_rows(g, pair, rows_begin, rows_end), column_rows(g, pair + 1, rows_begin, rows_end))))
        throw PathError("column pair is not empty");
    const CompiledFamily cf(g, gg());
    PathRunner runner(cf, cfg);
    if (variant == ColumnMove::obs1) {
        const int t = side > 0 ? pair + 2 : pair - 1;
        if (t < 0 || t >= w) throw std::out_of_range("target column outside the box");
        const Region col = column_rows(g, t, rows_begin, rows_end);
        if (std::all_of(col.begin(), col.end(), [&](Vertex v) { return !cfg.is_empty(v); }))
            throw PathError("target column has no empty site");
        runner.empty(col, 0);
    } else {
        const int a = side > 0 ? pair + 2 : pair - 2;
        if (a < 0 || a + 1 >= w) throw std::out_of_range("target columns outside the box");
        if (rows_end >= g.side(1) || !cfg.is_empty(g.index({a, rows_end})) || !cfg.is_empty(g.index({a + 1, rows_end})))
            throw PathError("seed sites above the target columns are not empty");
        runner.empty(region_union(column_rows(g, a, rows_begin, rows_end), column_rows(g, a + 1, rows_begin, rows_end)), 0);
    }
    return runner.path();
}

Geometry path_B_geometry(const BlockSpec& spec, int axis) {
    spec.validate();
    if (axis < 0 || axis >= spec.d) throw std::out_of_range("axis out of range");
    auto dims = spec.dims;
    dims[sz(axis)] *= 2;
    return Geometry::box(dims);
}

Geometry path_A_geometry(const BlockSpec& spec) {
    spec.validate();
    auto dims = spec.dims;
    for (int& n : dims) n *= 2;
    return Geometry::box(dims);
}

SubBox block_at(const BlockSpec& spec, const Coord& offset_in_blocks) {
    if (offset_in_blocks.size() != spec.dims.size()) throw std::invalid_argument("block offset dimension mismatch");
    SubBox b{Coord(spec.dims.size()), spec.dims};
    for (std::size_t i = 0; i < spec.dims.size(); ++i) b.corner[i] = offset_in_blocks[i] * spec.dims[i];
    return b;
}

Configuration extract_block(const Configuration& cfg, const SubBox& b) {
    const Geometry small = Geometry::box(b.dims);
    Configuration out(small, 1);
    Coord y, x(b.dims.size());
    for (Vertex v = 0; v < small.volume(); ++v) {
        small.coords(v, y);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = b.corner[i] + y[i];
        out.set(v, cfg.at(x));
    }
    return out;
}

void place_block(Configuration& cfg, const SubBox& b, const Configuration& block) {
    if (block.geometry().dims() != b.dims) throw std::invalid_argument("block does not fit the sub-box");
    const Geometry& small = block.geometry();
    Coord y, x(b.dims.size());
    for (Vertex v = 0; v < small.volume(); ++v) {
        small.coords(v, y);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = b.corner[i] + y[i];
        cfg.set(x, block[v]);
    }
}

Configuration path_B_target(const Configuration& cfg, const BlockSpec& spec) {
    const SubBox v = block_at(spec, Coord(spec.dims.size(), 0));
    Configuration out = cfg;
    place_block(out, v, phi_map(extract_block(cfg, v), spec));
    return out;
}

namespace {

// Cross for the fa2 walk towards V: full transverse arms, axis arm from x_i to the far end.
Region fa2_b_cross(const Geometry& g, int axis, int n, const Coord& x) {
    std::vector<Vertex> v{g.index(x)};
    Coord y = x;
    for (int l = 0; l < g.dim(); ++l) {
        y = x;
        if (l == axis) {
            for (int t = x[sz(l)]; t < g.side(l); ++t) {
                y[sz(l)] = t;
                v.push_back(g.index(y));
            }
        } else {
            for (int t = 0; t < n; ++t) {
                y[sz(l)] = t;
                v.push_back(g.index(y));
            }
        }
    }
    return make_region(g, std::move(v));
}

// Appends unit steps moving `cur` to `target` along the given axes, in order.
void walk(std::vector<Coord>& pts, Coord& cur, const Coord& target, const std::vector<int>& axes) {
    for (int l : axes)
        while (cur[sz(l)] != target[sz(l)]) {
            cur[sz(l)] += cur[sz(l)] < target[sz(l)] ? 1 : -1;
            pts.push_back(cur);
        }
}

std::vector<Region> cross_chain(const std::vector<Coord>& pts, const std::function<Region(const Coord&)>& cross) {
    std::vector<Region> out;
    for (const auto& p : pts) out.push_back(cross(p));
    return out;
}

LegalPath fa2_path_B(const Configuration& cfg, const BlockSpec& spec, int axis) {
    require_same_dims(spec);
    const Geometry& g = cfg.geometry();
    const int n = spec.dims.front(), d = spec.d;
    std::vector<int> transverse;
    for (int l = 0; l < d; ++l)
        if (l != axis) transverse.push_back(l);
    Coord cur(sz(d), 0);
    cur[sz(axis)] = n;
    std::vector<Coord> pts{cur};
    Coord x(sz(d));
    for (int j = 1; j <= n; ++j) {
        const int s = n - j;
        std::optional<Coord> z;
        for (Vertex v = 0; v < g.volume() && !z; ++v) {
            g.coords(v, x);
            if (x[sz(axis)] != s || !cfg.is_empty(v)) continue;
            bool in_v = true;
            for (int l : transverse) in_v = in_v && x[sz(l)] < n;
            if (in_v) z = x;
        }
        if (!z) throw PathError("block slice " + std::to_string(s) + " has no empty site");
        Coord above = *z;
        above[sz(axis)] += 1;
        walk(pts, cur, above, transverse);
        cur = *z;
        pts.push_back(cur);
    }
    walk(pts, cur, Coord(sz(d), 0), transverse);
    const CompiledFamily cf(g, spec.family());
    PathRunner runner(cf, cfg);
    run_chain(runner, cross_chain(pts, [&](const Coord& p) { return fa2_b_cross(g, axis, n, p); }));
    return runner.path();
}

LegalPath fakf_path_B(const Configuration& cfg, const BlockSpec& spec, int axis) {
    require_same_dims(spec);
    const Geometry& g = cfg.geometry();
    const int n = spec.dims.front();
    const SubBox vb = block_at(spec, Coord(spec.dims.size(), 0));
    Coord off(spec.dims.size(), 0);
    off[sz(axis)] = 1;
    const SubBox vp = block_at(spec, off);
    std::vector<Region> regions{slice_region(g, vp, axis, 0)};
    std::vector<Region> keep{Region{}};
    for (int s = n - 1; s >= 0; --s) {
        regions.push_back(slice_region(g, vb, axis, s));
        keep.push_back(frame_region(g, vb, axis, s));
    }
    const CompiledFamily cf(g, spec.family());
    PathRunner runner(cf, cfg);
    run_chain(runner, regions, 0, &keep);
    return runner.path();
}

Region gg_pair(const Geometry& g, int c, int y0, int y1) {
    return region_union(column_rows(g, c, y0, y1), column_rows(g, c + 1, y0, y1));
}

LegalPath gg_path_B(const Configuration& cfg, const BlockSpec& spec, int axis) {
    const Geometry& g = cfg.geometry();
    const int n1 = spec.dims[0], n2 = spec.dims[1];
    const CompiledFamily cf(g, gg());
    PathRunner runner(cf, cfg);
    if (axis == 0) {
        std::vector<Region> regions;
        for (int c = n1; c >= 0; --c) regions.push_back(gg_pair(g, c, 0, n2));
        run_chain(runner, regions);
        return runner.path();
    }
    const int top = 2 * n2;
    int tag = 0;
    for (int r = n2 - 1; r >= 0; --r) {
        int a = -1;
        for (int j = 0; j + 1 < n1 && a < 0; ++j)
            if (cfg.is_empty(g.index({j, r})) && cfg.is_empty(g.index({j + 1, r}))) a = j;
        if (a < 0) throw PathError("row " + std::to_string(r) + " has no adjacent empty pair");
        std::vector<Region> regions;
        for (int c = 0; c <= a; ++c) regions.push_back(gg_pair(g, c, r + 1, top));
        for (int c = a; c >= 0; --c) regions.push_back(gg_pair(g, c, r, top));
        run_chain(runner, regions, tag);
        tag += static_cast<int>(regions.size());
    }
    return runner.path();
}

// Runs an op script on cfg and on cfg^z, joins the two at z, and loop-erases.
LegalPath path_A_join(const Configuration& cfg, const CompiledFamily& cf, Vertex z,
                      const std::function<void(PathRunner&)>& script) {
    Configuration other = cfg;
    other.flip(z);
    PathRunner a(cf, cfg), b(cf, other);
    script(a);
    script(b);
    Configuration ea = a.current(), eb = b.current();
    for (Vertex v = 0; v < ea.size(); ++v)
        if (v != z && ea[v] != eb[v]) throw std::logic_error("path_A script ends differ away from z");
    if (ea[z] != eb[z]) a.flip(z);
    LegalPath p = a.path();
    const LegalPath back = b.path().reversed();
    p.flips.insert(p.flips.end(), back.flips.begin(), back.flips.end());
    return loop_erase(p);
}

LegalPath fa2_path_A(const Configuration& cfg, const BlockSpec& spec, const Coord& z) {
    require_same_dims(spec);
    const Geometry& g = cfg.geometry();
    const int n = spec.dims.front(), d = spec.d;
    const SubBox vb = block_at(spec, Coord(sz(d), 0));
    std::vector<int> axes(sz(d));
    for (int l = 0; l < d; ++l) axes[sz(l)] = l;
    auto script = [&](PathRunner& run) {
        int tag = 0;
        for (int j = 0; j < d; ++j) {
            Coord off(sz(d), 0);
            off[sz(j)] = 1;
            const SubBox bj = block_at(spec, off);
            Coord cur = bj.corner, target = bj.corner;
            for (int l = 0; l < d; ++l)
                if (l != j) target[sz(l)] += n - 1;
            std::vector<Coord> pts{cur};
            walk(pts, cur, target, axes);
            run_chain(run, cross_chain(pts, [&](const Coord& p) { return cross_region(g, bj, p); }), tag);
            tag += static_cast<int>(pts.size());
        }
        Coord c(sz(d), n - 1);
        run.empty(cross_region(g, vb, c), tag++);
        Coord w = z;
        for (int l : {0, 1}) w[sz(l)] += z[sz(l)] + 1 < n ? 1 : -1;
        std::vector<Coord> pts{c};
        walk(pts, c, w, axes);
        run_chain(run, cross_chain(pts, [&](const Coord& p) { return cross_region(g, vb, p); }), tag);
    };
    return path_A_join(cfg, CompiledFamily(g, spec.family()), g.index(z), script);
}

LegalPath fakf_path_A(const Configuration& cfg, const BlockSpec& spec, const Coord& z) {
    require_same_dims(spec);
    if (spec.k > spec.d) throw std::invalid_argument("fakf path_A needs k <= d");
    const Geometry& g = cfg.geometry();
    const int n = spec.dims.front(), d = spec.d;
    const SubBox vb = block_at(spec, Coord(sz(d), 0));
    auto script = [&](PathRunner& run) {
        int tag = 0;
        for (int i = 0; i < d; ++i) {
            if (z[sz(i)] == n - 1) continue;
            Coord off(sz(d), 0);
            off[sz(i)] = 1;
            std::vector<Region> regions{slice_region(g, block_at(spec, off), i, 0)};
            for (int s = n - 1; s > z[sz(i)]; --s) regions.push_back(slice_region(g, vb, i, s));
            run_chain(run, regions, tag);
            tag += static_cast<int>(regions.size());
            run.keep(regions.back());
        }
    };
    return path_A_join(cfg, CompiledFamily(g, spec.family()), g.index(z), script);
}

LegalPath gg_path_A(const Configuration& cfg, const BlockSpec& spec, const Coord& z) {
    const Geometry& g = cfg.geometry();
    const int n1 = spec.dims[0], n2 = spec.dims[1];
    if (n1 < 4) throw std::invalid_argument("gg path_A needs at least four columns");
    const int zx = z[0], zy = z[1];
    const int stop = zx == n1 - 1 ? n1 - 3 : zx == n1 - 2 ? n1 - 4 : zx + 1;
    auto col_v = [&](int c, int y0, int y1) { return column_rows(g, c, y0, y1); };
    auto col_v2 = [&](int c) { return column_rows(g, c, n2, 2 * n2); };
    auto script = [&](PathRunner& run) {
        std::vector<Region> regions;
        for (int c = 0; c + 1 < n1; ++c) regions.push_back(region_union(col_v2(c), col_v2(c + 1)));
        run_chain(run, regions);
        int tag = static_cast<int>(regions.size());
        run.empty(region_union(col_v(n1 - 2, 0, n2), col_v(n1 - 1, 0, n2)), tag++);
        for (int c = n1 - 2; c > stop; --c) {
            run.empty(col_v2(c - 1), tag);
            run.empty(col_v(c - 1, 0, n2), tag);
            run.restore(col_v(c + 1, 0, n2), tag);
            run.restore(col_v2(c + 1), tag);
            ++tag;
        }
        if (zx <= n1 - 3) {
            run.empty(col_v2(zx), tag);
            if (zy + 1 < n2) run.empty(col_v(zx, zy + 1, n2), tag);
        }
    };
    return path_A_join(cfg, CompiledFamily(g, gg()), g.index(z), script);
}

} // namespace

LegalPath path_B(const Configuration& cfg, const BlockSpec& spec, int axis) {
    if (cfg.geometry() != path_B_geometry(spec, axis)) throw std::invalid_argument("path_B input has the wrong geometry");
    LegalPath p;
    switch (spec.model) {
    case BlockModel::fa2: p = fa2_path_B(cfg, spec, axis); break;
    case BlockModel::fakf: p = fakf_path_B(cfg, spec, axis); break;
    case BlockModel::gg: p = gg_path_B(cfg, spec, axis); break;
    }
    p = loop_erase(p);
    if (p.end() != path_B_target(cfg, spec)) throw std::logic_error("path_B does not end at Phi(cfg)");
    return p;
}

LegalPath path_A(const Configuration& cfg, const BlockSpec& spec, const Coord& z) {
    if (cfg.geometry() != path_A_geometry(spec)) throw std::invalid_argument("path_A input has the wrong geometry");
    if (z.size() != spec.dims.size()) throw std::invalid_argument("z dimension mismatch");
    for (std::size_t i = 0; i < z.size(); ++i)
        if (z[i] < 0 || z[i] >= spec.dims[i]) throw std::out_of_range("z outside the block");
    switch (spec.model) {
    case BlockModel::fa2: return fa2_path_A(cfg, spec, z);
    case BlockModel::fakf: return fakf_path_A(cfg, spec, z);
    case BlockModel::gg: return gg_path_A(cfg, spec, z);
    }
    throw std::logic_error("unreachable");
}

Configuration sample_good_block(const BlockSpec& spec, std::uint64_t& state, std::size_t max_attempts) {
    const Geometry g = spec.geometry();
    for (std::size_t t = 0; t < max_attempts; ++t) {
        state = mix64(state + 0x9e3779b97f4a7c15ULL);
        Configuration c = random_configuration(g, spec.q, state);
        if (is_good(c, spec)) return c;
    }
    throw std::runtime_error("no good block found within the attempt budget");
}

Configuration sample_supergood_block(const BlockSpec& spec, std::uint64_t& state, std::size_t max_attempts) {
    return phi_map(sample_good_block(spec, state, max_attempts), spec);
}

Configuration sample_path_B_input(const BlockSpec& spec, int axis, std::uint64_t& state) {
    Configuration cfg(path_B_geometry(spec, axis), 1);
    Coord off(spec.dims.size(), 0);
    place_block(cfg, block_at(spec, off), sample_good_block(spec, state));
    off[sz(axis)] = 1;
    place_block(cfg, block_at(spec, off), sample_supergood_block(spec, state));
    return cfg;
}

Configuration sample_path_A_input(const BlockSpec& spec, std::uint64_t& state) {
    const Geometry g = path_A_geometry(spec);
    state = mix64(state + 0x9e3779b97f4a7c15ULL);
    Configuration cfg = random_configuration(g, spec.q, state);
    for (int i = 0; i < spec.d; ++i) {
        Coord off(spec.dims.size(), 0);
        off[sz(i)] = 1;
        place_block(cfg, block_at(spec, off), sample_supergood_block(spec, state));
    }
    return cfg;
}

CongestionReport congestion_exact(const std::vector<Configuration>& starts, const PathBuilder& build, double q) {
    CongestionReport out;
    out.mode = "exact";
    std::unordered_map<std::string, double> load;
    for (const auto& s : starts) {
        const LegalPath p = build(s);
        out.n_max = std::max(out.n_max, p.size());
        ++out.paths;
        const double ls = log_product_measure(s, q);
        Configuration c = s;
        std::unordered_set<std::string> visited;
        auto visit = [&] {
            std::string k = state_key(c);
            if (visited.insert(k).second) load[k] += std::exp(ls - log_product_measure(c, q));
        };
        visit();
        for (const auto& f : p.flips) {
            c.set(f.vertex, f.new_value);
            visit();
        }
    }
    for (const auto& [k, v] : load) out.rho = std::max(out.rho, v);
    return out;
}

double congestion_bruteforce(const std::vector<Configuration>& starts, const PathBuilder& build, double q) {
    if (starts.empty()) return 1.0;
    std::vector<LegalPath> paths;
    for (const auto& s : starts) paths.push_back(build(s));
    const Geometry& g = starts.front().geometry();
    double rho = 1.0;
    for (const auto& w : enumerate_configurations(g, [](const Configuration&) { return true; })) {
        double sum = 0.0;
        for (const auto& p : paths) {
            Configuration c = p.start;
            bool hit = c == w;
            for (std::size_t t = 0; t < p.flips.size() && !hit; ++t) {
                c.set(p.flips[t].vertex, p.flips[t].new_value);
                hit = c == w;
            }
            if (hit) sum += std::exp(log_product_measure(p.start, q) - log_product_measure(w, q));
        }
        rho = std::max(rho, sum);
    }
    return rho;
}

double chain_congestion_bound(const std::vector<Region>& regions, double q) {
    std::size_t m = 0;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        std::size_t s = regions[i].size();
        if (i >= 1) s += regions[i - 1].size();
        if (i >= 2) s += regions[i - 2].size();
        m = std::max(m, s);
    }
    return std::pow(2.0 / q, static_cast<double>(m));
}

std::vector<Configuration> enumerate_configurations(const Geometry& g, const std::function<bool(const Configuration&)>& pred) {
    if (g.volume() > 20) throw std::length_error("enumeration limited to 20 sites");
    std::vector<Configuration> out;
    Configuration c(g, 0);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << g.volume()); ++s) {
        for (Vertex v = 0; v < g.volume(); ++v) c.set(v, (s >> v) & 1U);
        if (pred(c)) out.push_back(c);
    }
    return out;
}

void write_path(std::ostream& os, const LegalPath& path) {
    write_grid(os, path.start);
    for (std::size_t t = 0; t < path.flips.size(); ++t)
        os << t << ' ' << path.flips[t].vertex << ' ' << int(path.flips[t].new_value) << '\n';
}

LegalPath read_path(std::istream& is) {
    LegalPath p{read_grid(is), {}};
    std::size_t idx = 0, expect = 0;
    Vertex v = 0;
    int val = 0;
    while (is >> idx >> v >> val) {
        if (idx != expect++) throw std::runtime_error("path dump: flip indices out of order");
        if (v >= p.start.size() || (val != 0 && val != 1)) throw std::runtime_error("path dump: bad flip record");
        p.flips.push_back(Flip{v, static_cast<std::uint8_t>(val), -1});
    }
    if (!is.eof()) throw std::runtime_error("path dump: malformed line");
    return p;
}

} // namespace kcm
