#include "kcm/percolation.hpp"
#include "kcm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kcm {

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t v) {
    while (parent[v] != v) {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    return v;
}

} // namespace

ClusterLabels find_clusters(const Configuration& cfg) {
    const Geometry& g = cfg.geometry();
    std::vector<std::size_t> parent(cfg.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (Vertex v = 0; v < cfg.size(); ++v) {
        if (!cfg.is_empty(v)) continue;
        for (Vertex u : neighbors(g, v)) {
            if (!cfg.is_empty(u)) continue;
            std::size_t a = find_root(parent, v), b = find_root(parent, u);
            if (a == b) continue;
            // Smallest index becomes the root so labels are canonical.
            if (b < a) std::swap(a, b);
            parent[b] = a;
        }
    }
    ClusterLabels out;
    out.label.assign(cfg.size(), -1);
    for (Vertex v = 0; v < cfg.size(); ++v) {
        if (!cfg.is_empty(v)) continue;
        const std::size_t r = find_root(parent, v);
        out.label[v] = static_cast<std::int64_t>(r);
        out.clusters += (r == v);
    }
    return out;
}

ClusterLabels find_clusters_bfs(const Configuration& cfg) {
    const Geometry& g = cfg.geometry();
    ClusterLabels out;
    out.label.assign(cfg.size(), -1);
    std::deque<Vertex> queue;
    for (Vertex s = 0; s < cfg.size(); ++s) {
        if (!cfg.is_empty(s) || out.label[s] >= 0) continue;
        ++out.clusters;
        out.label[s] = static_cast<std::int64_t>(s);
        queue.push_back(s);
        while (!queue.empty()) {
            const Vertex v = queue.front();
            queue.pop_front();
            for (Vertex u : neighbors(g, v))
                if (cfg.is_empty(u) && out.label[u] < 0) {
                    out.label[u] = static_cast<std::int64_t>(s);
                    queue.push_back(u);
                }
        }
    }
    return out;
}

std::vector<int> RectangleLadder::dims(int n) {
    if (n < 1 || n > 24) throw std::out_of_range("rectangle index out of range");
    const int a = ladder_length(n), b = ladder_length(n - 1);
    return n % 2 == 0 ? std::vector<int>{a, b} : std::vector<int>{b, a};
}

SubBox RectangleLadder::rectangle(const Coord& x, int n, int i) {
    if (x.size() != 2) throw std::invalid_argument("rectangles live in two dimensions");
    auto dm = dims(n);
    if (i == 1) return SubBox{{x[0], x[1] + 1}, dm};
    if (i == 2) return SubBox{{x[0] + 1, x[1]}, {dm[1], dm[0]}};
    throw std::invalid_argument("rectangle family must be 1 or 2");
}

namespace {

bool inside(const Geometry& g, const SubBox& b) {
    if (static_cast<int>(b.dims.size()) != g.dim()) return false;
    for (int i = 0; i < g.dim(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (b.corner[k] < 0 || b.dims[k] < 1 || b.corner[k] + b.dims[k] > g.side(i)) return false;
    }
    return true;
}

} // namespace

bool has_hard_crossing(const Configuration& cfg, const SubBox& rect, int axis) {
    const Geometry& g = cfg.geometry();
    if (!inside(g, rect)) throw std::out_of_range("rectangle outside the lattice");
    if (axis < 0) axis = static_cast<int>(std::max_element(rect.dims.begin(), rect.dims.end()) - rect.dims.begin());
    const std::size_t d = rect.dims.size(), ax = static_cast<std::size_t>(axis);
    // Copy the rectangle into a flat row-major buffer, walking it with an odometer.
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t i = d - 1; i-- > 0;) stride[i] = stride[i + 1] * static_cast<std::size_t>(rect.dims[i + 1]);
    const std::size_t vol = stride[0] * static_cast<std::size_t>(rect.dims[0]);
    std::vector<std::uint8_t> open(vol);
    Coord x = rect.corner;
    for (std::size_t v = 0; v < vol; ++v) {
        open[v] = cfg.at(x) == 0;
        for (std::size_t i = d; i-- > 0;) {
            if (++x[i] < rect.corner[i] + rect.dims[i]) break;
            x[i] = rect.corner[i];
        }
    }
    auto coord = [&](std::size_t v, std::size_t i) { return static_cast<int>((v / stride[i]) % static_cast<std::size_t>(rect.dims[i])); };
    std::vector<std::size_t> queue;
    queue.reserve(vol);
    for (std::size_t v = 0; v < vol; ++v)
        if (open[v] && coord(v, ax) == 0) {
            open[v] = 0;
            queue.push_back(v);
        }
    const int last = rect.dims[ax] - 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t v = queue[head];
        if (coord(v, ax) == last) return true;
        for (std::size_t i = 0; i < d; ++i) {
            const int c = coord(v, i);
            if (c > 0 && open[v - stride[i]]) {
                open[v - stride[i]] = 0;
                queue.push_back(v - stride[i]);
            }
            if (c + 1 < rect.dims[i] && open[v + stride[i]]) {
                open[v + stride[i]] = 0;
                queue.push_back(v + stride[i]);
            }
        }
    }
    return false;
}

std::string to_string(SurrogateMode m) { return m == SurrogateMode::oriented ? "oriented" : "all_neighbors"; }

SurrogateMode surrogate_mode_from_string(const std::string& s) {
    if (s == "oriented") return SurrogateMode::oriented;
    if (s == "all_neighbors") return SurrogateMode::all_neighbors;
    throw std::invalid_argument("unknown surrogate mode: " + s);
}

bool c_infty_surrogate(const Configuration& cfg, const Coord& x, int R, SurrogateMode mode) {
    const Geometry& g = cfg.geometry();
    const int d = g.dim();
    if (R < 1) throw std::invalid_argument("surrogate radius must be >= 1");
    SubBox box{Coord(x.size()), std::vector<int>(x.size(), 2 * R + 1)};
    for (std::size_t i = 0; i < x.size(); ++i) box.corner[i] = x[i] - R;
    if (!inside(g, box)) throw std::out_of_range("surrogate box outside the lattice");

    const Geometry local = Geometry::box(box.dims);
    Configuration sub(local, 1);
    Coord y, z(x.size());
    for (Vertex v = 0; v < local.volume(); ++v) {
        local.coords(v, y);
        for (std::size_t i = 0; i < y.size(); ++i) z[i] = box.corner[i] + y[i];
        sub.set(v, cfg.at(z));
    }
    const auto labels = find_clusters(sub);
    std::vector<std::uint8_t> touches(local.volume(), 0);
    for (Vertex v = 0; v < local.volume(); ++v) {
        if (labels.label[v] < 0) continue;
        local.coords(v, y);
        for (int c : y)
            if (c == 0 || c == 2 * R) touches[static_cast<std::size_t>(labels.label[v])] = 1;
    }
    auto good = [&](const Coord& nb) {
        const Vertex v = local.index(nb);
        return labels.label[v] >= 0 && touches[static_cast<std::size_t>(labels.label[v])];
    };
    const Coord centre(x.size(), R);
    if (mode == SurrogateMode::oriented) {
        if (d < 2) throw std::invalid_argument("oriented surrogate needs d >= 2");
        Coord e1 = centre, e2 = centre;
        e1[0] += 1;
        e2[1] += 1;
        return good(e1) && good(e2);
    }
    int count = 0;
    for (int i = 0; i < d; ++i)
        for (int s : {1, -1}) {
            Coord nb = centre;
            nb[static_cast<std::size_t>(i)] += s;
            count += good(nb);
        }
    return count >= 2;
}

bool c_zero(const Configuration& cfg, const Coord& x) {
    if (x.size() != 2) throw std::invalid_argument("c_zero lives in two dimensions");
    return cfg.at({x[0] + 1, x[1]}) == 0 && cfg.at({x[0], x[1] + 1}) == 0;
}

bool c_crossing(const Configuration& cfg, const Coord& x, int n, int i) {
    const SubBox r = RectangleLadder::rectangle(x, n, i);
    return has_hard_crossing(cfg, r, -1);
}

bool ladder_constraint(const Configuration& cfg, const Coord& x, int k) {
    if (!c_zero(cfg, x)) return false;
    for (int n = 1; n <= k; ++n)
        if (!c_crossing(cfg, x, n, 1) || !c_crossing(cfg, x, n, 2)) return false;
    return true;
}

bool CrossingReport::has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

CrossingReport estimate_crossing_failure(const std::vector<int>& n_values, double p, std::size_t replicas,
                                         std::uint64_t seed, unsigned threads) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    if (n_values.empty()) throw std::invalid_argument("no rectangle indices given");
    CrossingReport out;
    out.p = p;
    // Zeros percolate for 1 - p above the site threshold (about 0.593).
    if (p > 0.40) out.flags.push_back("outside_small_p");
    const double q = 1.0 - p;
    for (int n : n_values) {
        const auto dm = RectangleLadder::dims(n);
        const Geometry g = Geometry::box(dm);
        std::vector<std::uint8_t> fail(replicas, 0);
        parallel_for(replicas, threads, [&](std::size_t r) {
            const auto c = random_configuration(g, q, seed, r);
            fail[r] = !has_hard_crossing(c, whole_box(g), -1);
        });
        const auto k = static_cast<std::size_t>(std::count(fail.begin(), fail.end(), std::uint8_t{1}));
        CrossingPoint pt{n, ladder_length(n), binomial_estimate(k, replicas, seed)};
        if (k == 0) pt.failure.flags.push_back("zero_failures");
        out.points.push_back(pt);
    }
    std::vector<double> x, y, w;
    for (const auto& pt : out.points) {
        const double f = pt.failure.value;
        if (f <= 0.0 || f >= 1.0) continue;
        x.push_back(pt.ell);
        y.push_back(-std::log(f));
        w.push_back(static_cast<double>(replicas) * f / (1.0 - f));
    }
    if (x.size() >= 2) {
        const auto fit = weighted_linear_fit(x, y, w);
        out.m_hat = fit.slope;
        out.m_hat_se = fit.slope_se;
        if (!(out.m_hat > 0.0)) out.flags.push_back("m_hat_nonpositive");
    } else {
        out.m_hat = std::numeric_limits<double>::quiet_NaN();
        out.flags.push_back("m_hat_unavailable");
    }
    return out;
}

CrossingReport estimate_crossing_failure(int n, double p, std::size_t replicas, std::uint64_t seed, unsigned threads) {
    return estimate_crossing_failure(std::vector<int>{n}, p, replicas, seed, threads);
}

SeriesCheck supercritical_condition_check(double p, double m_hat, int n_truncate, double tail_tol) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
    if (!(m_hat > 0.0)) throw std::invalid_argument("m_hat must be positive");
    auto log_term = [&](int n) { return n * std::log(8.0) - 0.5 * m_hat * ladder_length(n); };
    SeriesCheck out;
    for (int n = 1; n <= n_truncate && n < 60; ++n) {
        out.partial_sum += std::exp(log_term(n));
        out.terms = n;
        const double ratio = 8.0 * std::exp(-0.5 * m_hat * ladder_length(n + 1));
        if (ratio < 0.5) {
            out.tail_bound = std::exp(log_term(n + 1)) / (1.0 - ratio);
            if (out.tail_bound < tail_tol) {
                out.value = 3.0 * (out.partial_sum + out.tail_bound) + 4.0 * std::sqrt(p);
                return out;
            }
        }
    }
    throw std::runtime_error("series tail not certified by n = " + std::to_string(n_truncate));
}

} // namespace kcm
