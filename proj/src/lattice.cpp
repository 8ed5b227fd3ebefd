#include "kcm/lattice.hpp"
#include "kcm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <iterator>
#include <sstream>

namespace kcm {

std::string to_string(Boundary b) { return b == Boundary::torus ? "torus" : "free"; }

Boundary boundary_from_string(const std::string& s) {
    if (s == "torus") return Boundary::torus;
    if (s == "free") return Boundary::free;
    throw std::invalid_argument("unknown boundary: " + s);
}

Geometry::Geometry(std::vector<int> dims, Boundary boundary) : dims_(std::move(dims)), boundary_(boundary) {
    if (dims_.empty()) throw std::invalid_argument("geometry needs d >= 1");
    strides_.assign(dims_.size(), 1);
    volume_ = 1;
    for (std::size_t i = dims_.size(); i-- > 0;) {
        if (dims_[i] < 1) throw std::invalid_argument("geometry side lengths must be >= 1");
        strides_[i] = volume_;
        volume_ *= static_cast<std::size_t>(dims_[i]);
    }
}

bool Geometry::contains(const Coord& x) const noexcept {
    if (x.size() != dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i)
        if (x[i] < 0 || x[i] >= dims_[i]) return false;
    return true;
}

Vertex Geometry::index(const Coord& x) const {
    if (!contains(x)) throw std::out_of_range("coordinate out of bounds");
    Vertex v = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) v += static_cast<Vertex>(x[i]) * strides_[i];
    return v;
}

Coord Geometry::coords(Vertex v) const {
    Coord x;
    coords(v, x);
    return x;
}

void Geometry::coords(Vertex v, Coord& out) const {
    if (v >= volume_) throw std::out_of_range("vertex index out of bounds");
    out.resize(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        out[i] = static_cast<int>(v / strides_[i]);
        v %= strides_[i];
    }
}

bool Geometry::translate(const Coord& x, const Coord& u, Coord& out) const {
    out.resize(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        int y = x[i] + u[i];
        if (boundary_ == Boundary::torus) {
            y %= dims_[i];
            if (y < 0) y += dims_[i];
        } else if (y < 0 || y >= dims_[i]) {
            return false;
        }
        out[i] = y;
    }
    return true;
}

std::vector<Vertex> neighbors(const Geometry& g, const Coord& x) {
    if (!g.contains(x)) throw std::out_of_range("neighbors: vertex out of bounds");
    std::vector<Vertex> out;
    Coord u(x.size(), 0), y;
    for (int i = 0; i < g.dim(); ++i) {
        for (int s : {+1, -1}) {
            u[static_cast<std::size_t>(i)] = s;
            if (g.translate(x, u, y)) {
                const Vertex w = g.index(y);
                if (w != g.index(x) && std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
            }
        }
        u[static_cast<std::size_t>(i)] = 0;
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Vertex> neighbors(const Geometry& g, Vertex x) { return neighbors(g, g.coords(x)); }

Configuration::Configuration(Geometry g, std::uint8_t fill)
    : geometry_(std::move(g)), bits_(geometry_.volume(), fill ? 1 : 0) {}

Configuration::Configuration(Geometry g, std::vector<std::uint8_t> bits) : geometry_(std::move(g)), bits_(std::move(bits)) {
    if (bits_.size() != geometry_.volume()) throw std::invalid_argument("configuration size does not match geometry");
    for (auto& b : bits_) {
        if (b > 1) throw std::invalid_argument("configuration bits must be 0 or 1");
    }
}

std::size_t Configuration::count_empty() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{0}));
}

Region::Region(std::vector<Vertex> vertices) : vertices_(std::move(vertices)) {
    std::sort(vertices_.begin(), vertices_.end());
    if (std::adjacent_find(vertices_.begin(), vertices_.end()) != vertices_.end())
        throw std::invalid_argument("region contains duplicate vertices");
}

Region::Region(const Geometry& g, std::vector<Vertex> vertices) : Region(std::move(vertices)) {
    if (!vertices_.empty() && vertices_.back() >= g.volume()) throw std::out_of_range("region vertex out of bounds");
}

bool Region::contains(Vertex v) const noexcept { return std::binary_search(vertices_.begin(), vertices_.end(), v); }

Region region_union(const Region& a, const Region& b) {
    std::vector<Vertex> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return Region(std::move(out));
}

Region region_difference(const Region& a, const Region& b) {
    std::vector<Vertex> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return Region(std::move(out));
}

std::vector<std::uint8_t> region_mask(const Geometry& g, const Region& r) {
    std::vector<std::uint8_t> mask(g.volume(), 0);
    for (Vertex v : r) mask.at(v) = 1;
    return mask;
}

SubBox whole_box(const Geometry& g) { return SubBox{Coord(static_cast<std::size_t>(g.dim()), 0), g.dims()}; }

namespace {

void check_subbox(const Geometry& g, const SubBox& b) {
    if (static_cast<int>(b.corner.size()) != g.dim() || static_cast<int>(b.dims.size()) != g.dim())
        throw std::invalid_argument("sub-box dimension mismatch");
    for (int i = 0; i < g.dim(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (b.dims[k] < 1 || b.corner[k] < 0 || b.corner[k] + b.dims[k] > g.side(i))
            throw std::out_of_range("sub-box exceeds geometry");
    }
}

void check_axis(const SubBox& b, int axis) {
    if (axis < 0 || axis >= static_cast<int>(b.dims.size())) throw std::out_of_range("axis out of range");
}

// Visit every local coordinate of the sub-box in row-major order.
template <class Fn>
void for_each_local(const SubBox& b, Fn&& fn) {
    const std::size_t d = b.dims.size();
    Coord local(d, 0);
    while (true) {
        fn(local);
        std::size_t i = d;
        while (i-- > 0) {
            if (++local[i] < b.dims[i]) break;
            local[i] = 0;
            if (i == 0) return;
        }
    }
}

template <class Pred>
Region filtered_region(const Geometry& g, const SubBox& b, Pred&& keep) {
    check_subbox(g, b);
    std::vector<Vertex> out;
    Coord global(b.dims.size());
    for_each_local(b, [&](const Coord& local) {
        if (!keep(local)) return;
        for (std::size_t i = 0; i < local.size(); ++i) global[i] = b.corner[i] + local[i];
        out.push_back(g.index(global));
    });
    return Region(g, std::move(out));
}

} // namespace

Region box_region(const Geometry& g, const SubBox& b) {
    return filtered_region(g, b, [](const Coord&) { return true; });
}

Region slice_region(const Geometry& g, const SubBox& b, int axis, int j) {
    check_axis(b, axis);
    if (j < 0 || j >= b.dims[static_cast<std::size_t>(axis)]) throw std::out_of_range("slice index out of range");
    return filtered_region(g, b, [&](const Coord& x) { return x[static_cast<std::size_t>(axis)] == j; });
}

Region frame_region(const Geometry& g, const SubBox& b, int axis, int j) {
    check_axis(b, axis);
    if (j < 0 || j >= b.dims[static_cast<std::size_t>(axis)]) throw std::out_of_range("frame index out of range");
    return filtered_region(g, b, [&](const Coord& x) {
        if (x[static_cast<std::size_t>(axis)] != j) return false;
        for (std::size_t k = 0; k < x.size(); ++k)
            if (static_cast<int>(k) != axis && x[k] == 0) return true;
        return false;
    });
}

Region edge_region(const Geometry& g, const SubBox& b, int axis) {
    check_axis(b, axis);
    return filtered_region(g, b, [&](const Coord& x) {
        for (std::size_t k = 0; k < x.size(); ++k)
            if (static_cast<int>(k) != axis && x[k] != 0) return false;
        return true;
    });
}

Region cross_region(const Geometry& g, const SubBox& b, const Coord& x) {
    check_subbox(g, b);
    if (x.size() != b.dims.size()) throw std::invalid_argument("cross centre dimension mismatch");
    Coord centre(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        centre[i] = x[i] - b.corner[i];
        if (centre[i] < 0 || centre[i] >= b.dims[i]) throw std::out_of_range("cross centre outside sub-box");
    }
    return filtered_region(g, b, [&](const Coord& y) {
        int differing = 0;
        for (std::size_t k = 0; k < y.size(); ++k) differing += (y[k] != centre[k]);
        return differing <= 1;
    });
}

Region slice_region(const Geometry& g, int axis, int j) { return slice_region(g, whole_box(g), axis, j); }
Region frame_region(const Geometry& g, int axis, int j) { return frame_region(g, whole_box(g), axis, j); }
Region edge_region(const Geometry& g, int axis) { return edge_region(g, whole_box(g), axis); }
Region cross_region(const Geometry& g, const Coord& x) { return cross_region(g, whole_box(g), x); }

std::uint64_t position_key(const Coord& x) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (int c : x) h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)) + 0x9e3779b97f4a7c15ULL));
    return h;
}

std::vector<double> vertex_uniforms(const Geometry& g, std::uint64_t seed, std::uint64_t replica) {
    std::vector<double> u(g.volume());
    Coord x;
    for (Vertex v = 0; v < u.size(); ++v) {
        g.coords(v, x);
        u[v] = keyed_uniform(seed, replica, position_key(x));
    }
    return u;
}

Configuration threshold_configuration(const Geometry& g, const std::vector<double>& u, double q) {
    if (u.size() != g.volume()) throw std::invalid_argument("uniform field size mismatch");
    std::vector<std::uint8_t> bits(g.volume());
    for (Vertex v = 0; v < bits.size(); ++v) bits[v] = u[v] < q ? 0 : 1;
    return Configuration(g, std::move(bits));
}

Configuration random_configuration(const Geometry& g, double q, std::uint64_t seed, std::uint64_t replica) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in [0,1]");
    const auto u = vertex_uniforms(g, seed, replica);
    std::vector<std::uint8_t> bits(g.volume());
    for (Vertex v = 0; v < bits.size(); ++v) bits[v] = u[v] < q ? 0 : 1;
    return Configuration(g, std::move(bits));
}

double log_product_measure(const Configuration& c, double q) {
    const double empty = static_cast<double>(c.count_empty());
    const double occ = static_cast<double>(c.size()) - empty;
    return occ * std::log1p(-q) + empty * std::log(q);
}

void write_grid(std::ostream& os, const Configuration& c) {
    const Geometry& g = c.geometry();
    os << g.dim();
    for (int n : g.dims()) os << ' ' << n;
    os << ' ' << to_string(g.boundary()) << '\n';
    const auto row = static_cast<std::size_t>(g.dims().back());
    for (std::size_t v = 0; v < c.size(); ++v) {
        os << (c[v] ? '1' : '0');
        if ((v + 1) % row == 0) os << '\n';
    }
}

Configuration read_grid(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("grid: missing header");
    std::istringstream hs(header);
    int d = 0;
    if (!(hs >> d) || d < 1) throw std::runtime_error("grid: bad dimension");
    std::vector<int> dims(static_cast<std::size_t>(d));
    for (auto& n : dims)
        if (!(hs >> n) || n < 1) throw std::runtime_error("grid: bad side length");
    std::string boundary;
    if (!(hs >> boundary)) throw std::runtime_error("grid: missing boundary");
    Geometry g(dims, boundary_from_string(boundary));
    std::vector<std::uint8_t> bits;
    bits.reserve(g.volume());
    const auto row = static_cast<std::size_t>(dims.back());
    std::string line;
    while (bits.size() < g.volume()) {
        if (!std::getline(is, line)) throw std::runtime_error("grid: truncated body");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.size() != row) throw std::runtime_error("grid: row length mismatch");
        for (char ch : line) {
            if (ch != '0' && ch != '1') throw std::runtime_error("grid: invalid character");
            bits.push_back(ch == '1' ? 1 : 0);
        }
    }
    return Configuration(std::move(g), std::move(bits));
}

std::string grid_to_string(const Configuration& c) {
    std::ostringstream os;
    write_grid(os, c);
    return os.str();
}

Configuration grid_from_string(const std::string& s) {
    std::istringstream is(s);
    return read_grid(is);
}

} // namespace kcm
