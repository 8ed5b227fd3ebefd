#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace kcm {

using Coord = std::vector<int>;
using Vertex = std::size_t;

enum class Boundary { torus, free };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

class Geometry {
public:
    Geometry() = default;
    Geometry(std::vector<int> dims, Boundary boundary);

    static Geometry torus(int d, int n) { return Geometry(std::vector<int>(static_cast<std::size_t>(d), n), Boundary::torus); }
    static Geometry box(std::vector<int> dims) { return Geometry(std::move(dims), Boundary::free); }

    int dim() const noexcept { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const noexcept { return dims_; }
    int side(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
    Boundary boundary() const noexcept { return boundary_; }
    std::size_t volume() const noexcept { return volume_; }

    bool contains(const Coord& x) const noexcept;
    Vertex index(const Coord& x) const;
    Coord coords(Vertex v) const;
    void coords(Vertex v, Coord& out) const;

    // Translate x by u. Wraps on the torus; on a free box returns false when the image leaves it.
    bool translate(const Coord& x, const Coord& u, Coord& out) const;

    bool operator==(const Geometry& o) const noexcept { return dims_ == o.dims_ && boundary_ == o.boundary_; }
    bool operator!=(const Geometry& o) const noexcept { return !(*this == o); }

private:
    std::vector<int> dims_;
    std::vector<std::size_t> strides_;
    Boundary boundary_ = Boundary::torus;
    std::size_t volume_ = 0;
};

std::vector<Vertex> neighbors(const Geometry& g, Vertex x);
std::vector<Vertex> neighbors(const Geometry& g, const Coord& x);

// Occupancy field. 1 = occupied, 0 = empty.
class Configuration {
public:
    Configuration() = default;
    explicit Configuration(Geometry g, std::uint8_t fill = 1);
    Configuration(Geometry g, std::vector<std::uint8_t> bits);

    const Geometry& geometry() const noexcept { return geometry_; }
    std::size_t size() const noexcept { return bits_.size(); }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    std::uint8_t operator[](Vertex v) const noexcept { return bits_[v]; }
    std::uint8_t at(const Coord& x) const { return bits_[geometry_.index(x)]; }
    bool is_empty(Vertex v) const noexcept { return bits_[v] == 0; }

    void set(Vertex v, std::uint8_t value) noexcept { bits_[v] = value ? 1 : 0; }
    void set(const Coord& x, std::uint8_t value) { set(geometry_.index(x), value); }
    void flip(Vertex v) noexcept { bits_[v] ^= 1; }

    std::size_t count_empty() const noexcept;
    std::size_t count_occupied() const noexcept { return bits_.size() - count_empty(); }

    bool operator==(const Configuration& o) const noexcept { return geometry_ == o.geometry_ && bits_ == o.bits_; }
    bool operator!=(const Configuration& o) const noexcept { return !(*this == o); }

private:
    Geometry geometry_;
    std::vector<std::uint8_t> bits_;
};

// Sorted, duplicate-free vertex set inside a geometry.
class Region {
public:
    Region() = default;
    Region(const Geometry& g, std::vector<Vertex> vertices);
    // Geometry-free construction; sorts and rejects duplicates.
    explicit Region(std::vector<Vertex> vertices);

    const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    bool empty() const noexcept { return vertices_.empty(); }
    bool contains(Vertex v) const noexcept;

    auto begin() const noexcept { return vertices_.begin(); }
    auto end() const noexcept { return vertices_.end(); }

    bool operator==(const Region& o) const noexcept { return vertices_ == o.vertices_; }

private:
    std::vector<Vertex> vertices_;
};

Region region_union(const Region& a, const Region& b);
Region region_difference(const Region& a, const Region& b);
std::vector<std::uint8_t> region_mask(const Geometry& g, const Region& r);

// Region constructors. Coordinates are 0-based; "first coordinate" is 0
// relative to the sub-box when one is given.
struct SubBox {
    Coord corner;
    std::vector<int> dims;
};

SubBox whole_box(const Geometry& g);

Region box_region(const Geometry& g, const SubBox& b);
Region slice_region(const Geometry& g, int axis, int j);
Region frame_region(const Geometry& g, int axis, int j);
Region edge_region(const Geometry& g, int axis);
Region cross_region(const Geometry& g, const Coord& x);

Region slice_region(const Geometry& g, const SubBox& b, int axis, int j);
Region frame_region(const Geometry& g, const SubBox& b, int axis, int j);
Region edge_region(const Geometry& g, const SubBox& b, int axis);
Region cross_region(const Geometry& g, const SubBox& b, const Coord& x);

// Per-vertex uniforms keyed by (seed, replica, lattice position). Keying by
// position rather than index makes nested boxes and tori share uniforms.
std::uint64_t position_key(const Coord& x);
std::vector<double> vertex_uniforms(const Geometry& g, std::uint64_t seed, std::uint64_t replica = 0);
Configuration threshold_configuration(const Geometry& g, const std::vector<double>& u, double q);

// q-random configuration: vertex v is empty iff its uniform is < q.
Configuration random_configuration(const Geometry& g, double q, std::uint64_t seed, std::uint64_t replica = 0);

// Product-measure log weight of a configuration: (#occupied) log p + (#empty) log q.
double log_product_measure(const Configuration& c, double q);

// Grid text format.
void write_grid(std::ostream& os, const Configuration& c);
Configuration read_grid(std::istream& is);
std::string grid_to_string(const Configuration& c);
Configuration grid_from_string(const std::string& s);

} // namespace kcm
