#pragma once

#include "kcm/blocks.hpp"
#include "kcm/lattice.hpp"
#include "kcm/update_family.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kcm {

struct Flip {
    Vertex vertex = 0;
    std::uint8_t new_value = 0;
    int region = -1; // index of the region whose operation produced the flip
};

struct LegalPath {
    Configuration start;
    std::vector<Flip> flips;

    std::size_t size() const noexcept { return flips.size(); }
    Configuration end() const;
    bool decreasing() const noexcept;
    bool increasing() const noexcept;
    // Reversed path, starting from end().
    LegalPath reversed() const;
};

struct LegalityReport {
    bool ok = true;
    std::size_t index = 0;
    Vertex vertex = 0;
    std::string reason;
};

// Replays the path under the conservative boundary (or `mode`), checking each
// constraint, that every flip changes the value, and that no configuration repeats.
LegalityReport verify_legal(const LegalPath& path, const UpdateFamily& fam, OutsideMode mode = OutsideMode::occupied);

// Removes cycles in chronological order; the result visits no configuration twice.
LegalPath loop_erase(const LegalPath& path);

class PathError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flip-sequence builder. empty() empties a region greedily (bootstrap rounds
// restricted to the region, lexicographic within a round); restore() sets a
// region back to the reference configuration by reversing a greedy emptying of
// the target. Both are legal by construction; failures throw PathError.
class PathRunner {
public:
    PathRunner(const CompiledFamily& cf, Configuration start);

    void empty(const Region& r, int tag = -1);
    void restore(const Region& r, int tag = -1);
    void flip(Vertex v, int tag = -1);
    // Sites excluded from every later restore.
    void keep(const Region& r);

    const Configuration& current() const noexcept { return cur_; }
    const Configuration& reference() const noexcept { return ref_; }
    LegalPath path() const { return LegalPath{ref_, flips_}; }

private:
    void apply(Vertex v, std::uint8_t value, int tag);

    const CompiledFamily& cf_;
    Configuration cur_;
    Configuration ref_;
    std::vector<Flip> flips_;
    std::vector<std::uint8_t> keep_;
};

// Chain of regions: regions[0] must already be empty. For j = 1..N-1 empty
// regions[j], then restore regions[j-1] \ regions[j] (minus keep_j when given).
void run_chain(PathRunner& runner, const std::vector<Region>& regions, int tag_base = 0,
               const std::vector<Region>* keep = nullptr);

LegalPath empty_region_schedule(const Configuration& cfg, const UpdateFamily& fam, const Region& r);

struct ChainResult {
    LegalPath path;
    bool confined = true;   // discrepancy confinement held at every step
    std::size_t bound = 0;  // 2 * sum |regions|
};
ChainResult chain_schedule(const Configuration& cfg, const UpdateFamily& fam, const std::vector<Region>& regions);

// Empties Sl_{j+direction}(block; axis) given Sl_j empty and the target slice
// (k-1)-internally spanned.
LegalPath slice_schedule(const Configuration& cfg, const UpdateFamily& fam, const SubBox& block, int axis, int j,
                         int direction);

// Empties the cross at y (within the block) given the cross at x empty; y adjacent to x.
LegalPath cross_schedule(const Configuration& cfg, const UpdateFamily& fam, const SubBox& block, const Coord& x,
                         const Coord& y);

enum class ColumnMove { obs1, obs2 };

// Column moves for the GG family on a two-dimensional box. `pair` is the
// left column of an empty adjacent pair of columns; `side` is +1 (targets to
// the right) or -1 (to the left). obs1 empties the single adjacent column
// (which must contain an empty site); obs2 empties the next two columns, seeded
// by the two sites just above them in row rows_end. Rows [rows_begin, rows_end).
LegalPath gg_column_moves(const Configuration& cfg, ColumnMove variant, int pair, int side, int rows_begin, int rows_end);

// Two-block geometry for path_B: V at the origin, V' = V + n_axis e_axis.
Geometry path_B_geometry(const BlockSpec& spec, int axis);
// Geometry for path_A: twice the block in every direction; V at the origin,
// neighbour blocks V + n_i e_i.
Geometry path_A_geometry(const BlockSpec& spec);

SubBox block_at(const BlockSpec& spec, const Coord& offset_in_blocks);
Configuration extract_block(const Configuration& cfg, const SubBox& b);
void place_block(Configuration& cfg, const SubBox& b, const Configuration& block);

// Phi applied to the block at the origin.
Configuration path_B_target(const Configuration& cfg, const BlockSpec& spec);

// Path from cfg to Phi^{(V)}(cfg); needs V good and V' supergood.
LegalPath path_B(const Configuration& cfg, const BlockSpec& spec, int axis);
// Path from cfg to cfg^z for z in V; needs every V + n_i e_i supergood.
LegalPath path_A(const Configuration& cfg, const BlockSpec& spec, const Coord& z);

// Rejection samplers for eligible inputs.
Configuration sample_good_block(const BlockSpec& spec, std::uint64_t& state, std::size_t max_attempts = 100000);
Configuration sample_supergood_block(const BlockSpec& spec, std::uint64_t& state, std::size_t max_attempts = 100000);
Configuration sample_path_B_input(const BlockSpec& spec, int axis, std::uint64_t& state);
Configuration sample_path_A_input(const BlockSpec& spec, std::uint64_t& state);

struct CongestionReport {
    double rho = 1.0;
    std::size_t n_max = 0;
    std::string mode; // "exact" or "bounded"
    std::size_t paths = 0;
};

using PathBuilder = std::function<LegalPath(const Configuration&)>;

// sup over waypoints w of sum_{starts s with w on Gamma_s} mu(s)/mu(w).
CongestionReport congestion_exact(const std::vector<Configuration>& starts, const PathBuilder& build, double q);
// Same quantity by scanning every configuration of the geometry against every path. Oracle.
double congestion_bruteforce(const std::vector<Configuration>& starts, const PathBuilder& build, double q);
// (2/q)^{max_i |L_{i-2}| + |L_{i-1}| + |L_i|} for a chain over `regions`.
double chain_congestion_bound(const std::vector<Region>& regions, double q);

// All configurations of g (at most 2^20) satisfying pred.
std::vector<Configuration> enumerate_configurations(const Geometry& g, const std::function<bool(const Configuration&)>& pred);

// Start grid, then one "index vertex new_value" line per flip.
void write_path(std::ostream& os, const LegalPath& path);
LegalPath read_path(std::istream& is);

} // namespace kcm
