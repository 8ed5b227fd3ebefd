#pragma once

#include "kcm/lattice.hpp"
#include "kcm/stats.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kcm {

// Empty-site clusters under nearest-neighbour adjacency (wrapping on a torus).
// label[v] = smallest vertex index of v's cluster, -1 for occupied sites.
struct ClusterLabels {
    std::vector<std::int64_t> label;
    std::size_t clusters = 0;
};

ClusterLabels find_clusters(const Configuration& cfg);
// Flood-fill reference implementation.
ClusterLabels find_clusters_bfs(const Configuration& cfg);

constexpr int ladder_length(int n) { return 1 << n; }

// Dyadic rectangles in d = 2. R_n is ell_n x ell_{n-1} for even n and
// ell_{n-1} x ell_n for odd n. R^(1)_n + x has its lowest-leftmost vertex at
// x + e_2; R^(2)_n + x is its mirror image through the diagonal, anchored at x + e_1.
struct RectangleLadder {
    int n_max = 1;

    static std::vector<int> dims(int n);
    static SubBox rectangle(const Coord& x, int n, int i);
};

// True iff an all-empty nearest-neighbour path inside rect joins its two
// faces orthogonal to `axis`; axis = -1 picks the long axis (axis 0 for squares).
bool has_hard_crossing(const Configuration& cfg, const SubBox& rect, int axis = -1);

enum class SurrogateMode {
    oriented,     // both x + e_1 and x + e_2
    all_neighbors // at least two of the 2d neighbours
};

std::string to_string(SurrogateMode m);
SurrogateMode surrogate_mode_from_string(const std::string& s);

// Finite stand-in for "at least two neighbours of x in an infinite cluster of
// zeros": the neighbours' clusters, computed inside the box of radius R around
// x, must reach the boundary of that box. Nonincreasing in R.
bool c_infty_surrogate(const Configuration& cfg, const Coord& x, int R, SurrogateMode mode = SurrogateMode::all_neighbors);

// omega_{x+e1} = omega_{x+e2} = 0.
bool c_zero(const Configuration& cfg, const Coord& x);
// c^(n,i)_x: hard crossing of R^(i)_n + x along its long side.
bool c_crossing(const Configuration& cfg, const Coord& x, int n, int i);
// c^(0)_x times the crossings for n = 1..k, i = 1, 2.
bool ladder_constraint(const Configuration& cfg, const Coord& x, int k);

struct CrossingPoint {
    int n = 0;
    int ell = 0;
    ScanEstimate failure; // flag "zero_failures" when no failure was observed
};

struct CrossingReport {
    double p = 0.0;
    std::vector<CrossingPoint> points;
    double m_hat = 0.0;    // slope of -log(failure) against ell_n; NaN if unavailable
    double m_hat_se = 0.0;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
};

// p is the occupation probability (q = 1 - p). Each replica samples one
// configuration keyed by lattice position, so all rectangles of a replica are
// coupled. The fit uses every n with 0 < failures < replicas.
CrossingReport estimate_crossing_failure(const std::vector<int>& n_values, double p, std::size_t replicas,
                                         std::uint64_t seed, unsigned threads = 0);
CrossingReport estimate_crossing_failure(int n, double p, std::size_t replicas, std::uint64_t seed, unsigned threads = 0);

struct SeriesCheck {
    double value = 0.0;         // 3 * (partial sum + tail bound) + 4 sqrt(p)
    double partial_sum = 0.0;   // sum_{n=1}^{terms} 8^n exp(-m ell_n / 2)
    double tail_bound = 0.0;
    int terms = 0;
};

// Evaluates 3 sum_n 2^n 4^n exp(-m ell_n / 2) + 4 sqrt(p). Terms are added
// until the ratio 8 exp(-m ell_n / 2) is below 1/2 and the geometric tail bound
// is below tail_tol; throws std::runtime_error if that does not happen by n_truncate.
SeriesCheck supercritical_condition_check(double p, double m_hat, int n_truncate = 64, double tail_tol = 1e-12);

} // namespace kcm
