#pragma once

#include "kcm/lattice.hpp"
#include "kcm/stats.hpp"
#include "kcm/update_family.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace kcm {

// Least fixed point of the bootstrap map (work queue with per-rule counters).
Configuration closure(const Configuration& cfg, const UpdateFamily& fam, OutsideMode mode = OutsideMode::occupied);
Configuration closure(const Configuration& cfg, const CompiledFamily& cf);

// Same fixed point; only vertices with allowed[v] != 0 may be emptied.
Configuration restricted_closure(const Configuration& cfg, const CompiledFamily& cf, const std::vector<std::uint8_t>& allowed);

// Full-rescan synchronous iteration. Test oracle only.
Configuration closure_naive(const Configuration& cfg, const UpdateFamily& fam, OutsideMode mode = OutsideMode::occupied);

// Synchronous rounds: element t-1 holds the vertices emptied in round t,
// sorted. Only vertices in `allowed` (all when null) are eligible.
std::vector<std::vector<Vertex>> closure_rounds(const Configuration& cfg, const CompiledFamily& cf,
                                                const std::vector<std::uint8_t>* allowed = nullptr);

// Closure computed inside r only: sites outside r count as occupied and never flip.
bool is_internally_spanned(const Configuration& cfg, const UpdateFamily& fam, const Region& r);

std::optional<int> infection_time(const Configuration& cfg, const UpdateFamily& fam, Vertex x,
                                  OutsideMode mode = OutsideMode::occupied);

bool spans(const Configuration& cfg, const CompiledFamily& cf);

struct ScanOptions {
    unsigned threads = 0;
};

ScanEstimate estimate_span_probability(int n, const UpdateFamily& fam, double q, std::size_t replicas,
                                       std::uint64_t seed, ScanOptions opt = {});

// value = empirical 1/2-crossing of the coupled spanning curve; ci_lo/ci_hi a
// 95% order-statistic interval. bracket holds the tol-wide bisection bracket.
struct QcEstimate {
    ScanEstimate estimate;
    double bracket_lo = 0.0;
    double bracket_hi = 1.0;
    std::vector<double> thresholds; // per-replica upper bracket ends, sorted
};

QcEstimate estimate_qc(int n, const UpdateFamily& fam, double tol, std::size_t replicas, std::uint64_t seed,
                       ScanOptions opt = {});

// value = smallest n with estimated span probability >= 1/2 (doubling then
// bisection); ci from the Wilson bounds; flag "censored" when n_max is reached.
ScanEstimate estimate_lc(double q, const UpdateFamily& fam, int n_max, std::size_t replicas, std::uint64_t seed,
                         ScanOptions opt = {});

struct CurvePoint {
    int L = 0;
    ScanEstimate p;
};

// Internal spanning of the free box [L]^d, sampled with position-keyed uniforms
// so that the boxes for different L are nested.
std::vector<CurvePoint> spanning_probability_curve(const std::vector<int>& L_values, const UpdateFamily& fam, double q,
                                                   std::size_t replicas, std::uint64_t seed, ScanOptions opt = {});

} // namespace kcm
