#pragma once

#include "kcm/lattice.hpp"
#include "kcm/stats.hpp"
#include "kcm/update_family.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kcm {

enum class BlockModel { fa2, fakf, gg };

std::string to_string(BlockModel m);
BlockModel block_model_from_string(const std::string& s);

struct BlockSpec {
    BlockModel model = BlockModel::fa2;
    int d = 2;
    int k = 2;              // fakf only
    std::vector<int> dims;  // block sides; gg: {n1, n2}
    double q = 0.1;
    double A = 1.0;

    void validate() const;
    Geometry geometry() const { return Geometry::box(dims); }
    UpdateFamily family() const;
};

enum class BlockClass { neither = 0, good = 1, supergood = 2 };
std::string to_string(BlockClass c);

struct BlockDims {
    std::vector<int> dims;
    std::vector<std::string> flags; // "degenerate", "A_out_of_range"
};

// Block sides from the model's formula. ell is the critical length of the
// (d-1)-dimensional FA-(k-1)f model and is only used for fakf.
BlockDims block_dims(BlockModel model, int d, double q, double A, double ell = 0.0);

// Sites emptied by Phi: fa2 the edges through the corner, fakf the first
// slice in each direction, gg the first two columns.
Region phi_zero_set(const BlockSpec& spec);

BlockClass classify_block(const Configuration& block, const BlockSpec& spec);
bool is_good(const Configuration& block, const BlockSpec& spec);

// Empties phi_zero_set. Throws std::invalid_argument when the block is not good.
Configuration phi_map(const Configuration& block, const BlockSpec& spec);

struct LambdaPhi {
    double value = 0.0;
    double log_value = 0.0;
    bool exact = false;
};

constexpr std::size_t max_lambda_vertices = 16;

LambdaPhi lambda_phi_exact(const BlockSpec& spec);
LambdaPhi lambda_phi_bound(const BlockSpec& spec);
// Exact when the block has at most max_lambda_vertices sites, bound otherwise.
LambdaPhi lambda_phi(const BlockSpec& spec);
// Pairwise enumeration over (sigma, sigma'). Oracle for tiny blocks.
double lambda_phi_bruteforce(const BlockSpec& spec);

struct ExactBlockProbs {
    double p1 = 0.0;
    double p2 = 0.0;
};
constexpr std::size_t max_exact_block_vertices = 20;
ExactBlockProbs exact_block_probs(const BlockSpec& spec);

// Lower bound on log p2: fa2 nd log q; fakf and gg log p1 + |Z| log q (both
// events increasing in the empty set, so Harris-FKG applies).
double log_p2_lower_bound(const BlockSpec& spec, double p1);

// Upper bound on 1 - p1 for fa2: d n (1-q)^{n^{d-1}}.
double fa2_failure_bound(const BlockSpec& spec);

struct BlockReport {
    BlockSpec spec;
    ScanEstimate p1;
    ScanEstimate p2_mc;
    double log_p2 = 0.0;
    std::string p2_mode; // "exact" or "bound"
    LambdaPhi lambda;
    double condition_value = 0.0; // (1 - p1) * log(1/p2)^2, natural log
    std::vector<std::string> flags;
};

BlockReport estimate_block_probs(const BlockSpec& spec, std::size_t replicas, std::uint64_t seed, unsigned threads = 0);

// One term per non-empty index set I: weight lambda_I, failure probability
// eps_I, and overlap_I = #{x : x or Delta_x^I contains z} (translation invariant).
struct KeyConditionTerm {
    double lambda = 1.0;
    double epsilon = 0.0;
    double overlap = 1.0;
};

// (sum lambda_I) * sum_I eps_I overlap_I / lambda_I. The theorem's statement
// carries an extra factor 2; statement_form = true includes it.
double key_condition_value(const std::vector<KeyConditionTerm>& terms, bool statement_form = false);

} // namespace kcm
