#pragma once

#include "kcm/lattice.hpp"
#include "kcm/update_family.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <vector>

namespace kcm {

// Generator of the KCM restricted to the irreducible class of the all-empty
// configuration. A state is a bit mask: bit v set iff vertex v is occupied.
struct GeneratorMatrix {
    Geometry geometry;
    UpdateFamily fam;
    double q = 0.5;
    std::vector<std::uint32_t> states;                      // sorted
    Eigen::SparseMatrix<double, Eigen::RowMajor> rates;     // L, rows sum to zero
    Eigen::VectorXd mu;                                     // conditioned on the class
    std::vector<std::vector<std::uint32_t>> rule_masks;     // per vertex: rule satisfied iff (state & mask) == 0

    std::size_t size() const noexcept { return states.size(); }
    bool constraint(std::uint32_t state, Vertex x) const noexcept;
    // -1 when the state is not in the class.
    std::ptrdiff_t index_of(std::uint32_t state) const noexcept;
};

constexpr int max_spectral_vertices = 24;

GeneratorMatrix build_generator(const Geometry& g, const UpdateFamily& fam, double q,
                                OutsideMode mode = OutsideMode::occupied);

std::uint32_t state_mask(const Configuration& cfg);
Configuration state_configuration(const Geometry& g, std::uint32_t mask);

// max over entries of |mu_i L_ij - mu_j L_ji|.
double reversibility_defect(const GeneratorMatrix& gm);

struct SpectralGap {
    double gap = 0.0;
    double t_rel = 0.0;
    Eigen::VectorXd eigenvector; // eigenfunction of -L for the gap, normalized in L2(mu)
    bool degenerate = false;     // gap < 1e-12 or class has a single state
    int restarts = 0;
    double residual = 0.0;
};

// Restarted Lanczos with full reorthogonalization on the sqrt(mu)-symmetrized
// generator, deflating the stationary vector.
SpectralGap spectral_gap(const GeneratorMatrix& gm);
double relaxation_time(const GeneratorMatrix& gm);

// All eigenvalues of -L, ascending, by dense diagonalization. Oracle; at most 2^14 states.
Eigen::VectorXd dense_spectrum(const GeneratorMatrix& gm);

struct DirichletVariance {
    double dirichlet = 0.0;           // sum_x mu(c_x Var_x f)
    double dirichlet_quadratic = 0.0; // <f, -L f>_mu
    double variance = 0.0;
};

DirichletVariance dirichlet_and_variance(const GeneratorMatrix& gm, const Eigen::VectorXd& f);

// max Var(f)/D(f). Throws std::logic_error when D(f) vanishes for a non-constant f.
double poincare_ratio(const GeneratorMatrix& gm, const std::vector<Eigen::VectorXd>& fs);

} // namespace kcm
