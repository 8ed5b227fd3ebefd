#include "kcm/spectral.hpp"
#include "kcm/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace kcm {

bool GeneratorMatrix::constraint(std::uint32_t state, Vertex x) const noexcept {
    for (const auto m : rule_masks[x])
        if ((state & m) == 0) return true;
    return false;
}

std::ptrdiff_t GeneratorMatrix::index_of(std::uint32_t state) const noexcept {
    const auto it = std::lower_bound(states.begin(), states.end(), state);
    if (it == states.end() || *it != state) return -1;
    return it - states.begin();
}

std::uint32_t state_mask(const Configuration& cfg) {
    if (cfg.size() > static_cast<std::size_t>(max_spectral_vertices)) throw std::invalid_argument("configuration too large for a state mask");
    std::uint32_t m = 0;
    for (Vertex v = 0; v < cfg.size(); ++v)
        if (cfg[v]) m |= 1u << v;
    return m;
}

Configuration state_configuration(const Geometry& g, std::uint32_t mask) {
    Configuration c(g, 0);
    for (Vertex v = 0; v < g.volume(); ++v) c.set(v, (mask >> v) & 1u);
    return c;
}

GeneratorMatrix build_generator(const Geometry& g, const UpdateFamily& fam, double q, OutsideMode mode) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("build_generator requires 0 < q < 1");
    const std::size_t n = g.volume();
    if (n > static_cast<std::size_t>(max_spectral_vertices))
        throw std::length_error("state space cap exceeded: " + std::to_string(n) + " vertices > " +
                                std::to_string(max_spectral_vertices));
    GeneratorMatrix gm;
    gm.geometry = g;
    gm.fam = fam;
    gm.q = q;
    const CompiledFamily cf(g, fam, mode);
    const int width = static_cast<int>(std::max<std::size_t>(fam.max_rule_size(), 1));
    gm.rule_masks.resize(n);
    for (Vertex x = 0; x < n; ++x) {
        for (int k = 0; k < static_cast<int>(fam.size()); ++k) {
            if (!cf.usable(x, k)) continue;
            std::uint32_t m = 0;
            const auto* t = cf.targets(x, k);
            for (int j = 0; j < width; ++j)
                if (t[j] >= 0) m |= 1u << t[j];
            gm.rule_masks[x].push_back(m);
        }
    }

    // Breadth-first search over legal flips from the all-empty state.
    const std::size_t full = std::size_t{1} << n;
    std::vector<std::uint8_t> seen(full, 0);
    std::deque<std::uint32_t> frontier{0u};
    seen[0] = 1;
    while (!frontier.empty()) {
        const auto s = frontier.front();
        frontier.pop_front();
        gm.states.push_back(s);
        for (Vertex x = 0; x < n; ++x) {
            if (!gm.constraint(s, x)) continue;
            const auto t = s ^ (1u << x);
            if (!seen[t]) {
                seen[t] = 1;
                frontier.push_back(t);
            }
        }
    }
    std::sort(gm.states.begin(), gm.states.end());
    const std::size_t N = gm.states.size();

    const double p = 1.0 - q;
    const double lp = std::log(p), lq = std::log(q);
    std::vector<double> logw(N);
    double lmax = -INFINITY;
    for (std::size_t i = 0; i < N; ++i) {
        const int occ = std::popcount(gm.states[i]);
        logw[i] = occ * lp + (static_cast<int>(n) - occ) * lq;
        lmax = std::max(lmax, logw[i]);
    }
    gm.mu.resize(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) gm.mu[static_cast<Eigen::Index>(i)] = std::exp(logw[i] - lmax);
    gm.mu /= gm.mu.sum();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(N * (n + 1));
    for (std::size_t i = 0; i < N; ++i) {
        const auto s = gm.states[i];
        double out = 0.0;
        for (Vertex x = 0; x < n; ++x) {
            if (!gm.constraint(s, x)) continue;
            const auto j = gm.index_of(s ^ (1u << x));
            const double r = ((s >> x) & 1u) ? q : p;
            trip.emplace_back(static_cast<int>(i), static_cast<int>(j), r);
            out += r;
        }
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), -out);
    }
    gm.rates.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    gm.rates.setFromTriplets(trip.begin(), trip.end());
    gm.rates.makeCompressed();
    return gm;
}

double reversibility_defect(const GeneratorMatrix& gm) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < gm.rates.outerSize(); ++i) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gm.rates, i); it; ++it) {
            const Eigen::Index j = it.col();
            if (j == i) continue;
            worst = std::max(worst, std::abs(gm.mu[i] * it.value() - gm.mu[j] * gm.rates.coeff(j, i)));
        }
    }
    return worst;
}

namespace {

// S = D^{1/2} (-L) D^{-1/2}; symmetric because of reversibility.
Eigen::SparseMatrix<double, Eigen::RowMajor> symmetrized(const GeneratorMatrix& gm) {
    Eigen::SparseMatrix<double, Eigen::RowMajor> S = gm.rates;
    for (Eigen::Index i = 0; i < S.outerSize(); ++i) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(S, i); it; ++it) {
            const Eigen::Index j = it.col();
            if (j == i) it.valueRef() = -it.value();
            else it.valueRef() = -std::sqrt(it.value() * gm.rates.coeff(j, i));
        }
    }
    return S;
}

} // namespace

SpectralGap spectral_gap(const GeneratorMatrix& gm) {
    SpectralGap out;
    const Eigen::Index N = static_cast<Eigen::Index>(gm.size());
    if (N < 2) {
        out.degenerate = true;
        out.gap = 0.0;
        out.t_rel = INFINITY;
        return out;
    }
    const auto S = symmetrized(gm);
    const Eigen::VectorXd phi0 = gm.mu.cwiseSqrt();
    const Eigen::Index m = std::min<Eigen::Index>(N - 1, 60);
    constexpr int max_restarts = 500;
    const double scale = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());

    Eigen::VectorXd v(N);
    SplitMix64 rng(0x1a2c'3e4fULL);
    for (Eigen::Index i = 0; i < N; ++i) v[i] = rng.uniform() - 0.5;

    Eigen::MatrixXd V(N, m + 1);
    double theta = 0.0;
    Eigen::VectorXd ritz;
    for (int restart = 0; restart < max_restarts; ++restart) {
        v -= phi0.dot(v) * phi0;
        v.normalize();
        V.col(0) = v;
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m), beta = Eigen::VectorXd::Zero(m);
        Eigen::Index k_used = m;
        bool invariant = false;
        for (Eigen::Index k = 0; k < m; ++k) {
            Eigen::VectorXd w = S * V.col(k);
            alpha[k] = V.col(k).dot(w);
            for (int pass = 0; pass < 2; ++pass) {
                w -= phi0.dot(w) * phi0;
                w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
            }
            beta[k] = w.norm();
            if (beta[k] < 1e-13 * scale) {
                k_used = k + 1;
                invariant = true;
                break;
            }
            V.col(k + 1) = w / beta[k];
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k_used, k_used);
        for (Eigen::Index k = 0; k < k_used; ++k) {
            T(k, k) = alpha[k];
            if (k + 1 < k_used) T(k, k + 1) = T(k + 1, k) = beta[k];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        theta = es.eigenvalues()[0];
        const Eigen::VectorXd s = es.eigenvectors().col(0);
        ritz = V.leftCols(k_used) * s;
        out.residual = invariant ? 0.0 : std::abs(beta[k_used - 1] * s[k_used - 1]);
        out.restarts = restart + 1;
        if (invariant || out.residual < 1e-11 * scale) break;
        v = ritz;
    }
    ritz -= phi0.dot(ritz) * phi0;
    ritz.normalize();
    out.gap = theta;
    out.t_rel = 1.0 / theta;
    out.degenerate = !(theta >= 1e-12);
    // Back to an eigenfunction of -L: f = D^{-1/2} v, with sum mu f^2 = 1.
    out.eigenvector = ritz.cwiseQuotient(phi0);
    return out;
}

double relaxation_time(const GeneratorMatrix& gm) { return spectral_gap(gm).t_rel; }

Eigen::VectorXd dense_spectrum(const GeneratorMatrix& gm) {
    if (gm.size() > (std::size_t{1} << 14)) throw std::length_error("dense oracle limited to 2^14 states");
    const Eigen::MatrixXd S = Eigen::MatrixXd(symmetrized(gm));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

DirichletVariance dirichlet_and_variance(const GeneratorMatrix& gm, const Eigen::VectorXd& f) {
    if (f.size() != static_cast<Eigen::Index>(gm.size())) throw std::invalid_argument("f has the wrong dimension");
    DirichletVariance r;
    const double mean = gm.mu.dot(f);
    r.variance = gm.mu.dot((f.array() - mean).square().matrix());
    const double pq = gm.q * (1.0 - gm.q);
    const std::size_t n = gm.geometry.volume();
    double d = 0.0;
    for (std::size_t i = 0; i < gm.size(); ++i) {
        const auto s = gm.states[i];
        double local = 0.0;
        for (Vertex x = 0; x < n; ++x) {
            if (!gm.constraint(s, x)) continue;
            const auto j = gm.index_of(s ^ (1u << x));
            const double diff = f[static_cast<Eigen::Index>(j)] - f[static_cast<Eigen::Index>(i)];
            local += pq * diff * diff;
        }
        d += gm.mu[static_cast<Eigen::Index>(i)] * local;
    }
    r.dirichlet = d;
    const Eigen::VectorXd Lf = gm.rates * f;
    r.dirichlet_quadratic = -gm.mu.dot(f.cwiseProduct(Lf));
    return r;
}

double poincare_ratio(const GeneratorMatrix& gm, const std::vector<Eigen::VectorXd>& fs) {
    double best = 0.0;
    for (const auto& f : fs) {
        const auto dv = dirichlet_and_variance(gm, f);
        const double mean = gm.mu.dot(f);
        if (dv.variance <= 1e-24 * std::max(1.0, mean * mean)) throw std::invalid_argument("poincare_ratio: f is constant on the class");
        if (dv.dirichlet <= 1e-14 * dv.variance)
            throw std::logic_error("poincare_ratio: zero Dirichlet form with positive variance (reducible class)");
        best = std::max(best, dv.variance / dv.dirichlet);
    }
    return best;
}

} // namespace kcm
