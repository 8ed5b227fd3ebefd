#include "kcm/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kcm {

bool ScanEstimate::has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
    if (n == 0) throw std::invalid_argument("wilson_interval: n must be positive");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    double lo = std::max(0.0, centre - half);
    double hi = std::min(1.0, centre + half);
    if (k == 0) lo = 0.0;
    if (k == n) hi = 1.0;
    return {std::min(lo, p), std::max(hi, p)};
}

ScanEstimate binomial_estimate(std::size_t k, std::size_t n, std::uint64_t seed) {
    const auto [lo, hi] = wilson_interval(k, n);
    return ScanEstimate{static_cast<double>(k) / static_cast<double>(n), lo, hi, n, seed, {}};
}

Summary summarize(std::vector<double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    s.median = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
    return s;
}

std::pair<std::size_t, std::size_t> median_rank_interval(std::size_t n, double z) {
    if (n == 0) throw std::invalid_argument("median_rank_interval: n must be positive");
    const double nn = static_cast<double>(n);
    const double half = 0.5 * z * std::sqrt(nn);
    const double lo = std::floor(0.5 * nn - half);
    const double hi = std::ceil(0.5 * nn + half);
    return {static_cast<std::size_t>(std::max(0.0, lo - 1.0)), static_cast<std::size_t>(std::min(nn - 1.0, hi))};
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size()) throw std::invalid_argument("weighted_linear_fit: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("weighted_linear_fit: need at least two points");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sw = std::sqrt(w[static_cast<std::size_t>(i)]);
        A(i, 0) = sw;
        A(i, 1) = sw * x[static_cast<std::size_t>(i)];
        b(i) = sw * y[static_cast<std::size_t>(i)];
    }
    const Eigen::Matrix2d normal = A.transpose() * A;
    const Eigen::Vector2d coef = normal.ldlt().solve(A.transpose() * b);
    LinearFit fit;
    fit.intercept = coef(0);
    fit.slope = coef(1);
    fit.points = x.size();
    const Eigen::Matrix2d cov = normal.inverse();
    fit.slope_se = std::sqrt(std::max(0.0, cov(1, 1)));
    return fit;
}

} // namespace kcm
