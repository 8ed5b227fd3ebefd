#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace kcm {

struct ScanEstimate {
    double value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
    double half_width() const noexcept { return 0.5 * (ci_hi - ci_lo); }
};

constexpr double z95 = 1.959963984540054;

// Wilson score interval for k successes out of n trials.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = z95);
ScanEstimate binomial_estimate(std::size_t k, std::size_t n, std::uint64_t seed);

struct Summary {
    double mean = 0.0;
    double std_error = 0.0;
    double median = 0.0;
    std::size_t count = 0;
};

Summary summarize(std::vector<double> values);

// Distribution-free 95% interval for the median from order statistics; returns ranks (0-based).
std::pair<std::size_t, std::size_t> median_rank_interval(std::size_t n, double z = z95);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    std::size_t points = 0;
};

// Weighted least squares y = a + b x with weights w_i = 1/var_i.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w);

} // namespace kcm
