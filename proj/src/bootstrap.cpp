#include "kcm/bootstrap.hpp"
#include "kcm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace kcm {

namespace {

constexpr std::int32_t never = std::numeric_limits<std::int32_t>::max();

std::vector<std::int32_t> initial_counters(const std::uint8_t* bits, const CompiledFamily& cf) {
    const auto m = static_cast<std::size_t>(cf.rules());
    std::vector<std::int32_t> counter(cf.volume() * m, 0);
    for (Vertex x = 0; x < cf.volume(); ++x)
        for (int k = 0; k < cf.rules(); ++k) {
            auto& c = counter[x * m + static_cast<std::size_t>(k)];
            if (!cf.usable(x, k)) {
                c = never;
                continue;
            }
            const std::int32_t* t = cf.targets(x, k);
            for (int j = 0; j < cf.width() && t[j] >= 0; ++j) c += bits[t[j]];
        }
    return counter;
}

void check_match(const Configuration& cfg, const CompiledFamily& cf) {
    if (cfg.size() != cf.volume()) throw std::invalid_argument("configuration does not match compiled family");
}

} // namespace

Configuration restricted_closure(const Configuration& cfg, const CompiledFamily& cf, const std::vector<std::uint8_t>& allowed) {
    check_match(cfg, cf);
    const bool all = allowed.empty();
    if (!all && allowed.size() != cfg.size()) throw std::invalid_argument("allowed mask size mismatch");
    std::vector<std::uint8_t> bits = cfg.bits();
    auto counter = initial_counters(bits.data(), cf);
    const auto m = static_cast<std::size_t>(cf.rules());
    std::vector<Vertex> stack;
    std::vector<std::uint8_t> queued(bits.size(), 0);
    for (Vertex x = 0; x < bits.size(); ++x) {
        if (!bits[x] || (!all && !allowed[x])) continue;
        for (std::size_t k = 0; k < m; ++k)
            if (counter[x * m + k] == 0) {
                stack.push_back(x);
                queued[x] = 1;
                break;
            }
    }
    while (!stack.empty()) {
        const Vertex y = stack.back();
        stack.pop_back();
        bits[y] = 0;
        for (const std::uint32_t* it = cf.dependents_begin(y); it != cf.dependents_end(y); ++it) {
            if (--counter[*it] != 0) continue;
            const Vertex x = *it / m;
            if (bits[x] && !queued[x] && (all || allowed[x])) {
                queued[x] = 1;
                stack.push_back(x);
            }
        }
    }
    return Configuration(cfg.geometry(), std::move(bits));
}

Configuration closure(const Configuration& cfg, const CompiledFamily& cf) { return restricted_closure(cfg, cf, {}); }

Configuration closure(const Configuration& cfg, const UpdateFamily& fam, OutsideMode mode) {
    return closure(cfg, CompiledFamily(cfg.geometry(), fam, mode));
}

Configuration closure_naive(const Configuration& cfg, const UpdateFamily& fam, OutsideMode mode) {
    Configuration cur = cfg;
    while (true) {
        std::vector<Vertex> fire;
        for (Vertex x = 0; x < cur.size(); ++x)
            if (!cur.is_empty(x) && constraint_satisfied(cur, fam, x, mode)) fire.push_back(x);
        if (fire.empty()) return cur;
        for (Vertex x : fire) cur.set(x, 0);
    }
}

std::vector<std::vector<Vertex>> closure_rounds(const Configuration& cfg, const CompiledFamily& cf,
                                                const std::vector<std::uint8_t>* allowed) {
    check_match(cfg, cf);
    auto ok = [&](Vertex x) { return allowed == nullptr || (*allowed)[x] != 0; };
    std::vector<std::uint8_t> bits = cfg.bits();
    auto counter = initial_counters(bits.data(), cf);
    const auto m = static_cast<std::size_t>(cf.rules());
    std::vector<std::uint8_t> marked(bits.size(), 0);
    std::vector<Vertex> next;
    for (Vertex x = 0; x < bits.size(); ++x) {
        if (!bits[x] || !ok(x)) continue;
        for (std::size_t k = 0; k < m; ++k)
            if (counter[x * m + k] == 0) {
                next.push_back(x);
                marked[x] = 1;
                break;
            }
    }
    std::vector<std::vector<Vertex>> rounds;
    while (!next.empty()) {
        std::sort(next.begin(), next.end());
        rounds.push_back(next);
        next.clear();
        for (Vertex y : rounds.back()) bits[y] = 0;
        for (Vertex y : rounds.back())
            for (const std::uint32_t* it = cf.dependents_begin(y); it != cf.dependents_end(y); ++it) {
                if (--counter[*it] != 0) continue;
                const Vertex x = *it / m;
                if (bits[x] && !marked[x] && ok(x)) {
                    marked[x] = 1;
                    next.push_back(x);
                }
            }
    }
    return rounds;
}

bool is_internally_spanned(const Configuration& cfg, const UpdateFamily& fam, const Region& r) {
    const Geometry& g = cfg.geometry();
    const auto mask = region_mask(g, r);
    std::vector<std::uint8_t> bits(cfg.size(), 1);
    for (Vertex v : r) bits[v] = cfg[v];
    const Configuration inside(g, std::move(bits));
    const Configuration closed = restricted_closure(inside, CompiledFamily(g, fam, OutsideMode::occupied), mask);
    for (Vertex v : r)
        if (!closed.is_empty(v)) return false;
    return true;
}

std::optional<int> infection_time(const Configuration& cfg, const UpdateFamily& fam, Vertex x, OutsideMode mode) {
    if (x >= cfg.size()) throw std::out_of_range("infection_time: vertex out of bounds");
    if (cfg.is_empty(x)) return 0;
    const auto rounds = closure_rounds(cfg, CompiledFamily(cfg.geometry(), fam, mode));
    for (std::size_t t = 0; t < rounds.size(); ++t)
        if (std::binary_search(rounds[t].begin(), rounds[t].end(), x)) return static_cast<int>(t + 1);
    return std::nullopt;
}

bool spans(const Configuration& cfg, const CompiledFamily& cf) { return closure(cfg, cf).count_empty() == cfg.size(); }

ScanEstimate estimate_span_probability(int n, const UpdateFamily& fam, double q, std::size_t replicas,
                                       std::uint64_t seed, ScanOptions opt) {
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in [0,1]");
    const Geometry g = Geometry::torus(fam.d, n);
    const CompiledFamily cf(g, fam);
    std::vector<std::uint8_t> hit(replicas, 0);
    parallel_for(replicas, opt.threads, [&](std::size_t r) { hit[r] = spans(random_configuration(g, q, seed, r), cf); });
    const auto k = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), std::uint8_t{1}));
    return binomial_estimate(k, replicas, seed);
}

QcEstimate estimate_qc(int n, const UpdateFamily& fam, double tol, std::size_t replicas, std::uint64_t seed, ScanOptions opt) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    const Geometry g = Geometry::torus(fam.d, n);
    const CompiledFamily cf(g, fam);
    std::vector<double> lo(replicas, 0.0), hi(replicas, 1.0);
    std::vector<std::uint8_t> broken(replicas, 0);
    parallel_for(replicas, opt.threads, [&](std::size_t r) {
        const auto u = vertex_uniforms(g, seed, r);
        double a = 0.0, b = 1.0;
        if (spans(threshold_configuration(g, u, 0.0), cf)) b = 0.0;
        while (b - a > tol) {
            const double mid = 0.5 * (a + b);
            if (spans(threshold_configuration(g, u, mid), cf)) b = mid;
            else a = mid;
        }
        lo[r] = a;
        hi[r] = b;
        // Coupled monotonicity check at the bracket ends.
        if (b > 0.0 && spans(threshold_configuration(g, u, a), cf)) broken[r] = 1;
        if (!spans(threshold_configuration(g, u, b), cf)) broken[r] = 1;
    });
    QcEstimate out;
    std::vector<std::size_t> order(replicas);
    for (std::size_t r = 0; r < replicas; ++r) order[r] = r;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return hi[a] < hi[b]; });
    const std::size_t m = (replicas + 1) / 2 - 1; // P̂(q) >= 1/2 first at the ceil(R/2)-th threshold
    out.bracket_lo = lo[order[m]];
    out.bracket_hi = hi[order[m]];
    const auto [rl, rh] = median_rank_interval(replicas);
    out.estimate.value = 0.5 * (out.bracket_lo + out.bracket_hi);
    out.estimate.ci_lo = std::min(out.estimate.value, lo[order[rl]]);
    out.estimate.ci_hi = std::max(out.estimate.value, hi[order[rh]]);
    out.estimate.replicas = replicas;
    out.estimate.seed = seed;
    if (std::any_of(broken.begin(), broken.end(), [](std::uint8_t b) { return b != 0; }))
        out.estimate.flags.push_back("non_monotone");
    out.thresholds.reserve(replicas);
    for (std::size_t r : order) out.thresholds.push_back(hi[r]);
    return out;
}

ScanEstimate estimate_lc(double q, const UpdateFamily& fam, int n_max, std::size_t replicas, std::uint64_t seed, ScanOptions opt) {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in (0,1]");
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    std::map<int, ScanEstimate> cache;
    auto at = [&](int n) -> const ScanEstimate& {
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, estimate_span_probability(n, fam, q, replicas, seed, opt)).first;
        return it->second;
    };
    // Smallest n in [1, n_max] with pred(n), assuming pred is eventually true; n_max + 1 if never.
    // Tiny tori are not monotone (on side 2 opposite neighbours coincide), so the
    // doubling phase stops only once pred holds at n and 2n.
    auto search = [&](auto pred) {
        int prev = 0, n = 1;
        while (n < n_max && !(pred(at(n)) && pred(at(std::min(2 * n, n_max))))) {
            if (!pred(at(n))) prev = n;
            n = std::min(2 * n, n_max);
        }
        if (!pred(at(n))) return n_max + 1;
        int a = prev, b = n; // pred false at a (or a == 0), true at b
        while (b - a > 1) {
            const int mid = a + (b - a) / 2;
            if (pred(at(mid))) b = mid;
            else a = mid;
        }
        return b;
    };
    const int point = search([](const ScanEstimate& e) { return e.value >= 0.5; });
    const int early = search([](const ScanEstimate& e) { return e.ci_hi >= 0.5; });
    const int late = search([](const ScanEstimate& e) { return e.ci_lo >= 0.5; });
    ScanEstimate out;
    out.replicas = replicas;
    out.seed = seed;
    out.value = static_cast<double>(std::min(point, n_max));
    out.ci_lo = static_cast<double>(std::min({early, point, n_max}));
    out.ci_hi = static_cast<double>(std::max(std::min(late, n_max), static_cast<int>(out.value)));
    if (point > n_max) out.flags.push_back("censored");
    if (late > n_max) out.flags.push_back("ci_censored");
    return out;
}

std::vector<CurvePoint> spanning_probability_curve(const std::vector<int>& L_values, const UpdateFamily& fam, double q,
                                                   std::size_t replicas, std::uint64_t seed, ScanOptions opt) {
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    std::vector<CurvePoint> out;
    for (int L : L_values) {
        const Geometry g = Geometry::box(std::vector<int>(static_cast<std::size_t>(fam.d), L));
        const CompiledFamily cf(g, fam, OutsideMode::occupied);
        std::vector<std::uint8_t> hit(replicas, 0);
        parallel_for(replicas, opt.threads, [&](std::size_t r) { hit[r] = spans(random_configuration(g, q, seed, r), cf); });
        const auto k = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), std::uint8_t{1}));
        out.push_back(CurvePoint{L, binomial_estimate(k, replicas, seed)});
    }
    return out;
}

} // namespace kcm
