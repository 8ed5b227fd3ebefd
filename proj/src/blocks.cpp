#include "kcm/blocks.hpp"
#include "kcm/bootstrap.hpp"
#include "kcm/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace kcm {

std::string to_string(BlockModel m) {
    switch (m) {
    case BlockModel::fa2: return "fa2";
    case BlockModel::fakf: return "fakf";
    case BlockModel::gg: return "gg";
    }
    return "?";
}

BlockModel block_model_from_string(const std::string& s) {
    if (s == "fa2") return BlockModel::fa2;
    if (s == "fakf") return BlockModel::fakf;
    if (s == "gg") return BlockModel::gg;
    throw std::invalid_argument("unknown block model: " + s);
}

std::string to_string(BlockClass c) {
    switch (c) {
    case BlockClass::neither: return "neither";
    case BlockClass::good: return "good";
    case BlockClass::supergood: return "supergood";
    }
    return "?";
}

void BlockSpec::validate() const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("block q must lie in [0,1]");
    if (static_cast<int>(dims.size()) != d) throw std::invalid_argument("block dims do not match d");
    for (int n : dims)
        if (n < 1) throw std::invalid_argument("block sides must be positive");
    switch (model) {
    case BlockModel::fa2:
        if (d < 2) throw std::invalid_argument("fa2 blocks need d >= 2");
        break;
    case BlockModel::fakf:
        if (d < 2 || k < 2 || k - 1 > 2 * (d - 1)) throw std::invalid_argument("fakf blocks need d >= 2 and 2 <= k <= 2d-1");
        break;
    case BlockModel::gg:
        if (d != 2) throw std::invalid_argument("gg blocks are two-dimensional");
        if (dims[0] < 2) throw std::invalid_argument("gg blocks need at least two columns");
        break;
    }
}

UpdateFamily BlockSpec::family() const {
    switch (model) {
    case BlockModel::fa2: return fa_kf(d, 2);
    case BlockModel::fakf: return fa_kf(d, k);
    case BlockModel::gg: return gg();
    }
    throw std::logic_error("unreachable");
}

BlockDims block_dims(BlockModel model, int d, double q, double A, double ell) {
    if (!(q > 0.0 && q < 1.0)) {
        BlockDims out;
        out.dims.assign(static_cast<std::size_t>(model == BlockModel::gg ? 2 : d), 0);
        out.flags.push_back("degenerate");
        return out;
    }
    BlockDims out;
    const double L = std::log(1.0 / q);
    switch (model) {
    case BlockModel::fa2: {
        if (d < 2) throw std::invalid_argument("fa2 blocks need d >= 2");
        const double n = std::pow(A / q * L, 1.0 / (d - 1));
        out.dims.assign(static_cast<std::size_t>(d), static_cast<int>(std::floor(n)));
        if (!(A > 3.0 / (d - 1))) out.flags.push_back("A_out_of_range");
        break;
    }
    case BlockModel::fakf: {
        if (!(ell > 1.0)) throw std::invalid_argument("fakf block sizing needs a critical length ell > 1");
        out.dims.assign(static_cast<std::size_t>(d), static_cast<int>(std::floor(A * ell * std::log(ell))));
        if (!(A > 2.0 * (d - 1) + 1.0)) out.flags.push_back("A_out_of_range");
        break;
    }
    case BlockModel::gg:
        out.dims = {static_cast<int>(std::floor(A * L / (q * q))), static_cast<int>(std::floor(A * L / q))};
        if (!(A > 6.0)) out.flags.push_back("A_out_of_range");
        break;
    }
    if (*std::min_element(out.dims.begin(), out.dims.end()) < 2) out.flags.push_back("degenerate");
    return out;
}

Region phi_zero_set(const BlockSpec& spec) {
    spec.validate();
    const Geometry g = spec.geometry();
    Region z;
    switch (spec.model) {
    case BlockModel::fa2:
        for (int i = 0; i < spec.d; ++i) z = region_union(z, edge_region(g, i));
        break;
    case BlockModel::fakf:
        for (int i = 0; i < spec.d; ++i) z = region_union(z, slice_region(g, i, 0));
        break;
    case BlockModel::gg:
        z = region_union(slice_region(g, 0, 0), slice_region(g, 0, 1));
        break;
    }
    return z;
}

namespace {

void check_block(const Configuration& block, const BlockSpec& spec) {
    spec.validate();
    if (block.geometry() != spec.geometry()) throw std::invalid_argument("block configuration does not match the block dims");
}

bool fa2_good(const Configuration& b) {
    const Geometry& g = b.geometry();
    const int d = g.dim();
    std::vector<std::vector<std::uint8_t>> hit(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) hit[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(g.side(i)), 0);
    Coord x;
    for (Vertex v = 0; v < b.size(); ++v) {
        if (!b.is_empty(v)) continue;
        g.coords(v, x);
        for (int i = 0; i < d; ++i) hit[static_cast<std::size_t>(i)][static_cast<std::size_t>(x[static_cast<std::size_t>(i)])] = 1;
    }
    for (const auto& h : hit)
        if (std::find(h.begin(), h.end(), 0) != h.end()) return false;
    return true;
}

// Slice Sl_j(V;i) as a configuration on the (d-1)-dimensional box obtained by
// dropping coordinate i.
Configuration project_slice(const Configuration& b, int axis, int j) {
    const Geometry& g = b.geometry();
    std::vector<int> dims;
    for (int k = 0; k < g.dim(); ++k)
        if (k != axis) dims.push_back(g.side(k));
    const Geometry sg = Geometry::box(dims);
    Configuration s(sg, 1);
    Coord x(static_cast<std::size_t>(g.dim())), y;
    for (Vertex w = 0; w < sg.volume(); ++w) {
        sg.coords(w, y);
        for (int k = 0, m = 0; k < g.dim(); ++k) x[static_cast<std::size_t>(k)] = k == axis ? j : y[static_cast<std::size_t>(m++)];
        s.set(w, b.at(x));
    }
    return s;
}

bool fakf_good(const Configuration& b, const BlockSpec& spec) {
    const Geometry& g = b.geometry();
    const UpdateFamily sub = fa_kf(spec.d - 1, spec.k - 1);
    for (int i = 0; i < g.dim(); ++i) {
        for (int j = 0; j < g.side(i); ++j) {
            const Configuration s = project_slice(b, i, j);
            const CompiledFamily cf(s.geometry(), sub, OutsideMode::occupied);
            if (closure(s, cf).count_occupied() != 0) return false;
        }
    }
    return true;
}

bool gg_good(const Configuration& b) {
    const Geometry& g = b.geometry();
    const int n1 = g.side(0), n2 = g.side(1);
    for (int c = 0; c < n1; ++c) {
        bool any = false;
        for (int r = 0; r < n2 && !any; ++r) any = b.at({c, r}) == 0;
        if (!any) return false;
    }
    for (int r = 0; r < n2; ++r) {
        bool pair = false;
        for (int c = 0; c + 1 < n1 && !pair; ++c) pair = b.at({c, r}) == 0 && b.at({c + 1, r}) == 0;
        if (!pair) return false;
    }
    return true;
}

bool good_unchecked(const Configuration& b, const BlockSpec& spec) {
    switch (spec.model) {
    case BlockModel::fa2: return fa2_good(b);
    case BlockModel::fakf: return fakf_good(b, spec);
    case BlockModel::gg: return gg_good(b);
    }
    return false;
}

bool zero_set_empty(const Configuration& b, const Region& z) {
    for (Vertex v : z)
        if (!b.is_empty(v)) return false;
    return true;
}

BlockClass classify_with(const Configuration& b, const BlockSpec& spec, const Region& z) {
    if (!good_unchecked(b, spec)) return BlockClass::neither;
    return zero_set_empty(b, z) ? BlockClass::supergood : BlockClass::good;
}

Configuration from_mask(const Geometry& g, std::uint64_t mask) {
    Configuration c(g, 0);
    for (Vertex v = 0; v < g.volume(); ++v) c.set(v, (mask >> v) & 1u);
    return c;
}

std::uint64_t zero_mask(const Region& z) {
    std::uint64_t m = 0;
    for (Vertex v : z) m |= std::uint64_t{1} << v;
    return m;
}

} // namespace

BlockClass classify_block(const Configuration& block, const BlockSpec& spec) {
    check_block(block, spec);
    return classify_with(block, spec, phi_zero_set(spec));
}

bool is_good(const Configuration& block, const BlockSpec& spec) {
    check_block(block, spec);
    return good_unchecked(block, spec);
}

Configuration phi_map(const Configuration& block, const BlockSpec& spec) {
    check_block(block, spec);
    if (!good_unchecked(block, spec)) throw std::invalid_argument("phi_map: block is not good");
    Configuration out = block;
    for (Vertex v : phi_zero_set(spec)) out.set(v, 0);
    return out;
}

LambdaPhi lambda_phi_exact(const BlockSpec& spec) {
    spec.validate();
    const Geometry g = spec.geometry();
    const std::size_t n = g.volume();
    if (n > max_lambda_vertices) throw std::length_error("lambda_phi exact mode is limited to 16 sites");
    if (!(spec.q > 0.0 && spec.q < 1.0)) throw std::invalid_argument("lambda_phi needs 0 < q < 1");
    const Region z = phi_zero_set(spec);
    const std::uint64_t zm = zero_mask(z);
    const double ratio = (1.0 - spec.q) / spec.q; // muhat weight of an occupied site over an empty one
    std::vector<double> acc(std::size_t{1} << n, 0.0);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
        const Configuration c = from_mask(g, s);
        if (!good_unchecked(c, spec)) continue;
        const int occ_on_z = std::popcount(s & zm);
        acc[s & ~zm] += std::pow(ratio, occ_on_z);
    }
    LambdaPhi out;
    out.exact = true;
    out.value = *std::max_element(acc.begin(), acc.end());
    out.log_value = std::log(out.value);
    return out;
}

double lambda_phi_bruteforce(const BlockSpec& spec) {
    spec.validate();
    const Geometry g = spec.geometry();
    const std::size_t n = g.volume();
    if (n > 10) throw std::length_error("pairwise oracle limited to 10 sites");
    const double p = 1.0 - spec.q, q = spec.q;
    auto weight = [&](const Configuration& c) { return std::pow(p, static_cast<double>(c.count_occupied())) * std::pow(q, static_cast<double>(c.count_empty())); };
    const std::uint64_t N = std::uint64_t{1} << n;
    std::vector<Configuration> all;
    std::vector<BlockClass> cls;
    for (std::uint64_t s = 0; s < N; ++s) {
        all.push_back(from_mask(g, s));
        cls.push_back(classify_block(all.back(), spec));
    }
    double best = 0.0;
    for (std::uint64_t a = 0; a < N; ++a) {
        if (cls[a] != BlockClass::supergood) continue;
        double sum = 0.0;
        for (std::uint64_t b = 0; b < N; ++b) {
            if (cls[b] == BlockClass::neither) continue;
            if (phi_map(all[b], spec) == all[a]) sum += weight(all[b]) / weight(all[a]);
        }
        best = std::max(best, sum);
    }
    return best;
}

LambdaPhi lambda_phi_bound(const BlockSpec& spec) {
    spec.validate();
    double sites = 0.0;
    switch (spec.model) {
    case BlockModel::fa2:
        for (int n : spec.dims) sites += n;
        break;
    case BlockModel::fakf:
        sites = spec.d * std::pow(static_cast<double>(spec.dims[0]), spec.d - 1);
        break;
    case BlockModel::gg:
        sites = 2.0 * spec.dims[1];
        break;
    }
    LambdaPhi out;
    out.exact = false;
    out.log_value = sites * std::log(2.0 / spec.q);
    out.value = std::exp(out.log_value);
    return out;
}

LambdaPhi lambda_phi(const BlockSpec& spec) {
    spec.validate();
    return spec.geometry().volume() <= max_lambda_vertices ? lambda_phi_exact(spec) : lambda_phi_bound(spec);
}

ExactBlockProbs exact_block_probs(const BlockSpec& spec) {
    spec.validate();
    const Geometry g = spec.geometry();
    const std::size_t n = g.volume();
    if (n > max_exact_block_vertices) throw std::length_error("exact block enumeration limited to 20 sites");
    const Region z = phi_zero_set(spec);
    const double p = 1.0 - spec.q, q = spec.q;
    ExactBlockProbs out;
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
        const Configuration c = from_mask(g, s);
        const auto cls = classify_with(c, spec, z);
        if (cls == BlockClass::neither) continue;
        const int occ = std::popcount(s);
        const double w = std::pow(p, occ) * std::pow(q, static_cast<int>(n) - occ);
        out.p1 += w;
        if (cls == BlockClass::supergood) out.p2 += w;
    }
    return out;
}

double log_p2_lower_bound(const BlockSpec& spec, double p1) {
    spec.validate();
    const double lq = std::log(spec.q);
    switch (spec.model) {
    case BlockModel::fa2: {
        double nd = 0.0;
        for (int n : spec.dims) nd += n;
        return nd * lq;
    }
    case BlockModel::fakf:
        return std::log(p1) + spec.d * std::pow(static_cast<double>(spec.dims[0]), spec.d - 1) * lq;
    case BlockModel::gg:
        return std::log(p1) + 2.0 * spec.dims[1] * lq;
    }
    return 0.0;
}

double fa2_failure_bound(const BlockSpec& spec) {
    spec.validate();
    if (spec.model != BlockModel::fa2) throw std::invalid_argument("fa2_failure_bound needs an fa2 block");
    const double n = spec.dims[0];
    return spec.d * n * std::pow(1.0 - spec.q, std::pow(n, spec.d - 1));
}

BlockReport estimate_block_probs(const BlockSpec& spec, std::size_t replicas, std::uint64_t seed, unsigned threads) {
    spec.validate();
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    BlockReport rep;
    rep.spec = spec;
    const Geometry g = spec.geometry();
    const Region z = phi_zero_set(spec);
    std::vector<std::uint8_t> cls(replicas);
    parallel_for(replicas, threads, [&](std::size_t r) {
        const Configuration c = random_configuration(g, spec.q, seed, r);
        cls[r] = static_cast<std::uint8_t>(classify_with(c, spec, z));
    });
    std::size_t good = 0, super = 0;
    for (auto c : cls) {
        good += c >= 1;
        super += c == 2;
    }
    rep.p1 = binomial_estimate(good, replicas, seed);
    rep.p2_mc = binomial_estimate(super, replicas, seed);
    if (good == 0) rep.flags.push_back("p1_zero");

    if (spec.q >= 1.0) {
        rep.log_p2 = 0.0;
        rep.p2_mode = "exact";
    } else if (spec.q <= 0.0) {
        rep.log_p2 = -INFINITY;
        rep.p2_mode = "exact";
    } else if (g.volume() <= max_exact_block_vertices) {
        rep.log_p2 = std::log(exact_block_probs(spec).p2);
        rep.p2_mode = "exact";
    } else {
        rep.log_p2 = log_p2_lower_bound(spec, std::max(rep.p1.value, 1e-300));
        rep.p2_mode = "bound";
    }
    if (spec.q > 0.0 && spec.q < 1.0) rep.lambda = lambda_phi(spec);
    else rep.flags.push_back("lambda_undefined");
    const double lg = -rep.log_p2;
    rep.condition_value = (1.0 - rep.p1.value) * lg * lg;
    if (!std::isfinite(rep.condition_value)) rep.flags.push_back("condition_infinite");
    return rep;
}

double key_condition_value(const std::vector<KeyConditionTerm>& terms, bool statement_form) {
    double sum_lambda = 0.0, inner = 0.0;
    for (const auto& t : terms) {
        if (!(t.lambda > 0.0)) throw std::invalid_argument("key condition weights must be positive");
        sum_lambda += t.lambda;
        inner += t.epsilon * t.overlap / t.lambda;
    }
    return (statement_form ? 2.0 : 1.0) * sum_lambda * inner;
}

} // namespace kcm
