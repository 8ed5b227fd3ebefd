#include "kcm/update_family.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace kcm {

namespace {

Coord unit(int d, int i, int s) {
    Coord u(static_cast<std::size_t>(d), 0);
    u[static_cast<std::size_t>(i)] = s;
    return u;
}

std::vector<std::vector<Coord>> subsets(const std::vector<Coord>& items, int k) {
    std::vector<std::vector<Coord>> out;
    const int n = static_cast<int>(items.size());
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        std::vector<Coord> rule;
        for (int i : idx) rule.push_back(items[static_cast<std::size_t>(i)]);
        out.push_back(std::move(rule));
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

std::vector<Coord> nearest_neighbours(int d) {
    std::vector<Coord> out;
    for (int i = 0; i < d; ++i) {
        out.push_back(unit(d, i, +1));
        out.push_back(unit(d, i, -1));
    }
    return out;
}

} // namespace

std::size_t UpdateFamily::max_rule_size() const noexcept {
    std::size_t m = 0;
    for (const auto& r : rules) m = std::max(m, r.size());
    return m;
}

std::vector<Coord> UpdateFamily::support() const {
    std::vector<Coord> out;
    for (const auto& r : rules) out.insert(out.end(), r.begin(), r.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

UpdateFamily custom_family(int d, std::vector<std::vector<Coord>> rules, std::string name) {
    if (d < 1) throw std::invalid_argument("family dimension must be >= 1");
    if (rules.empty()) throw std::invalid_argument("family needs at least one rule");
    const bool trivial = rules.size() == 1 && rules.front().empty();
    for (auto& rule : rules) {
        if (rule.empty() && !trivial) throw std::invalid_argument("empty rule only allowed in the unconstrained family");
        for (const auto& u : rule) {
            if (static_cast<int>(u.size()) != d) throw std::invalid_argument("offset dimension mismatch");
            if (std::all_of(u.begin(), u.end(), [](int c) { return c == 0; }))
                throw std::invalid_argument("rule contains the zero offset");
        }
        std::sort(rule.begin(), rule.end());
        rule.erase(std::unique(rule.begin(), rule.end()), rule.end());
    }
    return UpdateFamily{d, std::move(rules), std::move(name)};
}

UpdateFamily fa_kf(int d, int k) {
    if (d < 1) throw std::invalid_argument("fa_kf: d must be >= 1");
    if (k < 1 || k > 2 * d) throw std::invalid_argument("fa_kf: k must satisfy 1 <= k <= 2d");
    return custom_family(d, subsets(nearest_neighbours(d), k), "fa_kf(" + std::to_string(d) + "," + std::to_string(k) + ")");
}

UpdateFamily gg() {
    std::vector<Coord> base = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {2, 0}, {-2, 0}};
    return custom_family(2, subsets(base, 3), "gg");
}

UpdateFamily east(int d) {
    if (d < 1) throw std::invalid_argument("east: d must be >= 1");
    std::vector<std::vector<Coord>> rules;
    for (int i = 0; i < d; ++i) rules.push_back({unit(d, i, -1)});
    return custom_family(d, std::move(rules), "east(" + std::to_string(d) + ")");
}

UpdateFamily north_east() { return custom_family(2, {{{0, 1}, {1, 0}}}, "north_east"); }

UpdateFamily unconstrained(int d) { return custom_family(d, {{}}, "unconstrained(" + std::to_string(d) + ")"); }

UpdateFamily family_from_name(const std::string& name, int d) {
    std::smatch m;
    static const std::regex full(R"(fa_kf\((\d+),(\d+)\))");
    static const std::regex shorthand(R"(fa(\d+)f?)");
    if (std::regex_match(name, m, full)) return fa_kf(std::stoi(m[1]), std::stoi(m[2]));
    if (std::regex_match(name, m, shorthand)) return fa_kf(d, std::stoi(m[1]));
    if (name == "gg") return gg();
    if (name == "east") return east(d);
    if (name == "north_east") return north_east();
    if (name == "unconstrained") return unconstrained(d);
    throw std::invalid_argument("unknown model: " + name);
}

UpdateFamily read_family(std::istream& is, const std::string& name) {
    std::vector<std::vector<Coord>> rules;
    int d = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        std::vector<Coord> rule;
        std::istringstream ls(line);
        std::string tuple;
        while (std::getline(ls, tuple, ';')) {
            Coord u;
            std::istringstream ts(tuple);
            std::string num;
            while (std::getline(ts, num, ',')) {
                try {
                    std::size_t used = 0;
                    const int value = std::stoi(num, &used);
                    if (num.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(num);
                    u.push_back(value);
                } catch (const std::exception&) {
                    throw std::runtime_error("family file: bad integer '" + num + "'");
                }
            }
            if (u.empty()) continue;
            if (d == 0) d = static_cast<int>(u.size());
            if (static_cast<int>(u.size()) != d) throw std::runtime_error("family file: inconsistent offset dimension");
            rule.push_back(std::move(u));
        }
        if (rule.empty()) throw std::runtime_error("family file: empty rule line");
        rules.push_back(std::move(rule));
    }
    if (rules.empty()) throw std::runtime_error("family file: no rules");
    return custom_family(d, std::move(rules), name);
}

void write_family(std::ostream& os, const UpdateFamily& fam) {
    for (const auto& rule : fam.rules) {
        for (std::size_t j = 0; j < rule.size(); ++j) {
            if (j) os << ';';
            for (std::size_t i = 0; i < rule[j].size(); ++i) os << (i ? "," : "") << rule[j][i];
        }
        os << '\n';
    }
}

bool constraint_satisfied(const Configuration& cfg, const UpdateFamily& fam, Vertex x, OutsideMode mode) {
    const Geometry& g = cfg.geometry();
    if (fam.d != g.dim()) throw std::invalid_argument("family and geometry dimensions differ");
    const Coord cx = g.coords(x);
    Coord y;
    for (const auto& rule : fam.rules) {
        bool ok = true;
        for (const auto& u : rule) {
            if (!g.translate(cx, u, y)) {
                if (mode == OutsideMode::occupied) {
                    ok = false;
                    break;
                }
                continue;
            }
            if (!cfg.is_empty(g.index(y))) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

bool check_exterior_condition(const UpdateFamily& fam, const Coord& z) {
    if (static_cast<int>(z.size()) != fam.d) throw std::invalid_argument("direction dimension mismatch");
    if (std::all_of(z.begin(), z.end(), [](int c) { return c == 0; })) throw std::invalid_argument("direction must be nonzero");
    for (const auto& rule : fam.rules)
        for (const auto& u : rule) {
            long dot = 0;
            for (std::size_t i = 0; i < z.size(); ++i) dot += static_cast<long>(u[i]) * z[i];
            if (dot <= 0) return false;
        }
    return true;
}

CompiledFamily::CompiledFamily(const Geometry& g, const UpdateFamily& fam, OutsideMode mode)
    : volume_(g.volume()), rules_(static_cast<int>(fam.rules.size())), width_(static_cast<int>(std::max<std::size_t>(1, fam.max_rule_size()))) {
    if (fam.d != g.dim()) throw std::invalid_argument("family and geometry dimensions differ");
    const auto m = static_cast<std::size_t>(rules_);
    const auto w = static_cast<std::size_t>(width_);
    targets_.assign(volume_ * m * w, -1);
    usable_.assign(volume_ * m, 1);
    std::vector<std::uint32_t> count(volume_ + 1, 0);
    Coord cx, cy;
    for (Vertex x = 0; x < volume_; ++x) {
        g.coords(x, cx);
        for (std::size_t k = 0; k < m; ++k) {
            std::int32_t* slot = targets_.data() + (x * m + k) * w;
            std::size_t used = 0;
            for (const auto& u : fam.rules[k]) {
                if (!g.translate(cx, u, cy)) {
                    if (mode == OutsideMode::occupied) usable_[x * m + k] = 0;
                    continue;
                }
                const auto y = static_cast<std::int32_t>(g.index(cy));
                if (std::find(slot, slot + used, y) == slot + used) slot[used++] = y;
            }
            if (!usable_[x * m + k]) std::fill(slot, slot + w, -1);
            else
                for (std::size_t j = 0; j < used; ++j) ++count[static_cast<std::size_t>(slot[j]) + 1];
        }
    }
    for (std::size_t v = 0; v < volume_; ++v) count[v + 1] += count[v];
    dep_offset_ = count;
    dep_.assign(count.back(), 0);
    std::vector<std::uint32_t> fill(count.begin(), count.end() - 1);
    for (Vertex x = 0; x < volume_; ++x)
        for (std::size_t k = 0; k < m; ++k) {
            const std::int32_t* slot = targets_.data() + (x * m + k) * w;
            for (std::size_t j = 0; j < w && slot[j] >= 0; ++j)
                dep_[fill[static_cast<std::size_t>(slot[j])]++] = static_cast<std::uint32_t>(x * m + k);
        }
}

bool CompiledFamily::satisfied(const std::uint8_t* bits, Vertex x) const noexcept {
    for (int k = 0; k < rules_; ++k) {
        if (!usable(x, k)) continue;
        const std::int32_t* t = targets(x, k);
        bool ok = true;
        for (int j = 0; j < width_ && t[j] >= 0; ++j)
            if (bits[t[j]]) {
                ok = false;
                break;
            }
        if (ok) return true;
    }
    return false;
}

} // namespace kcm
