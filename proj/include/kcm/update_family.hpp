#pragma once

#include "kcm/lattice.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kcm {

// How a rule translate that leaves a free box is treated.
enum class OutsideMode {
    occupied, // conservative: the rule cannot be satisfied
    empty     // out-of-box sites count as empty
};

struct UpdateFamily {
    int d = 0;
    std::vector<std::vector<Coord>> rules;
    std::string name;

    std::size_t size() const noexcept { return rules.size(); }
    bool is_unconstrained() const noexcept { return rules.size() == 1 && rules.front().empty(); }
    std::size_t max_rule_size() const noexcept;
    // Union of all offsets, sorted lexicographically.
    std::vector<Coord> support() const;
};

UpdateFamily fa_kf(int d, int k);
UpdateFamily gg();
UpdateFamily east(int d);
UpdateFamily north_east();
UpdateFamily unconstrained(int d);
UpdateFamily custom_family(int d, std::vector<std::vector<Coord>> rules, std::string name = "custom");

// Parses "fa_kf(d,k)", "fa<k>f" (needs d), "gg", "east", "north_east", "unconstrained".
UpdateFamily family_from_name(const std::string& name, int d);

// One rule per line, offsets as semicolon-separated integer tuples, e.g. "1,0;0,1".
UpdateFamily read_family(std::istream& is, const std::string& name = "custom");
void write_family(std::ostream& os, const UpdateFamily& fam);

bool constraint_satisfied(const Configuration& cfg, const UpdateFamily& fam, Vertex x,
                          OutsideMode mode = OutsideMode::occupied);

bool check_exterior_condition(const UpdateFamily& fam, const Coord& z);

// Family translated onto a concrete geometry: for each vertex and rule, the
// distinct target vertices (padding -1) and whether the rule can ever fire.
class CompiledFamily {
public:
    CompiledFamily(const Geometry& g, const UpdateFamily& fam, OutsideMode mode = OutsideMode::occupied);

    std::size_t volume() const noexcept { return volume_; }
    int rules() const noexcept { return rules_; }
    int width() const noexcept { return width_; }

    bool usable(Vertex x, int k) const noexcept { return usable_[x * static_cast<std::size_t>(rules_) + static_cast<std::size_t>(k)] != 0; }
    const std::int32_t* targets(Vertex x, int k) const noexcept {
        return targets_.data() + (x * static_cast<std::size_t>(rules_) + static_cast<std::size_t>(k)) * static_cast<std::size_t>(width_);
    }

    bool satisfied(const std::uint8_t* bits, Vertex x) const noexcept;
    bool satisfied(const Configuration& cfg, Vertex x) const noexcept { return satisfied(cfg.bits().data(), x); }

    // Codes x*rules+k of every (x, k) whose translate contains y.
    const std::uint32_t* dependents_begin(Vertex y) const noexcept { return dep_.data() + dep_offset_[y]; }
    const std::uint32_t* dependents_end(Vertex y) const noexcept { return dep_.data() + dep_offset_[y + 1]; }

private:
    std::size_t volume_ = 0;
    int rules_ = 0;
    int width_ = 0;
    std::vector<std::int32_t> targets_;
    std::vector<std::uint8_t> usable_;
    std::vector<std::uint32_t> dep_offset_;
    std::vector<std::uint32_t> dep_;
};

} // namespace kcm
