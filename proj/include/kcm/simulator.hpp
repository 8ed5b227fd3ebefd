#pragma once

#include "kcm/lattice.hpp"
#include "kcm/stats.hpp"
#include "kcm/update_family.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace kcm {

struct KcmParams {
    UpdateFamily fam;
    double q = 0.5; // probability of the empty state; p = 1 - q
    Geometry geometry;
    double t_max = 1.0;
    std::uint64_t seed = 0;
    OutsideMode outside = OutsideMode::occupied;

    void validate() const;
};

struct Event {
    double time = 0.0;
    std::uint32_t vertex = 0;
    std::uint8_t new_value = 0;

    bool operator==(const Event& o) const noexcept {
        return time == o.time && vertex == o.vertex && new_value == o.new_value;
    }
};

// Called on every legal ring (the constraint held and the site was resampled),
// including resamples that leave the value unchanged. Return true to stop.
using UpdateObserver = std::function<bool(double time, Vertex x, std::uint8_t old_value, std::uint8_t new_value,
                                          const Configuration& state)>;

struct SimulationResult {
    Configuration final_state;
    std::vector<Event> log; // value-changing updates only
    double end_time = 0.0;
    std::uint64_t rings = 0;
    std::uint64_t legal_updates = 0;
    bool stopped_by_observer = false;
};

struct SimulateOptions {
    bool record_log = true;
    std::uint64_t replica = 0;
    UpdateObserver observer;
};

// Rate-1 Poisson clock per site; at a ring the site is resampled
// (occupied w.p. p) iff its constraint holds, otherwise the ring is discarded.
SimulationResult simulate_kcm(const KcmParams& params, const Configuration& initial, const SimulateOptions& opt = {});

// Rate of the transition omega -> omega^x.
double transition_rate(const Configuration& cfg, const UpdateFamily& fam, Vertex x, double q,
                       OutsideMode mode = OutsideMode::occupied);

void write_event_log(std::ostream& os, const std::vector<Event>& events);
std::vector<Event> read_event_log(std::istream& is);

enum class StartLaw { stationary, all_empty, all_occupied_but_origin };
enum class PersistenceObservable {
    zero_state,   // first time the origin is empty
    first_update  // first legal update of the origin
};

struct PersistenceSample {
    double tau0 = 0.0;
    bool censored = false;
    std::uint64_t flips_executed = 0;
    std::uint64_t replica = 0;
};

struct PersistenceReport {
    std::vector<PersistenceSample> samples;
    Summary uncensored;              // over uncensored samples
    double censored_fraction = 0.0;
    double mean_lower_bound = 0.0;   // censored samples counted at t_max
    bool usable = true;              // false when every replica was censored
};

struct PersistenceOptions {
    StartLaw start = StartLaw::stationary;
    PersistenceObservable observable = PersistenceObservable::zero_state;
    Vertex origin = 0;
    unsigned threads = 0;
};

PersistenceReport sample_persistence_time(const KcmParams& params, std::size_t replicas, const PersistenceOptions& opt = {});

} // namespace kcm
