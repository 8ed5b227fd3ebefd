#include "kcm/simulator.hpp"
#include "kcm/parallel.hpp"
#include "kcm/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace kcm {

namespace {

constexpr std::uint64_t dynamics_stream = 0x5eed'd1ceULL;

} // namespace

void KcmParams::validate() const {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("KCM requires 0 < q < 1");
    if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    if (fam.d != geometry.dim()) throw std::invalid_argument("family and geometry dimensions differ");
}

SimulationResult simulate_kcm(const KcmParams& params, const Configuration& initial, const SimulateOptions& opt) {
    params.validate();
    if (initial.geometry() != params.geometry) throw std::invalid_argument("initial configuration does not match geometry");
    const CompiledFamily cf(params.geometry, params.fam, params.outside);
    const std::size_t n = params.geometry.volume();
    SplitMix64 rng(hash_key(params.seed, opt.replica, dynamics_stream));
    SimulationResult res;
    res.final_state = initial;
    Configuration& state = res.final_state;
    // All clocks have rate 1, so the superposition rings at rate n on a uniformly chosen site.
    const double total_rate = static_cast<double>(n);
    double t = 0.0;
    while (true) {
        const double dt = rng.exponential(total_rate);
        const auto x = static_cast<Vertex>(rng.below(n));
        const double coin = rng.uniform();
        if (t + dt > params.t_max) break;
        t += dt;
        ++res.rings;
        if (!cf.satisfied(state, x)) continue;
        ++res.legal_updates;
        const std::uint8_t old_value = state[x];
        const std::uint8_t new_value = coin < params.q ? 0 : 1;
        state.set(x, new_value);
        if (new_value != old_value && opt.record_log) res.log.push_back(Event{t, static_cast<std::uint32_t>(x), new_value});
        if (opt.observer && opt.observer(t, x, old_value, new_value, state)) {
            res.stopped_by_observer = true;
            break;
        }
    }
    res.end_time = res.stopped_by_observer ? t : params.t_max;
    return res;
}

double transition_rate(const Configuration& cfg, const UpdateFamily& fam, Vertex x, double q, OutsideMode mode) {
    if (!constraint_satisfied(cfg, fam, x, mode)) return 0.0;
    return cfg.is_empty(x) ? 1.0 - q : q;
}

void write_event_log(std::ostream& os, const std::vector<Event>& events) {
    static_assert(std::endian::native == std::endian::little, "event log writer assumes a little-endian host");
    char buf[13];
    for (const auto& e : events) {
        std::memcpy(buf, &e.time, 8);
        std::memcpy(buf + 8, &e.vertex, 4);
        buf[12] = static_cast<char>(e.new_value);
        os.write(buf, sizeof buf);
    }
}

std::vector<Event> read_event_log(std::istream& is) {
    std::vector<Event> out;
    char buf[13];
    while (is.read(buf, sizeof buf)) {
        Event e;
        std::memcpy(&e.time, buf, 8);
        std::memcpy(&e.vertex, buf + 8, 4);
        e.new_value = static_cast<std::uint8_t>(buf[12]);
        out.push_back(e);
    }
    if (is.gcount() != 0) throw std::runtime_error("event log: truncated record");
    return out;
}

PersistenceReport sample_persistence_time(const KcmParams& params, std::size_t replicas, const PersistenceOptions& opt) {
    params.validate();
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    if (opt.origin >= params.geometry.volume()) throw std::out_of_range("origin out of bounds");
    PersistenceReport rep;
    rep.samples.resize(replicas);
    parallel_for(replicas, opt.threads, [&](std::size_t r) {
        Configuration init(params.geometry, 1);
        switch (opt.start) {
        case StartLaw::stationary: init = random_configuration(params.geometry, params.q, params.seed, r); break;
        case StartLaw::all_empty: init = Configuration(params.geometry, 0); break;
        case StartLaw::all_occupied_but_origin: break;
        }
        PersistenceSample& s = rep.samples[r];
        s.replica = r;
        if (opt.observable == PersistenceObservable::zero_state && init.is_empty(opt.origin)) {
            s.tau0 = 0.0;
            return;
        }
        SimulateOptions so;
        so.record_log = false;
        so.replica = r;
        double hit = -1.0;
        so.observer = [&](double t, Vertex x, std::uint8_t, std::uint8_t nv, const Configuration&) {
            if (x != opt.origin) return false;
            if (opt.observable == PersistenceObservable::first_update || nv == 0) {
                hit = t;
                return true;
            }
            return false;
        };
        const auto res = simulate_kcm(params, init, so);
        s.flips_executed = res.legal_updates;
        if (hit >= 0.0) s.tau0 = hit;
        else {
            s.tau0 = params.t_max;
            s.censored = true;
        }
    });
    std::vector<double> done;
    double sum_bound = 0.0;
    std::size_t censored = 0;
    for (const auto& s : rep.samples) {
        sum_bound += s.tau0;
        if (s.censored) ++censored;
        else done.push_back(s.tau0);
    }
    rep.uncensored = summarize(done);
    rep.censored_fraction = static_cast<double>(censored) / static_cast<double>(replicas);
    rep.mean_lower_bound = sum_bound / static_cast<double>(replicas);
    rep.usable = censored < replicas;
    return rep;
}

} // namespace kcm
