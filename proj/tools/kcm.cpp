// kcm: command-line front end. Every command writes a CSV whose comment
// header records the seed, the build version and a hash of the resolved
// configuration.

#include "CLI11.hpp"

#include "kcm/blocks.hpp"
#include "kcm/bootstrap.hpp"
#include "kcm/paths.hpp"
#include "kcm/percolation.hpp"
#include "kcm/rng.hpp"
#include "kcm/simulator.hpp"
#include "kcm/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef KCM_VERSION_STRING
#define KCM_VERSION_STRING "unknown"
#endif

using namespace kcm;

namespace {

struct Common {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out;
};

// Resolved configuration plus the CSV body.
struct Output {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> side_files;
    std::string raw; // replaces the CSV when non-empty (grid output)

    template <class T>
    void set(const std::string& key, const T& value) {
        std::ostringstream os;
        os << std::setprecision(17) << value;
        config.emplace_back(key, os.str());
    }
};

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

template <class T>
std::string str(const T& x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

std::string dims_str(const std::vector<int>& dims) {
    std::vector<std::string> parts;
    for (int n : dims) parts.push_back(std::to_string(n));
    return join(parts, "x");
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        T v{};
        if (!(is >> v) || !(is >> std::ws).eof()) throw std::invalid_argument(std::string("bad ") + what + " list: " + s);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(std::string("empty ") + what + " list");
    return out;
}

// FNV-1a over the canonical "key=value" lines.
std::uint64_t config_hash(const std::vector<std::pair<std::string, std::string>>& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : cfg)
        for (char c : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
    return h;
}

UpdateFamily model_family(const std::string& model, int d) {
    // "fa2" etc. are shorthand for fa_kf(d,2).
    return family_from_name(model, d);
}

StartLaw start_from_string(const std::string& s) {
    if (s == "stationary") return StartLaw::stationary;
    if (s == "all_empty") return StartLaw::all_empty;
    if (s == "all_occupied_but_origin") return StartLaw::all_occupied_but_origin;
    throw std::invalid_argument("unknown start law: " + s);
}

PersistenceObservable observable_from_string(const std::string& s) {
    if (s == "zero_state") return PersistenceObservable::zero_state;
    if (s == "first_update") return PersistenceObservable::first_update;
    throw std::invalid_argument("unknown observable: " + s);
}

// ---- commands --------------------------------------------------------------

struct BootstrapArgs {
    std::string model = "fa2";
    int d = 2;
    int n = 8;
    std::string q = "0.4";
    std::size_t replicas = 1000;
    std::string grid;
};

void run_bootstrap(const BootstrapArgs& a, const Common& c, Output& out) {
    const UpdateFamily fam = model_family(a.model, a.d);
    if (!a.grid.empty()) {
        std::ifstream in(a.grid);
        if (!in) throw std::runtime_error("cannot open grid file " + a.grid);
        const Configuration cfg = read_grid(in);
        if (cfg.geometry().dim() != fam.d) throw std::invalid_argument("grid dimension does not match the model");
        out.set("grid", a.grid);
        out.set("model", fam.name);
        out.raw = grid_to_string(closure(cfg, fam));
        return;
    }
    const auto qs = parse_list<double>(a.q, "q");
    out.set("model", fam.name);
    out.set("n", a.n);
    out.set("q", a.q);
    out.set("replicas", a.replicas);
    out.header = {"model", "d", "n", "q", "seed", "replicas", "span_prob", "ci_lo", "ci_hi"};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const std::uint64_t seed = c.seed + i;
        const auto e = estimate_span_probability(a.n, fam, qs[i], a.replicas, seed, {c.threads});
        out.rows.push_back({fam.name, str(fam.d), str(a.n), fmt(qs[i]), str(seed), str(a.replicas), fmt(e.value), fmt(e.ci_lo), fmt(e.ci_hi)});
    }
}

struct QcArgs {
    std::string model = "fa2";
    int d = 2;
    std::string n = "8";
    double tol = 1e-3;
    std::size_t replicas = 400;
};

void run_qc(const QcArgs& a, const Common& c, Output& out) {
    const UpdateFamily fam = model_family(a.model, a.d);
    const auto ns = parse_list<int>(a.n, "n");
    out.set("model", fam.name);
    out.set("n", a.n);
    out.set("tol", a.tol);
    out.set("replicas", a.replicas);
    out.header = {"model", "d", "n", "seed", "replicas", "qc", "ci_lo", "ci_hi", "bracket_lo", "bracket_hi", "flags"};
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const std::uint64_t seed = c.seed + i;
        const auto e = estimate_qc(ns[i], fam, a.tol, a.replicas, seed, {c.threads});
        out.rows.push_back({fam.name, str(fam.d), str(ns[i]), str(seed), str(a.replicas), fmt(e.estimate.value), fmt(e.estimate.ci_lo),
                            fmt(e.estimate.ci_hi), fmt(e.bracket_lo), fmt(e.bracket_hi), join(e.estimate.flags, "|")});
    }
}

struct LcArgs {
    std::string model = "fa2";
    int d = 2;
    std::string q = "0.1";
    int nmax = 256;
    std::size_t replicas = 400;
};

void run_lc(const LcArgs& a, const Common& c, Output& out) {
    const UpdateFamily fam = model_family(a.model, a.d);
    const auto qs = parse_list<double>(a.q, "q");
    out.set("model", fam.name);
    out.set("q", a.q);
    out.set("nmax", a.nmax);
    out.set("replicas", a.replicas);
    out.header = {"model", "d", "q", "seed", "replicas", "lc", "ci_lo", "ci_hi", "flags"};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const std::uint64_t seed = c.seed + i;
        const auto e = estimate_lc(qs[i], fam, a.nmax, a.replicas, seed, {c.threads});
        out.rows.push_back({fam.name, str(fam.d), fmt(qs[i]), str(seed), str(a.replicas), fmt(e.value), fmt(e.ci_lo), fmt(e.ci_hi),
                            join(e.flags, "|")});
    }
}

struct SimArgs {
    std::string model = "fa1";
    int d = 2;
    int n = 8;
    std::string q = "0.3";
    double tmax = 100.0;
    std::size_t replicas = 100;
    std::string start = "stationary";
    std::string observable = "zero_state";
    std::string log;
};

void run_sim(const SimArgs& a, const Common& c, Output& out) {
    const UpdateFamily fam = model_family(a.model, a.d);
    const auto qs = parse_list<double>(a.q, "q");
    PersistenceOptions opt;
    opt.start = start_from_string(a.start);
    opt.observable = observable_from_string(a.observable);
    opt.threads = c.threads;
    out.set("model", fam.name);
    out.set("n", a.n);
    out.set("q", a.q);
    out.set("tmax", a.tmax);
    out.set("replicas", a.replicas);
    out.set("start", a.start);
    out.set("observable", a.observable);
    out.set("log", a.log);
    out.header = {"model", "d", "n", "q", "seed", "start", "observable", "replica", "tau0", "censored", "flips"};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        KcmParams p{fam, qs[i], Geometry::torus(fam.d, a.n), a.tmax, c.seed + i};
        const auto rep = sample_persistence_time(p, a.replicas, opt);
        for (const auto& s : rep.samples)
            out.rows.push_back({fam.name, str(fam.d), str(a.n), fmt(qs[i]), str(p.seed), a.start, a.observable, str(s.replica), fmt(s.tau0),
                                s.censored ? "1" : "0", str(s.flips_executed)});
    }
    if (!a.log.empty()) {
        KcmParams p{fam, qs.front(), Geometry::torus(fam.d, a.n), a.tmax, c.seed};
        const auto res = simulate_kcm(p, random_configuration(p.geometry, p.q, p.seed, 0));
        out.side_files.push_back(a.log);
        std::ofstream os(a.log, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open event log " + a.log);
        write_event_log(os, res.log);
    }
}

struct GapArgs {
    std::string model = "fa1";
    int d = 1;
    std::string dims = "4";
    std::string boundary = "torus";
    std::string q = "0.5";
};

void run_gap(const GapArgs& a, const Common& c, Output& out) {
    const auto dims = parse_list<int>(a.dims, "dims");
    const UpdateFamily fam = model_family(a.model, static_cast<int>(dims.size()));
    const Geometry g(dims, boundary_from_string(a.boundary));
    const auto qs = parse_list<double>(a.q, "q");
    out.set("model", fam.name);
    out.set("dims", a.dims);
    out.set("boundary", a.boundary);
    out.set("q", a.q);
    out.header = {"model", "d", "dims", "boundary", "q", "seed", "class_size", "gap", "t_rel", "degenerate"};
    for (double q : qs) {
        const auto gm = build_generator(g, fam, q);
        const auto sg = spectral_gap(gm);
        out.rows.push_back({fam.name, str(fam.d), dims_str(dims), a.boundary, fmt(q), str(c.seed), str(gm.size()), fmt(sg.gap), fmt(sg.t_rel),
                            sg.degenerate ? "1" : "0"});
    }
}

struct BlocksArgs {
    std::string model = "fa2";
    int d = 2;
    int k = 2;
    std::string q = "0.2";
    double A = 3.5;
    std::string dims;
    double ell = 0.0;
    std::size_t replicas = 2000;
};

BlockSpec block_spec(const std::string& model, int d, int k, double q, double A, const std::string& dims, double ell) {
    BlockSpec s;
    s.model = block_model_from_string(model);
    s.d = s.model == BlockModel::gg ? 2 : d;
    s.k = k;
    s.q = q;
    s.A = A;
    if (!dims.empty()) {
        s.dims = parse_list<int>(dims, "dims");
    } else {
        const auto bd = block_dims(s.model, s.d, q, A, ell);
        if (std::find(bd.flags.begin(), bd.flags.end(), "degenerate") != bd.flags.end())
            throw std::invalid_argument("block dims are degenerate at q = " + fmt(q));
        s.dims = bd.dims;
    }
    s.validate();
    return s;
}

void run_blocks(const BlocksArgs& a, const Common& c, Output& out) {
    const auto qs = parse_list<double>(a.q, "q");
    out.set("model", a.model);
    out.set("d", a.d);
    out.set("k", a.k);
    out.set("q", a.q);
    out.set("A", a.A);
    out.set("dims", a.dims);
    out.set("ell", a.ell);
    out.set("replicas", a.replicas);
    out.header = {"model", "d", "k", "dims", "q", "seed", "A", "replicas", "p1", "p1_ci_lo", "p1_ci_hi", "p2", "p2_mode",
                  "lambda_phi", "lambda_exact", "condition_value", "flags"};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const BlockSpec s = block_spec(a.model, a.d, a.k, qs[i], a.A, a.dims, a.ell);
        const std::uint64_t seed = c.seed + i;
        const auto r = estimate_block_probs(s, a.replicas, seed, c.threads);
        out.rows.push_back({a.model, str(s.d), str(s.k), dims_str(s.dims), fmt(qs[i]), str(seed), fmt(a.A), str(a.replicas), fmt(r.p1.value),
                            fmt(r.p1.ci_lo), fmt(r.p1.ci_hi), fmt(std::exp(r.log_p2)), r.p2_mode, fmt(r.lambda.value),
                            r.lambda.exact ? "1" : "0", fmt(r.condition_value), join(r.flags, "|")});
    }
}

struct PathsArgs {
    std::string model = "fa2";
    int d = 2;
    int k = 2;
    std::string dims = "4,4";
    std::string q = "0.45";
    std::string mode = "B";
    int axis = 0;
    std::size_t samples = 100;
    std::string dump;
};

constexpr std::size_t max_exact_congestion_sites = 16;

// Largest mu(start)/mu(waypoint) seen on one path.
double path_ratio(const LegalPath& p, double q) {
    const double ls = log_product_measure(p.start, q);
    Configuration c = p.start;
    double best = 1.0;
    for (const auto& f : p.flips) {
        c.set(f.vertex, f.new_value);
        best = std::max(best, std::exp(ls - log_product_measure(c, q)));
    }
    return best;
}

void run_paths(const PathsArgs& a, const Common& c, Output& out) {
    if (a.mode != "A" && a.mode != "B") throw std::invalid_argument("mode must be A or B");
    const auto qs = parse_list<double>(a.q, "q");
    out.set("model", a.model);
    out.set("d", a.d);
    out.set("k", a.k);
    out.set("dims", a.dims);
    out.set("q", a.q);
    out.set("mode", a.mode);
    out.set("axis", a.axis);
    out.set("samples", a.samples);
    out.set("dump", a.dump);
    out.header = {"mode", "model", "d", "dims", "q", "seed", "samples", "max_len", "mean_len", "fitted_c", "rho_mode", "rho"};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const BlockSpec s = block_spec(a.model, a.d, a.k, qs[i], 1.0, a.dims, 0.0);
        const std::uint64_t seed = c.seed + i;
        const Geometry blk = s.geometry();
        std::uint64_t state = seed;
        SplitMix64 zrng(hash_key(seed, 0x7a));
        std::size_t max_len = 0;
        double total = 0.0, sampled_rho = 1.0;
        for (std::size_t t = 0; t < a.samples; ++t) {
            LegalPath p;
            if (a.mode == "B") {
                p = path_B(sample_path_B_input(s, a.axis, state), s, a.axis);
            } else {
                const auto cfg = sample_path_A_input(s, state);
                p = path_A(cfg, s, blk.coords(static_cast<Vertex>(zrng.below(blk.volume()))));
            }
            const auto rep = verify_legal(p, s.family());
            if (!rep.ok) throw std::logic_error("illegal path at flip " + std::to_string(rep.index) + ": " + rep.reason);
            max_len = std::max(max_len, p.size());
            total += static_cast<double>(p.size());
            sampled_rho = std::max(sampled_rho, path_ratio(p, qs[i]));
            if (t == 0 && i == 0 && !a.dump.empty()) {
                out.side_files.push_back(a.dump);
                std::ofstream os(a.dump);
                if (!os) throw std::runtime_error("cannot open dump file " + a.dump);
                write_path(os, p);
            }
        }
        std::string rho_mode = "sampled_lower_bound";
        double rho = sampled_rho;
        const Geometry pg = a.mode == "B" ? path_B_geometry(s, a.axis) : path_A_geometry(s);
        if (pg.volume() <= max_exact_congestion_sites) {
            rho_mode = "exact";
            rho = 1.0;
            const Coord off_b = [&] {
                Coord o(s.dims.size(), 0);
                o[static_cast<std::size_t>(a.axis)] = 1;
                return o;
            }();
            if (a.mode == "B") {
                const auto starts = enumerate_configurations(pg, [&](const Configuration& cfg) {
                    return is_good(extract_block(cfg, block_at(s, Coord(s.dims.size(), 0))), s) &&
                           classify_block(extract_block(cfg, block_at(s, off_b)), s) == BlockClass::supergood;
                });
                rho = congestion_exact(starts, [&](const Configuration& cfg) { return path_B(cfg, s, a.axis); }, qs[i]).rho;
            } else {
                const auto starts = enumerate_configurations(pg, [&](const Configuration& cfg) {
                    for (int j = 0; j < s.d; ++j) {
                        Coord o(s.dims.size(), 0);
                        o[static_cast<std::size_t>(j)] = 1;
                        if (classify_block(extract_block(cfg, block_at(s, o)), s) != BlockClass::supergood) return false;
                    }
                    return true;
                });
                for (Vertex z = 0; z < blk.volume(); ++z)
                    rho = std::max(rho, congestion_exact(starts, [&](const Configuration& cfg) { return path_A(cfg, s, blk.coords(z)); }, qs[i]).rho);
            }
        }
        const double fitted_c = static_cast<double>(max_len) / static_cast<double>(blk.volume());
        out.rows.push_back({a.mode, a.model, str(s.d), dims_str(s.dims), fmt(qs[i]), str(seed), str(a.samples), str(max_len),
                            fmt(total / static_cast<double>(std::max<std::size_t>(a.samples, 1))), fmt(fitted_c), rho_mode, fmt(rho)});
    }
}

struct PercArgs {
    std::string p = "0.2";
    int nmin = 1;
    int nmax = 6;
    std::size_t replicas = 10000;
};

void run_perc(const PercArgs& a, const Common& c, Output& out) {
    const auto ps = parse_list<double>(a.p, "p");
    if (a.nmin < 1 || a.nmax < a.nmin) throw std::invalid_argument("need 1 <= nmin <= nmax");
    out.set("p", a.p);
    out.set("nmin", a.nmin);
    out.set("nmax", a.nmax);
    out.set("replicas", a.replicas);
    out.header = {"p", "n", "ell_n", "seed", "replicas", "failure", "ci_lo", "ci_hi", "m_hat", "flags"};
    std::vector<int> ns;
    for (int n = a.nmin; n <= a.nmax; ++n) ns.push_back(n);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::uint64_t seed = c.seed + i;
        const auto rep = estimate_crossing_failure(ns, ps[i], a.replicas, seed, c.threads);
        for (const auto& pt : rep.points) {
            auto flags = rep.flags;
            flags.insert(flags.end(), pt.failure.flags.begin(), pt.failure.flags.end());
            out.rows.push_back({fmt(ps[i]), str(pt.n), str(pt.ell), str(seed), str(a.replicas), fmt(pt.failure.value), fmt(pt.failure.ci_lo),
                                fmt(pt.failure.ci_hi), fmt(rep.m_hat), join(flags, "|")});
        }
    }
}

// ---- plumbing --------------------------------------------------------------

std::string render(const std::string& command, const Common& c, const Output& out) {
    std::ostringstream os;
    if (!out.raw.empty()) return out.raw;
    auto cfg = out.config;
    cfg.insert(cfg.begin(), {"command", command});
    cfg.emplace_back("seed", std::to_string(c.seed));
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(cfg);
    os << "# kcm " << command << "\n";
    os << "# seed=" << c.seed << "\n";
    os << "# version=" << KCM_VERSION_STRING << "\n";
    os << "# config_hash=" << hash.str() << "\n";
    os << join(out.header, ",") << "\n";
    for (const auto& r : out.rows) os << join(r, ",") << "\n";
    return os.str();
}

// Reads key=value lines into "--key value" arguments.
std::vector<std::string> config_args(const std::string& path, std::string& command) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::vector<std::string> args;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto x = s.find_first_not_of(" \t"), y = s.find_last_not_of(" \t");
            return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key == "command") {
            command = value;
            continue;
        }
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

const std::vector<std::string> commands{"bootstrap", "qc", "lc", "sim", "gap", "blocks", "paths", "perc"};

} // namespace

int main(int argc, char** argv) {
    // Expand --config before parsing; command-line flags come later and win.
    std::vector<std::string> raw(argv + 1, argv + argc);
    std::vector<std::string> file_args;
    std::string file_command;
    try {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            std::string path;
            if (raw[i] == "--config" && i + 1 < raw.size()) {
                path = raw[i + 1];
                raw.erase(raw.begin() + static_cast<std::ptrdiff_t>(i), raw.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            } else if (raw[i].rfind("--config=", 0) == 0) {
                path = raw[i].substr(9);
                raw.erase(raw.begin() + static_cast<std::ptrdiff_t>(i));
            } else {
                continue;
            }
            auto more = config_args(path, file_command);
            file_args.insert(file_args.end(), more.begin(), more.end());
            --i;
        }
    } catch (const std::exception& e) {
        std::cerr << "kcm: " << e.what() << "\n";
        return 2;
    }
    auto cmd_it = std::find_if(raw.begin(), raw.end(), [](const std::string& s) { return std::find(commands.begin(), commands.end(), s) != commands.end(); });
    std::vector<std::string> args;
    if (cmd_it != raw.end()) {
        args.assign(raw.begin(), cmd_it + 1);
        args.insert(args.end(), file_args.begin(), file_args.end());
        args.insert(args.end(), cmd_it + 1, raw.end());
    } else {
        if (!file_command.empty()) args.push_back(file_command);
        args.insert(args.end(), file_args.begin(), file_args.end());
        args.insert(args.end(), raw.begin(), raw.end());
    }

    CLI::App app{"Kinetically constrained models and bootstrap percolation"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", KCM_VERSION_STRING);
    Common common;
    app.add_option("--seed", common.seed, "Base seed; q-grid points use seed + index");
    app.add_option("--threads", common.threads, "Worker threads (0 = hardware)");
    app.add_option("--out", common.out, "Output path (stdout when absent)");
    app.add_option("--config", "key=value configuration file; flags override it");

    BootstrapArgs ba;
    auto* sb = app.add_subcommand("bootstrap", "Spanning probability on the n-torus, or the closure of a grid file")->fallthrough();
    sb->add_option("--model", ba.model);
    sb->add_option("--d", ba.d);
    sb->add_option("--n", ba.n);
    sb->add_option("--q", ba.q, "q or comma-separated q grid");
    sb->add_option("--replicas", ba.replicas);
    sb->add_option("--grid", ba.grid, "Grid file; prints its closure");

    QcArgs qa;
    auto* sq = app.add_subcommand("qc", "Critical probability q_c(n)")->fallthrough();
    sq->add_option("--model", qa.model);
    sq->add_option("--d", qa.d);
    sq->add_option("--n", qa.n, "n or comma-separated list");
    sq->add_option("--tol", qa.tol);
    sq->add_option("--replicas", qa.replicas);

    LcArgs la;
    auto* sl = app.add_subcommand("lc", "Critical length L_c(q)")->fallthrough();
    sl->add_option("--model", la.model);
    sl->add_option("--d", la.d);
    sl->add_option("--q", la.q);
    sl->add_option("--nmax", la.nmax);
    sl->add_option("--replicas", la.replicas);

    SimArgs sa;
    auto* ss = app.add_subcommand("sim", "Persistence times of the KCM")->fallthrough();
    ss->add_option("--model", sa.model);
    ss->add_option("--d", sa.d);
    ss->add_option("--n", sa.n);
    ss->add_option("--q", sa.q);
    ss->add_option("--tmax", sa.tmax);
    ss->add_option("--replicas", sa.replicas);
    ss->add_option("--start", sa.start, "stationary | all_empty | all_occupied_but_origin");
    ss->add_option("--observable", sa.observable, "zero_state | first_update");
    ss->add_option("--log", sa.log, "Binary event log of one trajectory");

    GapArgs ga;
    auto* sg = app.add_subcommand("gap", "Spectral gap of the generator on a small lattice")->fallthrough();
    sg->add_option("--model", ga.model);
    sg->add_option("--dims", ga.dims);
    sg->add_option("--boundary", ga.boundary);
    sg->add_option("--q", ga.q);

    BlocksArgs bk;
    auto* sk = app.add_subcommand("blocks", "Good and super-good block probabilities")->fallthrough();
    sk->add_option("--model", bk.model, "fa2 | fakf | gg");
    sk->add_option("--d", bk.d);
    sk->add_option("--k", bk.k);
    sk->add_option("--q", bk.q);
    sk->add_option("--A", bk.A);
    sk->add_option("--dims", bk.dims, "Override the formula dims");
    sk->add_option("--ell", bk.ell, "Critical length used for fakf sizing");
    sk->add_option("--replicas", bk.replicas);

    PathsArgs pa;
    auto* sp = app.add_subcommand("paths", "Canonical paths on sampled eligible inputs")->fallthrough();
    sp->add_option("--model", pa.model, "fa2 | fakf | gg");
    sp->add_option("--d", pa.d);
    sp->add_option("--k", pa.k);
    sp->add_option("--dims", pa.dims);
    sp->add_option("--q", pa.q);
    sp->add_option("--mode", pa.mode, "A | B");
    sp->add_option("--axis", pa.axis);
    sp->add_option("--samples", pa.samples);
    sp->add_option("--dump", pa.dump, "Write the first path to this file");

    PercArgs ra;
    auto* sr = app.add_subcommand("perc", "Hard-crossing failure probabilities")->fallthrough();
    sr->add_option("--p", ra.p, "Occupation probability or comma-separated grid");
    sr->add_option("--nmin", ra.nmin);
    sr->add_option("--nmax", ra.nmax);
    sr->add_option("--replicas", ra.replicas);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    Output out;
    std::string command;
    try {
        command = app.get_subcommands().front()->get_name();
        if (command == "bootstrap") run_bootstrap(ba, common, out);
        else if (command == "qc") run_qc(qa, common, out);
        else if (command == "lc") run_lc(la, common, out);
        else if (command == "sim") run_sim(sa, common, out);
        else if (command == "gap") run_gap(ga, common, out);
        else if (command == "blocks") run_blocks(bk, common, out);
        else if (command == "paths") run_paths(pa, common, out);
        else run_perc(ra, common, out);
        const std::string text = render(command, common, out);
        if (common.out.empty()) {
            std::cout << text;
        } else {
            const std::string tmp = common.out + ".partial";
            {
                std::ofstream os(tmp, std::ios::binary);
                if (!os) throw std::runtime_error("cannot open " + tmp);
                os << text;
                if (!os.flush()) throw std::runtime_error("write failed: " + tmp);
            }
            std::filesystem::rename(tmp, common.out);
        }
    } catch (const std::exception& e) {
        std::error_code ec;
        if (!common.out.empty()) {
            std::filesystem::remove(common.out + ".partial", ec);
            std::filesystem::remove(common.out, ec);
        }
        for (const auto& f : out.side_files) std::filesystem::remove(f, ec);
        std::cerr << "kcm " << command << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
