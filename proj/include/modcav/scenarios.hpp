#pragma once

// Scenario layer: named presets for the figure-style parameter sets, a flat
// dotted-key config format, sweep expansion, and file-producing runners
// (per-point observable CSVs + a manifest with diagnostics, a concurrence
// map over drive frequencies, and a truncation/tolerance convergence report).

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "model.hpp"
#include "observables.hpp"
#include "operators.hpp"

namespace modcav::scen {

using model::SystemConfig;
using ops::Complex;
using ops::Matrix;

// ---- scenario specification ----

enum class InitialState { gg0, ge0, eg0, ee0, pp0 };

inline std::string to_string(InitialState s) {
    switch (s) {
        case InitialState::gg0: return "gg0";
        case InitialState::ge0: return "ge0";
        case InitialState::eg0: return "eg0";
        case InitialState::ee0: return "ee0";
        case InitialState::pp0: return "pp0";
    }
    throw std::invalid_argument("initial state: bad enum value");
}

inline InitialState initial_state_from_string(const std::string& s) {
    if (s == "gg0") return InitialState::gg0;
    if (s == "ge0") return InitialState::ge0;
    if (s == "eg0") return InitialState::eg0;
    if (s == "ee0") return InitialState::ee0;
    if (s == "pp0") return InitialState::pp0;
    throw std::invalid_argument("initial state: unknown name '" + s + "'");
}

// One sweep dimension. `fields` change together (zipped); each entry of
// `values` holds one value string per field. Axes are crossed into a grid.
struct SweepAxis {
    std::vector<std::string> fields;
    std::vector<std::vector<std::string>> values;
};

struct ScenarioSpec {
    std::string name = "scenario";
    SystemConfig config{};
    InitialState initial_state = InitialState::gg0;
    double t_final = 10.0;  // cycles (omega t / 2pi)
    int samples = 501;
    dynamics::IntegratorOptions integrator{};
    std::vector<SweepAxis> sweep;
    std::string output_path;  // empty = environment override or ./out
};

// ---- dotted-key field access ----

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string format_g(double v, int precision) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value '" + v + "' for " + key);
    }
}

inline int parse_int(const std::string& v, const std::string& key) {
    const double x = parse_double(v, key);
    const int i = static_cast<int>(std::lround(x));
    if (std::abs(x - i) > 1e-9)
        throw std::invalid_argument("config: expected integer value for " + key);
    return i;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: expected boolean value for " + key);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

struct FieldRef {
    double* d = nullptr;
    int* i = nullptr;
    bool* b = nullptr;
    bool found() const { return d || i || b; }
};

inline FieldRef field_ref(ScenarioSpec& s, const std::string& key) {
    auto& c = s.config;
    if (key == "system.omega") return {.d = &c.omega};
    if (key == "system.omega_q.1") return {.d = &c.omega_q[0]};
    if (key == "system.omega_q.2") return {.d = &c.omega_q[1]};
    if (key == "system.g.1") return {.d = &c.g[0]};
    if (key == "system.g.2") return {.d = &c.g[1]};
    if (key == "system.kappa") return {.d = &c.kappa};
    if (key == "system.gamma.1") return {.d = &c.gamma[0]};
    if (key == "system.gamma.2") return {.d = &c.gamma[1]};
    if (key == "system.gamma_phi.1") return {.d = &c.gamma_phi[0]};
    if (key == "system.gamma_phi.2") return {.d = &c.gamma_phi[1]};
    if (key == "system.n_fock") return {.i = &c.n_fock};
    for (int l = 0; l < 2; ++l) {
        const std::string p = "modulation." + std::to_string(l + 1) + ".";
        if (key == p + "f0") return {.d = &c.modulation[l].f0};
        if (key == p + "delta_f") return {.d = &c.modulation[l].delta_f};
        if (key == p + "omega_d") return {.d = &c.modulation[l].omega_d};
        if (key == p + "phase") return {.d = &c.modulation[l].phase};
        if (key == p + "enabled") return {.b = &c.modulation[l].enabled};
    }
    if (key == "scenario.t_final") return {.d = &s.t_final};
    if (key == "scenario.samples") return {.i = &s.samples};
    return {};
}

}  // namespace detail

// Assigns one dotted-key field from its text form; unknown keys are errors.
inline void set_field(ScenarioSpec& spec, const std::string& key, const std::string& value) {
    if (key == "scenario.name") {
        spec.name = value;
        return;
    }
    if (key == "scenario.initial_state") {
        spec.initial_state = initial_state_from_string(value);
        return;
    }
    if (key == "scenario.output_path") {
        spec.output_path = value;
        return;
    }
    auto ref = detail::field_ref(spec, key);
    if (ref.d)
        *ref.d = detail::parse_double(value, key);
    else if (ref.i)
        *ref.i = detail::parse_int(value, key);
    else if (ref.b)
        *ref.b = detail::parse_bool(value, key);
    else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline std::string get_field(const ScenarioSpec& spec, const std::string& key) {
    if (key == "scenario.name") return spec.name;
    if (key == "scenario.initial_state") return to_string(spec.initial_state);
    if (key == "scenario.output_path") return spec.output_path;
    auto ref = detail::field_ref(const_cast<ScenarioSpec&>(spec), key);
    if (ref.d) return detail::format_g(*ref.d, 17);
    if (ref.i) return std::to_string(*ref.i);
    if (ref.b) return *ref.b ? "true" : "false";
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline bool is_sweepable_field(const std::string& key) {
    if (key == "scenario.initial_state") return true;
    ScenarioSpec scratch;
    return detail::field_ref(scratch, key).found();
}

// Ordered keys of the non-sweep scalar fields, also the config-file order.
inline const std::vector<std::string>& scalar_field_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v{"scenario.name", "scenario.initial_state",
                                   "scenario.t_final", "scenario.samples",
                                   "system.omega",
                                   "system.omega_q.1", "system.omega_q.2",
                                   "system.g.1", "system.g.2",
                                   "system.kappa",
                                   "system.gamma.1", "system.gamma.2",
                                   "system.gamma_phi.1", "system.gamma_phi.2",
                                   "system.n_fock"};
        for (int l = 1; l <= 2; ++l)
            for (const char* f : {"f0", "delta_f", "omega_d", "phase", "enabled"})
                v.push_back("modulation." + std::to_string(l) + "." + f);
        return v;
    }();
    return names;
}

// ---- config file format ----

// Flat `key = value` lines, '#' comments; sweep axes as
//   sweep.<n>.fields = key[,key...]
//   sweep.<n>.values = v[:v...][,v[:v...]...]
inline std::string serialize_config(const ScenarioSpec& spec) {
    std::ostringstream out;
    for (const auto& key : scalar_field_names()) out << key << " = " << get_field(spec, key) << "\n";
    if (!spec.output_path.empty()) out << "scenario.output_path = " << spec.output_path << "\n";
    for (size_t a = 0; a < spec.sweep.size(); ++a) {
        const auto& ax = spec.sweep[a];
        out << "sweep." << a + 1 << ".fields = ";
        for (size_t f = 0; f < ax.fields.size(); ++f)
            out << (f ? "," : "") << ax.fields[f];
        out << "\nsweep." << a + 1 << ".values = ";
        for (size_t v = 0; v < ax.values.size(); ++v) {
            out << (v ? "," : "");
            for (size_t f = 0; f < ax.values[v].size(); ++f)
                out << (f ? ":" : "") << ax.values[v][f];
        }
        out << "\n";
    }
    return out.str();
}

inline void validate(const ScenarioSpec& spec) {
    model::validate(spec.config);
    if (spec.t_final <= 0) throw std::invalid_argument("scenario: t_final must be positive");
    if (spec.samples < 2) throw std::invalid_argument("scenario: samples must be >= 2");
    for (const auto& ax : spec.sweep) {
        if (ax.fields.empty()) throw std::invalid_argument("scenario: sweep axis without fields");
        for (const auto& f : ax.fields)
            if (!is_sweepable_field(f))
                throw std::invalid_argument("scenario: sweep field '" + f + "' does not exist");
        if (ax.values.empty()) throw std::invalid_argument("scenario: sweep axis without values");
        for (const auto& tuple : ax.values)
            if (tuple.size() != ax.fields.size())
                throw std::invalid_argument("scenario: sweep value arity mismatch");
    }
}

inline ScenarioSpec parse_config(const std::string& text) {
    ScenarioSpec spec;
    std::vector<std::pair<int, std::pair<std::string, std::string>>> sweep_lines;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.rfind("sweep.", 0) == 0) {
            const auto rest = key.substr(6);
            const auto dot = rest.find('.');
            if (dot == std::string::npos)
                throw std::invalid_argument("config: malformed sweep key '" + key + "'");
            const int idx = detail::parse_int(rest.substr(0, dot), key);
            sweep_lines.push_back({idx, {rest.substr(dot + 1), value}});
            continue;
        }
        set_field(spec, key, value);
    }
    int max_axis = 0;
    for (const auto& [idx, kv] : sweep_lines) max_axis = std::max(max_axis, idx);
    spec.sweep.resize(max_axis);
    for (const auto& [idx, kv] : sweep_lines) {
        if (idx < 1) throw std::invalid_argument("config: sweep axis index must be >= 1");
        auto& ax = spec.sweep[idx - 1];
        if (kv.first == "fields") {
            ax.fields = detail::split(kv.second, ',');
        } else if (kv.first == "values") {
            ax.values.clear();
            for (const auto& tuple : detail::split(kv.second, ','))
                ax.values.push_back(detail::split(tuple, ':'));
        } else {
            throw std::invalid_argument("config: unknown sweep attribute '" + kv.first + "'");
        }
    }
    validate(spec);
    return spec;
}

// ---- initial states ----

// Density matrix for the named initial product state (cavity in vacuum).
inline Matrix initial_density(const SystemConfig& cfg, InitialState state) {
    const int d = model::dim(cfg);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
    switch (state) {
        case InitialState::gg0: psi(model::basis_index(cfg, 0, 0, 0)) = 1.0; break;
        case InitialState::ge0: psi(model::basis_index(cfg, 0, 1, 0)) = 1.0; break;
        case InitialState::eg0: psi(model::basis_index(cfg, 1, 0, 0)) = 1.0; break;
        case InitialState::ee0: psi(model::basis_index(cfg, 1, 1, 0)) = 1.0; break;
        case InitialState::pp0:
            for (int q1 = 0; q1 < 2; ++q1)
                for (int q2 = 0; q2 < 2; ++q2) psi(model::basis_index(cfg, q1, q2, 0)) = 0.5;
            break;
    }
    return psi * psi.adjoint();
}

// ---- presets ----

namespace detail {

inline ScenarioSpec dissipative_base(const std::string& name, double g, double gamma,
                                     double kappa) {
    ScenarioSpec s;
    s.name = name;
    s.config.g = {g, g};
    s.config.kappa = kappa;
    s.config.gamma = {gamma, gamma};
    const double gphi = gamma / 0.67;  // T2/T1 = 0.67
    s.config.gamma_phi = {gphi, gphi};
    s.config.modulation = {model::mirror_to_mirror(0.0), model::mirror_to_mirror(0.0)};
    return s;
}

inline SweepAxis axis(const std::string& field, std::initializer_list<double> values) {
    SweepAxis ax;
    ax.fields = {field};
    for (double v : values) ax.values.push_back({format_g(v, 17)});
    return ax;
}

}  // namespace detail

// Named parameter sets. Times are cycles; couplings and rates are in cavity
// units. Sweeps hold the drive-frequency (and for s3, configuration) cells
// each scenario is probed at.
inline ScenarioSpec preset(const std::string& name) {
    using detail::axis;
    const bool bad_cavity = name.size() && name.back() == 'b';
    if (name == "fig2a" || name == "fig2b") {
        auto s = detail::dissipative_base(name, 0.02, 0.002, bad_cavity ? 0.2 : 0.002);
        s.initial_state = InitialState::gg0;
        s.t_final = 40.0;
        s.samples = 801;
        s.sweep = {axis("modulation.1.omega_d", {0.0, 1.0, 2.0}),
                   axis("modulation.2.omega_d", {0.0, 1.0})};
        return s;
    }
    if (name == "fig3a" || name == "fig3b") {
        auto s = detail::dissipative_base(name, 0.02, 0.002, bad_cavity ? 0.2 : 0.002);
        s.config.g[0] = 0.0;  // first qubit decoupled
        s.initial_state = InitialState::ge0;
        s.t_final = 10.0;
        s.samples = 501;
        s.sweep = {axis("modulation.2.omega_d", {0.0, 0.5, 1.0, 1.5, 2.0})};
        return s;
    }
    if (name == "fig4a" || name == "fig4b" || name == "s2a" || name == "s2b") {
        auto s = detail::dissipative_base(name, 0.02, 0.002, 0.2);
        s.config.modulation[1].omega_d = bad_cavity ? 1.0 : 0.0;  // second qubit static / at omega
        s.initial_state = InitialState::ge0;
        s.t_final = 10.0;
        s.samples = 501;
        s.sweep = {axis("modulation.1.omega_d", {0.0, 0.5, 1.0, 1.5, 2.0})};
        return s;
    }
    if (name == "fig5a" || name == "fig5b") {
        auto s = detail::dissipative_base(name, 0.01, 0.001, 0.1);
        s.config.omega_q[0] = 1.1;  // detuned first qubit
        s.config.modulation[0] =
            model::quarter_centered(2.0, std::numbers::pi / (bad_cavity ? 16.0 : 4.0));
        s.config.modulation[1] = model::mirror_to_mirror(2.0);
        s.initial_state = InitialState::ge0;
        s.t_final = 20.0;
        s.samples = 801;
        return s;
    }
    if (name == "s1a" || name == "s1b") {
        auto s = detail::dissipative_base(name, 0.02, 0.002, bad_cavity ? 0.2 : 0.002);
        s.config.omega = 0.4;  // off-resonant cavity, qubit gap as the unit
        s.initial_state = InitialState::gg0;
        s.t_final = 40.0;
        s.samples = 801;
        SweepAxis ax;
        ax.fields = {"modulation.1.omega_d", "modulation.2.omega_d"};
        for (double wd : {0.0, 0.4, 1.4})
            ax.values.push_back({detail::format_g(wd, 17), detail::format_g(wd, 17)});
        s.sweep = {ax};
        return s;
    }
    if (name == "s3") {
        auto s = detail::dissipative_base(name, 0.01, 0.001, 0.001);
        s.config.modulation = {model::mirror_to_mirror(2.0), model::mirror_to_mirror(2.0)};
        s.initial_state = InitialState::ee0;
        s.t_final = 10.0;
        s.samples = 501;
        SweepAxis state_axis;
        state_axis.fields = {"scenario.initial_state"};
        state_axis.values = {{"ee0"}, {"pp0"}};
        SweepAxis motion;  // moving pair vs uncoupled-static reference
        motion.fields = {"system.g.1", "modulation.1.omega_d", "modulation.2.omega_d"};
        motion.values = {{"0.01", "2", "2"}, {"0", "0", "0"}};
        s.sweep = {axis("system.kappa", {0.001, 0.1}), state_axis, motion};
        return s;
    }
    throw std::invalid_argument("preset: unknown name '" + name + "'");
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig2a", "fig2b", "fig3a", "fig3b",
                                                "fig4a", "fig4b", "fig5a", "fig5b",
                                                "s1a",   "s1b",   "s2a",   "s2b",   "s3"};
    return names;
}

// ---- sweep expansion ----

using PointCoords = std::vector<std::pair<std::string, std::string>>;

inline std::vector<PointCoords> expand_sweep(const ScenarioSpec& spec) {
    std::vector<PointCoords> points{{}};
    for (const auto& ax : spec.sweep) {
        std::vector<PointCoords> next;
        for (const auto& base : points)
            for (const auto& tuple : ax.values) {
                PointCoords p = base;
                for (size_t f = 0; f < ax.fields.size(); ++f)
                    p.push_back({ax.fields[f], tuple[f]});
                next.push_back(std::move(p));
            }
        points = std::move(next);
    }
    return points;
}

// ---- output files ----

namespace detail {

inline std::string resolve_output_dir(const ScenarioSpec& spec) {
    if (!spec.output_path.empty()) return spec.output_path;
    if (const char* env = std::getenv("MODCAV_OUTPUT_DIR"); env && *env) return env;
    return "out";
}

inline std::ofstream open_file(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open output file " + path.string());
    return f;
}

inline void write_csv_row(std::ofstream& f, const double* vals, int n) {
    char buf[64];
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", vals[i]);
        f << (i ? "," : "") << buf;
    }
    f << "\n";
}

}  // namespace detail

// Directory all runners write into: explicit output_path, else the
// MODCAV_OUTPUT_DIR environment variable, else ./out.
inline std::string output_directory(const ScenarioSpec& spec) {
    return detail::resolve_output_dir(spec);
}

// Observable trace as CSV: fixed schema, 12 significant digits.
inline void write_trace_csv(const std::filesystem::path& path, const obs::ObservableTrace& tr) {
    auto f = detail::open_file(path);
    f << "time,concurrence,p_q1,p_q2,n_photons,purity\n";
    for (size_t i = 0; i < tr.size(); ++i) {
        const double row[6] = {tr.times[i],     tr.concurrence[i], tr.p_q1[i],
                               tr.p_q2[i],      tr.n_photons[i],   tr.purity[i]};
        detail::write_csv_row(f, row, 6);
    }
}

// ---- runners ----

struct PointRecord {
    int index = 0;
    PointCoords coords;
    std::string csv_file;  // empty when the point failed before producing one
    double trace_drift = 0.0;
    double min_eigenvalue = 0.0;
    double hermiticity_defect = 0.0;
    double fock_delta = 0.0;
    double wall_time_s = 0.0;
    bool failed = false;
    std::string error;
};

struct RunSummary {
    std::string output_dir;
    std::string manifest_path;
    std::vector<PointRecord> points;
    bool any_failed = false;
};

namespace detail {

struct FinalObservables {
    double c, p1, p2, nph, pur;
};

inline FinalObservables final_observables(const obs::ObservableTrace& tr) {
    const size_t i = tr.size() - 1;
    return {tr.concurrence[i], tr.p_q1[i], tr.p_q2[i], tr.n_photons[i], tr.purity[i]};
}

inline double observable_delta(const FinalObservables& a, const FinalObservables& b) {
    return std::max({std::abs(a.c - b.c), std::abs(a.p1 - b.p1), std::abs(a.p2 - b.p2),
                     std::abs(a.nph - b.nph), std::abs(a.pur - b.pur)});
}

// Final-sample observables of one evolution, without retaining the trajectory.
inline FinalObservables evolve_final(const ScenarioSpec& spec) {
    const Matrix rho0 = initial_density(spec.config, spec.initial_state);
    obs::ObservableTrace tail;
    dynamics::evolve_sampled(spec.config, rho0, spec.t_final, spec.integrator, 2,
                             [&](double tc, const Matrix& rho) {
                                 tail = obs::ObservableTrace{};
                                 obs::append_sample(tail, tc, rho);
                             });
    return final_observables(tail);
}

}  // namespace detail

// Runs every sweep point: evolve, write one observable CSV per point, rerun
// the endpoint at n_fock+5 for the truncation delta, and write a manifest.
// Integration failures are recorded per point and do not abort the others.
inline RunSummary run(const ScenarioSpec& spec) {
    validate(spec);
    RunSummary summary;
    const std::filesystem::path dir = detail::resolve_output_dir(spec);
    std::filesystem::create_directories(dir);
    summary.output_dir = dir.string();

    const auto points = expand_sweep(spec);
    for (size_t k = 0; k < points.size(); ++k) {
        PointRecord rec;
        rec.index = static_cast<int>(k);
        rec.coords = points[k];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ScenarioSpec pt = spec;
            pt.sweep.clear();
            for (const auto& [key, value] : rec.coords) set_field(pt, key, value);
            validate(pt);

            const Matrix rho0 = initial_density(pt.config, pt.initial_state);
            obs::ObservableTrace trace;
            const auto diag = dynamics::evolve_sampled(
                pt.config, rho0, pt.t_final, pt.integrator, pt.samples,
                [&](double tc, const Matrix& rho) { obs::append_sample(trace, tc, rho); });
            rec.trace_drift = diag.max_trace_drift;
            rec.min_eigenvalue = diag.min_eigenvalue;
            rec.hermiticity_defect = diag.max_hermiticity_defect;

            ScenarioSpec refined = pt;
            refined.config.n_fock += 5;
            rec.fock_delta = detail::observable_delta(detail::final_observables(trace),
                                                      detail::evolve_final(refined));

            rec.csv_file = spec.name + "_point" + std::to_string(k) + ".csv";
            write_trace_csv(dir / rec.csv_file, trace);
            rec.failed = rec.trace_drift > 1e-6 || rec.fock_delta > 1e-3;
            if (rec.failed) rec.error = "diagnostics beyond thresholds";
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
        }
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        summary.any_failed = summary.any_failed || rec.failed;
        summary.points.push_back(std::move(rec));
    }

    const std::filesystem::path manifest = dir / (spec.name + "_manifest.txt");
    auto f = detail::open_file(manifest);
    f << "scenario.name = " << spec.name << "\n";
    f << "points = " << summary.points.size() << "\n";
    for (const auto& p : summary.points) {
        const std::string pre = "point." + std::to_string(p.index) + ".";
        for (const auto& [key, value] : p.coords) f << pre << "coord." << key << " = " << value << "\n";
        if (!p.csv_file.empty()) f << pre << "csv = " << p.csv_file << "\n";
        f << pre << "trace_drift = " << detail::format_g(p.trace_drift, 12) << "\n";
        f << pre << "min_eigenvalue = " << detail::format_g(p.min_eigenvalue, 12) << "\n";
        f << pre << "hermiticity_defect = " << detail::format_g(p.hermiticity_defect, 12) << "\n";
        f << pre << "fock_delta = " << detail::format_g(p.fock_delta, 12) << "\n";
        f << pre << "wall_time_s = " << detail::format_g(p.wall_time_s, 6) << "\n";
        f << pre << "status = " << (p.failed ? "FAILED" : "OK") << "\n";
        if (!p.error.empty()) f << pre << "error = " << p.error << "\n";
    }
    summary.manifest_path = manifest.string();
    return summary;
}

// Concurrence over a drive-frequency grid: per cell, C at the probe time and
// the trace maximum, as long-format CSV. Grid must stay within [0, 2.5 omega].
inline std::string sweep_concurrence_map(const ScenarioSpec& base,
                                         const std::vector<double>& omega_d1,
                                         const std::vector<double>& omega_d2, double t_probe) {
    validate(base);
    if (omega_d1.empty() || omega_d2.empty())
        throw std::invalid_argument("sweep_concurrence_map: empty grid");
    for (double wd : omega_d1)
        if (wd < 0 || wd > 2.5 * base.config.omega)
            throw std::out_of_range("sweep_concurrence_map: omega_d1 outside [0, 2.5 omega]");
    for (double wd : omega_d2)
        if (wd < 0 || wd > 2.5 * base.config.omega)
            throw std::out_of_range("sweep_concurrence_map: omega_d2 outside [0, 2.5 omega]");
    if (t_probe < 0 || t_probe > base.t_final)
        throw std::invalid_argument("sweep_concurrence_map: probe time outside the window");

    const std::filesystem::path dir = detail::resolve_output_dir(base);
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / (base.name + "_map.csv");
    auto f = detail::open_file(path);
    f << "omega_d1,omega_d2,c_at_probe,c_max\n";

    const int probe_idx =
        static_cast<int>(std::lround(t_probe / base.t_final * (base.samples - 1)));
    for (double w1 : omega_d1)
        for (double w2 : omega_d2) {
            ScenarioSpec cell = base;
            cell.sweep.clear();
            cell.config.modulation[0].omega_d = w1;
            cell.config.modulation[1].omega_d = w2;
            const Matrix rho0 = initial_density(cell.config, cell.initial_state);
            double c_probe = 0.0, c_max = 0.0;
            int idx = 0;
            dynamics::evolve_sampled(cell.config, rho0, cell.t_final, cell.integrator,
                                     cell.samples, [&](double, const Matrix& rho) {
                                         const Matrix r2 =
                                             ops::partial_trace({rho, model::layout(cell.config)},
                                                                {0, 1})
                                                 .mat;
                                         const double c = obs::concurrence(r2);
                                         c_max = std::max(c_max, c);
                                         if (idx == probe_idx) c_probe = c;
                                         ++idx;
                                     });
            const double row[4] = {w1, w2, c_probe, c_max};
            detail::write_csv_row(f, row, 4);
        }
    return path.string();
}

// Truncation / tolerance self-consistency: endpoint observables at n_fock+5,
// at halved tolerances, and at both, as deltas against the base run.
struct ConvergenceRow {
    std::string label;
    double d_concurrence, d_p_q1, d_p_q2, d_n_photons, d_purity;
};

struct ConvergenceReport {
    detail::FinalObservables baseline{};
    std::array<ConvergenceRow, 3> rows{};
    std::string path;
};

inline ConvergenceReport convergence_report(const ScenarioSpec& spec) {
    validate(spec);
    ScenarioSpec base = spec;
    base.sweep.clear();

    ConvergenceReport report;
    report.baseline = detail::evolve_final(base);

    auto delta_row = [&](const std::string& label, const ScenarioSpec& variant) {
        const auto v = detail::evolve_final(variant);
        const auto& b = report.baseline;
        return ConvergenceRow{label,
                              std::abs(v.c - b.c),     std::abs(v.p1 - b.p1),
                              std::abs(v.p2 - b.p2),   std::abs(v.nph - b.nph),
                              std::abs(v.pur - b.pur)};
    };

    ScenarioSpec fock = base;
    fock.config.n_fock += 5;
    ScenarioSpec tol = base;
    tol.integrator.rel_tol /= 2;
    tol.integrator.abs_tol /= 2;
    ScenarioSpec both = fock;
    both.integrator = tol.integrator;
    report.rows = {delta_row("fock_plus_5", fock), delta_row("half_tolerance", tol),
                   delta_row("combined", both)};

    const std::filesystem::path dir = detail::resolve_output_dir(spec);
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / (spec.name + "_convergence.txt");
    auto f = detail::open_file(path);
    f << "scenario.name = " << spec.name << "\n";
    f << "baseline.concurrence = " << detail::format_g(report.baseline.c, 12) << "\n";
    f << "baseline.p_q1 = " << detail::format_g(report.baseline.p1, 12) << "\n";
    f << "baseline.p_q2 = " << detail::format_g(report.baseline.p2, 12) << "\n";
    f << "baseline.n_photons = " << detail::format_g(report.baseline.nph, 12) << "\n";
    f << "baseline.purity = " << detail::format_g(report.baseline.pur, 12) << "\n";
    for (const auto& row : report.rows) {
        f << row.label << ".delta.concurrence = " << detail::format_g(row.d_concurrence, 12) << "\n";
        f << row.label << ".delta.p_q1 = " << detail::format_g(row.d_p_q1, 12) << "\n";
        f << row.label << ".delta.p_q2 = " << detail::format_g(row.d_p_q2, 12) << "\n";
        f << row.label << ".delta.n_photons = " << detail::format_g(row.d_n_photons, 12) << "\n";
        f << row.label << ".delta.purity = " << detail::format_g(row.d_purity, 12) << "\n";
    }
    report.path = path.string();
    return report;
}

}  // namespace modcav::scen
