#pragma once

// Physical model: two qubits with harmonically modulated coupling to one
// cavity mode,
//   H(t) = w a^dag a + sum_l [ (wq_l/2) sz_l + g_l m_l(t) sx_l (a^dag + a) ],
//   m(t) = cos(f0 + delta_f cos(omega_d t + phase)),
// plus the Lindblad dissipator specification {sqrt(kappa) a, sqrt(gamma) s-,
// sqrt(gamma_phi/2) sz}. Units hbar = 1 with the cavity frequency as the
// default unit (omega = 1 unless a preset overrides it).

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "operators.hpp"

namespace modcav::model {

using ops::Matrix;
using ops::OperatorMatrix;

// ---- modulation ----

// m(t) = cos(f0 + delta_f cos(omega_d t + phase)); |m| <= 1 always.
// enabled=false freezes the qubit at its zero-modulation position, m = cos(f0).
struct ModulationProfile {
    double f0 = 0.0;
    double delta_f = 0.0;
    double omega_d = 0.0;
    double phase = 0.0;
    bool enabled = true;
};

inline double modulation_value(const ModulationProfile& p, double t) {
    if (!p.enabled) return std::cos(p.f0);
    return std::cos(p.f0 + p.delta_f * std::cos(p.omega_d * t + p.phase));
}

// Trajectory families used by the scenario presets, expressed directly as
// (f0, delta_f) phases. With mode wavelength 2 L_c, position offsets map to
// f0 = k x0 and oscillation amplitudes to delta_f = k amplitude, k = pi/L_c.

// Full-span oscillation between the cavity ends: f0 = delta_f = pi/2.
// Static limit (omega_d = 0) sits at an end with |m| = 1.
inline ModulationProfile mirror_to_mirror(double omega_d) {
    return {std::numbers::pi / 2, std::numbers::pi / 2, omega_d, 0.0, true};
}

// Pair of quarter-amplitude trajectories a quarter wavelength apart
// (f0 = pi/4 and 3pi/4, both delta_f = pi/4); the configuration whose
// perturbative exchange amplitude the analytics module expands.
inline std::array<ModulationProfile, 2> quarter_wave_pair(double omega_d) {
    return {ModulationProfile{std::numbers::pi / 4, std::numbers::pi / 4, omega_d, 0.0, true},
            ModulationProfile{3 * std::numbers::pi / 4, std::numbers::pi / 4, omega_d, 0.0, true}};
}

// Oscillation centred a quarter of the cavity from one end (f0 = pi/4) with a
// configurable amplitude (delta_f = pi/4 for quarter-span, pi/16 for the
// reduced-amplitude variant).
inline ModulationProfile quarter_centered(double omega_d, double delta_f) {
    return {std::numbers::pi / 4, delta_f, omega_d, 0.0, true};
}

// ---- system configuration ----

struct SystemConfig {
    double omega = 1.0;                        // cavity frequency (the unit)
    std::array<double, 2> omega_q{1.0, 1.0};   // qubit gaps; detuning = omega_q - omega
    std::array<double, 2> g{0.0, 0.0};         // bare couplings
    std::array<ModulationProfile, 2> modulation{};
    double kappa = 0.0;                        // cavity decay
    std::array<double, 2> gamma{0.0, 0.0};     // qubit relaxation (T1 = 1/gamma)
    std::array<double, 2> gamma_phi{0.0, 0.0}; // pure dephasing (T2 = 1/gamma_phi)
    int n_fock = 10;                           // cavity truncation, levels = n_fock + 1
};

inline void validate(const SystemConfig& cfg) {
    if (cfg.omega <= 0) throw std::invalid_argument("config: omega must be positive");
    if (cfg.n_fock < 1) throw std::invalid_argument("config: n_fock must be >= 1");
    if (cfg.kappa < 0) throw std::invalid_argument("config: kappa must be >= 0");
    for (int l = 0; l < 2; ++l) {
        if (cfg.g[l] < 0) throw std::invalid_argument("config: g must be >= 0");
        if (cfg.gamma[l] < 0 || cfg.gamma_phi[l] < 0)
            throw std::invalid_argument("config: rates must be >= 0");
        if (cfg.modulation[l].delta_f < 0)
            throw std::invalid_argument("config: delta_f must be >= 0");
        if (cfg.modulation[l].omega_d < 0)
            throw std::invalid_argument("config: omega_d must be >= 0");
    }
}

inline std::vector<int> layout(const SystemConfig& cfg) { return {2, 2, cfg.n_fock + 1}; }

inline int dim(const SystemConfig& cfg) { return 4 * (cfg.n_fock + 1); }

// ---- operator construction ----

// Static part w a^dag a + sum (wq_l/2) sz_l.
inline Matrix bare_hamiltonian(const SystemConfig& cfg) {
    const auto lay = layout(cfg);
    const auto num = ops::annihilation(cfg.n_fock + 1);
    Matrix h = cfg.omega * ops::embed({num.mat.adjoint() * num.mat, num.subsystem_dims}, 2, lay).mat;
    for (int l = 0; l < 2; ++l)
        h += 0.5 * cfg.omega_q[l] * ops::embed(ops::pauli(ops::Pauli::z), l, lay).mat;
    return h;
}

// Coupling operator of qubit l without its time-dependent factor: sx_l (a^dag + a).
inline Matrix coupling_operator(const SystemConfig& cfg, int l) {
    if (l < 0 || l > 1) throw std::invalid_argument("coupling_operator: qubit index must be 0 or 1");
    const auto lay = layout(cfg);
    const auto a = ops::annihilation(cfg.n_fock + 1);
    const Matrix x = ops::embed(ops::pauli(ops::Pauli::x), l, lay).mat;
    const Matrix ad_a = ops::embed({a.mat + a.mat.adjoint().eval(), a.subsystem_dims}, 2, lay).mat;
    return x * ad_a;
}

inline Matrix hamiltonian(const SystemConfig& cfg, double t) {
    validate(cfg);
    Matrix h = bare_hamiltonian(cfg);
    for (int l = 0; l < 2; ++l)
        if (cfg.g[l] != 0.0)
            h += cfg.g[l] * modulation_value(cfg.modulation[l], t) * coupling_operator(cfg, l);
    return h;
}

// Collapse operators with zero-rate entries omitted:
// sqrt(kappa) a, sqrt(gamma_l) s-_l, sqrt(gamma_phi_l / 2) sz_l.
// The sz normalisation makes qubit coherences decay at exactly gamma_phi.
inline std::vector<Matrix> collapse_operators(const SystemConfig& cfg) {
    validate(cfg);
    const auto lay = layout(cfg);
    std::vector<Matrix> out;
    if (cfg.kappa > 0)
        out.push_back(std::sqrt(cfg.kappa) *
                      ops::embed(ops::annihilation(cfg.n_fock + 1), 2, lay).mat);
    for (int l = 0; l < 2; ++l)
        if (cfg.gamma[l] > 0)
            out.push_back(std::sqrt(cfg.gamma[l]) *
                          ops::embed(ops::pauli(ops::Pauli::minus), l, lay).mat);
    for (int l = 0; l < 2; ++l)
        if (cfg.gamma_phi[l] > 0)
            out.push_back(std::sqrt(cfg.gamma_phi[l] / 2) *
                          ops::embed(ops::pauli(ops::Pauli::z), l, lay).mat);
    return out;
}

// Basis index of |q1 q2 n> with q = 0 (ground) or 1 (excited).
inline int basis_index(const SystemConfig& cfg, int q1, int q2, int n) {
    if (q1 < 0 || q1 > 1 || q2 < 0 || q2 > 1 || n < 0 || n > cfg.n_fock)
        throw std::out_of_range("basis_index: label out of range");
    return (q1 * 2 + q2) * (cfg.n_fock + 1) + n;
}

}  // namespace modcav::model
