#pragma once

// Measured quantities: two-qubit concurrence (Wootters), per-qubit excitation
// probability, cavity photon number, purity, and a per-sample trace of all of
// them over an evolution result.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynamics.hpp"
#include "operators.hpp"

namespace modcav::obs {

using ops::Complex;
using ops::Matrix;

namespace detail {

// sigma_y kron sigma_y in the fixed (g,e) x (g,e) product basis.
inline const Matrix& spin_flip_kernel() {
    static const Matrix yy =
        ops::kron(ops::pauli(ops::Pauli::y).mat, ops::pauli(ops::Pauli::y).mat);
    return yy;
}

// Layout of a full-system state is always qubit x qubit x cavity; the cavity
// dimension is whatever is left after the two qubits.
inline std::vector<int> infer_layout(const Matrix& rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("observables: state must be square");
    if (rho.rows() % 4 != 0 || rho.rows() < 8)
        throw std::invalid_argument("observables: state dim must be 4 x (cavity levels >= 2)");
    return {2, 2, static_cast<int>(rho.rows()) / 4};
}

// Eigenvalues of a nearly Hermitian matrix, negatives clamped to zero with a
// round-off budget of 1e-9.
inline Eigen::VectorXd clamped_spectrum(const Matrix& m, const char* who) {
    Eigen::SelfAdjointEigenSolver<Matrix> es((m + m.adjoint()) / 2.0);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-9)
            throw std::runtime_error(std::string(who) +
                                     ": negative eigenvalue beyond clamp tolerance");
        // round-off-scale values (either sign) snap to zero so their square
        // roots cannot contribute at the 1e-8 level downstream
        if (ev(i) < 1e-13) ev(i) = 0;
    }
    return ev;
}

}  // namespace detail

// ---- pointwise observables ----

// Wootters concurrence of a two-qubit density matrix. The spectrum of
// rho*rhotilde is obtained from the Hermitian similarity partner
// sqrt(rho)*rhotilde*sqrt(rho), which is positive semidefinite by
// construction, so eigenvalues are real and clamping is pure round-off.
inline double concurrence(const Matrix& rho2q) {
    if (rho2q.rows() != 4 || rho2q.cols() != 4)
        throw std::invalid_argument("concurrence: expected a 4x4 two-qubit state");
    if ((rho2q - rho2q.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument("concurrence: input is not Hermitian within tolerance");
    if (std::abs(rho2q.trace() - Complex(1.0)) > 1e-6)
        throw std::invalid_argument("concurrence: input trace is not 1 within tolerance");

    // State eigenvalues may dip slightly negative from integration error; the
    // budget here matches is_density, not the tighter round-off clamp below.
    Eigen::SelfAdjointEigenSolver<Matrix> es((rho2q + rho2q.adjoint()) / 2.0);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-7)
            throw std::runtime_error("concurrence: state eigenvalue beyond clamp tolerance");
        // populations below round-off scale are exactly zero for this purpose;
        // keeping them would seed sqrt(rho) with 1e-8-scale spurious weight
        ev(i) = ev(i) < 1e-13 ? 0.0 : std::sqrt(ev(i));
    }
    const Matrix sqrt_rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();

    const Matrix& yy = detail::spin_flip_kernel();
    const Matrix rho_tilde = yy * rho2q.conjugate() * yy;
    const Eigen::VectorXd lam2 =
        detail::clamped_spectrum(sqrt_rho * rho_tilde * sqrt_rho, "concurrence");

    std::array<double, 4> lam{};
    for (int i = 0; i < 4; ++i) lam[i] = std::sqrt(lam2(i));
    std::sort(lam.begin(), lam.end(), std::greater<>());
    const double c = lam[0] - lam[1] - lam[2] - lam[3];
    return std::clamp(c, 0.0, 1.0);
}

// P(qubit in |e>) for the full qubit x qubit x cavity state.
inline double excitation_probability(const Matrix& rho, int qubit) {
    const auto layout = detail::infer_layout(rho);
    if (qubit < 0 || qubit > 1) throw std::out_of_range("excitation_probability: qubit index");
    const int nc = layout[2];
    double p = 0.0;
    // diagonal entries with the chosen qubit in |e>; basis index (q1*2+q2)*nc+n
    for (int q1 = 0; q1 < 2; ++q1)
        for (int q2 = 0; q2 < 2; ++q2) {
            if ((qubit == 0 ? q1 : q2) != 1) continue;
            for (int n = 0; n < nc; ++n) {
                const int idx = (q1 * 2 + q2) * nc + n;
                p += rho(idx, idx).real();
            }
        }
    return p;
}

// <a^dag a> for the full state.
inline double photon_number(const Matrix& rho) {
    const auto layout = detail::infer_layout(rho);
    const int nc = layout[2];
    double n_avg = 0.0;
    for (int q = 0; q < 4; ++q)
        for (int n = 0; n < nc; ++n) n_avg += n * rho(q * nc + n, q * nc + n).real();
    return n_avg;
}

// tr(rho^2); for Hermitian rho this is the squared Frobenius norm.
inline double purity(const Matrix& rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("purity: state must be square");
    return rho.squaredNorm();
}

// ---- observable traces ----

struct ObservableTrace {
    std::vector<double> times;  // cycles
    std::vector<double> concurrence;
    std::vector<double> p_q1;
    std::vector<double> p_q2;
    std::vector<double> n_photons;
    std::vector<double> purity;

    size_t size() const { return times.size(); }
};

// Evaluates all observables for one full-system sample and appends them; used
// both by trace_observables and by streaming runners that never retain states.
inline void append_sample(ObservableTrace& trace, double t_cycles, const Matrix& rho) {
    const auto layout = detail::infer_layout(rho);
    const Matrix rho2q = ops::partial_trace({rho, layout}, {0, 1}).mat;
    trace.times.push_back(t_cycles);
    trace.concurrence.push_back(concurrence(rho2q));
    trace.p_q1.push_back(excitation_probability(rho, 0));
    trace.p_q2.push_back(excitation_probability(rho, 1));
    trace.n_photons.push_back(photon_number(rho));
    trace.purity.push_back(purity(rho));
}

inline ObservableTrace trace_observables(const dynamics::EvolutionResult& result) {
    if (result.times.size() != result.states.size())
        throw std::invalid_argument("trace_observables: times/states length mismatch");
    ObservableTrace trace;
    for (size_t i = 0; i < result.times.size(); ++i)
        append_sample(trace, result.times[i], result.states[i]);
    return trace;
}

}  // namespace modcav::obs
