#pragma once

// Lindblad master-equation integration,
//   drho/dt = -i[H(t), rho] + sum_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho}),
// with a fixed-step RK4 and an adaptive Dormand-Prince RK45 stepper, plus a
// dense exact-propagator oracle exp(dt*Liouvillian) for cross-validation.
//
// Time conventions: spans and reported time grids are in cycles (omega t / 2pi,
// the figure axis unit); integrator step sizes are in natural units 1/omega.

#include <Eigen/Sparse>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "operators.hpp"

namespace modcav::dynamics {

using ops::Complex;
using ops::Matrix;
using model::SystemConfig;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// ---- options and results ----

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorOptions {
    Method method = Method::rk45_adaptive;
    double dt = 0.0;          // fixed step / initial adaptive step; <= 0 = auto
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    bool renormalize_trace = false;
};

struct Diagnostics {
    double max_trace_drift = 0.0;        // max |tr(rho) - 1| after accepted steps, pre-correction
    double min_eigenvalue = 0.0;         // smallest eigenvalue seen at any sample
    double max_hermiticity_defect = 0.0; // max |rho - rho^dag| entry seen at any sample
    long step_count = 0;                 // accepted steps
};

struct EvolutionResult {
    std::vector<double> times;      // cycles, strictly increasing, uniform
    std::vector<Matrix> states;
    Diagnostics diagnostics;
};

struct IntegrationError : std::runtime_error {
    double t_fail;  // natural units
    explicit IntegrationError(double t)
        : std::runtime_error("dynamics: adaptive step underflow at t = " + std::to_string(t)),
          t_fail(t) {}
};

// ---- generator ----

// Reference Lindblad right-hand side; output is Hermitian and traceless up to
// round-off. The stepper uses the cached applier below, which must agree with
// this to machine precision (asserted in tests).
inline Matrix lindblad_rhs(const Matrix& H, const Matrix& rho, const std::vector<Matrix>& collapse) {
    if (H.rows() != rho.rows() || H.cols() != rho.cols())
        throw std::invalid_argument("lindblad_rhs: dimension mismatch");
    Matrix out = Complex(0, -1) * (H * rho - rho * H);
    for (const auto& L : collapse) {
        if (L.rows() != rho.rows())
            throw std::invalid_argument("lindblad_rhs: collapse operator dimension mismatch");
        const Matrix M = L.adjoint() * L;
        out += L * rho * L.adjoint() - 0.5 * (M * rho + rho * M);
    }
    return out;
}

namespace detail {

// Precomputed operators for fast repeated RHS evaluation. Exploits structure
// of this model: the bare Hamiltonian is diagonal, the coupling operators and
// collapse operators are sparse, and every L^dag L is diagonal, so the
// anticommutator {sum L^dag L, rho} reduces to an elementwise product. Each
// RHS costs O(d^2) instead of the O(d^3) of generic dense products.
struct Generator {
    using Sparse = Eigen::SparseMatrix<Complex>;

    SystemConfig cfg;
    Eigen::VectorXcd h_diag;  // bare Hamiltonian diagonal
    std::vector<Sparse> V;    // coupling operators per qubit with g folded in
    std::vector<int> vq;      // qubit index per V entry
    std::vector<Sparse> Ls;   // collapse operators
    std::vector<Sparse> Lds;  // adjoints
    Matrix m_pair;            // (i,j) -> (m_i + m_j)/2 with m = diag(sum L^dag L)
    mutable Matrix A, B, T;   // scratch

    explicit Generator(const SystemConfig& c) : cfg(c) {
        model::validate(cfg);
        const int d = model::dim(cfg);
        const Matrix H0 = model::bare_hamiltonian(cfg);
        if ((H0 - Matrix(H0.diagonal().asDiagonal())).cwiseAbs().maxCoeff() > 1e-14)
            throw std::logic_error("Generator: bare Hamiltonian is not diagonal");
        h_diag = H0.diagonal();
        for (int l = 0; l < 2; ++l)
            if (cfg.g[l] != 0.0) {
                V.push_back((cfg.g[l] * model::coupling_operator(cfg, l)).sparseView());
                vq.push_back(l);
            }
        Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
        for (const auto& Ld : model::collapse_operators(cfg)) {
            Ls.push_back(Ld.sparseView());
            Lds.push_back(Matrix(Ld.adjoint()).sparseView());
            const Matrix M = Ld.adjoint() * Ld;
            if ((M - Matrix(M.diagonal().asDiagonal())).cwiseAbs().maxCoeff() > 1e-14)
                throw std::logic_error("Generator: L^dag L is not diagonal");
            m += M.diagonal().real();
        }
        m_pair.resize(d, d);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) m_pair(i, j) = 0.5 * (m[i] + m[j]);
        A = B = T = Matrix::Zero(d, d);
    }

    void rhs(double t, const Matrix& rho, Matrix& out) const {
        A = h_diag.asDiagonal() * rho;
        for (size_t k = 0; k < V.size(); ++k) {
            const double c = model::modulation_value(cfg.modulation[vq[k]], t);
            T.noalias() = V[k] * rho;
            A += c * T;
        }
        out = Complex(0, -1) * (A - A.adjoint());
        for (size_t k = 0; k < Ls.size(); ++k) {
            B.noalias() = Ls[k] * rho;
            out.noalias() += B * Lds[k];
        }
        if (!Ls.empty()) out -= m_pair.cwiseProduct(rho);
    }
};

// Dormand-Prince 5(4) tableau.
struct DP45 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline double error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1, double atol,
                         double rtol) {
    double acc = 0.0;
    const auto* e = err.data();
    const auto* a = y0.data();
    const auto* b = y1.data();
    const Eigen::Index n = err.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
        const double q = std::abs(e[i]) / sc;
        acc = std::max(acc, q);
    }
    return acc;
}

inline double default_initial_step(const SystemConfig& cfg) {
    double f = std::max({cfg.omega, cfg.omega_q[0], cfg.omega_q[1], cfg.modulation[0].omega_d,
                         cfg.modulation[1].omega_d});
    return (two_pi / f) / 50.0;
}

}  // namespace detail

// ---- evolution ----

// Integrates from t=0 over t_final_cycles and hands each sample of the uniform
// grid (t=0 and `samples`-1 further points, inclusive of the endpoint) to
// `sink`. Sample times are hit exactly: the adaptive stepper clips to sample
// boundaries, the fixed stepper subdivides each sample interval evenly.
inline Diagnostics evolve_sampled(
    const SystemConfig& cfg, const Matrix& rho0, double t_final_cycles,
    const IntegratorOptions& opts, int samples,
    const std::function<void(double /*cycles*/, const Matrix&)>& sink) {
    if (t_final_cycles <= 0) throw std::invalid_argument("evolve: t_final must be positive");
    if (samples < 2) throw std::invalid_argument("evolve: need at least 2 samples");
    if (rho0.rows() != model::dim(cfg))
        throw std::invalid_argument("evolve: state dimension does not match config");

    detail::Generator gen(cfg);
    Diagnostics diag;
    const double span = t_final_cycles * two_pi;
    const double h_sample = span / (samples - 1);
    const int d = model::dim(cfg);

    Matrix y = rho0;
    Matrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), k5(d, d), k6(d, d), k7(d, d);
    Matrix ytmp(d, d), ynew(d, d), err(d, d);

    auto record = [&](double t_nat, const Matrix& rho) {
        Eigen::SelfAdjointEigenSolver<Matrix> es((rho + rho.adjoint()) / 2.0,
                                                 Eigen::EigenvaluesOnly);
        const double mineig = es.eigenvalues().minCoeff();
        if (diag.step_count == 0 && t_nat == 0.0)
            diag.min_eigenvalue = mineig;
        else
            diag.min_eigenvalue = std::min(diag.min_eigenvalue, mineig);
        diag.max_hermiticity_defect = std::max(diag.max_hermiticity_defect,
                                               (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        sink(t_nat / two_pi, rho);
    };
    auto after_step = [&](double /*t*/) {
        ++diag.step_count;
        const double drift = std::abs(y.trace() - Complex(1.0));
        diag.max_trace_drift = std::max(diag.max_trace_drift, drift);
        if (opts.renormalize_trace) y /= y.trace().real();
    };

    record(0.0, y);

    if (opts.method == Method::rk4_fixed) {
        const double dt_req = opts.dt > 0 ? opts.dt : detail::default_initial_step(cfg);
        const int nsub = std::max(1, static_cast<int>(std::ceil(h_sample / dt_req - 1e-12)));
        const double h = h_sample / nsub;
        for (int j = 1; j < samples; ++j) {
            double t = (j - 1) * h_sample;
            for (int s = 0; s < nsub; ++s) {
                gen.rhs(t, y, k1);
                ytmp = y + (h / 2) * k1;
                gen.rhs(t + h / 2, ytmp, k2);
                ytmp = y + (h / 2) * k2;
                gen.rhs(t + h / 2, ytmp, k3);
                ytmp = y + h * k3;
                gen.rhs(t + h, ytmp, k4);
                y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
                t += h;
                after_step(t);
            }
            record(j * h_sample, y);
        }
        return diag;
    }

    // Dormand-Prince 5(4), FSAL, error-clamped step control, steps clipped to
    // the sample grid so recorded times are exact.
    using T = detail::DP45;
    double h = opts.dt > 0 ? opts.dt : detail::default_initial_step(cfg);
    double t = 0.0;
    bool have_k1 = false;
    for (int j = 1; j < samples; ++j) {
        const double t_target = j * h_sample;
        while (t < t_target - 1e-12 * span) {
            bool clipped = false;
            double hs = h;
            if (t + hs > t_target) {
                hs = t_target - t;
                clipped = true;
            }
            if (hs < 1e-12) throw IntegrationError(t);
            if (!have_k1) {
                gen.rhs(t, y, k1);
                have_k1 = true;
            }
            ytmp = y + hs * (T::a21 * k1);
            gen.rhs(t + T::c2 * hs, ytmp, k2);
            ytmp = y + hs * (T::a31 * k1 + T::a32 * k2);
            gen.rhs(t + T::c3 * hs, ytmp, k3);
            ytmp = y + hs * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
            gen.rhs(t + T::c4 * hs, ytmp, k4);
            ytmp = y + hs * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
            gen.rhs(t + T::c5 * hs, ytmp, k5);
            ytmp = y + hs * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
            gen.rhs(t + hs, ytmp, k6);
            ynew = y + hs * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
            gen.rhs(t + hs, ynew, k7);
            err = hs * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
            const double en = detail::error_norm(err, y, ynew, opts.abs_tol, opts.rel_tol);
            if (en <= 1.0) {
                t += hs;
                y.swap(ynew);
                k1.swap(k7);  // FSAL
                after_step(t);
            }
            // On rejection t and y are unchanged, so k1 stays valid.
            const double factor =
                en > 0 ? std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0) : 5.0;
            const double h_next = hs * factor;
            if (!clipped || h_next < h) h = h_next;
        }
        t = t_target;  // absorb 1e-12-scale residual
        record(t, y);
    }
    return diag;
}

// Convenience wrapper retaining the full state trajectory.
inline EvolutionResult evolve(const SystemConfig& cfg, const Matrix& rho0, double t_final_cycles,
                              const IntegratorOptions& opts, int samples) {
    EvolutionResult res;
    res.times.reserve(samples);
    res.states.reserve(samples);
    res.diagnostics = evolve_sampled(cfg, rho0, t_final_cycles, opts, samples,
                                     [&](double tc, const Matrix& rho) {
                                         res.times.push_back(tc);
                                         res.states.push_back(rho);
                                     });
    return res;
}

// ---- exact propagator oracle ----

// Column-stacking vectorisation: vec(A X B) = (B^T kron A) vec(X).
inline Eigen::VectorXcd vectorize(const Matrix& rho) {
    return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

inline Matrix unvectorize(const Eigen::VectorXcd& v, int d) {
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

// Dense Liouvillian superoperator at fixed time t.
inline Matrix liouvillian_matrix(const SystemConfig& cfg, double t) {
    const Matrix H = model::hamiltonian(cfg, t);
    const int d = static_cast<int>(H.rows());
    const Matrix id = Matrix::Identity(d, d);
    Matrix sup = Complex(0, -1) * (ops::kron(id, H) - ops::kron(H.transpose().eval(), id));
    for (const auto& L : model::collapse_operators(cfg)) {
        const Matrix M = L.adjoint() * L;
        sup += ops::kron(L.conjugate().eval(), L);
        sup -= 0.5 * ops::kron(id, M);
        sup -= 0.5 * ops::kron(M.transpose().eval(), id);
    }
    return sup;
}

// Matrix exponential by scaling and squaring with a machine-precision Taylor
// core; norms here are modest (||A|| <~ 1 after scaling), so this is accurate
// and keeps the dependency surface flat.
inline Matrix expm(const Matrix& A) {
    const int d = static_cast<int>(A.rows());
    if (A.cols() != d) throw std::invalid_argument("expm: matrix must be square");
    const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
    int s = 0;
    double scaled = nrm;
    while (scaled > 0.5) {
        scaled /= 2;
        ++s;
    }
    const Matrix B = A / std::pow(2.0, s);
    Matrix term = Matrix::Identity(d, d);
    Matrix sum = term;
    for (int k = 1; k <= 40; ++k) {
        term = (term * B) / double(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int k = 0; k < s; ++k) sum = sum * sum;
    return sum;
}

// exp(dt * Liouvillian) with the generator frozen at the slice midpoint.
inline Matrix propagator_exact(const SystemConfig& cfg, double t0, double dt) {
    if (dt < 0) throw std::invalid_argument("propagator_exact: dt must be >= 0");
    const Matrix sup = liouvillian_matrix(cfg, t0 + dt / 2);
    return expm(dt * sup);
}

}  // namespace modcav::dynamics
