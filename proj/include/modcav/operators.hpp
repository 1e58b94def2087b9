#pragma once

// Dense complex operator algebra for a qubit x qubit x cavity Hilbert space.
// Basis ordering is fixed project-wide: subsystem 0 = qubit 1, subsystem 1 =
// qubit 2, subsystem 2 = cavity, with qubit basis (g, e) and sz = diag(-1, +1).
// Spaces stay small (dim <= ~100), so everything is dense Eigen.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace modcav::ops {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Square complex matrix carrying the tensor-product layout it acts on.
struct OperatorMatrix {
    Matrix mat;
    std::vector<int> subsystem_dims;

    int dim() const { return static_cast<int>(mat.rows()); }
};

inline int layout_dim(const std::vector<int>& layout) {
    int d = 1;
    for (int s : layout) {
        if (s <= 0) throw std::invalid_argument("operators: subsystem dims must be positive");
        d *= s;
    }
    return d;
}

inline void check_layout(const OperatorMatrix& op) {
    if (op.mat.rows() != op.mat.cols())
        throw std::invalid_argument("operators: matrix must be square");
    if (layout_dim(op.subsystem_dims) != op.dim())
        throw std::invalid_argument("operators: subsystem dims do not multiply to matrix dim");
}

// ---- elementary operators ----

// Truncated bosonic lowering operator: (k, k+1) = sqrt(k+1).
inline OperatorMatrix annihilation(int n_levels) {
    if (n_levels < 2) throw std::invalid_argument("annihilation: need at least 2 levels");
    Matrix a = Matrix::Zero(n_levels, n_levels);
    for (int k = 0; k + 1 < n_levels; ++k) a(k, k + 1) = std::sqrt(double(k + 1));
    return {a, {n_levels}};
}

enum class Pauli { x, y, z, plus, minus, identity };

// 2x2 qubit operators in the (g, e) basis: sz|e> = +|e>, s+|g> = |e>.
inline OperatorMatrix pauli(Pauli which) {
    Matrix m = Matrix::Zero(2, 2);
    switch (which) {
        case Pauli::x: m(0, 1) = 1; m(1, 0) = 1; break;
        case Pauli::y: m(0, 1) = Complex(0, 1); m(1, 0) = Complex(0, -1); break;
        case Pauli::z: m(0, 0) = -1; m(1, 1) = 1; break;
        case Pauli::plus: m(1, 0) = 1; break;
        case Pauli::minus: m(0, 1) = 1; break;
        case Pauli::identity: m.setIdentity(); break;
    }
    return {m, {2}};
}

// ---- tensor-product plumbing ----

inline Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

inline OperatorMatrix kron(const OperatorMatrix& A, const OperatorMatrix& B) {
    OperatorMatrix out{kron(A.mat, B.mat), A.subsystem_dims};
    out.subsystem_dims.insert(out.subsystem_dims.end(), B.subsystem_dims.begin(),
                              B.subsystem_dims.end());
    return out;
}

// Identity on every slot except `slot`, where `op` acts.
inline OperatorMatrix embed(const OperatorMatrix& op, int slot, const std::vector<int>& layout) {
    if (slot < 0 || slot >= static_cast<int>(layout.size()))
        throw std::invalid_argument("embed: slot out of range");
    if (op.dim() != layout[slot])
        throw std::invalid_argument("embed: operator dim " + std::to_string(op.dim()) +
                                    " does not match slot dim " + std::to_string(layout[slot]));
    Matrix acc = Matrix::Identity(1, 1);
    for (int s = 0; s < static_cast<int>(layout.size()); ++s) {
        if (s == slot)
            acc = kron(acc, op.mat);
        else
            acc = kron(acc, Matrix::Identity(layout[s], layout[s]));
    }
    return {acc, layout};
}

// ---- partial trace ----

// Reduced matrix on the kept slots (order preserved); trace is preserved.
inline OperatorMatrix partial_trace(const OperatorMatrix& rho, const std::vector<int>& keep) {
    check_layout(rho);
    const auto& dims = rho.subsystem_dims;
    const int n = static_cast<int>(dims.size());
    if (keep.empty()) throw std::invalid_argument("partial_trace: keep set must be nonempty");
    std::vector<bool> kept(n, false);
    for (int s : keep) {
        if (s < 0 || s >= n) throw std::invalid_argument("partial_trace: slot out of range");
        if (kept[s]) throw std::invalid_argument("partial_trace: duplicate slot");
        kept[s] = true;
    }
    for (size_t i = 1; i < keep.size(); ++i)
        if (keep[i] <= keep[i - 1])
            throw std::invalid_argument("partial_trace: keep slots must be increasing");

    std::vector<int> kdims, tdims;
    for (int s = 0; s < n; ++s) (kept[s] ? kdims : tdims).push_back(dims[s]);
    const int dk = layout_dim(kdims);
    const int dt = tdims.empty() ? 1 : layout_dim(tdims);

    // strides of each slot inside the full row index (row-major over slots)
    std::vector<int> stride(n, 1);
    for (int s = n - 2; s >= 0; --s) stride[s] = stride[s + 1] * dims[s + 1];

    // enumerate (kept index, traced index) -> full index
    std::vector<int> kslots, tslots;
    for (int s = 0; s < n; ++s) (kept[s] ? kslots : tslots).push_back(s);
    auto full_index = [&](int ki, int ti) {
        int idx = 0;
        for (int s = static_cast<int>(kslots.size()) - 1; s >= 0; --s) {
            idx += (ki % dims[kslots[s]]) * stride[kslots[s]];
            ki /= dims[kslots[s]];
        }
        for (int s = static_cast<int>(tslots.size()) - 1; s >= 0; --s) {
            idx += (ti % dims[tslots[s]]) * stride[tslots[s]];
            ti /= dims[tslots[s]];
        }
        return idx;
    };

    Matrix out = Matrix::Zero(dk, dk);
    for (int i = 0; i < dk; ++i)
        for (int j = 0; j < dk; ++j) {
            Complex acc = 0;
            for (int t = 0; t < dt; ++t) acc += rho.mat(full_index(i, t), full_index(j, t));
            out(i, j) = acc;
        }
    return {out, kdims};
}

// ---- density-matrix checks ----

struct DensityDiagnostics {
    double hermiticity_defect;  // max |rho - rho^dag|
    double trace_error;         // |tr(rho) - 1|
    double min_eigenvalue;
};

inline DensityDiagnostics density_diagnostics(const Matrix& rho) {
    DensityDiagnostics d{};
    d.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    d.trace_error = std::abs(rho.trace() - Complex(1.0));
    Eigen::SelfAdjointEigenSolver<Matrix> es((rho + rho.adjoint()) / 2.0,
                                             Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

// Validity per the tolerances used throughout: Hermitian to 1e-10, unit trace
// to 1e-8, eigenvalues above -1e-7.
inline bool is_density(const Matrix& rho, double herm_tol = 1e-10, double trace_tol = 1e-8,
                       double eig_tol = 1e-7) {
    auto d = density_diagnostics(rho);
    return d.hermiticity_defect <= herm_tol && d.trace_error <= trace_tol &&
           d.min_eigenvalue >= -eig_tol;
}

}  // namespace modcav::ops
