#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "modcav/observables.hpp"

using namespace modcav;
using ops::Complex;
using ops::Matrix;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::VectorXcd random_pure(int d, std::mt19937& rng) {
    std::normal_distribution<double> nd;
    Eigen::VectorXcd psi(d);
    for (int i = 0; i < d; ++i) psi(i) = Complex(nd(rng), nd(rng));
    psi /= psi.norm();
    return psi;
}

// 2x2 Haar-ish unitary from a random Hermitian generator.
Matrix random_unitary2(std::mt19937& rng) {
    std::normal_distribution<double> nd;
    Matrix h(2, 2);
    h(0, 0) = nd(rng);
    h(1, 1) = nd(rng);
    h(0, 1) = Complex(nd(rng), nd(rng));
    h(1, 0) = std::conj(h(0, 1));
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Eigen::VectorXcd phases(2);
    for (int i = 0; i < 2; ++i) phases(i) = std::exp(Complex(0.0, es.eigenvalues()(i)));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix bell_phi_plus() {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    v(0) = v(3) = 1 / std::sqrt(2.0);
    return v * v.adjoint();
}

}  // namespace

// ---- concurrence ----

TEST_CASE("concurrence of textbook states") {
    // product states carry no entanglement
    for (int k : {0, 1, 2, 3}) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
        v(k) = 1.0;
        CHECK(obs::concurrence(v * v.adjoint()) == Catch::Approx(0.0).margin(1e-12));
    }
    // maximally entangled states
    CHECK(obs::concurrence(bell_phi_plus()) == Catch::Approx(1.0).margin(1e-12));
    Eigen::VectorXcd psim = Eigen::VectorXcd::Zero(4);
    psim(1) = 1 / std::sqrt(2.0);
    psim(2) = -1 / std::sqrt(2.0);
    CHECK(obs::concurrence(psim * psim.adjoint()) == Catch::Approx(1.0).margin(1e-12));
    // maximally mixed state
    CHECK(obs::concurrence(Matrix::Identity(4, 4) / 4.0) == Catch::Approx(0.0).margin(1e-12));
    // partially entangled pure state cos|gg> + sin|ee>: C = sin(2 theta)
    const double th = 0.3;
    Eigen::VectorXcd part = Eigen::VectorXcd::Zero(4);
    part(0) = std::cos(th);
    part(3) = std::sin(th);
    CHECK(obs::concurrence(part * part.adjoint()) ==
          Catch::Approx(std::sin(2 * th)).margin(1e-12));
}

TEST_CASE("concurrence of Werner states follows (3p-1)/2") {
    const Matrix bell = bell_phi_plus();
    for (double p : {0.9, 0.5, 1.0 / 3.0, 0.2}) {
        const Matrix rho = p * bell + (1 - p) * Matrix::Identity(4, 4) / 4.0;
        const double expected = std::max(0.0, (3 * p - 1) / 2);
        CHECK(obs::concurrence(rho) == Catch::Approx(expected).margin(1e-12));
    }
}

TEST_CASE("concurrence equals the pure-state spin-flip formula") {
    std::mt19937 rng(2024);
    const Matrix& yy = obs::detail::spin_flip_kernel();
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Eigen::VectorXcd psi = random_pure(4, rng);
        const double direct = std::abs((psi.adjoint() * yy * psi.conjugate()).value());
        worst = std::max(worst, std::abs(obs::concurrence(psi * psi.adjoint()) - direct));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("concurrence is invariant under local unitaries and qubit swap") {
    std::mt19937 rng(7);
    for (int k = 0; k < 50; ++k) {
        const Eigen::VectorXcd psi = random_pure(4, rng);
        const Matrix rho = psi * psi.adjoint();
        const Matrix u = ops::kron(random_unitary2(rng), random_unitary2(rng));
        CHECK(std::abs(obs::concurrence(u * rho * u.adjoint()) - obs::concurrence(rho)) < 1e-10);

        // swap the two qubits: index bits exchange
        Matrix swap = Matrix::Zero(4, 4);
        swap(0, 0) = swap(3, 3) = swap(1, 2) = swap(2, 1) = 1;
        CHECK(std::abs(obs::concurrence(swap * rho * swap) - obs::concurrence(rho)) < 1e-10);
    }
}

TEST_CASE("concurrence input validation") {
    CHECK_THROWS_AS(obs::concurrence(Matrix::Identity(8, 8) / 8.0), std::invalid_argument);
    Matrix nonherm = Matrix::Identity(4, 4) / 4.0;
    nonherm(0, 1) = Complex(0.0, 1e-3);
    CHECK_THROWS_AS(obs::concurrence(nonherm), std::invalid_argument);
    CHECK_THROWS_AS(obs::concurrence(Matrix::Identity(4, 4)), std::invalid_argument);
    Matrix negative = Matrix::Identity(4, 4) / 4.0;
    negative(3, 3) = -0.25;
    negative(0, 0) = 0.75;
    CHECK_THROWS_AS(obs::concurrence(negative), std::runtime_error);
}

// ---- excitation probability / photon number / purity ----

TEST_CASE("excitation probabilities on product states") {
    model::SystemConfig cfg;
    cfg.n_fock = 2;
    const int d = model::dim(cfg);

    Eigen::VectorXcd ge = Eigen::VectorXcd::Zero(d);
    ge(model::basis_index(cfg, 0, 1, 0)) = 1.0;
    const Matrix rho_ge = ge * ge.adjoint();
    CHECK(obs::excitation_probability(rho_ge, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(obs::excitation_probability(rho_ge, 1) == Catch::Approx(1.0).margin(1e-15));

    Eigen::VectorXcd pp = Eigen::VectorXcd::Zero(d);
    for (int q1 = 0; q1 < 2; ++q1)
        for (int q2 = 0; q2 < 2; ++q2) pp(model::basis_index(cfg, q1, q2, 0)) = 0.5;
    const Matrix rho_pp = pp * pp.adjoint();
    CHECK(obs::excitation_probability(rho_pp, 0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(obs::excitation_probability(rho_pp, 1) == Catch::Approx(0.5).margin(1e-15));

    CHECK_THROWS_AS(obs::excitation_probability(rho_ge, 2), std::out_of_range);
    CHECK_THROWS_AS(obs::excitation_probability(Matrix::Identity(4, 4) / 4.0, 0),
                    std::invalid_argument);
}

TEST_CASE("photon number on Fock states and superpositions") {
    model::SystemConfig cfg;
    cfg.n_fock = 3;
    const int d = model::dim(cfg);
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(d);
    vac(model::basis_index(cfg, 1, 1, 0)) = 1.0;
    CHECK(obs::photon_number(vac * vac.adjoint()) == Catch::Approx(0.0).margin(1e-15));

    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(d);
    one(model::basis_index(cfg, 0, 0, 1)) = 1.0;
    CHECK(obs::photon_number(one * one.adjoint()) == Catch::Approx(1.0).margin(1e-15));

    // equal superposition of n = 1 and n = 3 averages to 2
    Eigen::VectorXcd mix = Eigen::VectorXcd::Zero(d);
    mix(model::basis_index(cfg, 0, 0, 1)) = 1 / std::sqrt(2.0);
    mix(model::basis_index(cfg, 0, 0, 3)) = 1 / std::sqrt(2.0);
    CHECK(obs::photon_number(mix * mix.adjoint()) == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("purity of pure and mixed states") {
    std::mt19937 rng(9);
    const Eigen::VectorXcd psi = random_pure(8, rng);
    CHECK(obs::purity(psi * psi.adjoint()) == Catch::Approx(1.0).margin(1e-13));
    CHECK(obs::purity(Matrix::Identity(8, 8) / 8.0) == Catch::Approx(1.0 / 8).margin(1e-14));
    CHECK_THROWS_AS(obs::purity(Matrix::Zero(2, 3)), std::invalid_argument);
}

// ---- traces over evolutions ----

TEST_CASE("trace_observables walks an evolution result") {
    model::SystemConfig cfg;
    cfg.n_fock = 2;
    cfg.g = {0.05, 0.05};
    cfg.modulation = {model::mirror_to_mirror(1.0), model::mirror_to_mirror(1.0)};
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(model::dim(cfg));
    psi(model::basis_index(cfg, 0, 1, 0)) = 1.0;
    const auto res = dynamics::evolve(cfg, psi * psi.adjoint(), 2.0, {}, 9);
    const auto tr = obs::trace_observables(res);

    REQUIRE(tr.size() == 9);
    CHECK(tr.times == res.times);
    // the initial product state: no entanglement, qubit 2 excited, vacuum, pure
    CHECK(tr.concurrence[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(tr.p_q1[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(tr.p_q2[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(tr.n_photons[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(tr.purity[0] == Catch::Approx(1.0).margin(1e-12));
    // ranges stay physical along the whole trace
    for (size_t i = 0; i < tr.size(); ++i) {
        CHECK(tr.concurrence[i] >= 0.0);
        CHECK(tr.concurrence[i] <= 1.0);
        CHECK(tr.p_q1[i] >= -1e-9);
        CHECK(tr.p_q1[i] <= 1.0 + 1e-9);
        CHECK(tr.p_q2[i] >= -1e-9);
        CHECK(tr.p_q2[i] <= 1.0 + 1e-9);
        CHECK(tr.n_photons[i] >= -1e-9);
        CHECK(tr.purity[i] <= 1.0 + 1e-9);
        CHECK(tr.purity[i] >= 1.0 / model::dim(cfg) - 1e-9);
    }
    // closed system conserves purity
    CHECK(tr.purity.back() == Catch::Approx(1.0).margin(1e-7));

    dynamics::EvolutionResult broken = res;
    broken.times.pop_back();
    CHECK_THROWS_AS(obs::trace_observables(broken), std::invalid_argument);
}

TEST_CASE("relaxation shows up in the excitation probability trace") {
    model::SystemConfig cfg;
    cfg.n_fock = 1;
    cfg.gamma = {0.0, 0.25};
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(model::dim(cfg));
    psi(model::basis_index(cfg, 0, 1, 0)) = 1.0;
    const auto res = dynamics::evolve(cfg, psi * psi.adjoint(), 1.0, {}, 5);
    const auto tr = obs::trace_observables(res);
    for (size_t i = 0; i < tr.size(); ++i) {
        const double t_nat = tr.times[i] * 2 * pi;
        CHECK(tr.p_q2[i] == Catch::Approx(std::exp(-0.25 * t_nat)).margin(1e-7));
        CHECK(tr.p_q1[i] == Catch::Approx(0.0).margin(1e-9));
    }
}
