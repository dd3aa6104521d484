#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "spectroqsim/model.hpp"

using namespace spectroqsim;

namespace {

// Independent single-qubit matrices in the |0> = ground convention.
Matrix sx() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
Matrix sy() {
    Matrix m(2, 2);
    m << 0, -I_unit, I_unit, 0;
    return m;
}
Matrix sz() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
Matrix id2() { return Matrix::Identity(2, 2); }

double w(double cm) { return units::wavenumber_to_angular(cm); }

}  // namespace

TEST(Units, AngularConversionRoundTrips) {
    EXPECT_NEAR(units::wavenumber_to_angular(1.0), 2.0 * M_PI * 2.99792458e-5, 1e-18);
    EXPECT_NEAR(units::angular_to_wavenumber(units::wavenumber_to_angular(12345.6)), 12345.6, 1e-9);
    EXPECT_NEAR(units::period_fs(12000.0), 1.0 / (2.99792458e-5 * 12000.0), 1e-12);
}

TEST(Pauli, MatchesTextbookMatrices) {
    EXPECT_TRUE(pauli_string(1, {{0, Pauli::X}}).isApprox(sx()));
    EXPECT_TRUE(pauli_string(1, {{0, Pauli::Y}}).isApprox(sy()));
    EXPECT_TRUE(pauli_string(1, {{0, Pauli::Z}}).isApprox(sz()));
    // qubit 0 is the leftmost factor
    EXPECT_TRUE(pauli_string(2, {{0, Pauli::X}, {1, Pauli::Z}}).isApprox(kron(sx(), sz())));
    EXPECT_TRUE(lowering_op(2, 1).isApprox(kron(id2(), 0.5 * (sx() + I_unit * sy()))));
}

TEST(SystemHamiltonian, DimerMatchesKroneckerOracle) {
    const auto spec = SystemSpec::paper_dimer();
    const Matrix expect = -0.5 * w(12100) * kron(sz(), id2()) - 0.5 * w(11900) * kron(id2(), sz()) +
                          0.5 * w(100) * (kron(sx(), sx()) + kron(sy(), sy()));
    EXPECT_LT((build_system_hamiltonian(spec).matrix() - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SystemHamiltonian, IsHermitianAndConservesExcitations) {
    SystemSpec s = SystemSpec::uncoupled({12000, 12100, 12300});
    s.couplings(0, 1) = s.couplings(1, 0) = 80;
    s.couplings(1, 2) = s.couplings(2, 1) = -35;
    const auto h = build_system_hamiltonian(s);
    EXPECT_LT(hermitian_defect(h.matrix()), 1e-15);
    EXPECT_TRUE(conserves_excitation_number(h.matrix()));
}

TEST(Eigenstructure, DimerOneExcitonGapsMatchClosedForm) {
    const auto eig = eigendecompose(build_system_hamiltonian(SystemSpec::paper_dimer()));
    ASSERT_EQ(eig.size(), 4u);
    // ground -(E1+E2)/2, one-exciton 0 +- sqrt(((E1-E2)/2)^2 + J^2), double +(E1+E2)/2
    const double split = std::sqrt(100.0 * 100.0 + 100.0 * 100.0);
    EXPECT_NEAR(eig.energies_cm[0], -12000.0, 1e-8);
    EXPECT_NEAR(eig.energies_cm[1], -split, 1e-8);
    EXPECT_NEAR(eig.energies_cm[2], split, 1e-8);
    EXPECT_NEAR(eig.energies_cm[3], 12000.0, 1e-8);
    EXPECT_EQ(eig.manifold_of(0), 0);
    EXPECT_EQ(eig.manifold_of(1), 1);
    EXPECT_EQ(eig.manifold_of(2), 1);
    EXPECT_EQ(eig.manifold_of(3), 2);
    EXPECT_NEAR(12000.0 + split, 12141.4, 0.05);
}

TEST(Eigenstructure, VectorsDiagonalizeTheHamiltonian) {
    const auto h = build_system_hamiltonian(SystemSpec::paper_dimer());
    const auto eig = eigendecompose(h);
    const Matrix d = eig.vectors.adjoint() * h.matrix() * eig.vectors;
    for (std::size_t l = 0; l < eig.size(); ++l) EXPECT_NEAR(d(l, l).real(), w(eig.energies_cm[l]), 1e-12);
    Matrix off = d;
    off.diagonal().setZero();
    EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Eigenstructure, UnlabelledWhenNumberIsNotConserved) {
    const auto spec = SystemSpec::paper_dimer();
    const auto h = build_system_hamiltonian(spec) + build_pulse_hamiltonian(spec, PulseSpec::delta({-8000, -6400}), 0.0);
    const auto eig = eigendecompose(h);
    EXPECT_FALSE(eig.manifold.has_value());
    EXPECT_THROW(eig.manifold_of(0), ValidationError);
}

TEST(Fragments, OrderingAndZeroCouplingSkip) {
    SystemSpec s = SystemSpec::uncoupled({12000, 12100, 12300});
    s.couplings(0, 2) = s.couplings(2, 0) = 50;
    s.couplings(0, 1) = s.couplings(1, 0) = 20;
    const auto f = system_fragments(s);
    ASSERT_EQ(f.size(), 3u);  // diagonal, (0,1), (0,2); (1,2) is zero
    EXPECT_TRUE(f[0].matrix().isDiagonal());
    EXPECT_TRUE(f[1].matrix().isApprox(detail::exchange(3, 0, 1, 20)));
    EXPECT_TRUE(f[2].matrix().isApprox(detail::exchange(3, 0, 2, 50)));
    EXPECT_EQ(system_fragments(SystemSpec::uncoupled({12000})).size(), 1u);
}

TEST(Fragments, SumEqualsSystemProbeHamiltonian) {
    const auto spec = SystemSpec::paper_dimer();
    const ProbeSpec probe{12141.4, {10, 10}};
    const auto f = system_probe_fragments(spec, probe);
    ASSERT_EQ(f.size(), 4u);
    const Matrix hs = kron(build_system_hamiltonian(spec).matrix(), id2());
    const Matrix expect = hs + build_probe_hamiltonian(spec, probe).matrix();
    EXPECT_LT((sum(f).matrix() - expect).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(sum(f).qubits(), 3);
}

TEST(ProbeHamiltonian, CouplesProbeToEachSite) {
    const auto spec = SystemSpec::paper_dimer();
    const auto h = build_probe_hamiltonian(spec, ProbeSpec{12000, {10, 4}}).matrix();
    // <site0 excited, probe ground| H |site0 ground, probe excited> = J_0 in rad/fs
    EXPECT_NEAR(std::abs(h(0b100, 0b001)), w(10), 1e-15);
    EXPECT_NEAR(std::abs(h(0b010, 0b001)), w(4), 1e-15);
    EXPECT_NEAR(h(0b001, 0b001).real(), 0.5 * w(12000), 1e-15);
}

TEST(PulseHamiltonian, DeltaPhaseRotatesDriveAxis) {
    const auto spec = SystemSpec::uncoupled({12000});
    for (double phi : {0.0, 0.4, 2.0 * M_PI / 3.0}) {
        const auto h = build_pulse_hamiltonian(spec, PulseSpec::delta({100}).with_phase(phi), 0.0).matrix();
        // cos(phi) X + sin(phi) Y = e^{i phi} sigma+ + e^{-i phi} sigma-
        Matrix sp = Matrix::Zero(2, 2), sm = Matrix::Zero(2, 2);
        sp(1, 0) = 1.0;
        sm(0, 1) = 1.0;
        const Matrix expect = w(100) * (std::polar(1.0, phi) * sp + std::polar(1.0, -phi) * sm);
        EXPECT_LT((h - expect).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(PulseHamiltonian, GaussianCarrierAndEnvelope) {
    const auto spec = SystemSpec::uncoupled({12000});
    const auto p = PulseSpec::gaussian({50}, 12000, 5.0, 6.93, 14.0, 40);
    EXPECT_DOUBLE_EQ(p.envelope(6.93), 1.0);
    EXPECT_NEAR(p.envelope(6.93 + 5.0 / 2.0), std::exp(-0.5 * std::log(2.0)), 1e-15);
    const double t = 3.1;
    const auto h = build_pulse_hamiltonian(spec, p, t).matrix();
    EXPECT_NEAR(h(0, 1).real(), -w(50) * p.envelope(t) * std::cos(w(12000) * t), 1e-15);
    EXPECT_THROW(build_pulse_hamiltonian(spec, p, 15.0), ValidationError);
}

TEST(PulseSteps, EightSamplesPerCarrierPeriod) {
    // 805 nm carrier over a 14 fs window
    EXPECT_EQ(pulse_steps_for(14.0, 1e7 / 805.0), 42);
    const double period = units::period_fs(12000.0);
    EXPECT_EQ(pulse_steps_for(period, 12000.0), 8);
}

TEST(Validation, RejectsMalformedSpecs) {
    SystemSpec s = SystemSpec::paper_dimer();
    s.couplings(0, 1) = 5;  // asymmetric
    EXPECT_THROW(s.validate(), ValidationError);
    s = SystemSpec::paper_dimer();
    s.dipole_scales = {1.0};
    EXPECT_THROW(s.validate(), ValidationError);
    s = SystemSpec::paper_dimer();
    s.couplings(0, 0) = 1;
    EXPECT_THROW(s.validate(), ValidationError);
    EXPECT_THROW((ProbeSpec{12000, {1}}).validate(SystemSpec::paper_dimer()), ValidationError);
    EXPECT_THROW((ProbeSpec{-1, {1, 1}}).validate(SystemSpec::paper_dimer()), ValidationError);
    auto d = PulseSpec::delta({1, 1});
    d.steps = 3;
    EXPECT_THROW(d.validate(SystemSpec::paper_dimer()), ValidationError);
    EXPECT_THROW(PulseSpec::delta({1}).validate(SystemSpec::paper_dimer()), ValidationError);
}

TEST(Validation, NonHermitianOperatorRejected) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(HermitianOperator{m}, ValidationError);
    EXPECT_THROW(HermitianOperator{Matrix::Zero(3, 3)}, ValidationError);
}

TEST(Validation, QubitCapFromEnvironment) {
    ::setenv("SPECTROQSIM_DIM_CAP", "2", 1);
    EXPECT_THROW(build_system_hamiltonian(SystemSpec::uncoupled({1, 2, 3})), ResourceExhausted);
    EXPECT_NO_THROW(build_system_hamiltonian(SystemSpec::paper_dimer()));
    ::setenv("SPECTROQSIM_DIM_CAP", "zero", 1);
    EXPECT_THROW(qubit_cap(), ValidationError);
    ::unsetenv("SPECTROQSIM_DIM_CAP");
    EXPECT_EQ(qubit_cap(), 12);
}
