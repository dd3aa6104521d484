#include <gtest/gtest.h>

#include <random>

#include "spectroqsim/evolve.hpp"

using namespace spectroqsim;

namespace {

Matrix random_density(int qubits, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    const auto dim = std::int64_t{1} << qubits;
    Matrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = cplx(n(rng), n(rng));
    Matrix rho = a * a.adjoint();
    return rho / rho.trace();
}

Matrix random_hermitian(int qubits, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    const auto dim = std::int64_t{1} << qubits;
    Matrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = cplx(n(rng), n(rng));
    return 0.5 * (a + a.adjoint());
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double trotter_error(const SystemSpec& spec, int order, double dt, double total) {
    const auto frags = system_fragments(spec);
    const Matrix layer = trotter_layer(frags, order, dt);
    Matrix u = Matrix::Identity(layer.rows(), layer.cols());
    for (int i = 0; i < static_cast<int>(std::lround(total / dt)); ++i) u = layer * u;
    return operator_norm(u - unitary_propagator(sum(frags).matrix(), total));
}

}  // namespace

TEST(Dephasing, MatchesKrausForm) {
    const Matrix rho = random_density(3, 1);
    const double p = 0.3;
    const auto out = apply_dephasing_channel(DensityMatrix(rho), p, {0, 2});
    Matrix expect = rho;
    for (int q : {0, 2}) {
        const Matrix z = single_qubit_op(3, q, Pauli::Z);
        expect = (1.0 - 0.5 * p) * expect + 0.5 * p * z * expect * z;
    }
    EXPECT_LT((out.matrix() - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Dephasing, FullStrengthKillsCoherenceKeepsPopulations) {
    Matrix rho(2, 2);
    rho << 0.5, 0.5, 0.5, 0.5;
    const auto out = apply_dephasing_channel(DensityMatrix(rho), 1.0, {0});
    EXPECT_DOUBLE_EQ(out.matrix()(0, 1).real(), 0.0);
    EXPECT_DOUBLE_EQ(out.matrix()(0, 0).real(), 0.5);
    EXPECT_TRUE(apply_dephasing_channel(DensityMatrix(rho), 0.0, {0}).matrix().isApprox(rho));
    EXPECT_THROW(apply_dephasing_channel(DensityMatrix(rho), 1.5, {0}), ValidationError);
}

TEST(Noise, PaperLayerProbability) {
    EXPECT_NEAR(NoiseSpec{4.0}.p_z(1.25), 0.94e-3, 0.01e-3);
    EXPECT_THROW(NoiseSpec{-1.0}.p_z(1.0), ValidationError);
    EXPECT_THROW(NoiseSpec{1e6}.p_z(1.0), ValidationError);
}

TEST(Trotter, CommutingFragmentsAreExact) {
    const auto spec = SystemSpec::uncoupled({12000, 12500});
    EXPECT_LT(trotter_error(spec, 1, 1.0, 50.0), 1e-11);
    EXPECT_LT(trotter_error(spec, 2, 1.0, 50.0), 1e-11);
}

TEST(Trotter, GlobalErrorOrders) {
    const auto spec = SystemSpec::paper_dimer();
    std::vector<double> dts{0.05, 0.1, 0.2, 0.5, 1.0}, e1, e2;
    for (double dt : dts) {
        e1.push_back(trotter_error(spec, 1, dt, 100.0));
        e2.push_back(trotter_error(spec, 2, dt, 100.0));
    }
    EXPECT_NEAR(slope(dts, e1), 1.0, 0.1);
    EXPECT_NEAR(slope(dts, e2), 2.0, 0.1);
}

TEST(Trotter, SecondOrderLayerIsTimeSymmetric) {
    const auto frags = system_fragments(SystemSpec::paper_dimer());
    const Matrix fwd = trotter_layer(frags, 2, 0.7), back = trotter_layer(frags, 2, -0.7);
    EXPECT_LT((fwd * back - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_THROW(trotter_layer(frags, 3, 0.1), ValidationError);
}

TEST(EvolveFree, NoiselessApproachesExactOracle) {
    const auto spec = SystemSpec::paper_dimer();
    const DensityMatrix rho(random_density(2, 4));
    const auto got = evolve_free(rho, free_plan(spec, 2, 0.05, 2000), NoiseSpec{});
    const auto exact = exact_evolve(rho, build_system_hamiltonian(spec), 100.0);
    EXPECT_LT(trace_distance(got.matrix(), exact.matrix()), 1e-6);
}

TEST(EvolveFree, ZeroLayersIsIdentity) {
    const DensityMatrix rho(random_density(2, 5));
    EXPECT_TRUE(evolve_free(rho, free_plan(SystemSpec::paper_dimer(), 2, 1.0, 0), NoiseSpec{4.0}).matrix().isApprox(rho.matrix()));
}

TEST(EvolveFree, NoisyChannelKeepsAPhysicalState) {
    const auto spec = SystemSpec::paper_dimer();
    const auto out = evolve_free(DensityMatrix(random_density(2, 6)), free_plan(spec, 2, 1.25, 300), NoiseSpec{40.0});
    EXPECT_NO_THROW(out.validate());
    EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
    EXPECT_GT(out.min_eigenvalue(), -1e-12);
}

TEST(EvolveFree, SymmetricPlacementDephasesTwicePerLayer) {
    // H = -(E/2) Z only: populations fixed, |rho_01| decays by (1 - p)^2 per layer
    const auto spec = SystemSpec::uncoupled({12000});
    Matrix rho(2, 2);
    rho << 0.5, 0.5, 0.5, 0.5;
    const NoiseSpec noise{10.0};
    const double p = noise.p_z(1.0);
    const auto second = evolve_free(DensityMatrix(rho), free_plan(spec, 2, 1.0, 25), noise);
    const auto first = evolve_free(DensityMatrix(rho), free_plan(spec, 1, 1.0, 25), noise);
    EXPECT_NEAR(std::abs(second.matrix()(0, 1)), 0.5 * std::pow(1.0 - p, 50), 1e-14);
    EXPECT_NEAR(std::abs(first.matrix()(0, 1)), 0.5 * std::pow(1.0 - p, 25), 1e-14);
}

TEST(LayerChannel, AdjointIsHeisenbergDual) {
    const auto spec = SystemSpec::paper_dimer();
    for (int order : {1, 2}) {
        const LayerChannel layer(free_plan(spec, order, 1.25, 1), NoiseSpec{30.0}, qubit_set_mask({0, 1}, 2));
        Matrix rho = random_density(2, 7), m = random_hermitian(2, 8);
        Matrix r = rho;
        layer.apply(r);
        const cplx before = (m * r).trace();
        layer.apply_adjoint(m);
        EXPECT_NEAR(std::abs(before - (m * rho).trace()), 0.0, 1e-13);
    }
}

TEST(PulseChannel, AdjointIsHeisenbergDual) {
    const auto spec = SystemSpec::paper_dimer();
    const auto pulse = PulseSpec::gaussian({-800, -640}, 12000, 5.0, 6.93, 14.0, 60).with_phase(0.9);
    const PulseChannel ch(spec, pulse, NoiseSpec{20.0});
    Matrix rho = random_density(2, 9), m = random_hermitian(2, 10);
    Matrix r = rho;
    ch.apply(r);
    const cplx before = (m * r).trace();
    ch.apply_adjoint(m);
    EXPECT_NEAR(std::abs(before - (m * rho).trace()), 0.0, 1e-13);
}

TEST(DeltaPulse, SingleQubitRotationClosedForm) {
    const auto spec = SystemSpec::uncoupled({12000});
    const double amp = 900.0, area = 0.3, phi = 1.1;
    const auto out = evolve_pulse(DensityMatrix::ground(1), spec, PulseSpec::delta({amp}, area).with_phase(phi), NoiseSpec{});
    // exp(-i a t (cos phi X + sin phi Y))|0> = cos(at)|0> - i e^{i phi} sin(at)|1>
    const double th = units::wavenumber_to_angular(amp) * area;
    Vector psi(2);
    psi << std::cos(th), -I_unit * std::polar(1.0, phi) * std::sin(th);
    EXPECT_LT((out.matrix() - psi * psi.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GaussianPulse, LayersFollowTheStatedProduct) {
    const auto spec = SystemSpec::paper_dimer();
    const auto pulse = PulseSpec::gaussian({-500, -400}, 12000, 5.0, 6.93, 14.0, 50);
    const auto us = pulse_unitaries(spec, pulse);
    ASSERT_EQ(us.size(), 50u);
    const double dt = pulse.step_fs();
    const Matrix expect = unitary_propagator(build_system_hamiltonian(spec).matrix(), dt) *
                          unitary_propagator(build_pulse_hamiltonian(spec, pulse, 7 * dt).matrix(), dt);
    EXPECT_LT((us[7] - expect).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(pulse_step_warning(spec, pulse).empty());
    auto coarse = pulse;
    coarse.steps = 5;
    std::string warned;
    evolve_pulse(DensityMatrix::ground(2), spec, coarse, NoiseSpec{}, [&](const std::string& w) { warned = w; });
    EXPECT_FALSE(warned.empty());
}

TEST(Probe, AttachAndPartialTraces) {
    const Matrix rho = random_density(2, 11);
    const auto sp = DensityMatrix(rho).attach_probe();
    EXPECT_EQ(sp.qubits(), 3);
    EXPECT_TRUE(sp.has_probe());
    EXPECT_TRUE(sp.system_state().matrix().isApprox(rho));
    const Matrix pr = sp.probe_state();
    EXPECT_NEAR(pr(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(pr(1, 0)), 0.0, 1e-15);
    EXPECT_THROW(evolve_pulse(sp, SystemSpec::paper_dimer(), PulseSpec::delta({1, 1}), NoiseSpec{}), ValidationError);
}

TEST(Probe, NoiselessProbeKeepsItsCoherence) {
    // uncoupled probe starting in |+>: only system qubits dephase
    const auto spec = SystemSpec::uncoupled({12000});
    Vector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    Matrix rho = kron(DensityMatrix::ground(1).matrix(), plus * plus.adjoint());
    const ProbeSpec probe{12000, {0.0}};
    const auto out = evolve_system_probe(DensityMatrix(rho, true), system_probe_plan(spec, probe, 2, 1.0, 100), NoiseSpec{20.0});
    EXPECT_NEAR(std::abs(out.probe_state()(0, 1)), 0.5, 1e-13);
    NoiseSpec noisy{20.0, false};
    const auto out2 = evolve_system_probe(DensityMatrix(rho, true), system_probe_plan(spec, probe, 2, 1.0, 100), noisy);
    EXPECT_LT(std::abs(out2.probe_state()(0, 1)), 0.5 * 0.9);
}

TEST(DensityMatrix, ValidationCatchesBadStates) {
    Matrix bad = Matrix::Identity(2, 2);
    EXPECT_THROW(DensityMatrix(bad).validate(), ValidationError);  // trace 2
    Matrix neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    EXPECT_THROW(DensityMatrix(neg).validate(), ValidationError);
    EXPECT_NO_THROW(DensityMatrix::ground(3).validate());
    EXPECT_NEAR(DensityMatrix::ground(3).purity(), 1.0, 1e-15);
}
