#include <gtest/gtest.h>

#include <numbers>

#include "spectroqsim/protocol.hpp"

using namespace spectroqsim;

namespace {

constexpr double third = 2.0 * std::numbers::pi / 3.0;

ProtocolSetup small_setup() {
    ProtocolSetup s;
    s.system = SystemSpec::paper_dimer();
    for (auto& p : s.pulses) p = PulseSpec::delta({-8000, -6400}, 0.015);
    s.t1 = {3, 1.25, 1};
    s.t2 = {2, 1.0, 3};
    s.noise = NoiseSpec{4.0};
    return s;
}

}  // namespace

TEST(PhaseCycle, StandardSchemeEnumeratesTwentySevenCombinations) {
    const auto s = PhaseCycleScheme::rephasing();
    EXPECT_EQ(s.size(), 27);
    const auto first = s.phases_of(0), second = s.phases_of(1), last = s.phases_of(26);
    EXPECT_EQ(first, (std::array<double, 4>{0, 0, 0, 0}));
    // pulse 4 has a single phase, so pulse 3 varies fastest
    EXPECT_DOUBLE_EQ(second[2], third);
    EXPECT_DOUBLE_EQ(second[0], 0.0);
    EXPECT_DOUBLE_EQ(last[0], 2 * third);
    EXPECT_DOUBLE_EQ(last[2], 2 * third);
    EXPECT_THROW(s.phases_of(27), ValidationError);
}

TEST(PhaseCycle, SelectsOnlyTheRequestedPathway) {
    for (const auto& scheme : {PhaseCycleScheme::rephasing(), PhaseCycleScheme::nonrephasing()}) {
        for (int bits = 0; bits < 16; ++bits) {
            const std::array<int, 4> s{bits >> 3 & 1, bits >> 2 & 1, bits >> 1 & 1, bits & 1};
            std::vector<cplx> v;
            for (int k = 0; k < scheme.size(); ++k) v.push_back(scheme.signature(k, s));
            const bool match = s[0] == scheme.p[0] && s[1] == scheme.p[1] && s[2] == scheme.p[2];
            EXPECT_NEAR(std::abs(phase_cycle_combine(v, scheme) - cplx(match ? 1.0 : 0.0)), 0.0, 1e-14) << bits;
        }
    }
}

TEST(PhaseCycle, WeightsReproduceCombination) {
    const auto scheme = PhaseCycleScheme::nonrephasing();
    std::vector<double> v;
    for (int k = 0; k < scheme.size(); ++k) v.push_back(std::sin(0.3 * k) + 0.1 * k);
    const auto w = phase_cycle_weights(scheme);
    cplx acc = 0.0;
    for (int k = 0; k < scheme.size(); ++k) acc += w[k] * v[k];
    EXPECT_NEAR(std::abs(acc - phase_cycle_combine(v, scheme)), 0.0, 1e-14);
    EXPECT_THROW(phase_cycle_combine(std::vector<double>(5, 0.0), scheme), DataError);
}

TEST(PhaseCycle, RejectsMalformedSchemes) {
    auto s = PhaseCycleScheme::rephasing();
    s.p[1] = 2;
    EXPECT_THROW(s.validate(), ValidationError);
    s = PhaseCycleScheme::rephasing();
    s.phases[3].clear();
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Fluorescence, WeightsByExcitationManifold) {
    Matrix rho = Matrix::Zero(4, 4);
    rho(0b01, 0b01) = 0.25;  // one excitation
    rho(0b11, 0b11) = 0.5;   // two excitations
    rho(0b00, 0b00) = 0.25;
    EXPECT_NEAR(fluorescence_expectation(DensityMatrix(rho)), 0.25 * 1.0 + 0.5 * 2.0, 1e-15);
    EXPECT_NEAR(fluorescence_expectation(DensityMatrix(rho), {3.0, 0.5}), 0.75 + 0.25, 1e-15);
    // the probe bit is ignored
    EXPECT_NEAR(fluorescence_expectation(DensityMatrix(rho).attach_probe()), 1.25, 1e-15);
    EXPECT_THROW(fluorescence_expectation(DensityMatrix(rho), {-1.0, 2.0}), ValidationError);
}

TEST(Coherence, EigenstateProjectorIsDiagonal) {
    const auto eig = eigendecompose(build_system_hamiltonian(SystemSpec::paper_dimer()));
    const Vector v = eig.vectors.col(2);
    const auto c = compute_coherence_vector(DensityMatrix::from_state(v), eig);
    Matrix expect = Matrix::Zero(4, 4);
    expect(2, 2) = 1.0;
    EXPECT_LT((c.beta - expect).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(c.gap(2, 0), eig.energies_cm[2] - eig.energies_cm[0], 1e-12);
    EXPECT_THROW(compute_coherence_vector(DensityMatrix::ground(2).attach_probe(), eig), ValidationError);
}

TEST(EffectiveCouplings, UncoupledSitesKeepBareCouplings) {
    const auto spec = SystemSpec::uncoupled({12000, 12500});
    const auto eig = eigendecompose(build_system_hamiltonian(spec));
    const auto j = effective_probe_couplings(spec, ProbeSpec{12000, {7, 3}}, eig);
    // only adjacent-manifold entries survive
    for (Eigen::Index lp = 0; lp < 4; ++lp)
        for (Eigen::Index l = 0; l < 4; ++l)
            if (eig.manifold_of(l) != eig.manifold_of(lp) + 1) {
                EXPECT_EQ(j(lp, l), cplx(0.0));
            }
    std::vector<double> mags;
    for (Eigen::Index l = 1; l <= 2; ++l) mags.push_back(std::abs(j(0, l)));
    std::sort(mags.begin(), mags.end());
    EXPECT_NEAR(mags[0], 3.0, 1e-12);
    EXPECT_NEAR(mags[1], 7.0, 1e-12);
}

TEST(T3Bounds, DimerWindowFromGapsAndCouplings) {
    const auto spec = SystemSpec::paper_dimer();
    const double split = std::sqrt(2.0) * 100.0;
    const auto b = t3_bounds(spec, ProbeSpec{12000 + split, {10, 10}});
    EXPECT_NEAR(b.lower_fs, units::period_fs(2 * split), 1e-9);
    EXPECT_NEAR(b.lower_fs, 117.93, 0.01);
    EXPECT_NEAR(b.upper_fs, 1667.82, 0.01);
    EXPECT_TRUE(b.contains(725.0));
    EXPECT_FALSE(b.contains(100.0));
}

TEST(T3Bounds, DegenerateProbeHasNoLowerBound) {
    EXPECT_THROW(t3_bounds(SystemSpec::uncoupled({12000}), ProbeSpec{12000, {5}}), ValidationError);
    const auto b = t3_bounds(SystemSpec::uncoupled({12000, 12500}), ProbeSpec{12000, {0, 0}});
    EXPECT_TRUE(std::isinf(b.upper_fs));
}

TEST(PerturbativePrediction, MatchesSimulatedProbeForWeakCoupling) {
    const auto spec = SystemSpec::uncoupled({12000});
    Vector psi(2);
    psi << std::cos(0.4), std::polar(std::sin(0.4), 0.7);
    const auto rho = DensityMatrix::from_state(psi);
    const ProbeSpec probe{12000, {2.0}};
    const double t3 = 400.0;
    ProtocolSetup setup;
    setup.system = spec;
    const PqpDetection det{probe, t3, 1600};
    const auto sim = pqp_detect(setup, det, rho);
    const auto eig = eigendecompose(build_system_hamiltonian(spec));
    const auto pred = perturbative_prediction(compute_coherence_vector(rho, eig),
                                              effective_probe_couplings(spec, probe, eig), probe.omega_pr, t3);
    EXPECT_LT(std::abs(pred.amplitude() - sim.amplitude()) / std::abs(pred.amplitude()), 0.02);
    // off-resonant probe sees nothing at first order
    const auto far = perturbative_prediction(compute_coherence_vector(rho, eig),
                                             effective_probe_couplings(spec, probe, eig), 12500, t3);
    EXPECT_EQ(far.amplitude(), cplx(0.0));
}

TEST(Readout, UndoesProbePrecession) {
    // probe in (|0> + e^{-i w t}|1>)/sqrt2 reads X = 1, Y = 0 after rotation
    const double w = 12000, t = 37.0;
    Vector pr(2);
    pr << 1.0, std::polar(1.0, -units::radians(w, t));
    pr /= std::sqrt(2.0);
    const Matrix rho = kron(DensityMatrix::ground(1).matrix(), pr * pr.adjoint());
    const auto r = probe_readout(DensityMatrix(rho, true), w, t);
    EXPECT_NEAR(r.x, 1.0, 1e-12);
    EXPECT_NEAR(r.y, 0.0, 1e-12);
    EXPECT_EQ(r.amplitude(), cplx(r.y, -r.x));
}

TEST(DelayGrid, LayersAndTimes) {
    const DelayGrid g{20, 1.0, 30};
    EXPECT_DOUBLE_EQ(g.spacing_fs(), 30.0);
    EXPECT_DOUBLE_EQ(g.time_fs(19), 570.0);
    EXPECT_EQ(g.layers(3), 90);
    EXPECT_THROW((DelayGrid{2, 0.0, 1}).validate("t2"), ValidationError);
}

TEST(PreDetection, PhysicalAndPhaseSensitive) {
    const auto s = small_setup();
    const auto a = pre_detection_state(s, 2, 1, 0);
    const auto b = pre_detection_state(s, 2, 1, 1);
    EXPECT_NO_THROW(a.validate());
    EXPECT_GT((a.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GT(run_sqsp_point(s, SqspDetection{{4, 1.25, 1}}, {2, 1, 0, 3}), 0.0);
}
