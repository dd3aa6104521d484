#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "spectroqsim/errors.hpp"
#include "spectroqsim/evolve.hpp"
#include "spectroqsim/linalg.hpp"
#include "spectroqsim/model.hpp"
#include "spectroqsim/units.hpp"

namespace spectroqsim {

// ---------------------------------------------------------------------------
// Phase cycling
// ---------------------------------------------------------------------------

struct PhaseCycleScheme {
    std::array<std::vector<double>, 4> phases;
    std::array<int, 4> p{1, 0, 0, 1};

    /// {0, 2pi/3, 4pi/3} on pulses 1-3 and {0} on pulse 4.
    static PhaseCycleScheme standard(std::array<int, 4> p_vector) {
        const double third = 2.0 * std::numbers::pi / 3.0;
        PhaseCycleScheme s;
        for (int j = 0; j < 3; ++j) s.phases[j] = {0.0, third, 2.0 * third};
        s.phases[3] = {0.0};
        s.p = p_vector;
        return s;
    }
    static PhaseCycleScheme rephasing() { return standard({1, 0, 0, 1}); }
    static PhaseCycleScheme nonrephasing() { return standard({0, 1, 0, 1}); }

    int size() const {
        int n = 1;
        for (const auto& ph : phases) n *= static_cast<int>(ph.size());
        return n;
    }

    /// Phases of combination k; the last pulse varies fastest.
    std::array<double, 4> phases_of(int k) const {
        if (k < 0 || k >= size()) throw ValidationError("PhaseCycleScheme: combination index out of range");
        std::array<double, 4> out{};
        for (int j = 3; j >= 0; --j) {
            const int n = static_cast<int>(phases[j].size());
            out[j] = phases[j][k % n];
            k /= n;
        }
        return out;
    }

    /// exp{+i sum_j (-1)^{s_j} phi_j} for combination k.
    cplx signature(int k, const std::array<int, 4>& s) const {
        const auto ph = phases_of(k);
        double arg = 0.0;
        for (int j = 0; j < 4; ++j) arg += (s[j] ? -1.0 : 1.0) * ph[j];
        return std::polar(1.0, arg);
    }

    void validate() const {
        for (const auto& ph : phases)
            if (ph.empty()) throw ValidationError("PhaseCycleScheme: every pulse needs at least one phase");
        for (int b : p)
            if (b != 0 && b != 1) throw ValidationError("PhaseCycleScheme: p entries must be 0 or 1");
    }
};

/// (1/K) sum_k v_k exp{-i sum_j (-1)^{p_j} phi_j^(k)}.
template <typename T>
cplx phase_cycle_combine(const std::vector<T>& values, const PhaseCycleScheme& scheme) {
    scheme.validate();
    const int k_total = scheme.size();
    if (static_cast<int>(values.size()) != k_total)
        throw DataError("phase_cycle_combine: expected " + std::to_string(k_total) + " values, got " +
                        std::to_string(values.size()));
    cplx acc = 0.0;
    for (int k = 0; k < k_total; ++k) acc += cplx(values[k]) * std::conj(scheme.signature(k, scheme.p));
    return acc / static_cast<double>(k_total);
}

/// Weights w_k such that the combination equals sum_k w_k v_k.
inline std::vector<cplx> phase_cycle_weights(const PhaseCycleScheme& scheme) {
    scheme.validate();
    std::vector<cplx> w(static_cast<std::size_t>(scheme.size()));
    for (int k = 0; k < scheme.size(); ++k) w[k] = std::conj(scheme.signature(k, scheme.p)) / double(scheme.size());
    return w;
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

struct FluorescenceSpec {
    double gamma1 = 1.0;
    double gamma2 = 2.0;

    void validate() const {
        if (!std::isfinite(gamma1) || !std::isfinite(gamma2) || gamma1 < 0.0 || gamma2 < 0.0)
            throw ValidationError("FluorescenceSpec: weights must be finite and >= 0");
    }

    double weight(int excitations) const {
        return excitations == 1 ? gamma1 : excitations == 2 ? gamma2 : 0.0;
    }
};

/// Gamma_1 P(M_1) + Gamma_2 P(M_2) from the diagonal of rho.
inline double fluorescence_expectation(const DensityMatrix& rho, const FluorescenceSpec& spec = {}) {
    spec.validate();
    const Matrix& m = rho.matrix();
    const int shift = rho.has_probe() ? 1 : 0;
    double f = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        f += spec.weight(excitation_count(static_cast<std::uint64_t>(i) >> shift)) * m(i, i).real();
    return f;
}

/// Coefficients beta_{l',l} = <E_l'|rho|E_l> in the system eigenbasis.
struct CoherenceVector {
    Matrix beta;
    std::vector<double> energies_cm;

    double gap(std::size_t l, std::size_t lp) const { return energies_cm[l] - energies_cm[lp]; }
};

inline CoherenceVector compute_coherence_vector(const DensityMatrix& rho, const EigenStructure& eig) {
    if (rho.has_probe()) throw ValidationError("compute_coherence_vector: trace out the probe first");
    if (rho.matrix().rows() != eig.vectors.rows()) throw ValidationError("compute_coherence_vector: dimension mismatch");
    return {eig.vectors.adjoint() * rho.matrix() * eig.vectors, eig.energies_cm};
}

/// J_{l',l} = sum_m J_m <E_l'|a_m|E_l> in cm^-1, kept only when l lies one
/// excitation manifold above l'.
inline Matrix effective_probe_couplings(const SystemSpec& spec, const ProbeSpec& probe, const EigenStructure& eig) {
    probe.validate(spec);
    const int n = spec.n_qub;
    const auto dim = std::int64_t{1} << n;
    if (eig.vectors.rows() != dim) throw ValidationError("effective_probe_couplings: dimension mismatch");
    Matrix a = Matrix::Zero(dim, dim);
    for (int m = 0; m < n; ++m) a += probe.probe_couplings[m] * lowering_op(n, m);
    Matrix out = eig.vectors.adjoint() * a * eig.vectors;
    for (Eigen::Index lp = 0; lp < dim; ++lp)
        for (Eigen::Index l = 0; l < dim; ++l)
            if (eig.manifold_of(l) != eig.manifold_of(lp) + 1) out(lp, l) = 0.0;
    return out;
}

/// First-order probe readout in the interaction picture. With the probe
/// starting in |0>, rho_pr(1,0) = -i t3 sum J_{l',l} beta_{l,l'} over
/// resonant transitions l' -> l, and <X> = 2 Re, <Y> = 2 Im of it.
/// For real couplings this is <X> = -2 t3 J Im beta_{l',l},
/// <Y> = -2 t3 J Re beta_{l',l} (angular J).
struct ProbeReadout {
    double x = 0.0;
    double y = 0.0;

    /// Y - iX, the detected complex amplitude.
    cplx amplitude() const { return {y, -x}; }
};

inline double default_resonance_window(double t3_fs) { return units::period_fs(1.0) / t3_fs; }

inline ProbeReadout perturbative_prediction(const CoherenceVector& cohs, const Matrix& couplings, double omega_pr,
                                            double t3_fs, double tol_window_cm) {
    const auto dim = static_cast<Eigen::Index>(cohs.energies_cm.size());
    cplx coherence = 0.0;
    for (Eigen::Index lp = 0; lp < dim; ++lp)
        for (Eigen::Index l = 0; l < dim; ++l) {
            if (couplings(lp, l) == cplx(0.0)) continue;
            if (std::abs(cohs.gap(l, lp) - omega_pr) >= tol_window_cm) continue;
            coherence += units::wavenumber_to_angular(1.0) * couplings(lp, l) * cohs.beta(l, lp);
        }
    coherence *= -I_unit * t3_fs;
    return {2.0 * coherence.real(), 2.0 * coherence.imag()};
}

inline ProbeReadout perturbative_prediction(const CoherenceVector& cohs, const Matrix& couplings, double omega_pr,
                                            double t3_fs) {
    return perturbative_prediction(cohs, couplings, omega_pr, t3_fs, default_resonance_window(t3_fs));
}

/// Transition energies between eigenstates of adjacent excitation
/// manifolds, cm^-1.
inline std::vector<double> adjacent_manifold_gaps(const EigenStructure& eig) {
    std::vector<double> gaps;
    for (std::size_t lp = 0; lp < eig.size(); ++lp)
        for (std::size_t l = 0; l < eig.size(); ++l)
            if (eig.manifold_of(l) == eig.manifold_of(lp) + 1) gaps.push_back(eig.energies_cm[l] - eig.energies_cm[lp]);
    return gaps;
}

struct T3Bounds {
    double lower_fs = 0.0;
    double upper_fs = 0.0;
    bool contains(double t3) const { return t3 > lower_fs && t3 < upper_fs; }
};

/// Lower bound 1/(c delta) where delta is the distance from omega_pr to the
/// nearest other transition; upper bound 1/(c n max J_m).
inline T3Bounds t3_bounds(const SystemSpec& spec, const ProbeSpec& probe) {
    probe.validate(spec);
    const auto eig = eigendecompose(build_system_hamiltonian(spec));
    constexpr double degenerate = 1e-9;
    double delta = std::numeric_limits<double>::infinity();
    for (double g : adjacent_manifold_gaps(eig)) {
        const double d = std::abs(probe.omega_pr - g);
        if (d > degenerate) delta = std::min(delta, d);
    }
    if (!std::isfinite(delta))
        throw ValidationError("t3_bounds: probe gap is degenerate with every system transition; lower bound is infinite");
    const double jmax = probe.max_coupling();
    T3Bounds b;
    b.lower_fs = units::period_fs(delta);
    b.upper_fs = jmax > 0.0 ? units::period_fs(spec.n_qub * jmax) : std::numeric_limits<double>::infinity();
    return b;
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

/// Uniform sampling of a delay: sample i sits at i * layers_per_sample * dt.
struct DelayGrid {
    int samples = 1;
    double dt_fs = 1.0;
    int layers_per_sample = 1;

    double spacing_fs() const { return dt_fs * layers_per_sample; }
    double time_fs(int i) const { return i * spacing_fs(); }
    int layers(int i) const { return i * layers_per_sample; }

    void validate(const char* name) const {
        if (samples < 0) throw ValidationError(std::string(name) + ": sample count must be >= 0");
        if (!(dt_fs > 0.0)) throw ValidationError(std::string(name) + ": dt must be > 0");
        if (layers_per_sample < 1) throw ValidationError(std::string(name) + ": layers per sample must be >= 1");
    }
};

/// Everything shared by both protocols up to the detection stage.
struct ProtocolSetup {
    SystemSpec system;
    std::array<PulseSpec, 4> pulses;
    int trotter_order = 2;
    DelayGrid t1{400, 1.25, 1};
    DelayGrid t2{20, 1.0, 30};
    NoiseSpec noise;
    PhaseCycleScheme scheme = PhaseCycleScheme::rephasing();
    FluorescenceSpec fluorescence;

    void validate() const {
        system.validate();
        for (const auto& p : pulses) p.validate(system);
        if (trotter_order != 1 && trotter_order != 2) throw ValidationError("trotter order must be 1 or 2");
        t1.validate("t1");
        t2.validate("t2");
        scheme.validate();
        fluorescence.validate();
        noise.p_z(t1.dt_fs);
        noise.p_z(t2.dt_fs);
    }
};

struct SqspDetection {
    DelayGrid t3{400, 1.25, 1};
};

struct PqpDetection {
    ProbeSpec probe;
    double t3_fs = 725.0;
    int layers = 580;

    double dt_fs() const { return t3_fs / layers; }
};

struct GridPoint {
    int t1 = 0;
    int t2 = 0;
    int phase = 0;
    /// t3 sample for SQSP, probe line for PQP.
    int last = 0;
};

/// Pulse 1, t1, pulse 2, t2, pulse 3. Shared verbatim by both protocols.
inline DensityMatrix pre_detection_state(const ProtocolSetup& setup, int t1_index, int t2_index, int phase_index) {
    const auto ph = setup.scheme.phases_of(phase_index);
    const auto& sys = setup.system;
    DensityMatrix rho = DensityMatrix::ground(sys.n_qub);
    rho = evolve_pulse(rho, sys, setup.pulses[0].with_phase(ph[0]), setup.noise);
    rho = evolve_free(rho, free_plan(sys, setup.trotter_order, setup.t1.dt_fs, setup.t1.layers(t1_index)), setup.noise);
    rho = evolve_pulse(rho, sys, setup.pulses[1].with_phase(ph[1]), setup.noise);
    rho = evolve_free(rho, free_plan(sys, setup.trotter_order, setup.t2.dt_fs, setup.t2.layers(t2_index)), setup.noise);
    rho = evolve_pulse(rho, sys, setup.pulses[2].with_phase(ph[2]), setup.noise);
    return rho;
}

/// Free t3 evolution, pulse 4 and fluorescence readout.
inline double sqsp_detect(const ProtocolSetup& setup, const SqspDetection& det, const DensityMatrix& rho3, int t3_index,
                          double phase4) {
    const auto& sys = setup.system;
    DensityMatrix rho =
        evolve_free(rho3, free_plan(sys, setup.trotter_order, det.t3.dt_fs, det.t3.layers(t3_index)), setup.noise);
    rho = evolve_pulse(rho, sys, setup.pulses[3].with_phase(phase4), setup.noise);
    return fluorescence_expectation(rho, setup.fluorescence);
}

inline double run_sqsp_point(const ProtocolSetup& setup, const SqspDetection& det, const GridPoint& pt) {
    const auto rho3 = pre_detection_state(setup, pt.t1, pt.t2, pt.phase);
    return sqsp_detect(setup, det, rho3, pt.last, setup.scheme.phases_of(pt.phase)[3]);
}

/// Probe Pauli expectations after undoing the free probe precession,
/// i.e. the probe coherence is multiplied by exp(+i w_pr t3).
inline ProbeReadout probe_readout(const DensityMatrix& rho_sp, double omega_pr, double t3_fs) {
    const Matrix pr = rho_sp.probe_state();
    const cplx c = pr(1, 0) * std::polar(1.0, units::radians(omega_pr, t3_fs));
    return {2.0 * c.real(), 2.0 * c.imag()};
}

inline ProbeReadout pqp_detect(const ProtocolSetup& setup, const PqpDetection& det, const DensityMatrix& rho3) {
    DensityMatrix rho = rho3.attach_probe();
    rho = evolve_system_probe(
        rho, system_probe_plan(setup.system, det.probe, setup.trotter_order, det.dt_fs(), det.layers), setup.noise);
    return probe_readout(rho, det.probe.omega_pr, det.t3_fs);
}

/// Pulses 1-3 and delays as in SQSP, then the probe stage. Pulse 4 is not
/// applied.
inline ProbeReadout run_pqp_point(const ProtocolSetup& setup, const PqpDetection& det, const GridPoint& pt) {
    return pqp_detect(setup, det, pre_detection_state(setup, pt.t1, pt.t2, pt.phase));
}

}  // namespace spectroqsim
