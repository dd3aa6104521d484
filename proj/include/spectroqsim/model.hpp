#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "spectroqsim/errors.hpp"
#include "spectroqsim/linalg.hpp"
#include "spectroqsim/units.hpp"

namespace spectroqsim {

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

/// Network of two-level molecules. Energies in cm^-1.
struct SystemSpec {
    int n_qub = 0;
    std::vector<double> site_energies;
    /// Symmetric n x n coupling matrix with zero diagonal; each unordered
    /// pair (m, n) contributes one (J/2)(XX + YY) term.
    RealMatrix couplings;
    /// Per-site transition-dipole weights multiplying X_m in pulse terms.
    std::vector<double> dipole_scales;

    static SystemSpec uncoupled(std::vector<double> energies) {
        SystemSpec s;
        s.n_qub = static_cast<int>(energies.size());
        s.site_energies = std::move(energies);
        s.couplings = RealMatrix::Zero(s.n_qub, s.n_qub);
        s.dipole_scales.assign(s.n_qub, 1.0);
        return s;
    }

    static SystemSpec dimer(double e1, double e2, double j12) {
        SystemSpec s = uncoupled({e1, e2});
        s.couplings(0, 1) = s.couplings(1, 0) = j12;
        return s;
    }

    /// Two-site network used throughout the numerical study.
    static SystemSpec paper_dimer() { return dimer(12100.0, 11900.0, 100.0); }

    void validate() const {
        if (n_qub < 1) throw ValidationError("SystemSpec: n_qub must be >= 1");
        if (static_cast<int>(site_energies.size()) != n_qub)
            throw ValidationError("SystemSpec: site_energies must have length n_qub");
        if (couplings.rows() != n_qub || couplings.cols() != n_qub)
            throw ValidationError("SystemSpec: couplings must be n_qub x n_qub");
        if (static_cast<int>(dipole_scales.size()) != n_qub)
            throw ValidationError("SystemSpec: dipole_scales must have length n_qub");
        for (double e : site_energies)
            if (!std::isfinite(e)) throw ValidationError("SystemSpec: non-finite site energy");
        for (double d : dipole_scales)
            if (!std::isfinite(d)) throw ValidationError("SystemSpec: non-finite dipole scale");
        for (int m = 0; m < n_qub; ++m) {
            if (couplings(m, m) != 0.0) throw ValidationError("SystemSpec: coupling diagonal must be zero");
            for (int n = 0; n < n_qub; ++n) {
                if (!std::isfinite(couplings(m, n))) throw ValidationError("SystemSpec: non-finite coupling");
                if (couplings(m, n) != couplings(n, m))
                    throw ValidationError("SystemSpec: couplings must be symmetric");
            }
        }
    }
};

/// Probe qubit attached as the highest-index qubit during detection.
struct ProbeSpec {
    double omega_pr = 0.0;
    std::vector<double> probe_couplings;

    void validate(const SystemSpec& system) const {
        if (!(omega_pr > 0.0) || !std::isfinite(omega_pr)) throw ValidationError("ProbeSpec: omega_pr must be > 0");
        if (static_cast<int>(probe_couplings.size()) != system.n_qub)
            throw ValidationError("ProbeSpec: probe_couplings length must equal n_qub");
        for (double j : probe_couplings)
            if (!std::isfinite(j)) throw ValidationError("ProbeSpec: non-finite probe coupling");
    }

    double max_coupling() const {
        double out = 0.0;
        for (double j : probe_couplings) out = std::max(out, std::abs(j));
        return out;
    }
};

enum class PulseProfile { Delta, Gaussian };

/// One pulse of the collinear sequence. The phase is overwritten per
/// phase-cycle combination by the protocol layer.
struct PulseSpec {
    PulseProfile profile = PulseProfile::Delta;
    double tau_fs = 0.0;
    double delay_fs = 0.0;
    double carrier_cm = 0.0;
    std::vector<double> amplitudes_cm;
    double phase = 0.0;
    double duration_fs = 0.0;
    int steps = 1;
    /// Delta profile only: the kick is exp(-i G * kick_area_fs) with the
    /// generator G in rad/fs.
    double kick_area_fs = 1.0;

    static PulseSpec delta(std::vector<double> amplitudes, double kick_area = 1.0) {
        PulseSpec p;
        p.amplitudes_cm = std::move(amplitudes);
        p.kick_area_fs = kick_area;
        return p;
    }

    static PulseSpec gaussian(std::vector<double> amplitudes, double carrier, double tau, double delay,
                              double duration, int steps) {
        PulseSpec p;
        p.profile = PulseProfile::Gaussian;
        p.amplitudes_cm = std::move(amplitudes);
        p.carrier_cm = carrier;
        p.tau_fs = tau;
        p.delay_fs = delay;
        p.duration_fs = duration;
        p.steps = steps;
        return p;
    }

    PulseSpec with_phase(double phi) const {
        PulseSpec p = *this;
        p.phase = phi;
        return p;
    }

    double step_fs() const { return steps > 0 ? duration_fs / steps : 0.0; }

    /// exp{-2 ln2 [(t - t_d)/tau]^2}; identically 1 for the delta profile.
    double envelope(double t) const {
        if (profile == PulseProfile::Delta) return 1.0;
        const double x = (t - delay_fs) / tau_fs;
        return std::exp(-2.0 * std::log(2.0) * x * x);
    }

    void validate(const SystemSpec& system) const {
        if (static_cast<int>(amplitudes_cm.size()) != system.n_qub)
            throw ValidationError("PulseSpec: amplitudes must have length n_qub");
        for (double a : amplitudes_cm)
            if (!std::isfinite(a)) throw ValidationError("PulseSpec: non-finite amplitude");
        if (!(duration_fs >= 0.0)) throw ValidationError("PulseSpec: duration must be >= 0");
        if (profile == PulseProfile::Delta) {
            if (steps != 1) throw ValidationError("PulseSpec: delta profile requires exactly one step");
            if (duration_fs != 0.0) throw ValidationError("PulseSpec: delta profile has zero duration");
        } else {
            if (steps < 1) throw ValidationError("PulseSpec: gaussian profile needs at least one step");
            if (!(tau_fs > 0.0)) throw ValidationError("PulseSpec: gaussian width must be > 0");
            if (!(duration_fs > 0.0)) throw ValidationError("PulseSpec: gaussian duration must be > 0");
        }
    }
};

/// Smallest step count whose step resolves the fastest relevant period
/// with `samples_per_period` points (8 by default, i.e. dt << 2 pi / w).
inline int pulse_steps_for(double duration_fs, double fastest_cm, int samples_per_period = 8) {
    const double max_step = units::period_fs(fastest_cm) / samples_per_period;
    return static_cast<int>(std::ceil(duration_fs / max_step - 1e-12));
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Dense Hermitian operator on a register of qubits, entries in rad/fs.
class HermitianOperator {
   public:
    HermitianOperator() = default;

    explicit HermitianOperator(Matrix m, double tol = 1e-12) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw ValidationError("HermitianOperator: matrix is not square");
        qubits_ = qubits_for_dimension(m_.rows());
        const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        if (hermitian_defect(m_) > tol * scale) throw ValidationError("HermitianOperator: matrix is not Hermitian");
    }

    const Matrix& matrix() const { return m_; }
    int qubits() const { return qubits_; }
    Eigen::Index dimension() const { return m_.rows(); }

    HermitianOperator operator+(const HermitianOperator& o) const { return HermitianOperator(m_ + o.m_); }

   private:
    Matrix m_;
    int qubits_ = 0;
};

/// Spectrum of a Hermitian operator. Energies in cm^-1, ascending.
struct EigenStructure {
    std::vector<double> energies_cm;
    Matrix vectors;
    /// Excitation number of each eigenstate when the operator conserves it.
    std::optional<std::vector<int>> manifold;

    std::size_t size() const { return energies_cm.size(); }

    /// Excitation number of eigenstate l; throws when labels are absent.
    int manifold_of(std::size_t l) const {
        if (!manifold) throw ValidationError("EigenStructure: operator does not conserve excitation number");
        return (*manifold)[l];
    }
};

inline bool conserves_excitation_number(const Matrix& h, double tol = 1e-12) {
    const int n = qubits_for_dimension(h.rows());
    const Matrix num = number_operator(n);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    return (h * num - num * h).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Diagonalizes H. When H commutes with the excitation-number operator the
/// problem is solved sector by sector so every eigenvector carries an exact
/// manifold label.
inline EigenStructure eigendecompose(const HermitianOperator& h) {
    const Matrix& m = h.matrix();
    const auto dim = m.rows();
    struct Pair {
        double energy;
        int manifold;
        Vector vec;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(dim));
    const bool blocked = conserves_excitation_number(m);
    if (blocked) {
        for (int sector = 0; sector <= h.qubits(); ++sector) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index i = 0; i < dim; ++i)
                if (excitation_count(static_cast<std::uint64_t>(i)) == sector) idx.push_back(i);
            Matrix block(idx.size(), idx.size());
            for (std::size_t a = 0; a < idx.size(); ++a)
                for (std::size_t b = 0; b < idx.size(); ++b) block(a, b) = m(idx[a], idx[b]);
            Eigen::SelfAdjointEigenSolver<Matrix> solver(block);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                Vector v = Vector::Zero(dim);
                for (std::size_t a = 0; a < idx.size(); ++a) v(idx[a]) = solver.eigenvectors()(a, k);
                pairs.push_back({solver.eigenvalues()(k), sector, std::move(v)});
            }
        }
        std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.energy < b.energy; });
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
        for (Eigen::Index k = 0; k < dim; ++k) pairs.push_back({solver.eigenvalues()(k), -1, solver.eigenvectors().col(k)});
    }

    EigenStructure out;
    out.vectors.resize(dim, dim);
    std::vector<int> labels;
    for (Eigen::Index k = 0; k < dim; ++k) {
        out.energies_cm.push_back(units::angular_to_wavenumber(pairs[k].energy));
        out.vectors.col(k) = pairs[k].vec;
        labels.push_back(pairs[k].manifold);
    }
    if (blocked) out.manifold = std::move(labels);
    return out;
}

// ---------------------------------------------------------------------------
// Hamiltonian builders
// ---------------------------------------------------------------------------

namespace detail {

inline Matrix on_site_fields(int qubits, const std::vector<double>& energies_cm) {
    const auto dim = std::int64_t{1} << qubits;
    Matrix out = Matrix::Zero(dim, dim);
    for (std::int64_t i = 0; i < dim; ++i) {
        double e = 0.0;
        for (std::size_t q = 0; q < energies_cm.size(); ++q) {
            const bool one = (static_cast<std::uint64_t>(i) & qubit_mask(static_cast<int>(q), qubits)) != 0;
            e += (one ? 0.5 : -0.5) * units::wavenumber_to_angular(energies_cm[q]);
        }
        out(i, i) = e;
    }
    return out;
}

/// (J/2)(X_a X_b + Y_a Y_b) = J (a_a^dag a_b + h.c.)
inline Matrix exchange(int qubits, int a, int b, double j_cm) {
    const double w = 0.5 * units::wavenumber_to_angular(j_cm);
    return w * (pauli_string(qubits, {{a, Pauli::X}, {b, Pauli::X}}) +
                pauli_string(qubits, {{a, Pauli::Y}, {b, Pauli::Y}}));
}

inline void check_system(const SystemSpec& spec, int extra_qubits = 0) {
    spec.validate();
    require_qubits_within_cap(spec.n_qub + extra_qubits);
}

}  // namespace detail

/// Hamiltonian fragments in the fixed Trotter ordering: all on-site Z
/// terms first (one diagonal fragment), then exchange terms in
/// lexicographic (m, n) order, then probe couplers. Zero couplings are
/// skipped.
inline std::vector<HermitianOperator> system_fragments(const SystemSpec& spec, int register_qubits) {
    std::vector<HermitianOperator> out;
    std::vector<double> fields = spec.site_energies;
    fields.resize(static_cast<std::size_t>(register_qubits), 0.0);
    out.emplace_back(detail::on_site_fields(register_qubits, fields));
    for (int m = 0; m < spec.n_qub; ++m)
        for (int n = m + 1; n < spec.n_qub; ++n)
            if (spec.couplings(m, n) != 0.0) out.emplace_back(detail::exchange(register_qubits, m, n, spec.couplings(m, n)));
    return out;
}

inline std::vector<HermitianOperator> system_fragments(const SystemSpec& spec) {
    detail::check_system(spec);
    return system_fragments(spec, spec.n_qub);
}

/// Fragments of H_S + H_PR on n_qub + 1 qubits; the probe Z field shares
/// the diagonal fragment with the site fields.
inline std::vector<HermitianOperator> system_probe_fragments(const SystemSpec& spec, const ProbeSpec& probe) {
    detail::check_system(spec, 1);
    probe.validate(spec);
    const int n = spec.n_qub + 1;
    std::vector<double> fields = spec.site_energies;
    fields.push_back(probe.omega_pr);
    std::vector<HermitianOperator> out;
    out.emplace_back(detail::on_site_fields(n, fields));
    for (int m = 0; m < spec.n_qub; ++m)
        for (int k = m + 1; k < spec.n_qub; ++k)
            if (spec.couplings(m, k) != 0.0) out.emplace_back(detail::exchange(n, m, k, spec.couplings(m, k)));
    for (int m = 0; m < spec.n_qub; ++m)
        if (probe.probe_couplings[m] != 0.0)
            out.emplace_back(detail::exchange(n, spec.n_qub, m, probe.probe_couplings[m]));
    return out;
}

inline HermitianOperator sum(const std::vector<HermitianOperator>& parts) {
    Matrix total = parts.front().matrix();
    for (std::size_t i = 1; i < parts.size(); ++i) total += parts[i].matrix();
    return HermitianOperator(std::move(total));
}

/// H_S = -sum_m (E_m/2) Z_m + sum_{m<n} (J_mn/2)(X_m X_n + Y_m Y_n), rad/fs.
inline HermitianOperator build_system_hamiltonian(const SystemSpec& spec) { return sum(system_fragments(spec)); }

/// H_PR = -(w_pr/2) Z_pr + sum_m (J_m/2)(X_pr X_m + Y_pr Y_m) on n_qub + 1
/// qubits with the probe last.
inline HermitianOperator build_probe_hamiltonian(const SystemSpec& spec, const ProbeSpec& probe) {
    detail::check_system(spec, 1);
    probe.validate(spec);
    const int n = spec.n_qub + 1;
    std::vector<double> fields(static_cast<std::size_t>(n), 0.0);
    fields.back() = probe.omega_pr;
    Matrix h = detail::on_site_fields(n, fields);
    for (int m = 0; m < spec.n_qub; ++m) h += detail::exchange(n, spec.n_qub, m, probe.probe_couplings[m]);
    return HermitianOperator(std::move(h));
}

/// H_SP = H_S (x) 1_pr + H_PR.
inline HermitianOperator build_system_probe_hamiltonian(const SystemSpec& spec, const ProbeSpec& probe) {
    return sum(system_probe_fragments(spec, probe));
}

/// Light-matter term at time t inside the pulse window.
///
/// Gaussian: -sum_m mu_m a_m E(t) cos(w_p t - phi) X_m.
/// Delta: the kick generator sum_m mu_m a_m (cos phi X_m + sin phi Y_m);
/// the carrier is absorbed and the phase rotates the drive axis so that a
/// ket-side excitation picks up exp(+i phi).
inline HermitianOperator build_pulse_hamiltonian(const SystemSpec& spec, const PulseSpec& pulse, double t) {
    detail::check_system(spec);
    pulse.validate(spec);
    if (t < 0.0 || t > pulse.duration_fs) throw ValidationError("build_pulse_hamiltonian: t outside the pulse window");
    const int n = spec.n_qub;
    const auto dim = std::int64_t{1} << n;
    Matrix h = Matrix::Zero(dim, dim);
    for (int m = 0; m < n; ++m) {
        const double a = units::wavenumber_to_angular(spec.dipole_scales[m] * pulse.amplitudes_cm[m]);
        if (a == 0.0) continue;
        if (pulse.profile == PulseProfile::Delta) {
            h += a * (std::cos(pulse.phase) * single_qubit_op(n, m, Pauli::X) +
                      std::sin(pulse.phase) * single_qubit_op(n, m, Pauli::Y));
        } else {
            const double carrier = std::cos(units::wavenumber_to_angular(pulse.carrier_cm) * t - pulse.phase);
            h += -a * pulse.envelope(t) * carrier * single_qubit_op(n, m, Pauli::X);
        }
    }
    return HermitianOperator(std::move(h));
}

}  // namespace spectroqsim
