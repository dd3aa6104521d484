#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "spectroqsim/errors.hpp"
#include "spectroqsim/linalg.hpp"
#include "spectroqsim/model.hpp"
#include "spectroqsim/units.hpp"

namespace spectroqsim {

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

class DensityMatrix {
   public:
    DensityMatrix() = default;

    DensityMatrix(Matrix rho, bool probe_attached = false)
        : rho_(std::move(rho)), probe_(probe_attached) {
        if (rho_.rows() != rho_.cols()) throw ValidationError("DensityMatrix: matrix is not square");
        qubits_ = qubits_for_dimension(rho_.rows());
    }

    /// |0...0><0...0| on `qubits` qubits.
    static DensityMatrix ground(int qubits) {
        require_qubits_within_cap(qubits);
        const auto dim = std::int64_t{1} << qubits;
        Matrix rho = Matrix::Zero(dim, dim);
        rho(0, 0) = 1.0;
        return DensityMatrix(std::move(rho));
    }

    static DensityMatrix from_state(const Vector& psi) {
        return DensityMatrix(psi * psi.adjoint());
    }

    const Matrix& matrix() const { return rho_; }
    Matrix& matrix() { return rho_; }
    int qubits() const { return qubits_; }
    bool has_probe() const { return probe_; }
    int system_qubits() const { return probe_ ? qubits_ - 1 : qubits_; }

    cplx trace() const { return rho_.trace(); }
    double purity() const { return (rho_ * rho_).trace().real(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(rho_, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }

    /// Checks trace, Hermiticity and numerical positivity.
    void validate(double trace_tol = 1e-10, double herm_tol = 1e-12, double pos_tol = 1e-8) const {
        if (std::abs(trace() - cplx(1.0)) > trace_tol) throw ValidationError("DensityMatrix: trace differs from 1");
        if (hermitian_defect(rho_) > herm_tol) throw ValidationError("DensityMatrix: not Hermitian");
        if (min_eigenvalue() < -pos_tol) throw ValidationError("DensityMatrix: not positive semidefinite");
    }

    double expectation(const Matrix& op) const { return (rho_ * op).trace().real(); }

    /// rho (x) |0><0| with the probe as the last tensor factor.
    DensityMatrix attach_probe() const {
        if (probe_) throw ValidationError("DensityMatrix: probe already attached");
        require_qubits_within_cap(qubits_ + 1);
        Matrix p0 = Matrix::Zero(2, 2);
        p0(0, 0) = 1.0;
        return DensityMatrix(kron(rho_, p0), true);
    }

    /// Partial trace over the probe qubit.
    DensityMatrix system_state() const {
        if (!probe_) throw ValidationError("DensityMatrix: no probe attached");
        const auto d = rho_.rows() / 2;
        Matrix out(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) out(i, j) = rho_(2 * i, 2 * j) + rho_(2 * i + 1, 2 * j + 1);
        return DensityMatrix(std::move(out));
    }

    /// 2x2 reduced state of the probe.
    Matrix probe_state() const {
        if (!probe_) throw ValidationError("DensityMatrix: no probe attached");
        Matrix out = Matrix::Zero(2, 2);
        const auto d = rho_.rows() / 2;
        for (Eigen::Index i = 0; i < d; ++i)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) out(a, b) += rho_(2 * i + a, 2 * i + b);
        return out;
    }

   private:
    Matrix rho_;
    int qubits_ = 0;
    bool probe_ = false;
};

inline double trace_distance(const Matrix& a, const Matrix& b) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Plans and noise
// ---------------------------------------------------------------------------

struct TrotterPlan {
    int order = 2;
    double dt_fs = 1.0;
    int layers = 0;
    std::vector<HermitianOperator> fragments;

    double total_time() const { return layers * dt_fs; }

    void validate() const {
        if (order != 1 && order != 2) throw ValidationError("TrotterPlan: order must be 1 or 2");
        if (!(dt_fs > 0.0)) throw ValidationError("TrotterPlan: dt must be > 0");
        if (layers < 0) throw ValidationError("TrotterPlan: layer count must be >= 0");
        if (fragments.empty()) throw ValidationError("TrotterPlan: no Hamiltonian fragments");
    }
};

struct NoiseSpec {
    double gamma_z_cm = 0.0;
    bool probe_noiseless = true;

    /// p_Z = gamma_Z [rad/fs] * dt.
    double p_z(double dt_fs) const {
        if (gamma_z_cm < 0.0) throw ValidationError("NoiseSpec: gamma_Z must be >= 0");
        const double p = units::wavenumber_to_angular(gamma_z_cm) * dt_fs;
        if (p > 1.0) throw ValidationError("NoiseSpec: dephasing probability exceeds 1");
        return p;
    }
};

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

/// Mask of the basis-index bits that belong to the listed qubits.
inline std::uint64_t qubit_set_mask(const std::vector<int>& qubits, int n) {
    std::uint64_t mask = 0;
    for (int q : qubits) {
        if (q < 0 || q >= n) throw ValidationError("qubit index out of range");
        mask |= qubit_mask(q, n);
    }
    return mask;
}

namespace detail {

/// E_Z on every qubit in `mask`: rho_ij picks up (1 - p) for each
/// masked qubit whose bit differs between i and j.
inline void dephase_in_place(Matrix& rho, double p, std::uint64_t mask) {
    if (p == 0.0 || mask == 0) return;
    double factors[65];
    factors[0] = 1.0;
    for (int k = 1; k < 65; ++k) factors[k] = factors[k - 1] * (1.0 - p);
    const auto dim = rho.rows();
    for (Eigen::Index j = 0; j < dim; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) {
            const int diff = std::popcount((static_cast<std::uint64_t>(i) ^ static_cast<std::uint64_t>(j)) & mask);
            if (diff) rho(i, j) *= factors[diff];
        }
}

}  // namespace detail

/// Applies E_Z(rho) = (1 - p/2) rho + (p/2) Z rho Z to each listed qubit.
inline DensityMatrix apply_dephasing_channel(const DensityMatrix& rho, double p_z, const std::vector<int>& qubits) {
    if (!(p_z >= 0.0 && p_z <= 1.0)) throw ValidationError("apply_dephasing_channel: p_Z outside [0, 1]");
    const auto mask = qubit_set_mask(qubits, rho.qubits());
    DensityMatrix out = rho;
    detail::dephase_in_place(out.matrix(), p_z, mask);
    return out;
}

inline std::vector<int> all_qubits(int n) {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) out[q] = q;
    return out;
}

// ---------------------------------------------------------------------------
// Trotter layers
// ---------------------------------------------------------------------------

/// k = 1: e^{-iH_N dt} ... e^{-iH_1 dt} (H_1 acts first).
/// k = 2: palindrome of half steps, H_1 ... H_N then H_N ... H_1.
inline Matrix trotter_layer(const std::vector<HermitianOperator>& fragments, int order, double dt) {
    if (fragments.empty()) throw ValidationError("trotter_layer: empty fragment list");
    if (order != 1 && order != 2) throw ValidationError("trotter_layer: order must be 1 or 2");
    const auto dim = fragments.front().dimension();
    Matrix u = Matrix::Identity(dim, dim);
    if (order == 1) {
        for (const auto& f : fragments) u = unitary_propagator(f.matrix(), dt) * u;
        return u;
    }
    std::vector<Matrix> half;
    half.reserve(fragments.size());
    for (const auto& f : fragments) half.push_back(unitary_propagator(f.matrix(), 0.5 * dt));
    for (const auto& h : half) u = h * u;
    for (auto it = half.rbegin(); it != half.rend(); ++it) u = *it * u;
    return u;
}

/// One noisy Trotter layer, compiled once and reused.
class LayerChannel {
   public:
    LayerChannel() = default;

    LayerChannel(const TrotterPlan& plan, const NoiseSpec& noise, std::uint64_t noisy_mask)
        : u_(trotter_layer(plan.fragments, plan.order, plan.dt_fs)),
          u_dag_(u_.adjoint()),
          p_(noise.p_z(plan.dt_fs)),
          mask_(noisy_mask),
          symmetric_(plan.order == 2) {}

    void apply(Matrix& rho) const {
        if (symmetric_) detail::dephase_in_place(rho, p_, mask_);
        rho = u_ * rho * u_dag_;
        detail::dephase_in_place(rho, p_, mask_);
    }

    /// Heisenberg-picture action on an observable.
    void apply_adjoint(Matrix& op) const {
        detail::dephase_in_place(op, p_, mask_);
        op = u_dag_ * op * u_;
        if (symmetric_) detail::dephase_in_place(op, p_, mask_);
    }

    const Matrix& unitary() const { return u_; }
    double p_z() const { return p_; }

   private:
    Matrix u_, u_dag_;
    double p_ = 0.0;
    std::uint64_t mask_ = 0;
    bool symmetric_ = true;
};

/// D noisy Trotter layers of the system Hamiltonian on all system qubits.
inline DensityMatrix evolve_free(const DensityMatrix& rho, const TrotterPlan& plan, const NoiseSpec& noise) {
    plan.validate();
    if (plan.fragments.front().qubits() != rho.qubits())
        throw ValidationError("evolve_free: plan and state dimensions differ");
    DensityMatrix out = rho;
    if (plan.layers == 0) return out;
    const LayerChannel layer(plan, noise, qubit_set_mask(all_qubits(rho.system_qubits()), rho.qubits()));
    for (int d = 0; d < plan.layers; ++d) layer.apply(out.matrix());
    return out;
}

inline TrotterPlan free_plan(const SystemSpec& spec, int order, double dt, int layers) {
    return TrotterPlan{order, dt, layers, system_fragments(spec)};
}

/// D'_3 layers of H_S + H_PR. The probe is dephased only when
/// `noise.probe_noiseless` is false.
inline DensityMatrix evolve_system_probe(const DensityMatrix& rho, const TrotterPlan& plan, const NoiseSpec& noise) {
    if (!rho.has_probe()) throw ValidationError("evolve_system_probe: probe is not attached");
    plan.validate();
    if (plan.fragments.front().qubits() != rho.qubits())
        throw ValidationError("evolve_system_probe: plan and state dimensions differ");
    DensityMatrix out = rho;
    if (plan.layers == 0) return out;
    const int noisy = noise.probe_noiseless ? rho.system_qubits() : rho.qubits();
    const LayerChannel layer(plan, noise, qubit_set_mask(all_qubits(noisy), rho.qubits()));
    for (int d = 0; d < plan.layers; ++d) layer.apply(out.matrix());
    return out;
}

inline TrotterPlan system_probe_plan(const SystemSpec& spec, const ProbeSpec& probe, int order, double dt, int layers) {
    return TrotterPlan{order, dt, layers, system_probe_fragments(spec, probe)};
}

// ---------------------------------------------------------------------------
// Pulses
// ---------------------------------------------------------------------------

/// Warning text when the pulse step does not resolve the fastest of the
/// carrier and the largest system frequency with eight points per period.
inline std::string pulse_step_warning(const SystemSpec& spec, const PulseSpec& pulse) {
    if (pulse.profile == PulseProfile::Delta) return {};
    double fastest = std::abs(pulse.carrier_cm);
    for (double e : spec.site_energies) fastest = std::max(fastest, std::abs(e));
    if (fastest == 0.0) return {};
    const double limit = units::period_fs(fastest) / 8.0;
    if (pulse.step_fs() > limit)
        return "pulse step " + std::to_string(pulse.step_fs()) + " fs exceeds " + std::to_string(limit) +
               " fs, an eighth of the fastest period";
    return {};
}

/// Unitaries realizing one pulse, in application order.
inline std::vector<Matrix> pulse_unitaries(const SystemSpec& spec, const PulseSpec& pulse) {
    pulse.validate(spec);
    if (pulse.profile == PulseProfile::Delta)
        return {unitary_propagator(build_pulse_hamiltonian(spec, pulse, 0.0).matrix(), pulse.kick_area_fs)};
    const double dt = pulse.step_fs();
    const Matrix us = unitary_propagator(build_system_hamiltonian(spec).matrix(), dt);
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(pulse.steps));
    for (int d = 0; d < pulse.steps; ++d)
        out.push_back(us * unitary_propagator(build_pulse_hamiltonian(spec, pulse, d * dt).matrix(), dt));
    return out;
}

/// Compiled pulse: unitaries in application order plus the dephasing
/// applied after each of them.
class PulseChannel {
   public:
    PulseChannel() = default;

    PulseChannel(const SystemSpec& spec, const PulseSpec& pulse, const NoiseSpec& noise)
        : p_(pulse.profile == PulseProfile::Delta ? 0.0 : noise.p_z(pulse.step_fs())),
          mask_(qubit_set_mask(all_qubits(spec.n_qub), spec.n_qub)) {
        for (auto& u : pulse_unitaries(spec, pulse)) {
            u_dag_.push_back(u.adjoint());
            u_.push_back(std::move(u));
        }
    }

    void apply(Matrix& rho) const {
        for (std::size_t i = 0; i < u_.size(); ++i) {
            rho = u_[i] * rho * u_dag_[i];
            detail::dephase_in_place(rho, p_, mask_);
        }
    }

    /// Heisenberg-picture action on an observable.
    void apply_adjoint(Matrix& op) const {
        for (std::size_t i = u_.size(); i-- > 0;) {
            detail::dephase_in_place(op, p_, mask_);
            op = u_dag_[i] * op * u_[i];
        }
    }

   private:
    std::vector<Matrix> u_, u_dag_;
    double p_ = 0.0;
    std::uint64_t mask_ = 0;
};

/// Delta profile: a single kick, no dephasing. Gaussian profile: D_p
/// first-order layers e^{-iH_S dt_p} e^{-iH_I(t) dt_p}, each followed by
/// the dephasing channel. Warnings go to `warn` when provided.
inline DensityMatrix evolve_pulse(const DensityMatrix& rho, const SystemSpec& spec, const PulseSpec& pulse,
                                  const NoiseSpec& noise,
                                  const std::function<void(const std::string&)>& warn = {}) {
    if (rho.has_probe()) throw ValidationError("evolve_pulse: pulses act before the probe is attached");
    if (rho.qubits() != spec.n_qub) throw ValidationError("evolve_pulse: state and system sizes differ");
    if (auto w = pulse_step_warning(spec, pulse); !w.empty() && warn) warn(w);
    DensityMatrix out = rho;
    PulseChannel(spec, pulse, noise).apply(out.matrix());
    return out;
}

// ---------------------------------------------------------------------------
// Exact oracle
// ---------------------------------------------------------------------------

inline DensityMatrix exact_evolve(const DensityMatrix& rho, const HermitianOperator& h, double t) {
    if (h.dimension() != rho.matrix().rows()) throw ValidationError("exact_evolve: dimension mismatch");
    require_qubits_within_cap(h.qubits());
    const Matrix u = unitary_propagator(h.matrix(), t);
    return DensityMatrix(u * rho.matrix() * u.adjoint(), rho.has_probe());
}

inline Vector exact_evolve(const Vector& psi, const HermitianOperator& h, double t) {
    if (h.dimension() != psi.size()) throw ValidationError("exact_evolve: dimension mismatch");
    require_qubits_within_cap(h.qubits());
    return unitary_propagator(h.matrix(), t) * psi;
}

}  // namespace spectroqsim
