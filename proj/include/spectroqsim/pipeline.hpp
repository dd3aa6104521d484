#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spectroqsim/evolve.hpp"
#include "spectroqsim/protocol.hpp"

namespace spectroqsim {

enum class Protocol { Sqsp, Pqp };

inline const char* protocol_name(Protocol p) { return p == Protocol::Sqsp ? "sqsp" : "pqp"; }

/// Observable tags stored in measurement records.
enum class Observable : int { F = 0, Xpr = 1, Ypr = 2 };

inline const char* observable_name(Observable o) {
    switch (o) {
        case Observable::F: return "F";
        case Observable::Xpr: return "X_pr";
        default: return "Y_pr";
    }
}

/// Precompiled sweep over (t1, t2, phase) for either protocol.
///
/// The prefix (pulse 1, t1, pulse 2, t2, pulse 3) runs through the same
/// channel objects as `pre_detection_state`, so the state entering the
/// detection stage is bitwise identical to the direct path. The detection
/// stage is linear in that state and is folded into Heisenberg-picture
/// readout operators computed once.
class SweepEngine {
   public:
    /// SQSP: one readout per (t3 sample, phase-4 value).
    SweepEngine(const ProtocolSetup& setup, const SqspDetection& det) : setup_(setup), protocol_(Protocol::Sqsp) {
        compile_prefix();
        det.t3.validate("t3");
        const int n = setup.system.n_qub;
        const auto dim = std::int64_t{1} << n;
        Matrix f = Matrix::Zero(dim, dim);
        for (std::int64_t i = 0; i < dim; ++i)
            f(i, i) = setup.fluorescence.weight(excitation_count(static_cast<std::uint64_t>(i)));
        const LayerChannel layer(free_plan(setup.system, setup.trotter_order, det.t3.dt_fs, 1), setup.noise,
                                 qubit_set_mask(all_qubits(n), n));
        n_last_ = det.t3.samples;
        n_obs_ = 1;
        const auto& ph4 = setup.scheme.phases[3];
        // readouts_ index: (t3 * n4 + phase4)
        readouts_.resize(static_cast<std::size_t>(n_last_) * ph4.size());
        for (std::size_t d = 0; d < ph4.size(); ++d) {
            Matrix m = f;
            PulseChannel(setup.system, setup.pulses[3].with_phase(ph4[d]), setup.noise).apply_adjoint(m);
            for (int i = 0; i < n_last_; ++i) {
                if (i > 0)
                    for (int l = 0; l < det.t3.layers_per_sample; ++l) layer.apply_adjoint(m);
                readouts_[static_cast<std::size_t>(i) * ph4.size() + d] = m;
            }
        }
    }

    /// PQP: two readouts (X_pr, Y_pr) per probe line.
    SweepEngine(const ProtocolSetup& setup, const std::vector<PqpDetection>& lines)
        : setup_(setup), protocol_(Protocol::Pqp) {
        compile_prefix();
        const int n = setup.system.n_qub;
        n_last_ = static_cast<int>(lines.size());
        n_obs_ = 2;
        for (const auto& det : lines) {
            if (det.layers < 0) throw ValidationError("PQP detection needs a non-negative layer count");
            const auto plan = system_probe_plan(setup.system, det.probe, setup.trotter_order, det.dt_fs(), 1);
            const int noisy = setup.noise.probe_noiseless ? n : n + 1;
            const LayerChannel layer(plan, setup.noise, qubit_set_mask(all_qubits(noisy), n + 1));
            // Interaction-picture rotation R = diag(1, e^{i w t3}) on the probe,
            // folded into the observables: R^dag X R and R^dag Y R.
            const cplx r = std::polar(1.0, units::radians(det.probe.omega_pr, det.t3_fs));
            Matrix x2 = Matrix::Zero(2, 2), y2 = Matrix::Zero(2, 2);
            x2(0, 1) = r;                      // <0|R^dag X R|1> = e^{i w t}
            x2(1, 0) = std::conj(r);
            y2(0, 1) = -I_unit * r;
            y2(1, 0) = I_unit * std::conj(r);
            const auto sys_dim = std::int64_t{1} << n;
            for (const Matrix* p : {&x2, &y2}) {
                Matrix m = kron(Matrix::Identity(sys_dim, sys_dim), *p);
                for (int l = 0; l < det.layers; ++l) layer.apply_adjoint(m);
                // Restrict to the probe |0><0| block.
                Matrix reduced(sys_dim, sys_dim);
                for (std::int64_t i = 0; i < sys_dim; ++i)
                    for (std::int64_t j = 0; j < sys_dim; ++j) reduced(i, j) = m(2 * i, 2 * j);
                readouts_.push_back(std::move(reduced));
            }
        }
    }

    Protocol protocol() const { return protocol_; }
    const ProtocolSetup& setup() const { return setup_; }
    int n_t1() const { return setup_.t1.samples; }
    int n_t2() const { return setup_.t2.samples; }
    int n_phase() const { return setup_.scheme.size(); }
    int n_last() const { return n_last_; }
    int n_obs() const { return n_obs_; }
    /// Values produced per (t1, t2, phase) point.
    int values_per_point() const { return n_last_ * n_obs_; }

    int n_phi1() const { return static_cast<int>(setup_.scheme.phases[0].size()); }
    int n_phi2() const { return static_cast<int>(setup_.scheme.phases[1].size()); }
    int n_phi3() const { return static_cast<int>(setup_.scheme.phases[2].size()); }
    int n_phi4() const { return static_cast<int>(setup_.scheme.phases[3].size()); }

    int phase_index(int a, int b, int c, int d) const { return ((a * n_phi2() + b) * n_phi3() + c) * n_phi4() + d; }

    /// States after pulse 1 and t1 for every (phi1, t1); row-major in phi1.
    std::vector<Matrix> first_stage() const {
        std::vector<Matrix> out;
        out.reserve(static_cast<std::size_t>(n_phi1()) * n_t1());
        for (int a = 0; a < n_phi1(); ++a) {
            Matrix rho = ground_;
            pulse1_[a].apply(rho);
            for (int i = 0; i < n_t1(); ++i) {
                if (i > 0)
                    for (int l = 0; l < setup_.t1.layers_per_sample; ++l) layer1_.apply(rho);
                out.push_back(rho);
            }
        }
        return out;
    }

    /// Emits every value for the work item (phi1 = a, phi2 = b, t1) through
    /// sink(t2, phase, last, obs, value). `after_t1` is the matching entry of
    /// `first_stage()`.
    template <typename Sink>
    void run_item(const Matrix& after_t1, int b, Sink&& sink, int a) const {
        Matrix rho = after_t1;
        pulse2_[b].apply(rho);
        for (int i2 = 0; i2 < n_t2(); ++i2) {
            if (i2 > 0)
                for (int l = 0; l < setup_.t2.layers_per_sample; ++l) layer2_.apply(rho);
            for (int c = 0; c < n_phi3(); ++c) {
                Matrix rho3 = rho;
                pulse3_[c].apply(rho3);
                for (int d = 0; d < n_phi4(); ++d) {
                    const int k = phase_index(a, b, c, d);
                    if (protocol_ == Protocol::Sqsp) {
                        for (int i3 = 0; i3 < n_last_; ++i3)
                            sink(i2, k, i3, Observable::F, readout(readouts_[static_cast<std::size_t>(i3) * n_phi4() + d], rho3));
                    } else {
                        for (int line = 0; line < n_last_; ++line) {
                            sink(i2, k, line, Observable::Xpr, readout(readouts_[2 * line], rho3));
                            sink(i2, k, line, Observable::Ypr, readout(readouts_[2 * line + 1], rho3));
                        }
                    }
                }
            }
        }
    }

    /// State entering the detection stage for one grid point.
    Matrix detection_input(int t1, int t2, int phase) const {
        const auto ph = decompose(phase);
        Matrix rho = ground_;
        pulse1_[ph[0]].apply(rho);
        for (int l = 0; l < setup_.t1.layers(t1); ++l) layer1_.apply(rho);
        pulse2_[ph[1]].apply(rho);
        for (int l = 0; l < setup_.t2.layers(t2); ++l) layer2_.apply(rho);
        pulse3_[ph[2]].apply(rho);
        return rho;
    }

    /// Single value at one grid point through the compiled readouts.
    double value(int t1, int t2, int phase, int last, Observable obs) const {
        const Matrix rho3 = detection_input(t1, t2, phase);
        if (protocol_ == Protocol::Sqsp)
            return readout(readouts_[static_cast<std::size_t>(last) * n_phi4() + decompose(phase)[3]], rho3);
        return readout(readouts_[2 * last + (obs == Observable::Ypr ? 1 : 0)], rho3);
    }

   private:
    void compile_prefix() {
        setup_.validate();
        const auto& sys = setup_.system;
        const int n = sys.n_qub;
        ground_ = DensityMatrix::ground(n).matrix();
        const auto mask = qubit_set_mask(all_qubits(n), n);
        layer1_ = LayerChannel(free_plan(sys, setup_.trotter_order, setup_.t1.dt_fs, 1), setup_.noise, mask);
        layer2_ = LayerChannel(free_plan(sys, setup_.trotter_order, setup_.t2.dt_fs, 1), setup_.noise, mask);
        for (double phi : setup_.scheme.phases[0]) pulse1_.emplace_back(sys, setup_.pulses[0].with_phase(phi), setup_.noise);
        for (double phi : setup_.scheme.phases[1]) pulse2_.emplace_back(sys, setup_.pulses[1].with_phase(phi), setup_.noise);
        for (double phi : setup_.scheme.phases[2]) pulse3_.emplace_back(sys, setup_.pulses[2].with_phase(phi), setup_.noise);
    }

    std::array<int, 4> decompose(int k) const {
        std::array<int, 4> out{};
        const int sizes[4] = {n_phi1(), n_phi2(), n_phi3(), n_phi4()};
        for (int j = 3; j >= 0; --j) {
            out[j] = k % sizes[j];
            k /= sizes[j];
        }
        return out;
    }

    /// Re Tr(M rho).
    static double readout(const Matrix& m, const Matrix& rho) {
        return (m.transpose().array() * rho.array()).sum().real();
    }

    ProtocolSetup setup_;
    Protocol protocol_;
    Matrix ground_;
    LayerChannel layer1_, layer2_;
    std::vector<PulseChannel> pulse1_, pulse2_, pulse3_;
    std::vector<Matrix> readouts_;
    int n_last_ = 0;
    int n_obs_ = 1;
};

}  // namespace spectroqsim
