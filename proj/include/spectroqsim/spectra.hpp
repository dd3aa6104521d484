#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "spectroqsim/errors.hpp"
#include "spectroqsim/ledger.hpp"
#include "spectroqsim/protocol.hpp"
#include "spectroqsim/units.hpp"

namespace spectroqsim {

// ---------------------------------------------------------------------------
// Axes and transforms
// ---------------------------------------------------------------------------

struct TimeGrid {
    int n = 1;
    double dt_fs = 1.0;
    std::string label = "t";

    static TimeGrid of(const DelayGrid& g, std::string label) { return {g.samples, g.spacing_fs(), std::move(label)}; }

    void validate() const {
        if (n < 1) throw ValidationError("TimeGrid " + label + ": N must be >= 1");
        if (!(dt_fs > 0.0)) throw ValidationError("TimeGrid " + label + ": dt must be > 0");
    }

    /// 1/(c N dt), cm^-1.
    double resolution_cm() const { return 1.0 / (units::speed_of_light * n * dt_fs); }
    /// 1/(2 c dt), cm^-1.
    double max_cm() const { return 1.0 / (2.0 * units::speed_of_light * dt_fs); }
    double time_fs(int i) const { return i * dt_fs; }
};

enum class Window { None, Hann };

/// Kernel exp(sign * 2 pi i k n / M). With sign = -1 a signal
/// exp(+2 pi i c nu t) lands at +nu; with sign = +1 a signal
/// exp(-2 pi i c nu t) does.
struct DftOptions {
    int sign = -1;
    bool flip_axis = false;
    Window window = Window::None;
    /// Transform length; 0 keeps N. Longer lengths zero-pad.
    int pad_to = 0;
};

struct DftResult {
    std::vector<cplx> values;
    /// Ascending frequencies in cm^-1 matching `values`.
    std::vector<double> freqs_cm;
};

inline double window_weight(Window w, int i, int n) {
    if (w == Window::None || n < 2) return 1.0;
    return 0.5 - 0.5 * std::cos(units::two_pi * i / (n - 1));
}

/// DFT of a uniformly sampled signal with the bin k <-> k/(c M dt)
/// mapping, returned in ascending frequency order.
inline DftResult dft_over_axis(const std::vector<cplx>& signal, const TimeGrid& grid, const DftOptions& opt = {}) {
    grid.validate();
    if (static_cast<int>(signal.size()) != grid.n) throw ValidationError("dft_over_axis: signal length differs from grid");
    if (opt.sign != 1 && opt.sign != -1) throw ValidationError("dft_over_axis: sign must be +1 or -1");
    const int m = std::max(grid.n, opt.pad_to);
    std::vector<cplx> in(static_cast<std::size_t>(m), 0.0), out;
    for (int i = 0; i < grid.n; ++i) in[i] = signal[i] * window_weight(opt.window, i, grid.n);
    Eigen::FFT<double> fft;
    if (opt.sign < 0) {
        fft.fwd(out, in);
    } else {
        fft.SetFlag(Eigen::FFT<double>::Unscaled);
        fft.inv(out, in);
    }
    // fftfreq order -> ascending
    DftResult r;
    r.values.resize(static_cast<std::size_t>(m));
    r.freqs_cm.resize(static_cast<std::size_t>(m));
    const double df = 1.0 / (units::speed_of_light * m * grid.dt_fs);
    const int neg = m / 2;  // number of negative bins
    for (int j = 0; j < m; ++j) {
        const int k = j < neg ? j - neg + m : j - neg;  // source bin
        const int kk = k < (m + 1) / 2 ? k : k - m;     // signed bin
        r.values[j] = out[k];
        r.freqs_cm[j] = kk * df;
    }
    if (opt.flip_axis) {
        std::reverse(r.values.begin(), r.values.end());
        std::reverse(r.freqs_cm.begin(), r.freqs_cm.end());
        for (auto& f : r.freqs_cm) f = -f;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

struct Spectrum2D {
    std::vector<double> omega1_cm;
    std::vector<double> t2_fs;
    /// Detection axis: omega_3 bins for SQSP, probe gaps for PQP.
    std::vector<double> omega3_cm;
    /// data[(i1 * n2 + i2) * n3 + i3]
    std::vector<cplx> data;
    bool normalized = false;
    double max_abs = 0.0;
    Window window = Window::None;
    int pad1 = 0, pad3 = 0;

    std::size_t n1() const { return omega1_cm.size(); }
    std::size_t n2() const { return t2_fs.size(); }
    std::size_t n3() const { return omega3_cm.size(); }

    cplx& at(std::size_t i1, std::size_t i2, std::size_t i3) { return data[(i1 * n2() + i2) * n3() + i3]; }
    cplx at(std::size_t i1, std::size_t i2, std::size_t i3) const { return data[(i1 * n2() + i2) * n3() + i3]; }

    void validate() const {
        if (data.size() != n1() * n2() * n3()) throw ValidationError("Spectrum2D: axis lengths do not match data");
    }

    double peak_abs() const {
        double m = 0.0;
        for (const auto& v : data) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Scales to max |value| = 1; a spectrum that is already normalized or
/// identically zero is returned unchanged.
inline Spectrum2D normalize(const Spectrum2D& s) {
    Spectrum2D out = s;
    const double m = s.peak_abs();
    if (s.normalized || m == 0.0) {
        out.normalized = s.normalized || m == 0.0;
        return out;
    }
    for (auto& v : out.data) v /= m;
    out.normalized = true;
    out.max_abs = m;
    return out;
}

/// Transform conventions used when assembling spectra. Coherences evolve
/// as exp(-i w t), so the +1 kernel puts them at positive frequency; the
/// rephasing signal oscillates the other way in t1 and its w1 axis is
/// flipped for display.
struct SpectrumOptions {
    Window window = Window::None;
    int pad1 = 0;
    int pad3 = 0;
};

inline bool is_rephasing(const PhaseCycleScheme& scheme) { return scheme.p[0] == 1 && scheme.p[1] == 0; }

namespace detail {

inline DftOptions axis1_options(const PhaseCycleScheme& scheme, const SpectrumOptions& o) {
    return {+1, is_rephasing(scheme), o.window, o.pad1};
}
inline DftOptions axis3_options(const SpectrumOptions& o) { return {+1, false, o.window, o.pad3}; }

inline void check_shape(const MeasurementLedger& ledger, Protocol protocol, const PhaseCycleScheme& scheme,
                        const TimeGrid& g1, int n2) {
    const auto& s = ledger.shape();
    if (s.protocol != protocol) throw DataError("ledger protocol does not match the requested assembly");
    if (s.n_phase != scheme.size()) throw DataError("ledger phase count does not match the phase-cycle scheme");
    if (s.n_t1 != g1.n || s.n_t2 != n2) throw DataError("ledger grid does not match the time axes");
}

}  // namespace detail

/// Phase-cycled value at one (t1, t2, last, observable).
inline cplx combined_value(const MeasurementLedger& ledger, const std::vector<cplx>& weights, int t1, int t2, int last,
                           Observable obs) {
    const auto& s = ledger.shape();
    const int slot = ledger.obs_slot(obs);
    cplx acc = 0.0;
    for (int k = 0; k < s.n_phase; ++k) {
        const auto idx = ledger.point_offset(t1, t2, k) + static_cast<std::size_t>(last) * s.n_obs + slot;
        acc += weights[k] * ledger.at(idx);
    }
    return acc;
}

/// Phase cycling per (t1, t2, t3), then a DFT over t1 and t3 for each t2.
inline Spectrum2D assemble_sqsp_spectrum(const MeasurementLedger& ledger, const PhaseCycleScheme& scheme,
                                         const TimeGrid& g1, const TimeGrid& g2, const TimeGrid& g3,
                                         const SpectrumOptions& opt = {}) {
    detail::check_shape(ledger, Protocol::Sqsp, scheme, g1, g2.n);
    if (ledger.shape().n_last != g3.n) throw DataError("ledger t3 count does not match the t3 axis");
    ledger.require_complete("assemble_sqsp_spectrum");
    const auto w = phase_cycle_weights(scheme);
    const auto o1 = detail::axis1_options(scheme, opt);
    const auto o3 = detail::axis3_options(opt);

    Spectrum2D out;
    out.window = opt.window;
    out.pad1 = opt.pad1;
    out.pad3 = opt.pad3;
    for (int i = 0; i < g2.n; ++i) out.t2_fs.push_back(g2.time_fs(i));
    const int m1 = std::max(g1.n, opt.pad1), m3 = std::max(g3.n, opt.pad3);
    out.data.assign(static_cast<std::size_t>(m1) * g2.n * m3, 0.0);

    std::vector<cplx> col(static_cast<std::size_t>(g1.n)), row(static_cast<std::size_t>(g3.n));
    std::vector<std::vector<cplx>> half(static_cast<std::size_t>(m1), std::vector<cplx>(g3.n));
    for (int i2 = 0; i2 < g2.n; ++i2) {
        for (int i3 = 0; i3 < g3.n; ++i3) {
            for (int i1 = 0; i1 < g1.n; ++i1) col[i1] = combined_value(ledger, w, i1, i2, i3, Observable::F);
            const auto r = dft_over_axis(col, g1, o1);
            if (out.omega1_cm.empty()) out.omega1_cm = r.freqs_cm;
            for (int j = 0; j < m1; ++j) half[j][i3] = r.values[j];
        }
        for (int j = 0; j < m1; ++j) {
            const auto r = dft_over_axis(half[j], g3, o3);
            if (out.omega3_cm.empty()) out.omega3_cm = r.freqs_cm;
            for (int k = 0; k < m3; ++k) out.at(j, i2, k) = r.values[k];
        }
    }
    out.validate();
    return out;
}

/// Phase cycling per (t1, t2, line), Y - iX per line, DFT over t1. The
/// detection axis is the list of probe gaps.
inline Spectrum2D assemble_pqp_spectrum(const MeasurementLedger& ledger, const PhaseCycleScheme& scheme,
                                        const TimeGrid& g1, const TimeGrid& g2, const std::vector<double>& probe_gaps_cm,
                                        const SpectrumOptions& opt = {}) {
    detail::check_shape(ledger, Protocol::Pqp, scheme, g1, g2.n);
    if (ledger.shape().n_last != static_cast<int>(probe_gaps_cm.size()))
        throw DataError("ledger probe-line count does not match the probe gap list");
    if (ledger.shape().n_obs != 2) throw DataError("PQP ledger lacks an observable channel");
    ledger.require_complete("assemble_pqp_spectrum");
    const auto w = phase_cycle_weights(scheme);
    const auto o1 = detail::axis1_options(scheme, opt);

    Spectrum2D out;
    out.window = opt.window;
    out.pad1 = opt.pad1;
    out.omega3_cm = probe_gaps_cm;
    for (int i = 0; i < g2.n; ++i) out.t2_fs.push_back(g2.time_fs(i));
    const int m1 = std::max(g1.n, opt.pad1);
    const auto n3 = probe_gaps_cm.size();
    out.data.assign(static_cast<std::size_t>(m1) * g2.n * n3, 0.0);
    std::vector<cplx> col(static_cast<std::size_t>(g1.n));
    for (int i2 = 0; i2 < g2.n; ++i2)
        for (std::size_t line = 0; line < n3; ++line) {
            for (int i1 = 0; i1 < g1.n; ++i1) {
                const cplx x = combined_value(ledger, w, i1, i2, static_cast<int>(line), Observable::Xpr);
                const cplx y = combined_value(ledger, w, i1, i2, static_cast<int>(line), Observable::Ypr);
                col[i1] = y - I_unit * x;
            }
            const auto r = dft_over_axis(col, g1, o1);
            if (out.omega1_cm.empty()) out.omega1_cm = r.freqs_cm;
            for (int j = 0; j < m1; ++j) out.at(j, i2, line) = r.values[j];
        }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Peaks and comparisons
// ---------------------------------------------------------------------------

struct PeakTrace {
    std::vector<double> values;
    std::size_t bin1 = 0, bin3 = 0;
    double omega1_cm = 0.0, omega3_cm = 0.0;
};

/// Index of the axis entry nearest to `target`; the request must fall
/// within half a mean spacing of the axis range.
inline std::size_t nearest_bin(const std::vector<double>& axis, double target, const char* name) {
    if (axis.empty()) throw ValidationError(std::string(name) + ": empty axis");
    std::size_t best = 0;
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (std::abs(axis[i] - target) < std::abs(axis[best] - target)) best = i;
    const auto [mn, mx] = std::minmax_element(axis.begin(), axis.end());
    // mean spacing; probe-gap axes need not be uniform or sorted
    const double half = axis.size() > 1 ? 0.5 * (*mx - *mn) / static_cast<double>(axis.size() - 1) : 0.0;
    const double lo = *mn - half, hi = *mx + half;
    if (target < lo || target > hi)
        throw ValidationError(std::string(name) + ": " + std::to_string(target) + " cm^-1 lies outside the axis");
    return best;
}

/// |amplitude| over t2 at the bins nearest (omega1, omega3).
inline PeakTrace extract_peak_trace(const Spectrum2D& s, double omega1_cm, double omega3_cm) {
    PeakTrace t;
    t.bin1 = nearest_bin(s.omega1_cm, omega1_cm, "omega1");
    if (s.n3() == 1) {
        t.bin3 = 0;  // single detection line
    } else {
        t.bin3 = nearest_bin(s.omega3_cm, omega3_cm, "omega3");
    }
    t.omega1_cm = s.omega1_cm[t.bin1];
    t.omega3_cm = s.omega3_cm[t.bin3];
    for (std::size_t i2 = 0; i2 < s.n2(); ++i2) t.values.push_back(std::abs(s.at(t.bin1, i2, t.bin3)));
    return t;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw ValidationError("pearson: series must match and have >= 2 points");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

inline void write_spectrum_csv(const Spectrum2D& s, const std::string& path) {
    s.validate();
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write " + path);
    os << "omega1_cm,t2_fs,omega3_cm,re,im,abs\n";
    for (std::size_t i1 = 0; i1 < s.n1(); ++i1)
        for (std::size_t i2 = 0; i2 < s.n2(); ++i2)
            for (std::size_t i3 = 0; i3 < s.n3(); ++i3) {
                const cplx v = s.at(i1, i2, i3);
                os << format_double(s.omega1_cm[i1]) << ',' << format_double(s.t2_fs[i2]) << ','
                   << format_double(s.omega3_cm[i3]) << ',' << format_double(v.real()) << ','
                   << format_double(v.imag()) << ',' << format_double(std::abs(v)) << '\n';
            }
}

inline void write_trace_csv(const PeakTrace& t, const std::vector<double>& t2_fs, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write " + path);
    os << "# omega1_bin_cm " << format_double(t.omega1_cm) << " omega3_bin_cm " << format_double(t.omega3_cm) << "\n";
    os << "t2_fs,abs\n";
    for (std::size_t i = 0; i < t.values.size(); ++i) os << format_double(t2_fs[i]) << ',' << format_double(t.values[i]) << '\n';
}

}  // namespace spectroqsim
