#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "spectroqsim/errors.hpp"
#include "spectroqsim/ledger.hpp"
#include "spectroqsim/units.hpp"

namespace spectroqsim::resources {

/// ceil with a relative guard so that values like 400.0000000001 that
/// come from exact grids are not pushed up by rounding noise.
inline std::int64_t ceil_count(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::ceil(x));
}

/// N = ceil(2 w_max / dw).
inline std::int64_t samples_needed(double dw_cm, double w_max_cm) {
    if (!(dw_cm > 0.0)) throw ValidationError("samples_needed: resolution must be > 0");
    return ceil_count(2.0 * w_max_cm / dw_cm);
}

/// Nyquist frequency of sampling interval dt, cm^-1.
inline double nyquist_cm(double dt_fs) { return 1.0 / (2.0 * units::speed_of_light * dt_fs); }

enum class ShotMode { Relative, Absolute };

struct ResourcePlan {
    int n_qub = 2;
    std::int64_t n1 = 1, n2 = 1, n3 = 1;
    std::int64_t n_freq = 1;
    std::int64_t d1 = 1, d2 = 1, d3 = 1, d3_pqp = 1, dp = 0;
    int cycle_size = 27;
    ShotMode shot_mode = ShotMode::Relative;
    double epsilon = 1e-2;
    double alpha_c = 1.45;
    double alpha_pqp = 2.5;

    void validate() const {
        if (n_qub < 1) throw ValidationError("ResourcePlan: n_qub must be >= 1");
        if (n1 < 1 || n2 < 1 || n3 < 1 || n_freq < 1) throw ValidationError("ResourcePlan: sample counts must be positive");
        if (d1 < 1 || d2 < 1 || d3 < 1 || d3_pqp < 1 || dp < 0) throw ValidationError("ResourcePlan: layer counts must be positive");
        if (n_freq > n3) throw ValidationError("ResourcePlan: N_freq must not exceed N3");
        if (cycle_size < 1) throw ValidationError("ResourcePlan: cycle size must be positive");
        if (!(epsilon > 0.0)) throw ValidationError("ResourcePlan: epsilon must be > 0");
    }

    /// Shots per SQSP expectation value: n_qub - 1 relative to PQP, or
    /// n_qub / eps^2 in absolute mode.
    double shots_sqsp() const {
        return shot_mode == ShotMode::Relative ? static_cast<double>(n_qub - 1) : n_qub / (epsilon * epsilon);
    }
    double shots_pqp() const { return shot_mode == ShotMode::Relative ? 1.0 : 1.0 / (epsilon * epsilon); }

    /// Manifold detection probabilities behind the absolute SQSP shot
    /// count, with |S| = n + n(n-1)/2 states up to double excitation.
    double p_m1() const { return n_qub / (n_qub + 0.5 * n_qub * (n_qub - 1.0)); }
    double p_m2() const { return 1.0 - p_m1(); }
};

inline double measurements_sqsp(const ResourcePlan& p) {
    p.validate();
    return p.cycle_size * p.shots_sqsp() * double(p.n1) * double(p.n2) * double(p.n3);
}

inline double measurements_pqp(const ResourcePlan& p) {
    p.validate();
    return p.cycle_size * p.shots_pqp() * double(p.n1) * double(p.n2) * double(p.n_freq);
}

inline std::int64_t max_depth(const ResourcePlan& p, Protocol protocol) {
    p.validate();
    return protocol == Protocol::Sqsp ? p.d1 + p.d2 + p.d3 + 4 * p.dp : p.d1 + p.d2 + p.d3_pqp + 3 * p.dp;
}

inline double triangular(std::int64_t d) { return 0.5 * double(d) * double(d + 1); }

struct QueryCounts {
    double sqsp = 0.0;
    double pqp = 0.0;
    double q3 = 0.0;
    double q3_pqp = 0.0;
    double ratio() const { return sqsp / pqp; }
};

/// Q_SQSP = S Q1 Q2 Q3 and Q_PQP = Q1 Q2 Q'3 N_freq with Q_j = D_j(D_j+1)/2
/// and Q'3 = alpha_PQP D'3.
inline QueryCounts query_counts(const ResourcePlan& p) {
    p.validate();
    QueryCounts q;
    const double q1 = triangular(p.d1), q2 = triangular(p.d2);
    q.q3 = triangular(p.d3);
    q.q3_pqp = p.alpha_pqp * double(p.d3_pqp);
    q.sqsp = p.shots_sqsp() / p.shots_pqp() * q1 * q2 * q.q3;
    q.pqp = q1 * q2 * q.q3_pqp * double(p.n_freq);
    return q;
}

/// Layers of a k-th order product formula for time t at error eps:
/// ceil((Lambda t)^{1 + 1/k} / eps^{1/k}) with Lambda in cm^-1.
inline std::int64_t trotter_depth(double t_fs, double lambda_cm, int k, double eps_trot) {
    if (k < 1) throw ValidationError("trotter_depth: order must be >= 1");
    if (!(eps_trot > 0.0)) throw ValidationError("trotter_depth: error budget must be > 0");
    const double lt = units::radians(lambda_cm, t_fs);
    return ceil_count(std::pow(lt, 1.0 + 1.0 / k) / std::pow(eps_trot, 1.0 / k));
}

// ---------------------------------------------------------------------------
// FMO scenario
// ---------------------------------------------------------------------------

/// Eight-site FMO estimate: dw1 = 36 cm^-1 sampled every 1.8 fs, t2 up to
/// 1800 fs every 20 fs, t3 sampled every 1.8 fs, 42-layer pulses and two
/// detection lines.
struct FmoScenario {
    int n_qub = 8;
    double dw1_cm = 36.0;
    double dt1_fs = 1.8;
    double t2_max_fs = 1800.0;
    double dt2_fs = 20.0;
    double dt3_fs = 1.8;
    std::int64_t dp = 42;
    std::int64_t n_freq = 2;
    double alpha_c = 1.45;
    double alpha_pqp = 2.5;

    ResourcePlan plan(double dw3_cm) const {
        if (!(dw3_cm > 0.0) || dw3_cm >= nyquist_cm(dt3_fs)) throw ValidationError("FMO scenario: dw3 out of range");
        ResourcePlan p;
        p.n_qub = n_qub;
        p.n1 = samples_needed(dw1_cm, nyquist_cm(dt1_fs));
        p.n2 = ceil_count(t2_max_fs / dt2_fs);
        const double n3_exact = 2.0 * nyquist_cm(dt3_fs) / dw3_cm;  // t3 / dt3
        p.n3 = ceil_count(n3_exact);
        p.n_freq = n_freq;
        p.d1 = p.n1;
        p.d2 = p.n2;
        p.d3 = p.n3;
        p.d3_pqp = ceil_count(alpha_c * n3_exact);
        p.dp = dp;
        p.alpha_c = alpha_c;
        p.alpha_pqp = alpha_pqp;
        p.shot_mode = ShotMode::Relative;
        return p;
    }
};

struct CostRow {
    double dw3_cm = 0.0;
    ResourcePlan plan;
    double m_sqsp = 0.0, m_pqp = 0.0;
    QueryCounts queries;
    std::int64_t d_sqsp = 0, d_pqp = 0;

    double measurement_ratio() const { return m_sqsp / m_pqp; }
};

inline CostRow cost_row(const ResourcePlan& p, double dw3_cm) {
    CostRow r;
    r.dw3_cm = dw3_cm;
    r.plan = p;
    r.m_sqsp = measurements_sqsp(p);
    r.m_pqp = measurements_pqp(p);
    r.queries = query_counts(p);
    r.d_sqsp = max_depth(p, Protocol::Sqsp);
    r.d_pqp = max_depth(p, Protocol::Pqp);
    return r;
}

inline std::vector<CostRow> fmo_report(const std::vector<double>& dw3_sweep, const FmoScenario& s = {}) {
    std::vector<CostRow> out;
    for (double dw : dw3_sweep) out.push_back(cost_row(s.plan(dw), dw));
    return out;
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope: need matching series of >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline void write_cost_csv(const std::vector<CostRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write " + path);
    os << "delta_omega3_cm,m_sqsp,m_pqp,q_sqsp,q_pqp,ratio,d_sqsp,d_pqp\n";
    for (const auto& r : rows)
        os << format_double(r.dw3_cm) << ',' << format_double(r.m_sqsp) << ',' << format_double(r.m_pqp) << ','
           << format_double(r.queries.sqsp) << ',' << format_double(r.queries.pqp) << ','
           << format_double(r.queries.ratio()) << ',' << r.d_sqsp << ',' << r.d_pqp << '\n';
}

inline std::string summary(const CostRow& r) {
    std::string s;
    s += "dw3 = " + format_double(r.dw3_cm) + " cm^-1 (shots: " +
         (r.plan.shot_mode == ShotMode::Relative ? "relative" : "absolute") + ")\n";
    s += "  N1 = " + std::to_string(r.plan.n1) + ", N2 = " + std::to_string(r.plan.n2) + ", N3 = " +
         std::to_string(r.plan.n3) + ", D'3 = " + std::to_string(r.plan.d3_pqp) + ", Dp = " + std::to_string(r.plan.dp) + "\n";
    s += "  M_meas SQSP = " + format_double(r.m_sqsp) + ", PQP = " + format_double(r.m_pqp) +
         ", ratio = " + format_double(r.measurement_ratio()) + "\n";
    s += "  D_max SQSP = " + std::to_string(r.d_sqsp) + ", PQP = " + std::to_string(r.d_pqp) + "\n";
    s += "  Q SQSP = " + format_double(r.queries.sqsp) + ", PQP = " + format_double(r.queries.pqp) +
         ", ratio = " + format_double(r.queries.ratio()) + "\n";
    return s;
}

}  // namespace spectroqsim::resources
