#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "spectroqsim/config.hpp"
#include "spectroqsim/ledger.hpp"
#include "spectroqsim/spectra.hpp"

namespace spectroqsim {

/// A cross peak (omega1, omega3) named after the one-exciton levels.
struct PeakRequest {
    std::string label;
    double omega1_cm = 0.0;
    double omega3_cm = 0.0;
};

/// Every (Ei, Ej) pair of one-exciton transition energies.
inline std::vector<PeakRequest> default_peaks(const SystemSpec& spec) {
    const auto e = one_exciton_gaps(spec);
    std::vector<PeakRequest> out;
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = 0; j < e.size(); ++j)
            out.push_back({"E" + std::to_string(i + 1) + "E" + std::to_string(j + 1), e[i], e[j]});
    return out;
}

struct PostprocessOptions {
    /// Overrides the configured shot-noise level when set.
    std::optional<double> epsilon;
    std::optional<std::uint64_t> noise_seed;
    SpectrumOptions spectrum;
};

struct ProcessedRun {
    RunConfig config;
    double epsilon = 0.0;
    std::uint64_t noise_seed = 0;
    Spectrum2D raw;
    Spectrum2D normalized;
    std::vector<PeakRequest> peaks;
    std::vector<PeakTrace> traces;
};

/// Spectrum of a complete ledger under its own configuration.
inline Spectrum2D assemble_spectrum(const MeasurementLedger& ledger, const RunConfig& cfg, const SpectrumOptions& opt = {}) {
    const auto g1 = TimeGrid::of(cfg.setup.t1, "t1");
    const auto g2 = TimeGrid::of(cfg.setup.t2, "t2");
    if (cfg.protocol == Protocol::Sqsp)
        return assemble_sqsp_spectrum(ledger, cfg.setup.scheme, g1, g2, TimeGrid::of(cfg.sqsp.t3, "t3"), opt);
    return assemble_pqp_spectrum(ledger, cfg.setup.scheme, g1, g2, cfg.probe_gaps_cm, opt);
}

inline ProcessedRun process_ledger(const MeasurementLedger& ledger, const RunConfig& cfg, const PostprocessOptions& opt = {}) {
    if (config_hash(cfg) != ledger.config_hash())
        throw ConfigError("ledger config hash " + hex64(ledger.config_hash()) + " does not match the configuration " +
                          hex64(config_hash(cfg)));
    ledger.require_complete("postprocess");
    ProcessedRun run;
    run.config = cfg;
    run.epsilon = opt.epsilon.value_or(cfg.shot_noise.epsilon);
    run.noise_seed = opt.noise_seed.value_or(cfg.shot_noise.seed);
    if (run.epsilon > 0.0) {
        run.raw = assemble_spectrum(add_shot_noise(ledger, {run.epsilon, run.noise_seed}), cfg, opt.spectrum);
    } else {
        run.raw = assemble_spectrum(ledger, cfg, opt.spectrum);
    }
    run.normalized = normalize(run.raw);
    run.peaks = default_peaks(cfg.setup.system);
    for (const auto& p : run.peaks) run.traces.push_back(extract_peak_trace(run.normalized, p.omega1_cm, p.omega3_cm));
    return run;
}

inline ProcessedRun process_ledger_file(const std::string& path, const PostprocessOptions& opt = {}) {
    const auto ledger = MeasurementLedger::load(path);
    return process_ledger(ledger, config_from_ledger(ledger), opt);
}

inline void write_processed(const ProcessedRun& run, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto base = std::filesystem::path(dir);
    write_spectrum_csv(run.raw, (base / "spectrum_raw.csv").string());
    write_spectrum_csv(run.normalized, (base / "spectrum_normalized.csv").string());
    for (std::size_t i = 0; i < run.peaks.size(); ++i)
        write_trace_csv(run.traces[i], run.raw.t2_fs, (base / ("trace_" + run.peaks[i].label + ".csv")).string());

    json peaks = json::array();
    for (std::size_t i = 0; i < run.peaks.size(); ++i)
        peaks.push_back({{"label", run.peaks[i].label},
                         {"omega1_cm", run.peaks[i].omega1_cm},
                         {"omega3_cm", run.peaks[i].omega3_cm},
                         {"omega1_bin_cm", run.traces[i].omega1_cm},
                         {"omega3_bin_cm", run.traces[i].omega3_cm}});
    const json meta = {{"protocol", protocol_name(run.config.protocol)},
                       {"config_hash", hex64(config_hash(run.config))},
                       {"prefix_hash", hex64(prefix_hash(run.config))},
                       {"epsilon", run.epsilon},
                       {"noise_seed", run.noise_seed},
                       {"window", run.raw.window == Window::Hann ? "hann" : "none"},
                       {"pad1", run.raw.pad1},
                       {"pad3", run.raw.pad3},
                       {"normalization_max_abs", run.normalized.max_abs},
                       {"n_omega1", run.raw.n1()},
                       {"n_t2", run.raw.n2()},
                       {"n_omega3", run.raw.n3()},
                       {"peaks", peaks}};
    std::ofstream os(base / "metadata.json", std::ios::trunc);
    if (!os) throw DataError("cannot write metadata in " + dir);
    os << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Protocol comparison
// ---------------------------------------------------------------------------

struct PeakComparison {
    std::string label;
    double correlation = 0.0;
    double omega1_bin_a = 0.0, omega1_bin_b = 0.0;
    double omega3_bin_a = 0.0, omega3_bin_b = 0.0;
    /// Largest distance from a requested frequency to the bin used.
    double bin_mismatch_cm = 0.0;
};

struct ComparisonReport {
    std::vector<PeakComparison> peaks;
    double min_correlation() const {
        double m = 1.0;
        for (const auto& p : peaks) m = std::min(m, p.correlation);
        return m;
    }
};

/// Pearson correlation of matching peak traces. Runs must share the
/// pre-detection configuration.
inline ComparisonReport compare_runs(const ProcessedRun& a, const ProcessedRun& b) {
    if (prefix_hash(a.config) != prefix_hash(b.config))
        throw ConfigError("refusing to compare runs with different pre-detection configurations (" +
                          hex64(prefix_hash(a.config)) + " vs " + hex64(prefix_hash(b.config)) + ")");
    if (a.peaks.size() != b.peaks.size()) throw ConfigError("runs define different peak sets");
    ComparisonReport r;
    for (std::size_t i = 0; i < a.peaks.size(); ++i) {
        const auto& ta = a.traces[i];
        const auto& tb = b.traces[i];
        PeakComparison c;
        c.label = a.peaks[i].label;
        c.correlation = pearson(ta.values, tb.values);
        c.omega1_bin_a = ta.omega1_cm;
        c.omega1_bin_b = tb.omega1_cm;
        c.omega3_bin_a = ta.omega3_cm;
        c.omega3_bin_b = tb.omega3_cm;
        for (double d : {ta.omega1_cm - a.peaks[i].omega1_cm, tb.omega1_cm - b.peaks[i].omega1_cm,
                         ta.omega3_cm - a.peaks[i].omega3_cm, tb.omega3_cm - b.peaks[i].omega3_cm})
            c.bin_mismatch_cm = std::max(c.bin_mismatch_cm, std::abs(d));
        r.peaks.push_back(c);
    }
    return r;
}

inline void write_comparison_csv(const ComparisonReport& r, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write " + path);
    os << "peak,correlation,omega1_bin_a_cm,omega1_bin_b_cm,omega3_bin_a_cm,omega3_bin_b_cm,bin_mismatch_cm\n";
    for (const auto& p : r.peaks)
        os << p.label << ',' << format_double(p.correlation) << ',' << format_double(p.omega1_bin_a) << ','
           << format_double(p.omega1_bin_b) << ',' << format_double(p.omega3_bin_a) << ','
           << format_double(p.omega3_bin_b) << ',' << format_double(p.bin_mismatch_cm) << '\n';
}

}  // namespace spectroqsim
