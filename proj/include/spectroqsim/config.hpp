#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectroqsim/errors.hpp"
#include "spectroqsim/ledger.hpp"
#include "spectroqsim/model.hpp"
#include "spectroqsim/pipeline.hpp"
#include "spectroqsim/protocol.hpp"
#include "spectroqsim/resources.hpp"

namespace spectroqsim {

using json = nlohmann::json;

/// Resource-estimation section of a run configuration.
struct ResourceConfig {
    resources::FmoScenario scenario;
    double carrier_nm = 805.0;
    double pulse_window_fs = 14.0;
    double tau_fs = 5.0;
    double delay_fs = 6.93;
    double dw3_min_cm = 10.0;
    double dw3_max_cm = 60.0;
    int dw3_points = 51;
    double dw3_reference_cm = 40.0;
};

/// Fully defaulted and validated run description.
struct RunConfig {
    bool has_simulation = true;
    Protocol protocol = Protocol::Sqsp;
    ProtocolSetup setup;
    SqspDetection sqsp;
    /// Probe gap requests as written ("E1", "E2-500", or numbers) and the
    /// resolved values in cm^-1.
    std::vector<std::string> probe_gap_labels;
    std::vector<double> probe_gaps_cm;
    std::vector<double> probe_couplings_cm;
    double probe_t3_fs = 725.0;
    int probe_layers = 580;
    ShotNoiseSpec shot_noise;
    std::uint64_t seed = 20240601;
    std::string output_dir = "out";
    int workers = 0;
    std::optional<ResourceConfig> resources;

    std::vector<PqpDetection> pqp_lines() const {
        std::vector<PqpDetection> out;
        for (double g : probe_gaps_cm) {
            PqpDetection d;
            d.probe = ProbeSpec{g, probe_couplings_cm};
            d.t3_fs = probe_t3_fs;
            d.layers = probe_layers;
            out.push_back(d);
        }
        return out;
    }

    SweepEngine engine() const {
        if (!has_simulation) throw ConfigError("configuration has no simulation section");
        return protocol == Protocol::Sqsp ? SweepEngine(setup, sqsp) : SweepEngine(setup, pqp_lines());
    }
};

/// One-exciton transition energies from the ground state, descending
/// (E1 is the highest).
inline std::vector<double> one_exciton_gaps(const SystemSpec& spec) {
    const auto eig = eigendecompose(build_system_hamiltonian(spec));
    std::vector<double> out;
    double ground = 0.0;
    for (std::size_t l = 0; l < eig.size(); ++l)
        if (eig.manifold_of(l) == 0) ground = eig.energies_cm[l];
    for (std::size_t l = 0; l < eig.size(); ++l)
        if (eig.manifold_of(l) == 1) out.push_back(eig.energies_cm[l] - ground);
    std::sort(out.rbegin(), out.rend());
    return out;
}

namespace detail {

class ConfigReader {
   public:
    explicit ConfigReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw ConfigError(source_ + ": field '" + field + "': " + what);
    }

    void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : obj.items())
            if (!allowed.count(k)) fail(join(path, k), "unknown key");
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    double number(const json& obj, const std::string& path, const char* key, double def) const {
        if (!obj.contains(key)) return def;
        const auto& v = obj.at(key);
        if (!v.is_number()) fail(join(path, key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(join(path, key), "must be finite");
        return d;
    }

    int integer(const json& obj, const std::string& path, const char* key, int def) const {
        if (!obj.contains(key)) return def;
        const auto& v = obj.at(key);
        if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
        return v.get<int>();
    }

    bool boolean(const json& obj, const std::string& path, const char* key, bool def) const {
        if (!obj.contains(key)) return def;
        if (!obj.at(key).is_boolean()) fail(join(path, key), "expected true or false");
        return obj.at(key).get<bool>();
    }

    std::string string(const json& obj, const std::string& path, const char* key, const std::string& def) const {
        if (!obj.contains(key)) return def;
        if (!obj.at(key).is_string()) fail(join(path, key), "expected a string");
        return obj.at(key).get<std::string>();
    }

    std::vector<double> numbers(const json& obj, const std::string& path, const char* key,
                                const std::vector<double>& def) const {
        if (!obj.contains(key)) return def;
        const auto& v = obj.at(key);
        if (!v.is_array()) fail(join(path, key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(join(path, key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    const json& object(const json& obj, const char* key) const {
        static const json empty = json::object();
        return obj.contains(key) ? obj.at(key) : empty;
    }

   private:
    std::string source_;
};

inline DelayGrid read_grid(const ConfigReader& r, const json& g, const std::string& path, DelayGrid def) {
    r.allow_keys(g, path, {"samples", "dt_fs", "layers_per_sample"});
    DelayGrid out{r.integer(g, path, "samples", def.samples), r.number(g, path, "dt_fs", def.dt_fs),
                  r.integer(g, path, "layers_per_sample", def.layers_per_sample)};
    if (out.samples < 0) r.fail(path + ".samples", "must be >= 0");
    if (!(out.dt_fs > 0.0)) r.fail(path + ".dt_fs", "must be > 0");
    if (out.layers_per_sample < 1) r.fail(path + ".layers_per_sample", "must be >= 1");
    return out;
}

inline std::uint64_t read_seed(const ConfigReader& r, const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    r.fail(path, "expected a non-negative integer");
}

/// "E1", "E2-500", "E1+250" or a plain number.
inline double resolve_gap(const ConfigReader& r, const json& v, const std::vector<double>& gaps, const std::string& path,
                          std::string& label) {
    if (v.is_number()) {
        label = format_double(v.get<double>());
        return v.get<double>();
    }
    if (!v.is_string()) r.fail(path, "expected a number or a label like \"E1\"");
    label = v.get<std::string>();
    if (label.size() < 2 || label[0] != 'E') r.fail(path, "unrecognized gap label '" + label + "'");
    std::size_t pos = 1;
    int idx = 0;
    while (pos < label.size() && std::isdigit(static_cast<unsigned char>(label[pos]))) idx = idx * 10 + (label[pos++] - '0');
    if (idx < 1 || idx > static_cast<int>(gaps.size())) r.fail(path, "label '" + label + "' names no one-exciton state");
    double offset = 0.0;
    if (pos < label.size()) {
        try {
            std::size_t used = 0;
            offset = std::stod(label.substr(pos), &used);
            if (pos + used != label.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            r.fail(path, "bad offset in '" + label + "'");
        }
    }
    return gaps[idx - 1] + offset;
}

}  // namespace detail

/// Byte offset -> 1-based line number.
inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ":" + std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                          ": parse error: " + e.what());
    }
}

/// Builds a RunConfig from parsed JSON. Missing values take the defaults
/// of the two-site study; unknown keys are errors.
inline RunConfig config_from_json(const json& root, const std::string& source = "<config>") {
    detail::ConfigReader r(source);
    r.allow_keys(root, "", {"protocol", "system", "pulses", "trotter_order", "noise", "grids", "probe", "phase_cycle",
                            "fluorescence", "shot_noise", "seed", "output_dir", "workers", "resources"});
    RunConfig c;
    c.has_simulation = root.contains("protocol");
    if (!c.has_simulation) {
        for (const char* k : {"system", "pulses", "grids", "probe", "phase_cycle", "noise", "trotter_order"})
            if (root.contains(k)) r.fail(k, "simulation sections require a 'protocol' entry");
        if (!root.contains("resources")) r.fail("protocol", "missing; a configuration needs a simulation or a resources section");
    }

    const std::string proto = r.string(root, "", "protocol", "sqsp");
    if (proto == "sqsp") c.protocol = Protocol::Sqsp;
    else if (proto == "pqp") c.protocol = Protocol::Pqp;
    else r.fail("protocol", "must be \"sqsp\" or \"pqp\"");

    // system
    {
        const auto& s = r.object(root, "system");
        r.allow_keys(s, "system", {"site_energies_cm", "couplings_cm", "dipole_scales"});
        const auto energies = r.numbers(s, "system", "site_energies_cm", {12100.0, 11900.0});
        if (energies.empty()) r.fail("system.site_energies_cm", "needs at least one site");
        c.setup.system = SystemSpec::uncoupled(energies);
        c.setup.system.dipole_scales = r.numbers(s, "system", "dipole_scales", std::vector<double>(energies.size(), 1.0));
        if (c.setup.system.dipole_scales.size() != energies.size())
            r.fail("system.dipole_scales", "length must equal the number of sites");
        json couplings = s.contains("couplings_cm") ? s.at("couplings_cm") : json::array({json::array({0, 1, 100.0})});
        if (!s.contains("couplings_cm") && energies.size() != 2) couplings = json::array();
        if (!couplings.is_array()) r.fail("system.couplings_cm", "expected an array of [m, n, J] triples");
        for (const auto& t : couplings) {
            if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() || !t[2].is_number())
                r.fail("system.couplings_cm", "expected [m, n, J] with integer sites");
            const int m = t[0].get<int>(), n = t[1].get<int>();
            const int sites = static_cast<int>(energies.size());
            if (m < 0 || n < 0 || m >= sites || n >= sites || m == n)
                r.fail("system.couplings_cm", "site indices must be distinct and in range");
            c.setup.system.couplings(m, n) = c.setup.system.couplings(n, m) = t[2].get<double>();
        }
        try {
            c.setup.system.validate();
            require_qubits_within_cap(c.setup.system.n_qub + (c.protocol == Protocol::Pqp ? 1 : 0));
        } catch (const Error& e) {
            r.fail("system", e.what());
        }
    }
    const int n = c.setup.system.n_qub;

    // pulses
    {
        const auto& p = r.object(root, "pulses");
        r.allow_keys(p, "pulses",
                     {"profile", "amplitudes_cm", "kick_area_fs", "carrier_cm", "tau_fs", "delay_fs", "duration_fs", "steps"});
        const std::string profile = r.string(p, "pulses", "profile", "delta");
        std::vector<double> amps = r.numbers(p, "pulses", "amplitudes_cm", {});
        if (amps.empty()) {
            amps.assign(static_cast<std::size_t>(n), -8000.0);
            if (n >= 2) amps[1] = 0.8 * -8000.0;
        }
        if (static_cast<int>(amps.size()) != n) r.fail("pulses.amplitudes_cm", "length must equal the number of sites");
        PulseSpec pulse;
        if (profile == "delta") {
            for (const char* k : {"carrier_cm", "tau_fs", "delay_fs", "duration_fs", "steps"})
                if (p.contains(k)) r.fail(std::string("pulses.") + k, "not used by the delta profile");
            pulse = PulseSpec::delta(amps, r.number(p, "pulses", "kick_area_fs", 0.015));
            if (!(pulse.kick_area_fs > 0.0)) r.fail("pulses.kick_area_fs", "must be > 0");
        } else if (profile == "gaussian") {
            if (p.contains("kick_area_fs")) r.fail("pulses.kick_area_fs", "only used by the delta profile");
            const double carrier = r.number(p, "pulses", "carrier_cm", 12000.0);
            const double duration = r.number(p, "pulses", "duration_fs", 14.0);
            double fastest = std::abs(carrier);
            for (double e : c.setup.system.site_energies) fastest = std::max(fastest, std::abs(e));
            const int steps = r.integer(p, "pulses", "steps", pulse_steps_for(duration, fastest));
            pulse = PulseSpec::gaussian(amps, carrier, r.number(p, "pulses", "tau_fs", 5.0),
                                        r.number(p, "pulses", "delay_fs", 6.93), duration, steps);
        } else {
            r.fail("pulses.profile", "must be \"delta\" or \"gaussian\"");
        }
        try {
            pulse.validate(c.setup.system);
        } catch (const Error& e) {
            r.fail("pulses", e.what());
        }
        c.setup.pulses = {pulse, pulse, pulse, pulse};
    }

    c.setup.trotter_order = r.integer(root, "", "trotter_order", 2);
    if (c.setup.trotter_order != 1 && c.setup.trotter_order != 2) r.fail("trotter_order", "must be 1 or 2");

    {
        const auto& z = r.object(root, "noise");
        r.allow_keys(z, "noise", {"gamma_z_cm", "probe_noiseless"});
        c.setup.noise.gamma_z_cm = r.number(z, "noise", "gamma_z_cm", 4.0);
        c.setup.noise.probe_noiseless = r.boolean(z, "noise", "probe_noiseless", true);
        if (c.setup.noise.gamma_z_cm < 0.0) r.fail("noise.gamma_z_cm", "must be >= 0");
    }

    {
        const auto& g = r.object(root, "grids");
        r.allow_keys(g, "grids", {"t1", "t2", "t3"});
        c.setup.t1 = detail::read_grid(r, r.object(g, "t1"), "grids.t1", {400, 1.25, 1});
        c.setup.t2 = detail::read_grid(r, r.object(g, "t2"), "grids.t2", {20, 1.0, 30});
        if (c.protocol == Protocol::Sqsp) {
            c.sqsp.t3 = detail::read_grid(r, r.object(g, "t3"), "grids.t3", c.setup.t1);
        } else if (g.contains("t3")) {
            r.fail("grids.t3", "the PQP detection time is set in 'probe'");
        }
        for (const auto& [name, grid] : {std::pair{"grids.t1", c.setup.t1}, std::pair{"grids.t2", c.setup.t2}}) {
            try {
                c.setup.noise.p_z(grid.dt_fs);
            } catch (const Error& e) {
                r.fail(name, e.what());
            }
        }
    }

    {
        const auto& p = r.object(root, "probe");
        r.allow_keys(p, "probe", {"gaps_cm", "couplings_cm", "t3_fs", "layers"});
        if (c.protocol == Protocol::Pqp) {
            if (!p.contains("gaps_cm")) r.fail("probe.gaps_cm", "required when protocol is pqp");
            const auto& gv = p.at("gaps_cm");
            if (!gv.is_array() || gv.empty()) r.fail("probe.gaps_cm", "expected a non-empty array");
            const auto gaps = one_exciton_gaps(c.setup.system);
            for (std::size_t i = 0; i < gv.size(); ++i) {
                std::string label;
                c.probe_gaps_cm.push_back(
                    detail::resolve_gap(r, gv[i], gaps, "probe.gaps_cm[" + std::to_string(i) + "]", label));
                if (!(c.probe_gaps_cm.back() > 0.0)) r.fail("probe.gaps_cm", "probe gaps must be > 0");
                c.probe_gap_labels.push_back(label);
            }
            c.probe_couplings_cm = r.numbers(p, "probe", "couplings_cm", std::vector<double>(static_cast<std::size_t>(n), 10.0));
            if (static_cast<int>(c.probe_couplings_cm.size()) != n)
                r.fail("probe.couplings_cm", "length must equal the number of sites");
            c.probe_t3_fs = r.number(p, "probe", "t3_fs", 725.0);
            if (!(c.probe_t3_fs > 0.0)) r.fail("probe.t3_fs", "must be > 0");
            const int def_layers = static_cast<int>(resources::ceil_count(c.probe_t3_fs / 1.25));
            c.probe_layers = r.integer(p, "probe", "layers", def_layers);
            if (c.probe_layers < 1) r.fail("probe.layers", "must be >= 1");
        } else if (!p.empty()) {
            r.fail("probe", "only valid when protocol is pqp");
        }
    }

    {
        const auto& pc = r.object(root, "phase_cycle");
        r.allow_keys(pc, "phase_cycle", {"signal", "p", "phases"});
        const std::string signal = r.string(pc, "phase_cycle", "signal", "rephasing");
        if (signal == "rephasing") c.setup.scheme = PhaseCycleScheme::rephasing();
        else if (signal == "nonrephasing") c.setup.scheme = PhaseCycleScheme::nonrephasing();
        else if (signal != "custom") r.fail("phase_cycle.signal", "must be rephasing, nonrephasing or custom");
        if (pc.contains("p")) {
            if (signal != "custom") r.fail("phase_cycle.p", "only allowed with signal \"custom\"");
            const auto pv = r.numbers(pc, "phase_cycle", "p", {});
            if (pv.size() != 4) r.fail("phase_cycle.p", "expected four entries");
            for (int j = 0; j < 4; ++j) {
                if (pv[j] != 0.0 && pv[j] != 1.0) r.fail("phase_cycle.p", "entries must be 0 or 1");
                c.setup.scheme.p[j] = static_cast<int>(pv[j]);
            }
        } else if (signal == "custom") {
            r.fail("phase_cycle.p", "required with signal \"custom\"");
        }
        if (pc.contains("phases")) {
            const auto& ph = pc.at("phases");
            if (!ph.is_array() || ph.size() != 4) r.fail("phase_cycle.phases", "expected four arrays of radians");
            for (int j = 0; j < 4; ++j) {
                if (!ph[j].is_array() || ph[j].empty()) r.fail("phase_cycle.phases", "each pulse needs at least one phase");
                c.setup.scheme.phases[j].clear();
                for (const auto& v : ph[j]) {
                    if (!v.is_number()) r.fail("phase_cycle.phases", "phases must be numbers");
                    c.setup.scheme.phases[j].push_back(v.get<double>());
                }
            }
        }
    }

    {
        const auto& f = r.object(root, "fluorescence");
        r.allow_keys(f, "fluorescence", {"gamma1", "gamma2"});
        c.setup.fluorescence = {r.number(f, "fluorescence", "gamma1", 1.0), r.number(f, "fluorescence", "gamma2", 2.0)};
        if (c.setup.fluorescence.gamma1 < 0.0) r.fail("fluorescence.gamma1", "must be >= 0");
        if (c.setup.fluorescence.gamma2 < 0.0) r.fail("fluorescence.gamma2", "must be >= 0");
    }

    {
        const auto& s = r.object(root, "shot_noise");
        r.allow_keys(s, "shot_noise", {"epsilon", "seed"});
        c.shot_noise.epsilon = r.number(s, "shot_noise", "epsilon", 0.0);
        if (c.shot_noise.epsilon < 0.0) r.fail("shot_noise.epsilon", "must be >= 0");
        if (s.contains("seed")) c.shot_noise.seed = detail::read_seed(r, s.at("seed"), "shot_noise.seed");
    }

    if (root.contains("seed")) c.seed = detail::read_seed(r, root.at("seed"), "seed");
    c.output_dir = r.string(root, "", "output_dir", "out");
    c.workers = r.integer(root, "", "workers", 0);
    if (c.workers < 0) r.fail("workers", "must be >= 0");

    if (root.contains("resources")) {
        const auto& s = root.at("resources");
        const std::string path = "resources";
        r.allow_keys(s, path,
                     {"scenario", "n_qub", "dw1_cm", "dt1_fs", "t2_max_fs", "dt2_fs", "dt3_fs", "carrier_nm",
                      "pulse_window_fs", "tau_fs", "delay_fs", "pulse_layers", "n_freq", "alpha_c", "alpha_pqp",
                      "dw3_min_cm", "dw3_max_cm", "dw3_points", "dw3_reference_cm"});
        if (r.string(s, path, "scenario", "fmo") != "fmo") r.fail("resources.scenario", "only \"fmo\" is defined");
        ResourceConfig rc;
        auto& f = rc.scenario;
        f.n_qub = r.integer(s, path, "n_qub", f.n_qub);
        f.dw1_cm = r.number(s, path, "dw1_cm", f.dw1_cm);
        f.dt1_fs = r.number(s, path, "dt1_fs", f.dt1_fs);
        f.t2_max_fs = r.number(s, path, "t2_max_fs", f.t2_max_fs);
        f.dt2_fs = r.number(s, path, "dt2_fs", f.dt2_fs);
        f.dt3_fs = r.number(s, path, "dt3_fs", f.dt3_fs);
        rc.carrier_nm = r.number(s, path, "carrier_nm", rc.carrier_nm);
        rc.pulse_window_fs = r.number(s, path, "pulse_window_fs", rc.pulse_window_fs);
        rc.tau_fs = r.number(s, path, "tau_fs", rc.tau_fs);
        rc.delay_fs = r.number(s, path, "delay_fs", rc.delay_fs);
        if (!(rc.carrier_nm > 0.0)) r.fail("resources.carrier_nm", "must be > 0");
        // Default pulse depth: eight steps per carrier period over the window.
        f.dp = r.integer(s, path, "pulse_layers", pulse_steps_for(rc.pulse_window_fs, 1e7 / rc.carrier_nm));
        f.n_freq = r.integer(s, path, "n_freq", static_cast<int>(f.n_freq));
        f.alpha_c = r.number(s, path, "alpha_c", f.alpha_c);
        f.alpha_pqp = r.number(s, path, "alpha_pqp", f.alpha_pqp);
        rc.dw3_min_cm = r.number(s, path, "dw3_min_cm", rc.dw3_min_cm);
        rc.dw3_max_cm = r.number(s, path, "dw3_max_cm", rc.dw3_max_cm);
        rc.dw3_points = r.integer(s, path, "dw3_points", rc.dw3_points);
        rc.dw3_reference_cm = r.number(s, path, "dw3_reference_cm", rc.dw3_reference_cm);
        if (f.n_qub < 1) r.fail("resources.n_qub", "must be >= 1");
        for (auto [name, v] : {std::pair{"dw1_cm", f.dw1_cm}, std::pair{"dt1_fs", f.dt1_fs}, std::pair{"dt2_fs", f.dt2_fs},
                               std::pair{"dt3_fs", f.dt3_fs}, std::pair{"t2_max_fs", f.t2_max_fs},
                               std::pair{"dw3_min_cm", rc.dw3_min_cm}})
            if (!(v > 0.0)) r.fail(std::string("resources.") + name, "must be > 0");
        if (rc.dw3_max_cm < rc.dw3_min_cm) r.fail("resources.dw3_max_cm", "must be >= dw3_min_cm");
        if (rc.dw3_points < 1) r.fail("resources.dw3_points", "must be >= 1");
        if (f.n_freq < 1) r.fail("resources.n_freq", "must be >= 1");
        c.resources = rc;
    }

    if (c.has_simulation) {
        try {
            c.setup.validate();
        } catch (const Error& e) {
            r.fail("simulation", e.what());
        }
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open configuration " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return config_from_json(parse_json_text(ss.str(), path), path);
}

// ---------------------------------------------------------------------------
// Canonical form and hashes
// ---------------------------------------------------------------------------

namespace detail {

inline json grid_json(const DelayGrid& g) {
    return {{"samples", g.samples}, {"dt_fs", g.dt_fs}, {"layers_per_sample", g.layers_per_sample}};
}

/// Sections shared by both protocols up to the detection stage.
inline json prefix_json(const RunConfig& c) {
    const auto& s = c.setup;
    json couplings = json::array();
    for (int m = 0; m < s.system.n_qub; ++m)
        for (int n = m + 1; n < s.system.n_qub; ++n)
            if (s.system.couplings(m, n) != 0.0) couplings.push_back({m, n, s.system.couplings(m, n)});
    const auto& p = s.pulses[0];
    json pulses = {{"profile", p.profile == PulseProfile::Delta ? "delta" : "gaussian"}, {"amplitudes_cm", p.amplitudes_cm}};
    if (p.profile == PulseProfile::Delta) {
        pulses["kick_area_fs"] = p.kick_area_fs;
    } else {
        pulses["carrier_cm"] = p.carrier_cm;
        pulses["tau_fs"] = p.tau_fs;
        pulses["delay_fs"] = p.delay_fs;
        pulses["duration_fs"] = p.duration_fs;
        pulses["steps"] = p.steps;
    }
    json phases = json::array();
    for (const auto& ph : s.scheme.phases) phases.push_back(ph);
    return {{"system",
             {{"site_energies_cm", s.system.site_energies},
              {"couplings_cm", couplings},
              {"dipole_scales", s.system.dipole_scales}}},
            {"pulses", pulses},
            {"trotter_order", s.trotter_order},
            {"noise", {{"gamma_z_cm", s.noise.gamma_z_cm}, {"probe_noiseless", s.noise.probe_noiseless}}},
            {"grids", {{"t1", grid_json(s.t1)}, {"t2", grid_json(s.t2)}}},
            {"phase_cycle", {{"signal", "custom"}, {"p", s.scheme.p}, {"phases", phases}}},
            {"fluorescence", {{"gamma1", s.fluorescence.gamma1}, {"gamma2", s.fluorescence.gamma2}}}};
}

}  // namespace detail

/// Canonical JSON of everything that affects stored values. Output
/// directory and worker count are excluded.
inline json canonical_json(const RunConfig& c) {
    json j;
    if (c.has_simulation) {
        j = detail::prefix_json(c);
        j["protocol"] = protocol_name(c.protocol);
        if (c.protocol == Protocol::Sqsp) {
            j["grids"]["t3"] = detail::grid_json(c.sqsp.t3);
        } else {
            j["probe"] = {{"gaps_cm", c.probe_gaps_cm},
                          {"labels", c.probe_gap_labels},
                          {"couplings_cm", c.probe_couplings_cm},
                          {"t3_fs", c.probe_t3_fs},
                          {"layers", c.probe_layers}};
        }
        j["seed"] = c.seed;
        j["shot_noise"] = {{"epsilon", c.shot_noise.epsilon}, {"seed", c.shot_noise.seed}};
    }
    if (c.resources) {
        const auto& r = *c.resources;
        const auto& f = r.scenario;
        j["resources"] = {{"scenario", "fmo"},        {"n_qub", f.n_qub},           {"dw1_cm", f.dw1_cm},
                          {"dt1_fs", f.dt1_fs},       {"t2_max_fs", f.t2_max_fs},   {"dt2_fs", f.dt2_fs},
                          {"dt3_fs", f.dt3_fs},       {"carrier_nm", r.carrier_nm}, {"pulse_window_fs", r.pulse_window_fs},
                          {"tau_fs", r.tau_fs},       {"delay_fs", r.delay_fs},     {"pulse_layers", f.dp},
                          {"n_freq", f.n_freq},       {"alpha_c", f.alpha_c},       {"alpha_pqp", f.alpha_pqp},
                          {"dw3_min_cm", r.dw3_min_cm}, {"dw3_max_cm", r.dw3_max_cm}, {"dw3_points", r.dw3_points},
                          {"dw3_reference_cm", r.dw3_reference_cm}};
    }
    return j;
}

inline std::uint64_t config_hash(const RunConfig& c) { return fnv1a(canonical_json(c).dump()); }

/// Hash of the sections that fix the pre-detection state; equal for an
/// SQSP and a PQP run that can be compared point by point.
inline std::uint64_t prefix_hash(const RunConfig& c) { return fnv1a(detail::prefix_json(c).dump()); }

/// Rebuilds the configuration stored in a ledger header and checks that
/// it hashes to the recorded value.
inline RunConfig config_from_ledger(const MeasurementLedger& ledger) {
    if (ledger.config_json().empty()) throw DataError("ledger carries no configuration");
    json j;
    try {
        j = json::parse(ledger.config_json());
    } catch (const json::parse_error& e) {
        throw DataError(std::string("ledger configuration is not valid JSON: ") + e.what());
    }
    // Stored gap values are numbers; keep labels out of the reader.
    if (j.contains("probe")) {
        j["probe"].erase("labels");
    }
    RunConfig c = config_from_json(j, "<ledger>");
    if (j.contains("probe") && ledger.config_json().find("\"labels\"") != std::string::npos) {
        const auto full = json::parse(ledger.config_json());
        c.probe_gap_labels = full["probe"]["labels"].get<std::vector<std::string>>();
    }
    if (config_hash(c) != ledger.config_hash()) throw DataError("ledger configuration does not match its config hash");
    return c;
}

}  // namespace spectroqsim
