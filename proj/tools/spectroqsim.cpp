#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spectroqsim/spectroqsim.hpp"

namespace sq = spectroqsim;
namespace fs = std::filesystem;

namespace {

int cmd_simulate(const std::string& config_path, const std::string& ledger_arg, bool resume, int workers,
                 std::size_t max_items, bool quiet) {
    const auto cfg = sq::load_config(config_path);
    if (!cfg.has_simulation) throw sq::ConfigError(config_path + ": no simulation section (resources-only configuration)");
    const std::string ledger = ledger_arg.empty() ? (fs::path(cfg.output_dir) / "ledger.csv").string() : ledger_arg;
    if (const auto dir = fs::path(ledger).parent_path(); !dir.empty()) fs::create_directories(dir);
    if (!resume && fs::exists(ledger) && fs::file_size(ledger) > 0)
        throw sq::ConfigError(ledger + " exists; pass --resume to continue it or remove it first");

    sq::SweepOptions opt;
    opt.ledger_path = ledger;
    opt.resume = resume;
    opt.workers = workers;
    opt.max_items = max_items;
    std::size_t last_pct = 101;
    if (!quiet)
        opt.progress = [&](std::size_t done, std::size_t total) {
            const std::size_t pct = total ? 100 * done / total : 100;
            if (pct != last_pct && pct % 5 == 0) {
                std::fprintf(stderr, "\r%s: %zu/%zu items (%zu%%)", sq::protocol_name(cfg.protocol), done, total, pct);
                last_pct = pct;
            }
        };
    const auto res = sq::run_sweep(cfg, opt);
    if (!quiet) std::fputc('\n', stderr);
    std::cout << "ledger " << ledger << "\n"
              << "config_hash " << sq::hex64(sq::config_hash(cfg)) << "\n"
              << "items " << res.items_total << " (skipped " << res.items_skipped << ", ran " << res.items_run << ")\n"
              << "records " << res.ledger.count() << "/" << res.ledger.shape().size()
              << (res.complete() ? " complete" : " incomplete") << "\n";
    return 0;
}

sq::PostprocessOptions post_options(std::optional<double> eps, std::optional<std::uint64_t> seed, const std::string& window,
                                    int pad1, int pad3) {
    sq::PostprocessOptions o;
    o.epsilon = eps;
    o.noise_seed = seed;
    if (window == "hann") o.spectrum.window = sq::Window::Hann;
    else if (window != "none") throw sq::ConfigError("--window must be none or hann");
    o.spectrum.pad1 = pad1;
    o.spectrum.pad3 = pad3;
    return o;
}

int cmd_postprocess(const std::string& ledger_path, const std::string& config_path, const std::string& out,
                    const sq::PostprocessOptions& opt) {
    const auto ledger = sq::MeasurementLedger::load(ledger_path);
    const auto cfg = config_path.empty() ? sq::config_from_ledger(ledger) : sq::load_config(config_path);
    const auto run = sq::process_ledger(ledger, cfg, opt);
    sq::write_processed(run, out);
    std::cout << "wrote " << out << " (" << run.raw.n1() << " x " << run.raw.n2() << " x " << run.raw.n3()
              << ", max |S| = " << sq::format_double(run.normalized.max_abs) << ")\n";
    return 0;
}

int cmd_resources(const std::string& scenario, const std::string& config_path, std::optional<double> lo,
                  std::optional<double> hi, std::optional<int> points, const std::string& out) {
    if (scenario != "fmo") throw sq::ConfigError("--scenario: only fmo is defined");
    sq::ResourceConfig rc;
    if (!config_path.empty()) {
        const auto cfg = sq::load_config(config_path);
        if (!cfg.resources) throw sq::ConfigError(config_path + ": no resources section");
        rc = *cfg.resources;
    }
    if (lo) rc.dw3_min_cm = *lo;
    if (hi) rc.dw3_max_cm = *hi;
    if (points) rc.dw3_points = *points;
    const auto rows = sq::resources::fmo_report(sq::resources::linspace(rc.dw3_min_cm, rc.dw3_max_cm, rc.dw3_points), rc.scenario);
    std::cout << sq::resources::summary(sq::resources::cost_row(rc.scenario.plan(rc.dw3_reference_cm), rc.dw3_reference_cm));
    std::vector<double> dw, qs, qp;
    for (const auto& r : rows) {
        dw.push_back(r.dw3_cm);
        qs.push_back(r.queries.sqsp);
        qp.push_back(r.queries.pqp);
    }
    if (rows.size() >= 2)
        std::cout << "log-log slope of dw3 vs queries: SQSP " << sq::format_double(sq::resources::loglog_slope(qs, dw))
                  << ", PQP " << sq::format_double(sq::resources::loglog_slope(qp, dw)) << "\n";
    if (const auto dir = fs::path(out).parent_path(); !dir.empty()) fs::create_directories(dir);
    sq::resources::write_cost_csv(rows, out);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& out,
                const sq::PostprocessOptions& opt) {
    const auto a = sq::process_ledger_file(a_path, opt);
    const auto b = sq::process_ledger_file(b_path, opt);
    if (a.config.protocol != sq::Protocol::Sqsp) throw sq::ConfigError(a_path + " is not an SQSP ledger");
    if (b.config.protocol != sq::Protocol::Pqp) throw sq::ConfigError(b_path + " is not a PQP ledger");
    const auto report = sq::compare_runs(a, b);
    for (const auto& p : report.peaks)
        std::cout << p.label << " correlation " << sq::format_double(p.correlation) << " (bins "
                  << sq::format_double(p.omega1_bin_a) << "/" << sq::format_double(p.omega3_bin_a) << " vs "
                  << sq::format_double(p.omega1_bin_b) << "/" << sq::format_double(p.omega3_bin_b) << ", mismatch "
                  << sq::format_double(p.bin_mismatch_cm) << " cm^-1)\n";
    if (!out.empty()) {
        if (const auto dir = fs::path(out).parent_path(); !dir.empty()) fs::create_directories(dir);
        sq::write_comparison_csv(report, out);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_validate(bool all, const std::string& scratch, int workers) {
    namespace v = sq::validation;
    bool ok = true;
    auto print = [&](const v::CriterionResult& r) {
        std::cout << v::format_result(r) << std::endl;
        ok = ok && r.pass;
    };
    if (all) {
        v::full_suite(scratch, sq::default_workers(workers), print);
    } else {
        for (const auto& r : v::quick_suite()) print(r);
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectroqsim: 2D electronic spectroscopy on a simulated quantum register"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run or resume a parameter sweep");
    std::string config, ledger_out;
    bool resume = false, quiet = false;
    int workers = 0;
    std::size_t max_items = 0;
    sim->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
    sim->add_option("--ledger", ledger_out, "ledger path (default <output_dir>/ledger.csv)");
    sim->add_flag("--resume", resume, "continue an existing ledger");
    sim->add_option("--workers", workers, "worker threads (0 = configuration or hardware)")->check(CLI::NonNegativeNumber);
    sim->add_option("--max-items", max_items, "stop after this many work items");
    sim->add_flag("--quiet", quiet, "no progress output");

    auto* post = app.add_subcommand("postprocess", "spectra and peak traces from a ledger");
    std::string ledger_in, post_config, out_dir, window = "none";
    std::optional<double> eps;
    std::optional<std::uint64_t> noise_seed;
    int pad1 = 0, pad3 = 0;
    post->add_option("--ledger", ledger_in, "measurement ledger")->required()->check(CLI::ExistingFile);
    post->add_option("--config", post_config, "configuration to check against the ledger");
    post->add_option("--out", out_dir, "output directory")->required();
    post->add_option("--shot-noise-eps", eps, "Gaussian shot-noise standard deviation");
    post->add_option("--noise-seed", noise_seed, "shot-noise seed");
    post->add_option("--window", window, "apodization: none or hann");
    post->add_option("--pad1", pad1, "zero-padded length along t1");
    post->add_option("--pad3", pad3, "zero-padded length along t3");

    auto* res = app.add_subcommand("resources", "cost tables for the FMO scenario");
    std::string scenario = "fmo", res_config, res_out = "fmo_costs.csv";
    std::optional<double> dw_lo, dw_hi;
    std::optional<int> dw_points;
    res->add_option("--scenario", scenario, "scenario name");
    res->add_option("--config", res_config, "configuration with a resources section");
    res->add_option("--dw3-min", dw_lo, "smallest detection resolution, cm^-1");
    res->add_option("--dw3-max", dw_hi, "largest detection resolution, cm^-1");
    res->add_option("--points", dw_points, "number of resolutions");
    res->add_option("--out", res_out, "cost CSV path");

    auto* cmp = app.add_subcommand("compare", "peak-trace correlations between SQSP and PQP ledgers");
    std::string sqsp_path, pqp_path, cmp_out;
    cmp->add_option("--sqsp", sqsp_path, "SQSP ledger")->required()->check(CLI::ExistingFile);
    cmp->add_option("--pqp", pqp_path, "PQP ledger")->required()->check(CLI::ExistingFile);
    cmp->add_option("--out", cmp_out, "comparison CSV path");
    cmp->add_option("--shot-noise-eps", eps, "Gaussian shot-noise standard deviation");
    cmp->add_option("--noise-seed", noise_seed, "shot-noise seed");

    auto* val = app.add_subcommand("validate", "run the oracle checks");
    bool all = false;
    std::string scratch = (fs::temp_directory_path() / "spectroqsim-validate").string();
    int val_workers = 0;
    val->add_flag("--all", all, "include the sweep-based checks (slow)");
    val->add_option("--scratch", scratch, "directory for temporary ledgers");
    val->add_option("--workers", val_workers, "worker threads for sweeps");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(config, ledger_out, resume, workers, max_items, quiet);
        if (*post) return cmd_postprocess(ledger_in, post_config, out_dir, post_options(eps, noise_seed, window, pad1, pad3));
        if (*res) return cmd_resources(scenario, res_config, dw_lo, dw_hi, dw_points, res_out);
        if (*cmp) return cmd_compare(sqsp_path, pqp_path, cmp_out, post_options(eps, noise_seed, "none", 0, 0));
        if (*val) return cmd_validate(all, scratch, val_workers);
    } catch (const sq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
