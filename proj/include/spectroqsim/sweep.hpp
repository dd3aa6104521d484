#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "spectroqsim/config.hpp"
#include "spectroqsim/errors.hpp"
#include "spectroqsim/ledger.hpp"
#include "spectroqsim/pipeline.hpp"

namespace spectroqsim {

struct SweepOptions {
    /// Ledger file; empty keeps everything in memory.
    std::string ledger_path;
    int workers = 1;
    bool resume = false;
    /// Stop after this many new work items (0 = no limit).
    std::size_t max_items = 0;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct SweepResult {
    MeasurementLedger ledger;
    std::size_t items_total = 0;
    std::size_t items_skipped = 0;
    std::size_t items_run = 0;
    bool complete() const { return ledger.complete(); }
};

/// One unit of work: pulse-1 phase a, pulse-2 phase b, t1 sample.
struct WorkItem {
    int a = 0, b = 0, t1 = 0;
};

inline std::vector<WorkItem> work_items(const SweepEngine& e) {
    std::vector<WorkItem> out;
    for (int a = 0; a < e.n_phi1(); ++a)
        for (int b = 0; b < e.n_phi2(); ++b)
            for (int t1 = 0; t1 < e.n_t1(); ++t1) out.push_back({a, b, t1});
    return out;
}

namespace detail {

/// True when every value of the item is already stored.
inline bool item_complete(const SweepEngine& e, const MeasurementLedger& ledger, const WorkItem& w) {
    for (int t2 = 0; t2 < e.n_t2(); ++t2)
        for (int c = 0; c < e.n_phi3(); ++c)
            for (int d = 0; d < e.n_phi4(); ++d)
                if (!ledger.point_complete(w.t1, t2, e.phase_index(w.a, w.b, c, d))) return false;
    return true;
}

struct ItemValues {
    std::vector<std::size_t> index;
    std::vector<double> value;
};

inline ItemValues compute_item(const SweepEngine& e, const MeasurementLedger& ledger, const Matrix& after_t1,
                               const WorkItem& w) {
    ItemValues out;
    e.run_item(
        after_t1, w.b,
        [&](int t2, int k, int last, Observable obs, double v) {
            out.index.push_back(ledger.index({w.t1, t2, k, last, obs}));
            out.value.push_back(v);
        },
        w.a);
    return out;
}

}  // namespace detail

/// Runs (or resumes) the full grid for `engine`. Values are written to the
/// ledger file by a single writer in work-item order, so the file content
/// does not depend on the worker count.
inline SweepResult run_sweep(const SweepEngine& engine, std::uint64_t config_hash, std::uint64_t base_seed,
                             const std::string& config_json, const SweepOptions& opt) {
    const auto shape = LedgerShape::of(engine);
    SweepResult res{MeasurementLedger(shape, config_hash, base_seed, config_json)};
    const auto items = work_items(engine);
    res.items_total = items.size();

    std::ofstream os;
    if (!opt.ledger_path.empty()) {
        const bool exists = std::filesystem::exists(opt.ledger_path);
        if (opt.resume && exists) {
            std::size_t valid = 0;
            auto old = MeasurementLedger::load(opt.ledger_path, &valid);
            if (old.config_hash() != config_hash)
                throw ConfigError("refusing to resume " + opt.ledger_path + ": config hash " + hex64(old.config_hash()) +
                                  " differs from " + hex64(config_hash));
            if (!(old.shape() == shape)) throw ConfigError("refusing to resume " + opt.ledger_path + ": grid shape differs");
            std::filesystem::resize_file(opt.ledger_path, valid);
            res.ledger = std::move(old);
            os.open(opt.ledger_path, std::ios::binary | std::ios::app);
        } else {
            os.open(opt.ledger_path, std::ios::binary | std::ios::trunc);
            if (os) os << res.ledger.header();
        }
        if (!os) throw DataError("cannot write ledger " + opt.ledger_path);
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (!detail::item_complete(engine, res.ledger, items[i])) pending.push_back(i);
    res.items_skipped = items.size() - pending.size();
    if (opt.max_items > 0 && pending.size() > opt.max_items) pending.resize(opt.max_items);
    if (pending.empty()) return res;

    const auto first = engine.first_stage();
    auto state_of = [&](const WorkItem& w) -> const Matrix& {
        return first[static_cast<std::size_t>(w.a) * engine.n_t1() + w.t1];
    };

    auto commit = [&](const detail::ItemValues& v) {
        std::string buf;
        for (std::size_t j = 0; j < v.index.size(); ++j) {
            const auto idx = v.index[j];
            if (res.ledger.present_at(idx)) {
                if (res.ledger.at(idx) != v.value[j])
                    throw DataError("recomputed value differs from stored record " +
                                    res.ledger.describe(res.ledger.key_at(idx)));
                continue;
            }
            res.ledger.set_at(idx, v.value[j]);
            if (os.is_open()) buf += res.ledger.record_line(idx);
        }
        if (os.is_open()) {
            os << buf;
            os.flush();
            if (!os) throw DataError("failed writing ledger " + opt.ledger_path);
        }
        ++res.items_run;
        if (opt.progress) opt.progress(res.items_skipped + res.items_run, res.items_total);
    };

    const int workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(pending.size())));
    if (workers == 1) {
        for (auto i : pending) commit(detail::compute_item(engine, res.ledger, state_of(items[i]), items[i]));
        return res;
    }

    // Workers claim items in order; the writer commits them in the same
    // order. A window bounds the number of finished but unwritten items.
    const std::size_t window = static_cast<std::size_t>(workers) * 4;
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, detail::ItemValues> done;
    std::size_t next_claim = 0, next_write = 0;
    bool abort = false;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            std::size_t pos;
            {
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return abort || next_claim >= pending.size() || next_claim < next_write + window; });
                if (abort || next_claim >= pending.size()) return;
                pos = next_claim++;
            }
            detail::ItemValues v;
            try {
                const auto& w = items[pending[pos]];
                v = detail::compute_item(engine, res.ledger, state_of(w), w);
            } catch (...) {
                std::lock_guard lk(mu);
                if (!failure) failure = std::current_exception();
                abort = true;
                cv.notify_all();
                return;
            }
            std::lock_guard lk(mu);
            done.emplace(pos, std::move(v));
            cv.notify_all();
        }
    };

    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    try {
        while (next_write < pending.size()) {
            detail::ItemValues v;
            {
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return abort || done.count(next_write); });
                if (abort) break;
                v = std::move(done.at(next_write));
                done.erase(next_write);
            }
            commit(v);
            std::lock_guard lk(mu);
            ++next_write;
            cv.notify_all();
        }
    } catch (...) {
        std::lock_guard lk(mu);
        if (!failure) failure = std::current_exception();
        abort = true;
        cv.notify_all();
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return res;
}

inline int default_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Sweep driven by a run configuration.
inline SweepResult run_sweep(const RunConfig& cfg, SweepOptions opt) {
    opt.workers = default_workers(opt.workers == 0 ? cfg.workers : opt.workers);
    const auto engine = cfg.engine();
    return run_sweep(engine, config_hash(cfg), cfg.seed, canonical_json(cfg).dump(), opt);
}

}  // namespace spectroqsim
