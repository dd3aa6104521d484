#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spectroqsim/errors.hpp"
#include "spectroqsim/pipeline.hpp"

namespace spectroqsim {

// ---------------------------------------------------------------------------
// Hashing and seeds
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Stable seed for (base seed, protocol, indices); independent of the
/// order in which points are visited.
inline std::uint64_t point_seed(std::uint64_t base, Protocol protocol, std::initializer_list<std::int64_t> indices) {
    std::uint64_t h = splitmix64(base ^ (protocol == Protocol::Sqsp ? 0x5351ull : 0x5051ull));
    for (auto i : indices) h = splitmix64(h ^ static_cast<std::uint64_t>(i));
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    auto [p, ec] = std::to_chars(buf, buf + 16, v, 16);
    std::string s(buf, p);
    return std::string(16 - s.size(), '0') + s;
}

inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

struct LedgerShape {
    Protocol protocol = Protocol::Sqsp;
    int n_t1 = 0;
    int n_t2 = 0;
    int n_phase = 0;
    int n_last = 0;
    int n_obs = 1;

    std::size_t per_point() const { return static_cast<std::size_t>(n_last) * n_obs; }
    std::size_t size() const { return static_cast<std::size_t>(n_t1) * n_t2 * n_phase * per_point(); }
    bool operator==(const LedgerShape&) const = default;

    static LedgerShape of(const SweepEngine& e) {
        return {e.protocol(), e.n_t1(), e.n_t2(), e.n_phase(), e.n_last(), e.n_obs()};
    }
};

struct RecordKey {
    int t1 = 0, t2 = 0, phase = 0, last = 0;
    Observable obs = Observable::F;
};

/// Dense measurement store keyed by (t1, t2, phase, last, observable).
/// Every stored value is unique per key; the file form is append-only
/// text with a fixed column order and tolerates a torn final line.
class MeasurementLedger {
   public:
    static constexpr const char* format_version = "spectroqsim-ledger 1";
    static constexpr const char* columns = "protocol,t1,t2,phase,last,observable,value,seed,config_hash";

    MeasurementLedger() = default;

    MeasurementLedger(LedgerShape shape, std::uint64_t config_hash, std::uint64_t base_seed, std::string config_json = {})
        : shape_(shape),
          config_hash_(config_hash),
          base_seed_(base_seed),
          config_json_(std::move(config_json)),
          values_(shape.size(), 0.0),
          present_(shape.size(), 0) {}

    const LedgerShape& shape() const { return shape_; }
    std::uint64_t config_hash() const { return config_hash_; }
    std::uint64_t base_seed() const { return base_seed_; }
    const std::string& config_json() const { return config_json_; }

    /// Observable slot within the per-point block.
    int obs_slot(Observable o) const {
        if (shape_.protocol == Protocol::Sqsp) {
            if (o != Observable::F) throw DataError("SQSP ledgers only hold the F observable");
            return 0;
        }
        if (o == Observable::F) throw DataError("PQP ledgers only hold probe observables");
        return o == Observable::Xpr ? 0 : 1;
    }

    Observable slot_obs(int slot) const {
        if (shape_.protocol == Protocol::Sqsp) return Observable::F;
        return slot == 0 ? Observable::Xpr : Observable::Ypr;
    }

    std::size_t point_offset(int t1, int t2, int phase) const {
        return ((static_cast<std::size_t>(t1) * shape_.n_t2 + t2) * shape_.n_phase + phase) * shape_.per_point();
    }

    std::size_t index(const RecordKey& k) const {
        if (k.t1 < 0 || k.t1 >= shape_.n_t1 || k.t2 < 0 || k.t2 >= shape_.n_t2 || k.phase < 0 ||
            k.phase >= shape_.n_phase || k.last < 0 || k.last >= shape_.n_last)
            throw DataError("ledger key out of range");
        return point_offset(k.t1, k.t2, k.phase) + static_cast<std::size_t>(k.last) * shape_.n_obs + obs_slot(k.obs);
    }

    RecordKey key_at(std::size_t idx) const {
        RecordKey k;
        const int slot = static_cast<int>(idx % shape_.n_obs);
        idx /= shape_.n_obs;
        k.last = static_cast<int>(idx % shape_.n_last);
        idx /= shape_.n_last;
        k.phase = static_cast<int>(idx % shape_.n_phase);
        idx /= shape_.n_phase;
        k.t2 = static_cast<int>(idx % shape_.n_t2);
        k.t1 = static_cast<int>(idx / shape_.n_t2);
        k.obs = slot_obs(slot);
        return k;
    }

    bool has(const RecordKey& k) const { return present_[index(k)] != 0; }

    double get(const RecordKey& k) const {
        const auto i = index(k);
        if (!present_[i]) throw DataError("ledger has no value for " + describe(k));
        return values_[i];
    }

    double at(std::size_t idx) const { return values_[idx]; }
    bool present_at(std::size_t idx) const { return present_[idx] != 0; }

    /// Stores a value; a second write to the same key must agree exactly.
    void set(const RecordKey& k, double v) { set_at(index(k), v); }

    void set_at(std::size_t i, double v) {
        if (present_[i] && values_[i] != v) throw DataError("conflicting value for " + describe(key_at(i)));
        values_[i] = v;
        present_[i] = 1;
    }

    /// Overwrites a stored value (noise injection only).
    void replace_at(std::size_t i, double v) { values_[i] = v; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto p : present_) n += p;
        return n;
    }
    bool complete() const { return count() == values_.size(); }

    /// True when every value of point (t1, t2, phase) is present.
    bool point_complete(int t1, int t2, int phase) const {
        const auto off = point_offset(t1, t2, phase);
        for (std::size_t j = 0; j < shape_.per_point(); ++j)
            if (!present_[off + j]) return false;
        return true;
    }

    std::vector<RecordKey> missing(std::size_t limit = 20) const {
        std::vector<RecordKey> out;
        for (std::size_t i = 0; i < present_.size() && out.size() < limit; ++i)
            if (!present_[i]) out.push_back(key_at(i));
        return out;
    }

    void require_complete(const std::string& what) const {
        if (complete()) return;
        std::string msg = what + ": ledger incomplete, " + std::to_string(values_.size() - count()) + " missing, e.g.";
        for (const auto& k : missing(5)) msg += " [" + describe(k) + "]";
        throw DataError(msg);
    }

    std::uint64_t seed_of(const RecordKey& k) const {
        return point_seed(base_seed_, shape_.protocol, {k.t1, k.t2, k.phase});
    }

    std::string describe(const RecordKey& k) const {
        return std::string(protocol_name(shape_.protocol)) + " t1=" + std::to_string(k.t1) +
               " t2=" + std::to_string(k.t2) + " phase=" + std::to_string(k.phase) +
               " last=" + std::to_string(k.last) + " obs=" + observable_name(k.obs);
    }

    // ---- text form --------------------------------------------------------

    std::string header() const {
        std::ostringstream os;
        os << "# " << format_version << "\n";
        os << "# protocol " << protocol_name(shape_.protocol) << "\n";
        os << "# shape " << shape_.n_t1 << ' ' << shape_.n_t2 << ' ' << shape_.n_phase << ' ' << shape_.n_last << ' '
           << shape_.n_obs << "\n";
        os << "# config_hash " << hex64(config_hash_) << "\n";
        os << "# base_seed " << base_seed_ << "\n";
        os << "# config " << config_json_ << "\n";
        os << columns << "\n";
        return os.str();
    }

    std::string record_line(std::size_t i) const {
        const auto k = key_at(i);
        std::string s;
        s.reserve(96);
        s += protocol_name(shape_.protocol);
        s += ',' + std::to_string(k.t1) + ',' + std::to_string(k.t2) + ',' + std::to_string(k.phase) + ',' +
             std::to_string(k.last) + ',' + observable_name(k.obs) + ',' + format_double(values_[i]) + ',' +
             hex64(seed_of(k)) + ',' + hex64(config_hash_) + '\n';
        return s;
    }

    /// Writes every present record in canonical key order.
    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot write ledger " + path);
        os << header();
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (present_[i]) os << record_line(i);
        if (!os) throw DataError("failed writing ledger " + path);
    }

    /// Reads a ledger file. A final line without a newline is treated as a
    /// torn write and dropped; `valid_bytes` receives the length of the
    /// intact prefix.
    static MeasurementLedger load(const std::string& path, std::size_t* valid_bytes = nullptr) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw DataError("cannot open ledger " + path);
        std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        std::size_t pos = 0, line_no = 0;
        auto next_line = [&](std::string_view& line) {
            const auto nl = text.find('\n', pos);
            if (nl == std::string::npos) return false;
            line = std::string_view(text).substr(pos, nl - pos);
            pos = nl + 1;
            ++line_no;
            return true;
        };
        auto fail = [&](const std::string& what) {
            return DataError(path + ":" + std::to_string(line_no) + ": " + what);
        };

        std::string_view line;
        LedgerShape shape;
        std::optional<std::uint64_t> hash;
        std::uint64_t seed = 0;
        std::string config;
        bool have_shape = false, have_protocol = false, have_columns = false;
        if (!next_line(line) || line != std::string("# ") + format_version) throw fail("not a ledger file");
        while (next_line(line)) {
            if (line.starts_with("# protocol ")) {
                const auto v = line.substr(11);
                if (v == "sqsp") shape.protocol = Protocol::Sqsp;
                else if (v == "pqp") shape.protocol = Protocol::Pqp;
                else throw fail("unknown protocol");
                have_protocol = true;
            } else if (line.starts_with("# shape ")) {
                std::istringstream ss{std::string(line.substr(8))};
                if (!(ss >> shape.n_t1 >> shape.n_t2 >> shape.n_phase >> shape.n_last >> shape.n_obs))
                    throw fail("bad shape line");
                have_shape = true;
            } else if (line.starts_with("# config_hash ")) {
                hash = parse_hex(line.substr(14));
                if (!hash) throw fail("bad config hash");
            } else if (line.starts_with("# base_seed ")) {
                const auto v = line.substr(12);
                if (std::from_chars(v.data(), v.data() + v.size(), seed).ec != std::errc{}) throw fail("bad seed");
            } else if (line.starts_with("# config ")) {
                config = std::string(line.substr(9));
            } else if (line == columns) {
                have_columns = true;
                break;
            } else {
                throw fail("unexpected header line");
            }
        }
        if (!have_columns || !have_shape || !have_protocol || !hash) throw fail("incomplete ledger header");

        MeasurementLedger ledger(shape, *hash, seed, config);
        std::size_t good = pos;
        while (next_line(line)) {
            if (line.empty()) {
                good = pos;
                continue;
            }
            ledger.parse_record(line, path, line_no);
            good = pos;
        }
        if (valid_bytes) *valid_bytes = good;
        return ledger;
    }

   private:
    static std::optional<std::uint64_t> parse_hex(std::string_view s) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
        if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
        return v;
    }

    void parse_record(std::string_view line, const std::string& path, std::size_t line_no) {
        std::string_view f[9];
        std::size_t start = 0;
        for (int i = 0; i < 9; ++i) {
            const auto comma = line.find(',', start);
            if ((comma == std::string_view::npos) != (i == 8))
                throw DataError(path + ":" + std::to_string(line_no) + ": expected 9 fields");
            f[i] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            start = comma + 1;
        }
        auto bad = [&](const char* what) {
            return DataError(path + ":" + std::to_string(line_no) + ": " + what);
        };
        if (f[0] != protocol_name(shape_.protocol)) throw bad("protocol differs from header");
        int idx[4];
        for (int i = 0; i < 4; ++i) {
            auto [p, ec] = std::from_chars(f[1 + i].data(), f[1 + i].data() + f[1 + i].size(), idx[i]);
            if (ec != std::errc{} || p != f[1 + i].data() + f[1 + i].size()) throw bad("bad index field");
        }
        RecordKey k{idx[0], idx[1], idx[2], idx[3], Observable::F};
        if (f[5] == "F") k.obs = Observable::F;
        else if (f[5] == "X_pr") k.obs = Observable::Xpr;
        else if (f[5] == "Y_pr") k.obs = Observable::Ypr;
        else throw bad("unknown observable");
        double v = 0.0;
        {
            auto [p, ec] = std::from_chars(f[6].data(), f[6].data() + f[6].size(), v);
            if (ec != std::errc{} || p != f[6].data() + f[6].size()) throw bad("bad value field");
        }
        const auto h = parse_hex(f[8]);
        if (!h || *h != config_hash_) throw bad("record config hash differs from header");
        try {
            set(k, v);
        } catch (const DataError& e) {
            throw bad(e.what());
        }
    }

    LedgerShape shape_;
    std::uint64_t config_hash_ = 0;
    std::uint64_t base_seed_ = 0;
    std::string config_json_;
    std::vector<double> values_;
    std::vector<std::uint8_t> present_;
};

// ---------------------------------------------------------------------------
// Shot noise
// ---------------------------------------------------------------------------

struct ShotNoiseSpec {
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

/// Adds independent N(0, eps^2) noise to every stored value. Each grid
/// point (t1, t2, phase) draws from its own generator seeded by a stable
/// hash of (seed, point), so the result does not depend on visit order.
inline MeasurementLedger add_shot_noise(const MeasurementLedger& ledger, const ShotNoiseSpec& spec) {
    if (!(spec.epsilon >= 0.0)) throw ValidationError("shot noise epsilon must be >= 0");
    MeasurementLedger out = ledger;
    if (spec.epsilon == 0.0) return out;
    const auto& s = ledger.shape();
    std::normal_distribution<double> normal(0.0, spec.epsilon);
    for (int t1 = 0; t1 < s.n_t1; ++t1)
        for (int t2 = 0; t2 < s.n_t2; ++t2)
            for (int k = 0; k < s.n_phase; ++k) {
                std::mt19937_64 rng(point_seed(spec.seed, s.protocol, {t1, t2, k}));
                normal.reset();
                const auto off = ledger.point_offset(t1, t2, k);
                for (std::size_t j = 0; j < s.per_point(); ++j)
                    if (ledger.present_at(off + j)) out.replace_at(off + j, ledger.at(off + j) + normal(rng));
            }
    return out;
}

}  // namespace spectroqsim
