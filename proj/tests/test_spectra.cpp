#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "spectroqsim/spectra.hpp"

using namespace spectroqsim;

namespace {

std::vector<cplx> naive_dft(const std::vector<cplx>& x, int m, int sign) {
    std::vector<cplx> out(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        for (std::size_t n = 0; n < x.size(); ++n) out[k] += x[n] * std::polar(1.0, sign * 2.0 * M_PI * k * double(n) / m);
    return out;
}

std::size_t argmax_abs(const std::vector<cplx>& v) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[b])) b = i;
    return b;
}

// z(t) = exp(sign * 2 pi i c nu t)
cplx tone(double nu_cm, double t_fs, int sign) { return std::polar(1.0, sign * units::radians(nu_cm, t_fs)); }

MeasurementLedger sqsp_ledger(const PhaseCycleScheme& scheme, const TimeGrid& g1, const TimeGrid& g3, double nu1, double nu3) {
    MeasurementLedger l({Protocol::Sqsp, g1.n, 2, scheme.size(), g3.n, 1}, 1, 0);
    const int s1 = is_rephasing(scheme) ? +1 : -1;
    for (int i1 = 0; i1 < g1.n; ++i1)
        for (int i2 = 0; i2 < 2; ++i2)
            for (int k = 0; k < scheme.size(); ++k)
                for (int i3 = 0; i3 < g3.n; ++i3) {
                    const cplx z = (1.0 + i2) * tone(nu1, g1.time_fs(i1), s1) * tone(nu3, g3.time_fs(i3), -1);
                    l.set({i1, i2, k, i3, Observable::F}, 2.0 * (scheme.signature(k, scheme.p) * z).real());
                }
    return l;
}

}  // namespace

TEST(Dft, MatchesNaiveSumForBothSignsAndPadding) {
    std::vector<cplx> x;
    for (int i = 0; i < 10; ++i) x.emplace_back(std::sin(0.7 * i), std::cos(1.3 * i) * 0.5);
    const TimeGrid g{10, 1.25, "t"};
    for (int sign : {-1, 1})
        for (int pad : {0, 16}) {
            const auto r = dft_over_axis(x, g, {sign, false, Window::None, pad});
            const int m = std::max(10, pad);
            const auto ref = naive_dft(x, m, sign);
            ASSERT_EQ(r.values.size(), std::size_t(m));
            const double df = 1.0 / (units::speed_of_light * m * 1.25);
            for (int j = 0; j < m; ++j) {
                const long k = std::lround(r.freqs_cm[j] / df);
                EXPECT_LT(std::abs(r.values[j] - ref[((k % m) + m) % m]), 1e-12);
                if (j > 0) {
                    EXPECT_GT(r.freqs_cm[j], r.freqs_cm[j - 1]);
                }
            }
        }
}

TEST(Dft, ToneLandsOnPositiveBin) {
    const TimeGrid g{32, 1.25, "t"};
    const double nu = 5 * g.resolution_cm();
    std::vector<cplx> up, down;
    for (int i = 0; i < g.n; ++i) {
        up.push_back(tone(nu, g.time_fs(i), +1));
        down.push_back(tone(nu, g.time_fs(i), -1));
    }
    auto r = dft_over_axis(up, g, {-1});
    EXPECT_NEAR(r.freqs_cm[argmax_abs(r.values)], nu, 1e-9);
    r = dft_over_axis(down, g, {+1});
    EXPECT_NEAR(r.freqs_cm[argmax_abs(r.values)], nu, 1e-9);
    r = dft_over_axis(up, g, {+1, true});
    EXPECT_NEAR(r.freqs_cm[argmax_abs(r.values)], nu, 1e-9);
    EXPECT_NEAR(std::abs(r.values[argmax_abs(r.values)]), 32.0, 1e-9);
}

TEST(Dft, AxisAndWindowProperties) {
    const TimeGrid g{400, 1.25, "t1"};
    EXPECT_NEAR(g.resolution_cm(), 1.0 / (2.99792458e-5 * 500.0), 1e-9);
    EXPECT_NEAR(g.max_cm(), 1.0 / (2.0 * 2.99792458e-5 * 1.25), 1e-9);
    EXPECT_DOUBLE_EQ(window_weight(Window::Hann, 0, 9), 0.0);
    EXPECT_DOUBLE_EQ(window_weight(Window::Hann, 4, 9), 1.0);
    EXPECT_DOUBLE_EQ(window_weight(Window::None, 0, 9), 1.0);
    EXPECT_THROW(dft_over_axis(std::vector<cplx>(3), g), ValidationError);
    EXPECT_THROW(dft_over_axis(std::vector<cplx>(400), g, {2}), ValidationError);
}

TEST(Spectrum, NormalizeIsIdempotentAndKeepsScale) {
    Spectrum2D s;
    s.omega1_cm = {0, 1};
    s.t2_fs = {0};
    s.omega3_cm = {0};
    s.data = {cplx(3, 4), cplx(1, 0)};
    const auto n = normalize(s);
    EXPECT_DOUBLE_EQ(n.peak_abs(), 1.0);
    EXPECT_DOUBLE_EQ(n.max_abs, 5.0);
    const auto nn = normalize(n);
    EXPECT_EQ(nn.data, n.data);
    EXPECT_DOUBLE_EQ(nn.max_abs, 5.0);
    s.data = {0.0, 0.0};
    EXPECT_EQ(normalize(s).data, s.data);
}

TEST(Spectrum, NearestBinOnUnsortedAxes) {
    const std::vector<double> gaps{12141.4, 11858.6, 12641.4};
    EXPECT_EQ(nearest_bin(gaps, 11860.0, "omega3"), 1u);
    EXPECT_EQ(nearest_bin(gaps, 12600.0, "omega3"), 2u);
    EXPECT_THROW(nearest_bin(gaps, 14000.0, "omega3"), ValidationError);
    EXPECT_THROW(nearest_bin({}, 0.0, "omega1"), ValidationError);
}

TEST(Spectrum, PearsonBasics) {
    EXPECT_NEAR(pearson({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, 1e-15);
    EXPECT_NEAR(pearson({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
    EXPECT_EQ(pearson({1, 1, 1}, {1, 2, 3}), 0.0);
    EXPECT_THROW(pearson({1}, {1}), ValidationError);
}

TEST(Assembly, SqspPeakSitsAtPositiveFrequencies) {
    const TimeGrid g1{16, 1.25, "t1"}, g2{2, 30.0, "t2"}, g3{12, 1.25, "t3"};
    const double nu1 = 3 * g1.resolution_cm(), nu3 = 2 * g3.resolution_cm();
    for (const auto& scheme : {PhaseCycleScheme::rephasing(), PhaseCycleScheme::nonrephasing()}) {
        const auto s = assemble_sqsp_spectrum(sqsp_ledger(scheme, g1, g3, nu1, nu3), scheme, g1, g2, g3);
        ASSERT_EQ(s.n1(), 16u);
        ASSERT_EQ(s.n3(), 12u);
        const auto tr = extract_peak_trace(s, nu1, nu3);
        EXPECT_NEAR(tr.omega1_cm, nu1, 1e-9);
        EXPECT_NEAR(tr.omega3_cm, nu3, 1e-9);
        // full-weight tone: |S| = N1 N3 times the t2 amplitude
        EXPECT_NEAR(tr.values[0], 16.0 * 12.0, 1e-9);
        EXPECT_NEAR(tr.values[1], 2.0 * 16.0 * 12.0, 1e-9);
        EXPECT_NEAR(normalize(s).peak_abs(), 1.0, 1e-12);
    }
}

TEST(Assembly, PqpUsesYMinusIX) {
    const auto scheme = PhaseCycleScheme::nonrephasing();
    const TimeGrid g1{16, 1.25, "t1"}, g2{1, 30.0, "t2"};
    const double nu1 = 4 * g1.resolution_cm();
    MeasurementLedger l({Protocol::Pqp, g1.n, 1, scheme.size(), 2, 2}, 1, 0);
    for (int i1 = 0; i1 < g1.n; ++i1)
        for (int k = 0; k < scheme.size(); ++k)
            for (int line = 0; line < 2; ++line) {
                // line 0: Y carries the signal; line 1: X carries i times it
                const cplx z = tone(nu1, g1.time_fs(i1), -1);
                const cplx sig = scheme.signature(k, scheme.p);
                const double y = line == 0 ? 2.0 * (sig * z).real() : 0.0;
                const double x = line == 1 ? 2.0 * (sig * I_unit * z).real() : 0.0;
                l.set({i1, 0, k, line, Observable::Xpr}, x);
                l.set({i1, 0, k, line, Observable::Ypr}, y);
            }
    const auto s = assemble_pqp_spectrum(l, scheme, g1, g2, {12100.0, 11900.0});
    EXPECT_EQ(s.omega3_cm, (std::vector<double>{12100.0, 11900.0}));
    const std::size_t b = nearest_bin(s.omega1_cm, nu1, "omega1");
    EXPECT_NEAR(std::abs(s.at(b, 0, 0)), 16.0, 1e-9);
    // Y - iX with X = i z gives z + ... = 16 at the same bin with phase -i * i = 1
    EXPECT_NEAR(std::abs(s.at(b, 0, 1) - cplx(16.0)), 0.0, 1e-9);
    EXPECT_THROW(assemble_pqp_spectrum(l, scheme, g1, g2, {12100.0}), DataError);
}

TEST(Assembly, IncompleteOrMismatchedLedgersAreRefused) {
    const auto scheme = PhaseCycleScheme::rephasing();
    const TimeGrid g1{4, 1.25, "t1"}, g2{1, 1.0, "t2"}, g3{2, 1.25, "t3"};
    MeasurementLedger l({Protocol::Sqsp, 4, 1, 27, 2, 1}, 1, 0);
    EXPECT_THROW(assemble_sqsp_spectrum(l, scheme, g1, g2, g3), DataError);
    EXPECT_THROW(assemble_sqsp_spectrum(l, scheme, TimeGrid{5, 1.25, "t1"}, g2, g3), DataError);
    EXPECT_THROW(assemble_pqp_spectrum(l, scheme, g1, g2, {1.0, 2.0}), DataError);
}

TEST(Output, CsvHeadersAndRows) {
    Spectrum2D s;
    s.omega1_cm = {-1, 1};
    s.t2_fs = {0, 30};
    s.omega3_cm = {5};
    s.data = {1.0, 2.0, cplx(0, 1), 4.0};
    const auto dir = std::filesystem::temp_directory_path() / "spectroqsim-test-spectra";
    std::filesystem::create_directories(dir);
    write_spectrum_csv(s, (dir / "s.csv").string());
    std::ifstream is(dir / "s.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "omega1_cm,t2_fs,omega3_cm,re,im,abs");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 4);
    write_trace_csv(extract_peak_trace(s, 1, 5), s.t2_fs, (dir / "t.csv").string());
    std::ifstream ts(dir / "t.csv");
    std::getline(ts, line);
    EXPECT_EQ(line.rfind("# omega1_bin_cm 1", 0), 0u);
    std::getline(ts, line);
    EXPECT_EQ(line, "t2_fs,abs");
    std::filesystem::remove_all(dir);
}
