#include "scnw/analysis.hpp"
#include "scnw/build.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

using namespace scnw;
using namespace scnw::analysis;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += x[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(j * k % n) / static_cast<double>(n));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<double> tone(std::size_t n, double cycles_per_window, double amplitude = 1.0) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = amplitude * std::cos(2.0 * kPi * cycles_per_window * static_cast<double>(k) / static_cast<double>(n));
    }
    return x;
}

// Event trains for a synthetic pair trace.
solver::Trace pair_trace(double period1, double period2, double offset, std::size_t events) {
    solver::Trace tr;
    tr.wires = 2;
    tr.dt_record = 1e-12;
    tr.t_stop = period1 * static_cast<double>(events);
    for (std::size_t k = 0; k < events; ++k) {
        tr.switch_on[0].push_back(period1 * static_cast<double>(k) + 0.1 * period1);
        tr.switch_on[1].push_back(period2 * static_cast<double>(k) + 0.1 * period1 + offset);
    }
    return tr;
}

scenario::Scenario injected(double amp_uA, double f_MHz) {
    scenario::Scenario s;
    s.topology = scenario::TopologyKind::Injected;
    s.amp_uA = amp_uA;
    s.freq_MHz = f_MHz;
    return s;
}

const double kFosc = device::free_running_period(device::OscillatorParams{}).frequency;

}  // namespace

TEST_CASE("fft_spectrum on textbook inputs") {
    SECTION("cosine in bin 1") {
        const auto s = fft_spectrum(tone(8, 1.0), 1.0, Window::Rectangular);
        CHECK(s.magnitudes[1] == Approx(4.0).margin(1e-12));
        CHECK(s.magnitudes[7] == Approx(4.0).margin(1e-12));
        for (std::size_t k : {0u, 2u, 3u, 4u, 5u, 6u}) CHECK(s.magnitudes[k] == Approx(0.0).margin(1e-12));
    }
    SECTION("constant") {
        const std::vector<double> c(8, 0.75);
        const auto s = fft_spectrum(c, 1.0, Window::Rectangular);
        CHECK(s.magnitudes[0] == Approx(6.0).margin(1e-12));
        for (std::size_t k = 1; k < 8; ++k) CHECK(s.magnitudes[k] == Approx(0.0).margin(1e-12));
    }
    SECTION("impulse") {
        std::vector<double> x(8, 0.0);
        x[0] = 1.0;
        const auto s = fft_spectrum(x, 1.0, Window::Rectangular);
        for (double m : s.magnitudes) CHECK(m == Approx(1.0).margin(1e-12));
    }
    SECTION("bin width") {
        const auto s = fft_spectrum(tone(16, 1.0), 0.5e-9, Window::Hann);
        CHECK(s.bin_width == Approx(1.0 / (16 * 0.5e-9)));
        CHECK(s.n_points == 16);
    }
}

TEST_CASE("fft matches a direct DFT and inverts") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (std::size_t n : {2u, 4u, 32u, 128u}) {
        std::vector<std::complex<double>> x(n);
        for (auto& z : x) z = {g(rng), g(rng)};
        const auto ref = naive_dft(x);
        auto y = x;
        fft(y);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(y[k] - ref[k]));
        CHECK(worst < 1e-10 * static_cast<double>(n));
        fft(y, true);
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(y[k] - x[k]) < 1e-12);
    }
}

TEST_CASE("Parseval holds to 1e-9") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (std::size_t n : {8u, 256u, 1024u, 4096u}) {
        std::vector<double> x(n);
        for (double& v : x) v = g(rng);
        const auto s = fft_spectrum(x, 1.0, Window::Rectangular);
        double time_energy = 0.0, freq_energy = 0.0;
        for (double v : x) time_energy += v * v;
        for (double m : s.magnitudes) freq_energy += m * m;
        freq_energy /= static_cast<double>(n);
        CHECK(std::abs(freq_energy - time_energy) / time_energy < 1e-9);
    }
}

TEST_CASE("spectrum magnitude is linear in the input") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    std::vector<double> x(512);
    for (double& v : x) v = g(rng);
    auto scaled = x;
    for (double& v : scaled) v *= -3.5;
    for (auto w : {Window::Rectangular, Window::Hann}) {
        const auto a = fft_spectrum(x, 1.0, w);
        const auto b = fft_spectrum(scaled, 1.0, w);
        for (std::size_t k = 0; k < a.magnitudes.size(); ++k) {
            CHECK(b.magnitudes[k] == Approx(3.5 * a.magnitudes[k]).margin(1e-12));
        }
    }
}

TEST_CASE("non-power-of-two lengths are rejected") {
    const std::vector<double> x(12, 1.0);
    CHECK_THROWS_AS(fft_spectrum(x, 1.0), InvalidArgument);
    CHECK_THROWS_AS(fft_spectrum(std::vector<double>{}, 1.0), InvalidArgument);
    std::vector<std::complex<double>> z(6);
    CHECK_THROWS_AS(fft(z), InvalidArgument);
}

TEST_CASE("dominant peak") {
    SECTION("on-bin tone is exact") {
        const auto s = fft_spectrum(tone(64, 7.0), 1e-9, Window::Rectangular);
        const auto p = dominant_peak(s);
        CHECK(p.frequency == 7.0 * s.bin_width);
        CHECK(p.magnitude == Approx(32.0));
    }
    SECTION("on-bin tone under Hann") {
        const auto s = fft_spectrum(tone(64, 7.0), 1e-9, Window::Hann);
        CHECK(dominant_peak(s).frequency == Approx(7.0 * s.bin_width).epsilon(1e-9));
    }
    SECTION("half-bin tone within 2%") {
        for (auto w : {Window::Hann, Window::Rectangular}) {
            const auto s = fft_spectrum(tone(1024, 7.5), 1e-9, w);
            const double truth = 7.5 * s.bin_width;
            CHECK(std::abs(dominant_peak(s).frequency - truth) / truth < 0.02);
        }
    }
    SECTION("DC is skipped unless requested") {
        auto x = tone(64, 5.0);
        for (double& v : x) v += 10.0;
        const auto s = fft_spectrum(x, 1.0, Window::Rectangular);
        CHECK(dominant_peak(s).frequency == Approx(5.0 * s.bin_width));
        CHECK(dominant_peak(s, false).frequency == 0.0);
    }
    SECTION("ties go to the lower bin") {
        Spectrum s;
        s.n_points = 16;
        s.bin_width = 1.0;
        s.magnitudes.assign(16, 0.0);
        s.magnitudes[3] = s.magnitudes[6] = 2.0;
        CHECK(dominant_peak(s).frequency == 3.0);
    }
    SECTION("all-zero spectrum is an error") {
        const auto s = fft_spectrum(std::vector<double>(32, 0.0), 1.0);
        CHECK_THROWS_AS(dominant_peak(s), AnalysisError);
    }
}

TEST_CASE("analysis window keeps 8 samples per period and removes the mean") {
    const auto tr = simulate(injected(6.0, 443.0));
    const auto win = analysis_window(tr, 0, 443e6, 1024);
    CHECK(win.samples.size() == 1024);
    CHECK(1.0 / (443e6 * win.dt) >= 8.0);
    double mean = 0.0;
    for (double v : win.samples) mean += v;
    CHECK(std::abs(mean / 1024.0) < 1e-15);
    CHECK_THROWS_AS(analysis_window(tr, 0, 443e6, 1000), InvalidArgument);
    CHECK_THROWS_AS(analysis_window(tr, 0, 443e6, 1 << 20), AnalysisError);
}

TEST_CASE("event periods") {
    SECTION("free-running default equals the closed form within 0.2%") {
        scenario::Scenario s;
        const auto tr = simulate(s);
        const auto periods = event_periods(tr);
        CHECK(periods.size() == tr.switch_on[0].size() - 1);
        const double T = 1.0 / kFosc;
        for (double p : periods) CHECK(std::abs(p - T) / T < 2e-3);
    }
    SECTION("sub-critical bias has no events") {
        scenario::Scenario s;
        s.ibias_uA = 20.0;
        s.tstop_ns = 50.0;
        CHECK_THROWS_AS(event_periods(simulate(s)), AnalysisError);
    }
}

TEST_CASE("lock detection") {
    SECTION("6 uA at 1.05 f_osc locks") {
        const double f = 1.05 * kFosc;
        const auto tr = simulate(injected(6.0, f * 1e-6));
        const auto r = detect_lock(tr, f);
        CHECK(r.locked);
        REQUIRE(r.locking_delay);
        CHECK(*r.locking_delay > 0.0);
        CHECK(*r.locking_delay < 0.5 * tr.t_stop);
        CHECK(r.locked_amplitude > 0.0);
        REQUIRE(r.mean_phase_offset);
        CHECK(*r.mean_phase_offset >= 0.0);
        CHECK(*r.mean_phase_offset < 360.0);

        const auto periods = event_periods(tr);
        for (std::size_t k = periods.size() / 2; k < periods.size(); ++k) {
            CHECK(std::abs(periods[k] * f - 1.0) < 1e-3);
        }
        // Spectral and event frequency agree within one bin.
        const auto win = analysis_window(tr, 0, f, 1024);
        const double bin = 1.0 / (1024.0 * win.dt);
        const double f_events = 1.0 / periods.back();
        CHECK(std::abs(r.f_dominant - f_events) <= bin);
        CHECK(std::abs(r.f_dominant - f) <= bin);
    }
    SECTION("zero amplitude stays at f_osc") {
        const auto tr = simulate(injected(0.0, 443.0));
        const auto r = detect_lock(tr, 443e6);
        CHECK_FALSE(r.locked);
        CHECK_FALSE(r.locking_delay);
        const auto win = analysis_window(tr, 0, 443e6, 1024);
        CHECK(std::abs(r.f_dominant - kFosc) <= 1.0 / (1024.0 * win.dt));
    }
    SECTION("1 uA at 1.5 f_osc does not lock") {
        const double f = 1.5 * kFosc;
        CHECK_FALSE(detect_lock(simulate(injected(1.0, f * 1e-6)), f).locked);
    }
    SECTION("a trace without a drive is rejected") {
        scenario::Scenario s;
        CHECK_THROWS_AS(detect_lock(simulate(s), 443e6), AnalysisError);
    }
    SECTION("too few settled events") {
        auto s = injected(6.0, 443.0);
        s.tstop_ns = 30.0;
        CHECK_THROWS_WITH(detect_lock(simulate(s), 443e6), Catch::Matchers::ContainsSubstring("insufficient events"));
    }
}

TEST_CASE("lock verdict is monotone in amplitude") {
    const double f = 1.05 * kFosc;
    bool seen_lock = false;
    for (double amp : {1.0, 3.0, 6.0, 9.0, 12.0}) {
        const bool locked = detect_lock(simulate(injected(amp, f * 1e-6)), f).locked;
        if (seen_lock) CHECK(locked);
        seen_lock = seen_lock || locked;
    }
    CHECK(seen_lock);
}

TEST_CASE("locked 443 MHz spectrum peaks at the drive") {
    const auto tr = simulate(injected(6.0, 443.0));
    const auto win = analysis_window(tr, 0, 443e6, 1024);
    const auto s = fft_spectrum(win.samples, win.dt, Window::Hann);
    CHECK(std::abs(dominant_peak(s).frequency - 443e6) <= s.bin_width);
}

TEST_CASE("second harmonic barely moves while the fundamental grows") {
    auto magnitude_near = [](const Spectrum& s, double f) {
        const auto k = static_cast<std::size_t>(std::lround(f / s.bin_width));
        return std::max({s.magnitudes[k - 1], s.magnitudes[k], s.magnitudes[k + 1]});
    };
    std::vector<double> fundamental, second;
    for (double amp : {3.0, 6.0, 9.0, 12.0}) {
        const auto tr = simulate(injected(amp, 443.0));
        REQUIRE(detect_lock(tr, 443e6).locked);
        const auto win = analysis_window(tr, 0, 443e6, 1024);
        const auto s = fft_spectrum(win.samples, win.dt, Window::Hann);
        fundamental.push_back(magnitude_near(s, 443e6));
        second.push_back(magnitude_near(s, 886e6));
    }
    for (std::size_t k = 1; k < fundamental.size(); ++k) CHECK(fundamental[k] > fundamental[k - 1]);
    CHECK(std::abs(second.back() - second.front()) / second.front() < 0.05);
}

TEST_CASE("pair phase difference on synthetic event trains") {
    const double T = 2.4e-9;
    SECTION("identical trains") {
        const auto pd = phase_difference(pair_trace(T, T, 0.0, 40));
        CHECK(pd.synchronized);
        CHECK(pd.delta_phi_deg == Approx(0.0).margin(1e-9));
    }
    SECTION("half-period offset") {
        const auto pd = phase_difference(pair_trace(T, T, 0.5 * T, 40));
        CHECK(pd.synchronized);
        CHECK(pd.delta_phi_deg == Approx(180.0).epsilon(1e-9));
    }
    SECTION("labels are interchangeable") {
        for (double frac : {0.1, 0.3, 0.45, 0.7, 0.9}) {
            auto tr = pair_trace(T, T, frac * T, 40);
            const double a = phase_difference(tr).delta_phi_deg;
            std::swap(tr.switch_on[0], tr.switch_on[1]);
            const double b = phase_difference(tr).delta_phi_deg;
            CHECK(a == Approx(b).epsilon(1e-9));
            CHECK(a == Approx(360.0 * std::min(frac, 1.0 - frac)).epsilon(1e-9));
        }
    }
    SECTION("detuned trains are unsynchronized") {
        const auto pd = phase_difference(pair_trace(T, 1.02 * T, 0.0, 40));
        CHECK_FALSE(pd.synchronized);
        CHECK(pd.period2 / pd.period1 == Approx(1.02).epsilon(1e-9));
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(phase_difference(pair_trace(T, T, 0.0, 12)), AnalysisError);
        auto tr = pair_trace(T, T, 0.0, 40);
        tr.wires = 1;
        CHECK_THROWS_AS(phase_difference(tr), AnalysisError);
    }
}

TEST_CASE("capacitive pair: weak coupling holds anti-phase, strong coupling pulls in-phase") {
    scenario::Scenario s;
    s.topology = scenario::TopologyKind::Pair;
    s.init_inw2_frac = 0.66;
    s.cap_fF = 30.0;
    const auto weak = phase_difference(simulate(s));
    s.cap_fF = 250.0;
    const auto strong = phase_difference(simulate(s));
    REQUIRE(weak.synchronized);
    REQUIRE(strong.synchronized);
    CHECK(weak.delta_phi_deg > 150.0);
    CHECK(strong.delta_phi_deg < 60.0);
}
