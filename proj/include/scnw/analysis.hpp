#pragma once

// Observables extracted from traces: spectra, dominant peaks, switching-event
// periods, injection-lock verdicts and the steady phase offset of a pair.

#include "scnw/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace scnw::analysis {

enum class Window { Rectangular, Hann };

struct Spectrum {
    std::size_t n_points = 0;
    double bin_width = 0.0;           // Hz
    std::vector<double> magnitudes;   // |X_k| for k = 0 .. n_points-1
    Window window = Window::Hann;

    [[nodiscard]] double frequency(std::size_t bin) const noexcept { return static_cast<double>(bin) * bin_width; }
};

struct Peak {
    double frequency = 0.0;  // Hz
    double magnitude = 0.0;  // V
};

/// In-place iterative radix-2 transform. The inverse includes the 1/n factor.
inline void fft(std::span<std::complex<double>> data, bool inverse = false) {
    const std::size_t n = data.size();
    if (n == 0 || !std::has_single_bit(n)) {
        throw InvalidArgument("FFT length must be a power of two, got " + std::to_string(n));
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
                const auto u = data[start + k];
                const auto v = data[start + k + len / 2] * w;
                data[start + k] = u + v;
                data[start + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        for (auto& z : data) z /= static_cast<double>(n);
    }
}

[[nodiscard]] inline Spectrum fft_spectrum(std::span<const double> samples, double dt_sample,
                                           Window window = Window::Hann) {
    const std::size_t n = samples.size();
    if (n == 0 || !std::has_single_bit(n)) {
        throw InvalidArgument("spectrum length must be a power of two, got " + std::to_string(n));
    }
    std::vector<std::complex<double>> data(n);
    for (std::size_t k = 0; k < n; ++k) {
        double w = 1.0;
        if (window == Window::Hann && n > 1) {
            w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        }
        data[k] = samples[k] * w;
    }
    fft(data);
    Spectrum s;
    s.n_points = n;
    s.bin_width = 1.0 / (static_cast<double>(n) * dt_sample);
    s.window = window;
    s.magnitudes.resize(n);
    std::transform(data.begin(), data.end(), s.magnitudes.begin(), [](auto z) { return std::abs(z); });
    return s;
}

/// Largest bin among the non-negative frequencies, refined by a parabola
/// through the log-magnitudes of its neighbours. Ties go to the lower bin.
[[nodiscard]] inline Peak dominant_peak(const Spectrum& s, bool exclude_dc = true) {
    const std::size_t half = s.n_points / 2;
    const std::size_t first = exclude_dc ? 1 : 0;
    if (s.magnitudes.empty() || first > half) throw AnalysisError("spectrum has no usable bins");
    std::size_t best = first;
    for (std::size_t k = first; k <= half; ++k) {
        if (s.magnitudes[k] > s.magnitudes[best]) best = k;
    }
    const double peak = s.magnitudes[best];
    if (!(peak > 0.0)) throw AnalysisError("spectrum is identically zero");

    double offset = 0.0;
    double magnitude = peak;
    if (best > 0 && best < half) {
        const double a = s.magnitudes[best - 1];
        const double c = s.magnitudes[best + 1];
        const double floor = peak * 1e-12;
        if (a > floor && c > floor) {
            const double la = std::log(a), lb = std::log(peak), lc = std::log(c);
            const double denom = la - 2.0 * lb + lc;
            if (denom < 0.0) {
                offset = 0.5 * (la - lc) / denom;
                magnitude = std::exp(lb - 0.25 * (la - lc) * offset);
            }
        }
    }
    return {(static_cast<double>(best) + offset) * s.bin_width, magnitude};
}

/// Trailing `n_points` samples of v_out, block-averaged so that at least eight
/// samples remain per period of `f_ref`, with the mean removed.
struct SampledWindow {
    std::vector<double> samples;
    double dt = 0.0;
};

[[nodiscard]] inline SampledWindow analysis_window(const solver::Trace& trace, std::size_t wire, double f_ref,
                                                   std::size_t n_points) {
    if (!std::has_single_bit(n_points)) {
        throw InvalidArgument("spectrum length must be a power of two, got " + std::to_string(n_points));
    }
    std::size_t factor = 1;
    if (f_ref > 0.0) {
        factor = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / (8.0 * f_ref * trace.dt_record))));
    }
    const auto& v = trace.v_out[wire];
    const std::size_t blocks = v.size() / factor;
    if (blocks < n_points) {
        throw AnalysisError("trace holds " + std::to_string(blocks) + " decimated samples, need " +
                            std::to_string(n_points));
    }
    SampledWindow out;
    out.dt = trace.dt_record * static_cast<double>(factor);
    out.samples.resize(n_points);
    const std::size_t start = v.size() - n_points * factor;
    for (std::size_t b = 0; b < n_points; ++b) {
        double sum = 0.0;
        for (std::size_t j = 0; j < factor; ++j) sum += v[start + b * factor + j];
        out.samples[b] = sum / static_cast<double>(factor);
    }
    const double mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / static_cast<double>(n_points);
    for (double& x : out.samples) x -= mean;
    return out;
}

[[nodiscard]] inline std::vector<double> event_periods(const solver::Trace& trace, std::size_t wire = 0) {
    const auto& on = trace.switch_on.at(wire);
    if (on.size() < 3) {
        throw AnalysisError("need at least 3 switching events, trace has " + std::to_string(on.size()));
    }
    std::vector<double> periods(on.size() - 1);
    for (std::size_t k = 1; k < on.size(); ++k) periods[k - 1] = on[k] - on[k - 1];
    return periods;
}

[[nodiscard]] inline double wrap180(double deg) noexcept {
    double r = std::fmod(deg + 180.0, 360.0);
    if (r < 0.0) r += 360.0;
    return r - 180.0;
}

[[nodiscard]] inline double circular_mean_deg(std::span<const double> deg) noexcept {
    double s = 0.0, c = 0.0;
    for (double d : deg) {
        s += std::sin(d * std::numbers::pi / 180.0);
        c += std::cos(d * std::numbers::pi / 180.0);
    }
    return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

struct LockCriteria {
    double settle_fraction = 0.5;
    double tol_f = 1e-3;        // relative period tolerance
    double tol_drift = 1.0;     // deg per cycle
    double band_deg = 5.0;      // locking-delay band half-width
    std::size_t min_events = 20;
    std::size_t fft_points = 1024;
};

struct LockResult {
    bool locked = false;
    double f_dominant = 0.0;                     // Hz
    std::optional<double> locking_delay;         // s
    double locked_amplitude = 0.0;               // mean peak-to-peak v_out, V
    std::optional<double> mean_phase_offset;     // deg, in [0, 360)
};

/// Phase (deg, [0, 360)) of the drive at each time, measured from its
/// ascending zero crossing.
[[nodiscard]] inline std::vector<double> drive_phase(std::span<const double> times, double f_inj, double phase0) {
    std::vector<double> out(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double cycles = f_inj * times[k] + phase0 / (2.0 * std::numbers::pi);
        out[k] = 360.0 * (cycles - std::floor(cycles));
    }
    return out;
}

/// Mean over settled cycles of max - min v_out between successive switch-on
/// events of `wire`.
[[nodiscard]] inline double mean_peak_to_peak(const solver::Trace& trace, std::size_t wire, double t_from) {
    const auto& on = trace.switch_on[wire];
    const auto& v = trace.v_out[wire];
    double total = 0.0;
    std::size_t cycles = 0;
    for (std::size_t k = 1; k < on.size(); ++k) {
        if (on[k - 1] < t_from) continue;
        const auto a = static_cast<std::size_t>(std::ceil(on[k - 1] / trace.dt_record));
        const auto b = std::min(v.size(), static_cast<std::size_t>(std::floor(on[k] / trace.dt_record)) + 1);
        if (b <= a + 1) continue;
        const auto [lo, hi] = std::minmax_element(v.begin() + static_cast<std::ptrdiff_t>(a),
                                                  v.begin() + static_cast<std::ptrdiff_t>(b));
        total += *hi - *lo;
        ++cycles;
    }
    return cycles ? total / static_cast<double>(cycles) : 0.0;
}

[[nodiscard]] inline LockResult detect_lock(const solver::Trace& trace, double f_inj, const LockCriteria& c = {}) {
    if (!trace.reference) throw AnalysisError("trace carries no injection reference signal");
    const double t_settle = c.settle_fraction * trace.t_stop;
    const auto& on = trace.switch_on[0];
    const auto first = std::lower_bound(on.begin(), on.end(), t_settle);
    const std::span<const double> settled(first, on.end());
    if (settled.size() < c.min_events) {
        throw AnalysisError("insufficient events after settling: " + std::to_string(settled.size()) + " < " +
                            std::to_string(c.min_events));
    }

    LockResult r;
    const auto phases = drive_phase(on, f_inj, trace.reference->phase0);
    const std::size_t s0 = static_cast<std::size_t>(first - on.begin());

    bool period_ok = true;
    bool drift_ok = true;
    for (std::size_t k = s0 + 1; k < on.size(); ++k) {
        const double period = on[k] - on[k - 1];
        if (std::abs(period * f_inj - 1.0) > c.tol_f) period_ok = false;
        if (std::abs(wrap180(phases[k] - phases[k - 1])) >= c.tol_drift) drift_ok = false;
    }
    r.locked = period_ok && drift_ok;
    r.locked_amplitude = mean_peak_to_peak(trace, 0, t_settle);

    try {
        const auto win = analysis_window(trace, 0, f_inj, c.fft_points);
        r.f_dominant = dominant_peak(fft_spectrum(win.samples, win.dt, Window::Hann)).frequency;
    } catch (const AnalysisError&) {
        // Too short for the spectral window: fall back to the event rate.
        r.f_dominant = static_cast<double>(settled.size() - 1) / (settled.back() - settled.front());
    }

    if (r.locked) {
        const std::span<const double> settled_phases(phases.begin() + static_cast<std::ptrdiff_t>(s0), phases.end());
        double mean = circular_mean_deg(settled_phases);
        std::size_t start = on.size();
        while (start > 0 && std::abs(wrap180(phases[start - 1] - mean)) <= c.band_deg) --start;
        r.locking_delay = on[std::min(start, on.size() - 1)];
        if (mean < 0.0) mean += 360.0;
        r.mean_phase_offset = mean;
    }
    return r;
}

struct PairPhase {
    bool synchronized = false;
    double delta_phi_deg = 0.0;  // in [0, 180]; meaningful only when synchronized
    double period1 = 0.0;        // mean settled periods (s)
    double period2 = 0.0;
};

/// For each time in `a`, the signed offset to the nearest time in the sorted
/// list `b` (infinite when `b` is empty).
[[nodiscard]] inline std::vector<double> nearest_offsets(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out;
    out.reserve(a.size());
    for (double t : a) {
        auto it = std::lower_bound(b.begin(), b.end(), t);
        double best = std::numeric_limits<double>::infinity();
        if (it != b.end()) best = *it - t;
        if (it != b.begin() && std::abs(*std::prev(it) - t) < std::abs(best)) best = *std::prev(it) - t;
        out.push_back(best);
    }
    return out;
}

/// Steady offset between the switch-on trains of a pair, folded to [0, 180].
[[nodiscard]] inline PairPhase phase_difference(const solver::Trace& trace, double settle_fraction = 0.5,
                                                std::size_t min_events = 10, double period_tol = 5e-3) {
    if (trace.wires != 2) throw AnalysisError("phase difference needs a two-oscillator trace");
    const double t_settle = settle_fraction * trace.t_stop;
    std::array<std::span<const double>, 2> ev;
    for (std::size_t w = 0; w < 2; ++w) {
        const auto& on = trace.switch_on[w];
        auto it = std::lower_bound(on.begin(), on.end(), t_settle);
        ev[w] = std::span<const double>(it, on.end());
        if (ev[w].size() < min_events) {
            throw AnalysisError("oscillator " + std::to_string(w + 1) + " has " + std::to_string(ev[w].size()) +
                                " settled events, need " + std::to_string(min_events));
        }
    }
    PairPhase out;
    out.period1 = (ev[0].back() - ev[0].front()) / static_cast<double>(ev[0].size() - 1);
    out.period2 = (ev[1].back() - ev[1].front()) / static_cast<double>(ev[1].size() - 1);
    const double period = 0.5 * (out.period1 + out.period2);
    if (std::abs(out.period1 - out.period2) > period_tol * period) return out;
    out.synchronized = true;

    auto angles = nearest_offsets(ev[0], ev[1]);
    for (double& a : angles) a *= 360.0 / period;
    out.delta_phi_deg = std::abs(wrap180(circular_mean_deg(angles)));
    return out;
}

}  // namespace scnw::analysis
