#pragma once

// Lumped hysteretic nanowire model and the closed-form behaviour of the
// shunted relaxation oscillator built from it. All quantities are SI.

#include "scnw/error.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scnw::device {

enum class Phase { Superconducting, Normal };

struct NanowireParams {
    double i_c = 30e-6;     // critical current (A)
    double i_r = 10e-6;     // retrapping current (A)
    double r_nw = 1000.0;   // normal-state resistance (ohm)
    double l_nw = 71.4e-9;  // kinetic inductance (H)
};

struct OscillatorParams {
    NanowireParams nw;
    double r_s = 50.0;       // shunt (ohm)
    double i_bias = 35e-6;   // DC bias (A)
};

inline void validate(const NanowireParams& p) {
    if (!(p.i_r > 0.0 && p.i_r < p.i_c)) {
        throw InvalidArgument("nanowire requires 0 < i_r < i_c");
    }
    if (!(p.r_nw > 0.0) || !(p.l_nw > 0.0)) {
        throw InvalidArgument("nanowire requires r_nw > 0 and l_nw > 0");
    }
}

inline void validate(const OscillatorParams& op) {
    validate(op.nw);
    if (!(op.r_s > 0.0)) throw InvalidArgument("shunt resistance must be positive");
    if (!(op.i_bias >= 0.0)) throw InvalidArgument("bias current must be non-negative");
}

[[nodiscard]] constexpr double nanowire_resistance(Phase phase, const NanowireParams& p) noexcept {
    return phase == Phase::Normal ? p.r_nw : 0.0;
}

/// Threshold crossings are inclusive: >= i_c switches, <= i_r retraps.
[[nodiscard]] constexpr Phase phase_transition(Phase phase, double i_nw, const NanowireParams& p) noexcept {
    if (phase == Phase::Superconducting && i_nw >= p.i_c) return Phase::Normal;
    if (phase == Phase::Normal && i_nw <= p.i_r) return Phase::Superconducting;
    return phase;
}

/// Rise (normal phase) time constant L/(R_S + R_NW).
[[nodiscard]] inline double tau_normal(const OscillatorParams& op) noexcept {
    return op.nw.l_nw / (op.r_s + op.nw.r_nw);
}

/// Recharge (superconducting phase) time constant L/R_S.
[[nodiscard]] inline double tau_superconducting(const OscillatorParams& op) noexcept {
    return op.nw.l_nw / op.r_s;
}

/// Nanowire current the normal phase relaxes towards.
[[nodiscard]] inline double normal_asymptote(const OscillatorParams& op) noexcept {
    return op.r_s * op.i_bias / (op.r_s + op.nw.r_nw);
}

/// Empty when the unforced circuit oscillates, otherwise the violated condition.
[[nodiscard]] inline std::optional<std::string> oscillation_violation(const OscillatorParams& op) {
    if (!(op.i_bias > op.nw.i_c)) {
        return "bias current does not exceed the critical current (nanowire never switches)";
    }
    if (!(normal_asymptote(op) < op.nw.i_r)) {
        return "normal-phase asymptote r_s*i_bias/(r_s+r_nw) is not below the retrapping current (latches resistive)";
    }
    return std::nullopt;
}

[[nodiscard]] inline bool oscillation_condition(const OscillatorParams& op) {
    return !oscillation_violation(op).has_value();
}

struct FreeRunning {
    double period = 0.0;     // s
    double frequency = 0.0;  // Hz
    double t_rise = 0.0;     // time spent resistive (s)
    double t_fall = 0.0;     // time spent superconducting (s)
};

/// Exact period of the unforced piecewise-linear oscillator.
[[nodiscard]] inline FreeRunning free_running_period(const OscillatorParams& op) {
    validate(op);
    if (auto why = oscillation_violation(op)) {
        throw InvalidArgument("oscillation condition violated: " + *why);
    }
    const double i_inf = normal_asymptote(op);
    const auto& nw = op.nw;
    FreeRunning out;
    out.t_rise = tau_normal(op) * std::log((nw.i_c - i_inf) / (nw.i_r - i_inf));
    out.t_fall = tau_superconducting(op) * std::log((op.i_bias - nw.i_r) / (op.i_bias - nw.i_c));
    out.period = out.t_rise + out.t_fall;
    out.frequency = 1.0 / out.period;
    return out;
}

struct IvPoint {
    double current = 0.0;  // A
    double voltage = 0.0;  // V
    Phase phase = Phase::Superconducting;
    // Shunted wire biased where neither phase is stable: it relaxes, and the
    // reported voltage is the normal branch.
    bool relaxing = false;
};

/// Quasi-static I-V response over an up-then-down current ramp. `r_s` absent
/// means a bare wire.
[[nodiscard]] inline std::vector<IvPoint> dc_iv_curve(const NanowireParams& p, std::optional<double> r_s,
                                                       std::span<const double> ramp) {
    validate(p);
    if (r_s && !(*r_s > 0.0)) throw InvalidArgument("shunt resistance must be positive");

    bool descending = false;
    for (std::size_t k = 1; k < ramp.size(); ++k) {
        if (ramp[k] < ramp[k - 1]) descending = true;
        else if (descending && ramp[k] > ramp[k - 1]) {
            throw InvalidArgument("current ramp must rise then fall; rises again at index " + std::to_string(k));
        }
    }

    // Fraction of the total current carried by the wire in the normal phase.
    const double split = r_s ? *r_s / (*r_s + p.r_nw) : 1.0;
    const double r_normal = r_s ? *r_s * p.r_nw / (*r_s + p.r_nw) : p.r_nw;

    std::vector<IvPoint> out;
    out.reserve(ramp.size());
    Phase phase = Phase::Superconducting;
    for (double current : ramp) {
        IvPoint pt{current, 0.0, phase, false};
        const double i_wire = phase == Phase::Normal ? current * split : current;
        phase = phase_transition(phase, i_wire, p);
        if (phase == Phase::Superconducting && current >= p.i_c) phase = Phase::Normal;
        pt.relaxing = phase == Phase::Normal && current * split <= p.i_r;
        pt.phase = phase;
        pt.voltage = phase == Phase::Normal ? current * r_normal : 0.0;
        out.push_back(pt);
    }
    return out;
}

}  // namespace scnw::device
