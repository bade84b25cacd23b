#pragma once

// Hybrid integrator: classical RK4 on the continuous states, with nanowire
// threshold crossings localized by bisection inside the step that contains
// them. After an event the step restarts from the event time with a full dt.

#include "scnw/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace scnw::solver {

struct SolverSettings {
    double dt = 0.0;          // s
    double t_stop = 0.0;      // s
    double event_tol = 0.0;   // s
    int record_stride = 1;    // recorded samples per integration step
};

struct Trace {
    double dt_record = 0.0;
    double t_stop = 0.0;
    std::size_t wires = 1;
    std::array<std::vector<double>, circuits::kMaxWires> v_out;
    std::array<std::vector<double>, circuits::kMaxWires> i_nw;
    std::array<std::vector<device::Phase>, circuits::kMaxWires> phase;
    std::vector<double> injection;             // empty without a drive
    std::optional<InjectionSpec> reference;    // the drive that produced `injection`
    std::array<std::vector<double>, circuits::kMaxWires> switch_on;   // SC -> Normal
    std::array<std::vector<double>, circuits::kMaxWires> switch_off;  // Normal -> SC

    [[nodiscard]] std::size_t size() const noexcept { return v_out[0].size(); }
    [[nodiscard]] double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_record; }
};

/// Called at t = 0 and after every accepted step or event.
using StepObserver = std::function<void(double t, const circuits::State&, const circuits::Phases&)>;

/// Step-size ceiling: the binding time scale and the largest admissible dt.
struct StepLimit {
    double max_dt = 0.0;
    std::string binding;
};

[[nodiscard]] inline StepLimit step_limit(const circuits::SystemModel& model) {
    StepLimit lim{std::numeric_limits<double>::infinity(), ""};
    auto consider = [&](double scale, std::string name) {
        if (scale / 10.0 < lim.max_dt) lim = {scale / 10.0, std::move(name)};
    };
    for (std::size_t k = 0; k < model.wire_count(); ++k) {
        const auto& op = model.oscillator(k);
        const std::string suffix = model.wire_count() > 1 ? " of oscillator " + std::to_string(k + 1) : "";
        consider(device::tau_normal(op), "tau1 = L_NW/(R_S+R_NW)" + suffix);
        consider(device::tau_superconducting(op), "tau2 = L_NW/R_S" + suffix);
    }
    if (const auto* inj = model.injection()) consider(1.0 / (50.0 * inj->f_inj), "1/(50 f_inj)");
    consider(circuits::fastest_time_constant(model), "fastest circuit time constant");
    return lim;
}

/// dt = limit/2 (a twentieth of the binding time scale), event_tol = 1e-6 dt,
/// and enough recorded samples per step for >= 2000 per free-running period.
[[nodiscard]] inline SolverSettings default_settings(const circuits::SystemModel& model, double t_stop) {
    SolverSettings s;
    s.dt = step_limit(model).max_dt / 2.0;
    s.t_stop = t_stop;
    s.event_tol = s.dt * 1e-6;
    const auto& op = model.oscillator(0);
    if (device::oscillation_condition(op)) {
        const double period = device::free_running_period(op).period;
        s.record_stride = std::max(1, static_cast<int>(std::ceil(2000.0 * s.dt / period)));
    }
    return s;
}

namespace detail {

// Guard >= 0 means the wire's transition fires.
[[nodiscard]] inline double guard(device::Phase ph, double i_nw, const device::NanowireParams& p) noexcept {
    return ph == device::Phase::Superconducting ? i_nw - p.i_c : p.i_r - i_nw;
}

[[nodiscard]] inline bool any_guard(const circuits::SystemModel& m, const circuits::State& x,
                                    const circuits::Phases& ph) noexcept {
    for (std::size_t w = 0; w < m.wire_count(); ++w) {
        if (guard(ph[w], x[w], m.oscillator(w).nw) >= 0.0) return true;
    }
    return false;
}

[[nodiscard]] inline circuits::State axpy(const circuits::State& x, double a, const circuits::State& k) noexcept {
    circuits::State y;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + a * k[i];
    return y;
}

[[nodiscard]] inline circuits::State rk4(const circuits::SystemModel& m, const circuits::State& x,
                                         const circuits::State& k1, const circuits::Phases& ph, double t,
                                         double h) {
    const auto k2 = circuits::derivatives(m, axpy(x, h / 2.0, k1), ph, t + h / 2.0);
    const auto k3 = circuits::derivatives(m, axpy(x, h / 2.0, k2), ph, t + h / 2.0);
    const auto k4 = circuits::derivatives(m, axpy(x, h, k3), ph, t + h);
    circuits::State y;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return y;
}

struct Recorder {
    Trace& trace;
    const circuits::SystemModel& model;
    std::size_t next = 0;
    std::size_t last = 0;

    // Fill grid samples in (ta, tb] (and t = 0 on the first call) by linear
    // interpolation between two accepted points sharing the phases `ph`.
    void span(double ta, const circuits::State& xa, const circuits::PerOscillator& va, double tb,
              const circuits::State& xb, const circuits::PerOscillator& vb, const circuits::Phases& ph) {
        const auto* inj = model.injection();
        while (next <= last) {
            const double t = trace.time(next);
            if (t > tb) break;
            const double w = tb > ta ? (t - ta) / (tb - ta) : 1.0;
            for (std::size_t k = 0; k < trace.wires; ++k) {
                trace.v_out[k].push_back(va[k] + w * (vb[k] - va[k]));
                trace.i_nw[k].push_back(xa[k] + w * (xb[k] - xa[k]));
                trace.phase[k].push_back(ph[k]);
            }
            if (inj) trace.injection.push_back(circuits::drive(*inj, t));
            ++next;
        }
    }
};

}  // namespace detail

/// Upper bound on recorded samples per signal.
inline constexpr double kMaxSamples = 2e7;

inline void validate(const circuits::SystemModel& model, const SolverSettings& s) {
    if (!(s.dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(s.t_stop > 0.0)) throw InvalidArgument("t_stop must be positive");
    if (!(s.event_tol > 0.0 && s.event_tol < s.dt)) throw InvalidArgument("event_tol must lie in (0, dt)");
    if (s.record_stride < 1) throw InvalidArgument("record_stride must be >= 1");
    const auto lim = step_limit(model);
    if (s.dt > lim.max_dt) {
        std::ostringstream os;
        os << "step size " << s.dt << " s exceeds " << lim.max_dt << " s, a tenth of " << lim.binding;
        throw SimulationError(os.str());
    }
}

[[nodiscard]] inline Trace integrate(const circuits::SystemModel& model, const SolverSettings& settings,
                                     const StepObserver& observer = {}) {
    validate(model, settings);
    using circuits::State;
    using circuits::Phases;

    Trace trace;
    trace.wires = model.wire_count();
    trace.t_stop = settings.t_stop;
    trace.dt_record = settings.dt / settings.record_stride;
    if (const auto* inj = model.injection()) trace.reference = *inj;

    detail::Recorder rec{trace, model};
    const double samples = std::floor(settings.t_stop / trace.dt_record * (1.0 + 1e-12));
    if (samples > kMaxSamples) {
        std::ostringstream os;
        os << "trace would hold " << samples << " samples per signal (limit " << kMaxSamples
           << "); shorten t_stop or enlarge dt";
        throw SimulationError(os.str());
    }
    rec.last = static_cast<std::size_t>(samples);
    for (std::size_t k = 0; k < trace.wires; ++k) {
        trace.v_out[k].reserve(rec.last + 1);
        trace.i_nw[k].reserve(rec.last + 1);
        trace.phase[k].reserve(rec.last + 1);
    }
    if (model.injection()) trace.injection.reserve(rec.last + 1);

    State x = model.initial_state();
    Phases ph = model.initial_phases();
    double t = 0.0;

    auto apply_transitions = [&](double when) {
        for (std::size_t w = 0; w < model.wire_count(); ++w) {
            const auto next = device::phase_transition(ph[w], x[w], model.oscillator(w).nw);
            if (next == ph[w]) continue;
            (next == device::Phase::Normal ? trace.switch_on : trace.switch_off)[w].push_back(when);
            ph[w] = next;
        }
    };

    apply_transitions(0.0);
    auto eval = circuits::evaluate(model, x, ph, t);
    rec.span(t, x, eval.v_out, t, x, eval.v_out, ph);
    if (observer) observer(t, x, ph);

    const double t_end = settings.t_stop;
    while (t < t_end) {
        double h = std::min(settings.dt, t_end - t);
        if (t + h >= t_end * (1.0 - 1e-15)) h = t_end - t;
        State y = detail::rk4(model, x, eval.dstate, ph, t, h);

        for (std::size_t i = 0; i < model.dimension(); ++i) {
            if (!std::isfinite(y[i])) {
                std::ostringstream os;
                os << "non-finite state '" << model.labels()[i] << "' at t = " << t + h << " s";
                throw SimulationError(os.str());
            }
        }

        bool event = detail::any_guard(model, y, ph);
        if (event) {
            double lo = 0.0;
            double hi = h;
            while (hi - lo > settings.event_tol) {
                const double mid = 0.5 * (lo + hi);
                const State ym = detail::rk4(model, x, eval.dstate, ph, t, mid);
                if (detail::any_guard(model, ym, ph)) hi = mid;
                else lo = mid;
            }
            h = hi;
            y = detail::rk4(model, x, eval.dstate, ph, t, h);
        }

        const double t_next = h == t_end - t ? t_end : t + h;
        const auto eval_next = circuits::evaluate(model, y, ph, t_next);
        rec.span(t, x, eval.v_out, t_next, y, eval_next.v_out, ph);
        t = t_next;
        x = y;
        if (event) {
            apply_transitions(t);
            eval = circuits::evaluate(model, x, ph, t);
        } else {
            eval = eval_next;
        }
        if (observer) observer(t, x, ph);
    }
    // Guard against a final grid point lost to rounding of t_stop.
    while (rec.next <= rec.last) rec.span(t, x, eval.v_out, t + trace.dt_record, x, eval.v_out, ph);
    return trace;
}

}  // namespace scnw::solver
