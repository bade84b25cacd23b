#pragma once

// Scenario -> model/settings conversion and the one-call simulation entry
// point used by the sweep engine and the CLI.

#include "scnw/circuits.hpp"
#include "scnw/scenario.hpp"
#include "scnw/solver.hpp"

#include <numbers>
#include <string>
#include <vector>

namespace scnw {

[[nodiscard]] inline device::OscillatorParams oscillator_params(const scenario::Scenario& s) {
    device::OscillatorParams op;
    op.nw.i_c = s.ic_uA * 1e-6;
    op.nw.i_r = s.ir_uA * 1e-6;
    op.nw.r_nw = s.rnw_ohm;
    op.nw.l_nw = s.lnw_nH * 1e-9;
    op.r_s = s.rs_ohm;
    op.i_bias = s.ibias_uA * 1e-6;
    return op;
}

/// Element value in SI units for the scenario's coupling kind.
[[nodiscard]] inline CouplingElement coupling_element(const scenario::Scenario& s) {
    switch (s.kind) {
        case CouplingKind::Capacitive: return {s.kind, s.cap_fF * 1e-15};
        case CouplingKind::Resistive: return {s.kind, s.res_ohm};
        case CouplingKind::Inductive: return {s.kind, s.ind_nH * 1e-9};
    }
    return {};
}

[[nodiscard]] inline InjectionSpec injection_spec(const scenario::Scenario& s) {
    InjectionSpec inj;
    inj.mode = s.mode;
    inj.f_inj = s.freq_MHz * 1e6;
    inj.phase0 = s.phase0_deg * std::numbers::pi / 180.0;
    if (s.mode == InjectionMode::Direct) {
        inj.amplitude = s.amp_uA * 1e-6;
    } else {
        inj.amplitude = s.amp_mV * 1e-3;
        inj.element = coupling_element(s);
        inj.r_source = s.rsrc_ohm;
    }
    return inj;
}

namespace circuits {

/// All wires start superconducting at zero current except wire 2 of a pair,
/// which starts at init_inw2_frac * i_c. A non-oscillating oscillator is
/// reported through `warnings`; the forced response is still simulable.
[[nodiscard]] inline SystemModel build_system(const scenario::Scenario& s, std::vector<std::string>* warnings = nullptr) {
    const auto op = oscillator_params(s);
    if (warnings) {
        if (auto why = device::oscillation_violation(op)) warnings->push_back("standalone oscillator does not oscillate: " + *why);
    }
    switch (s.topology) {
        case scenario::TopologyKind::Standalone: return SystemModel{Standalone{op}};
        case scenario::TopologyKind::Injected: return SystemModel{Injected{op, injection_spec(s)}};
        case scenario::TopologyKind::Pair:
            return SystemModel{Pair{op, op, coupling_element(s), s.init_inw2_frac * op.nw.i_c}};
    }
    throw InvalidArgument("unknown topology");
}

}  // namespace circuits

/// Free-running periods simulated when `tstop_ns = auto`.
inline constexpr double kAutoPeriods = 400.0;

[[nodiscard]] inline solver::SolverSettings solver_settings(const scenario::Scenario& s,
                                                            const circuits::SystemModel& model) {
    double t_stop = 0.0;
    if (s.tstop_ns) {
        t_stop = *s.tstop_ns * 1e-9;
    } else {
        const auto op = oscillator_params(s);
        if (!device::oscillation_condition(op)) {
            throw SimulationError("tstop_ns = auto needs an oscillating device; set tstop_ns explicitly");
        }
        t_stop = kAutoPeriods * device::free_running_period(op).period;
    }
    auto settings = solver::default_settings(model, t_stop);
    if (s.dt_ps) {
        settings.dt = *s.dt_ps * 1e-12;
        settings.event_tol = settings.dt * 1e-6;
        const auto op = oscillator_params(s);
        settings.record_stride = 1;
        if (device::oscillation_condition(op)) {
            const double period = device::free_running_period(op).period;
            settings.record_stride = std::max(1, static_cast<int>(std::ceil(2000.0 * settings.dt / period)));
        }
    }
    return settings;
}

[[nodiscard]] inline solver::Trace simulate(const scenario::Scenario& s) {
    const auto model = circuits::build_system(s);
    return solver::integrate(model, solver_settings(s, model));
}

}  // namespace scnw
