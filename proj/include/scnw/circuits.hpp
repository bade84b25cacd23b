#pragma once

// The three simulated topologies expressed as one continuous-state ODE whose
// right-hand side is linear within each combination of nanowire phases.
//
// Node convention: every oscillator has one output node fed by its bias
// source, with the shunt R_S and the nanowire branch (L_NW in series with
// R(phase)) returning to ground. v_out is the shunt voltage. Coupler current
// i_cpl is positive when it flows *into* the node of a driven oscillator
// (injection) or from node 1 to node 2 (pair).

#include "scnw/device.hpp"
#include "scnw/elements.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace scnw::circuits {

inline constexpr std::size_t kMaxStates = 3;
inline constexpr std::size_t kMaxWires = 2;

using State = std::array<double, kMaxStates>;
using Phases = std::array<device::Phase, kMaxWires>;
using PerOscillator = std::array<double, kMaxWires>;

struct Standalone {
    device::OscillatorParams op;
};

struct Injected {
    device::OscillatorParams op;
    InjectionSpec inj;
};

struct Pair {
    device::OscillatorParams op1;
    device::OscillatorParams op2;
    CouplingElement element;
    double init2 = 15e-6;  // nanowire-2 starting current (A)
};

using Topology = std::variant<Standalone, Injected, Pair>;

/// KCL terms at one output node (A). shunt + nanowire == source + coupler.
struct NodeBalance {
    double source = 0.0;   // bias plus any direct injection
    double coupler = 0.0;  // current entering through the coupling element
    double shunt = 0.0;
    double nanowire = 0.0;
};

class SystemModel {
public:
    enum class Layout {
        Standalone,
        Direct,
        CoupledCapacitive,
        CoupledResistive,
        CoupledInductive,
        PairCapacitive,
        PairResistive,
        PairInductive,
    };

    explicit SystemModel(Topology topology) : topology_(std::move(topology)) {
        std::visit([this](const auto& t) { layout_from(t); }, topology_);
    }

    [[nodiscard]] const Topology& topology() const noexcept { return topology_; }
    [[nodiscard]] Layout layout() const noexcept { return layout_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t wire_count() const noexcept { return wires_; }
    /// Unit-bearing label per continuous state, e.g. "i_nw (A)".
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] const device::OscillatorParams& oscillator(std::size_t k) const noexcept { return ops_[k]; }

    [[nodiscard]] const InjectionSpec* injection() const noexcept {
        const auto* inj = std::get_if<Injected>(&topology_);
        return inj ? &inj->inj : nullptr;
    }

    [[nodiscard]] const State& initial_state() const noexcept { return initial_; }
    void set_initial_state(const State& s) noexcept { initial_ = s; }
    [[nodiscard]] Phases initial_phases() const noexcept {
        return {device::Phase::Superconducting, device::Phase::Superconducting};
    }

private:
    void layout_from(const Standalone& s) {
        device::validate(s.op);
        layout_ = Layout::Standalone;
        ops_ = {s.op, s.op};
        wires_ = 1;
        labels_ = {"i_nw (A)"};
    }

    void layout_from(const Injected& s) {
        device::validate(s.op);
        validate(s.inj);
        ops_ = {s.op, s.op};
        wires_ = 1;
        labels_ = {"i_nw (A)"};
        if (s.inj.mode == InjectionMode::Direct) {
            layout_ = Layout::Direct;
            return;
        }
        switch (s.inj.element.kind) {
            case CouplingKind::Capacitive:
                layout_ = Layout::CoupledCapacitive;
                labels_.push_back("v_cap (V)");
                break;
            case CouplingKind::Resistive:
                layout_ = Layout::CoupledResistive;
                break;
            case CouplingKind::Inductive:
                layout_ = Layout::CoupledInductive;
                labels_.push_back("i_couple (A)");
                break;
        }
    }

    void layout_from(const Pair& s) {
        device::validate(s.op1);
        device::validate(s.op2);
        validate(s.element);
        ops_ = {s.op1, s.op2};
        wires_ = 2;
        labels_ = {"i_nw1 (A)", "i_nw2 (A)"};
        initial_[1] = s.init2;
        switch (s.element.kind) {
            case CouplingKind::Capacitive:
                layout_ = Layout::PairCapacitive;
                labels_.push_back("v_cap (V)");
                break;
            case CouplingKind::Resistive:
                layout_ = Layout::PairResistive;
                break;
            case CouplingKind::Inductive:
                layout_ = Layout::PairInductive;
                labels_.push_back("i_couple (A)");
                break;
        }
    }

    Topology topology_;
    Layout layout_ = Layout::Standalone;
    std::array<device::OscillatorParams, kMaxWires> ops_{};
    std::size_t wires_ = 1;
    std::vector<std::string> labels_;
    State initial_{};
};

/// Everything the node equations determine at one instant.
struct Evaluation {
    State dstate{};
    PerOscillator v_out{};
    double coupler = 0.0;    // i_cpl (A)
    double injection = 0.0;  // direct: injected current (A); coupled: source voltage (V)
};

[[nodiscard]] inline double drive(const InjectionSpec& inj, double t) noexcept {
    return inj.amplitude * std::sin(2.0 * std::numbers::pi * inj.f_inj * t + inj.phase0);
}

[[nodiscard]] inline Evaluation evaluate(const SystemModel& model, const State& x, const Phases& ph, double t) {
    using L = SystemModel::Layout;
    Evaluation e;
    const auto& op1 = model.oscillator(0);
    const double r1 = device::nanowire_resistance(ph[0], op1.nw);

    switch (model.layout()) {
        case L::Standalone: {
            e.v_out[0] = op1.r_s * (op1.i_bias - x[0]);
            break;
        }
        case L::Direct: {
            const auto& inj = *model.injection();
            e.injection = drive(inj, t);
            e.v_out[0] = op1.r_s * (op1.i_bias + e.injection - x[0]);
            break;
        }
        case L::CoupledCapacitive: {
            const auto& inj = *model.injection();
            e.injection = drive(inj, t);
            e.coupler = (e.injection - x[1] - op1.r_s * (op1.i_bias - x[0])) / (op1.r_s + inj.r_source);
            e.v_out[0] = op1.r_s * (op1.i_bias + e.coupler - x[0]);
            e.dstate[1] = e.coupler / inj.element.value;
            break;
        }
        case L::CoupledResistive: {
            const auto& inj = *model.injection();
            e.injection = drive(inj, t);
            const double ratio = op1.r_s / (inj.element.value + inj.r_source);
            e.v_out[0] = (op1.r_s * (op1.i_bias - x[0]) + ratio * e.injection) / (1.0 + ratio);
            e.coupler = (e.injection - e.v_out[0]) / (inj.element.value + inj.r_source);
            break;
        }
        case L::CoupledInductive: {
            const auto& inj = *model.injection();
            e.injection = drive(inj, t);
            e.coupler = x[1];
            e.v_out[0] = op1.r_s * (op1.i_bias + e.coupler - x[0]);
            e.dstate[1] = (e.injection - e.v_out[0] - inj.r_source * e.coupler) / inj.element.value;
            break;
        }
        case L::PairCapacitive:
        case L::PairResistive:
        case L::PairInductive: {
            const auto& op2 = model.oscillator(1);
            const auto& element = std::get<Pair>(model.topology()).element;
            const double b1 = op1.i_bias - x[0];
            const double b2 = op2.i_bias - x[1];
            if (model.layout() == L::PairResistive) {
                const double g1 = 1.0 / op1.r_s;
                const double g2 = 1.0 / op2.r_s;
                const double gc = 1.0 / element.value;
                const double det = (g1 + gc) * (g2 + gc) - gc * gc;
                e.v_out[0] = ((g2 + gc) * b1 + gc * b2) / det;
                e.v_out[1] = (gc * b1 + (g1 + gc) * b2) / det;
                e.coupler = gc * (e.v_out[0] - e.v_out[1]);
            } else {
                if (model.layout() == L::PairCapacitive) {
                    e.coupler = (op1.r_s * b1 - op2.r_s * b2 - x[2]) / (op1.r_s + op2.r_s);
                    e.dstate[2] = e.coupler / element.value;
                } else {
                    e.coupler = x[2];
                }
                e.v_out[0] = op1.r_s * (b1 - e.coupler);
                e.v_out[1] = op2.r_s * (b2 + e.coupler);
                if (model.layout() == L::PairInductive) {
                    e.dstate[2] = (e.v_out[0] - e.v_out[1]) / element.value;
                }
            }
            const double r2 = device::nanowire_resistance(ph[1], op2.nw);
            e.dstate[1] = (e.v_out[1] - r2 * x[1]) / op2.nw.l_nw;
            break;
        }
    }
    e.dstate[0] = (e.v_out[0] - r1 * x[0]) / op1.nw.l_nw;
    return e;
}

[[nodiscard]] inline State derivatives(const SystemModel& model, const State& x, const Phases& ph, double t) {
    return evaluate(model, x, ph, t).dstate;
}

[[nodiscard]] inline PerOscillator output_voltage(const SystemModel& model, const State& x, const Phases& ph,
                                                  double t) {
    return evaluate(model, x, ph, t).v_out;
}

/// KCL terms at the output node of oscillator `k`.
[[nodiscard]] inline NodeBalance node_balance(const SystemModel& model, const State& x, const Phases& ph, double t,
                                              std::size_t k) {
    const auto e = evaluate(model, x, ph, t);
    const auto& op = model.oscillator(k);
    NodeBalance nb;
    nb.source = op.i_bias;
    nb.shunt = e.v_out[k] / op.r_s;
    nb.nanowire = x[k];
    switch (model.layout()) {
        case SystemModel::Layout::Standalone: break;
        case SystemModel::Layout::Direct: nb.source += e.injection; break;
        case SystemModel::Layout::PairCapacitive:
        case SystemModel::Layout::PairResistive:
        case SystemModel::Layout::PairInductive: nb.coupler = k == 0 ? -e.coupler : e.coupler; break;
        default: nb.coupler = e.coupler; break;
    }
    return nb;
}

/// Shortest characteristic time of the linear dynamics over every phase
/// combination, i.e. 1 / max |eigenvalue| of the state matrix.
[[nodiscard]] inline double fastest_time_constant(const SystemModel& model) {
    const auto n = static_cast<Eigen::Index>(model.dimension());
    const std::size_t combos = std::size_t{1} << model.wire_count();
    double fastest_rate = 0.0;
    for (std::size_t mask = 0; mask < combos; ++mask) {
        Phases ph{};
        for (std::size_t w = 0; w < model.wire_count(); ++w) {
            ph[w] = (mask >> w) & 1U ? device::Phase::Normal : device::Phase::Superconducting;
        }
        // Time is frozen at a zero of the drive; the forcing only shifts the
        // affine part.
        const State zero{};
        const State f0 = derivatives(model, zero, ph, 0.0);
        Eigen::MatrixXd jac(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            State unit{};
            unit[static_cast<std::size_t>(j)] = 1.0;
            const State fj = derivatives(model, unit, ph, 0.0);
            for (Eigen::Index i = 0; i < n; ++i) {
                jac(i, j) = fj[static_cast<std::size_t>(i)] - f0[static_cast<std::size_t>(i)];
            }
        }
        const Eigen::VectorXcd eig = jac.eigenvalues();
        for (Eigen::Index i = 0; i < eig.size(); ++i) fastest_rate = std::max(fastest_rate, std::abs(eig(i)));
    }
    return fastest_rate > 0.0 ? 1.0 / fastest_rate : std::numeric_limits<double>::infinity();
}

}  // namespace scnw::circuits
