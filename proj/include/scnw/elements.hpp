#pragma once

#include "scnw/error.hpp"

#include <string_view>

namespace scnw {

enum class CouplingKind { Capacitive, Resistive, Inductive };

/// Two-terminal coupler. `value` is in F, ohm or H according to `kind`.
struct CouplingElement {
    CouplingKind kind = CouplingKind::Capacitive;
    double value = 0.0;

    friend bool operator==(const CouplingElement&, const CouplingElement&) = default;
};

enum class InjectionMode { Direct, Coupled };

/// Sinusoidal drive. Direct: `amplitude` is a current (A) summed into the
/// bias path. Coupled: `amplitude` is the open-circuit voltage (V) of a source
/// with output resistance `r_source` that reaches the output node through
/// `element`.
struct InjectionSpec {
    InjectionMode mode = InjectionMode::Direct;
    CouplingElement element{};
    double amplitude = 0.0;
    double f_inj = 443e6;
    double phase0 = 0.0;
    double r_source = 50.0;

    friend bool operator==(const InjectionSpec&, const InjectionSpec&) = default;
};

[[nodiscard]] constexpr std::string_view to_string(CouplingKind k) noexcept {
    switch (k) {
        case CouplingKind::Capacitive: return "capacitive";
        case CouplingKind::Resistive: return "resistive";
        case CouplingKind::Inductive: return "inductive";
    }
    return "?";
}

[[nodiscard]] constexpr std::string_view to_string(InjectionMode m) noexcept {
    return m == InjectionMode::Direct ? "direct" : "coupled";
}

inline void validate(const CouplingElement& e) {
    if (!(e.value > 0.0)) throw InvalidArgument("coupling element value must be positive");
}

inline void validate(const InjectionSpec& inj) {
    if (!(inj.amplitude >= 0.0)) throw InvalidArgument("injection amplitude must be non-negative");
    if (!(inj.f_inj > 0.0)) throw InvalidArgument("injection frequency must be positive");
    if (inj.mode == InjectionMode::Coupled) {
        validate(inj.element);
        if (!(inj.r_source >= 0.0)) throw InvalidArgument("source resistance must be non-negative");
    }
}

}  // namespace scnw
