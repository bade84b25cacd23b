#pragma once

// Scenario files: a strict INI dialect whose key names carry their units.
//
//   [device]    ic_uA ir_uA rnw_ohm lnw_nH
//   [circuit]   topology rs_ohm ibias_uA init_inw2_frac
//   [injection] mode amp_uA amp_mV freq_MHz phase0_deg rsrc_ohm
//   [coupling]  kind cap_fF res_ohm ind_nH
//   [solver]    dt_ps tstop_ns points
//
// Unspecified keys take the defaults below; `dt_ps` and `tstop_ns` accept
// `auto`. Keys that do not apply to the declared topology are rejected.

#include "scnw/device.hpp"
#include "scnw/elements.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace scnw::scenario {

enum class TopologyKind { Standalone, Injected, Pair };

struct Scenario {
    // [device]
    double ic_uA = 30.0;
    double ir_uA = 10.0;
    double rnw_ohm = 1000.0;
    double lnw_nH = 71.4;
    // [circuit]
    TopologyKind topology = TopologyKind::Standalone;
    double rs_ohm = 50.0;
    double ibias_uA = 35.0;
    double init_inw2_frac = 0.5;
    // [injection]
    InjectionMode mode = InjectionMode::Direct;
    double amp_uA = 6.0;
    double amp_mV = 1.0;
    double freq_MHz = 443.0;
    double phase0_deg = 0.0;
    double rsrc_ohm = 50.0;
    // [coupling]
    CouplingKind kind = CouplingKind::Capacitive;
    double cap_fF = 2000.0;
    double res_ohm = 200.0;
    double ind_nH = 20.0;
    // [solver]
    std::optional<double> dt_ps;     // empty: automatic
    std::optional<double> tstop_ns;  // empty: 400 free-running periods
    double points = 1024.0;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

[[nodiscard]] constexpr std::string_view to_string(TopologyKind t) noexcept {
    switch (t) {
        case TopologyKind::Standalone: return "standalone";
        case TopologyKind::Injected: return "injected";
        case TopologyKind::Pair: return "pair";
    }
    return "?";
}

[[nodiscard]] inline bool has_coupling(const Scenario& s) noexcept {
    return s.topology == TopologyKind::Pair ||
           (s.topology == TopologyKind::Injected && s.mode == InjectionMode::Coupled);
}

namespace detail {

enum class Constraint { Positive, NonNegative, Finite, PowerOfTwo, AutoOrPositive };

struct NumericKey {
    std::string_view section;
    std::string_view name;
    double Scenario::*field = nullptr;
    std::optional<double> Scenario::*optional_field = nullptr;
    Constraint constraint = Constraint::Positive;
    bool (*applies)(const Scenario&) = nullptr;
};

inline bool always(const Scenario&) { return true; }
inline bool pair_only(const Scenario& s) { return s.topology == TopologyKind::Pair; }
inline bool injected_only(const Scenario& s) { return s.topology == TopologyKind::Injected; }
inline bool direct_only(const Scenario& s) {
    return s.topology == TopologyKind::Injected && s.mode == InjectionMode::Direct;
}
inline bool coupled_only(const Scenario& s) {
    return s.topology == TopologyKind::Injected && s.mode == InjectionMode::Coupled;
}
inline bool cap_only(const Scenario& s) { return has_coupling(s) && s.kind == CouplingKind::Capacitive; }
inline bool res_only(const Scenario& s) { return has_coupling(s) && s.kind == CouplingKind::Resistive; }
inline bool ind_only(const Scenario& s) { return has_coupling(s) && s.kind == CouplingKind::Inductive; }

// Render order of the numeric keys within each section.
inline const std::array<NumericKey, 21>& numeric_keys() {
    static const std::array<NumericKey, 21> keys{{
        {"device", "ic_uA", &Scenario::ic_uA, nullptr, Constraint::Positive, always},
        {"device", "ir_uA", &Scenario::ir_uA, nullptr, Constraint::Positive, always},
        {"device", "rnw_ohm", &Scenario::rnw_ohm, nullptr, Constraint::Positive, always},
        {"device", "lnw_nH", &Scenario::lnw_nH, nullptr, Constraint::Positive, always},
        {"circuit", "rs_ohm", &Scenario::rs_ohm, nullptr, Constraint::Positive, always},
        {"circuit", "ibias_uA", &Scenario::ibias_uA, nullptr, Constraint::NonNegative, always},
        {"circuit", "init_inw2_frac", &Scenario::init_inw2_frac, nullptr, Constraint::NonNegative, pair_only},
        {"injection", "amp_uA", &Scenario::amp_uA, nullptr, Constraint::NonNegative, direct_only},
        {"injection", "amp_mV", &Scenario::amp_mV, nullptr, Constraint::NonNegative, coupled_only},
        {"injection", "freq_MHz", &Scenario::freq_MHz, nullptr, Constraint::Positive, injected_only},
        {"injection", "phase0_deg", &Scenario::phase0_deg, nullptr, Constraint::Finite, injected_only},
        {"injection", "rsrc_ohm", &Scenario::rsrc_ohm, nullptr, Constraint::NonNegative, coupled_only},
        {"coupling", "cap_fF", &Scenario::cap_fF, nullptr, Constraint::Positive, cap_only},
        {"coupling", "res_ohm", &Scenario::res_ohm, nullptr, Constraint::Positive, res_only},
        {"coupling", "ind_nH", &Scenario::ind_nH, nullptr, Constraint::Positive, ind_only},
        {"solver", "dt_ps", nullptr, &Scenario::dt_ps, Constraint::AutoOrPositive, always},
        {"solver", "tstop_ns", nullptr, &Scenario::tstop_ns, Constraint::AutoOrPositive, always},
        {"solver", "points", &Scenario::points, nullptr, Constraint::PowerOfTwo, always},
        // Enum keys: no numeric field, parsed by token.
        {"circuit", "topology", nullptr, nullptr, Constraint::Finite, always},
        {"injection", "mode", nullptr, nullptr, Constraint::Finite, injected_only},
        {"coupling", "kind", nullptr, nullptr, Constraint::Finite, has_coupling},
    }};
    return keys;
}

inline constexpr std::array<std::string_view, 5> kSections{"device", "circuit", "injection", "coupling", "solver"};

[[nodiscard]] inline const NumericKey* find_key(std::string_view section, std::string_view name) {
    for (const auto& k : numeric_keys()) {
        if (k.section == section && k.name == name) return &k;
    }
    return nullptr;
}

[[nodiscard]] inline std::string_view trim(std::string_view s) noexcept {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

[[nodiscard]] inline std::optional<double> parse_number(std::string_view token) {
    if (token.empty()) return std::nullopt;
    if (token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

[[nodiscard]] inline std::optional<std::string> check(Constraint c, double v) {
    switch (c) {
        case Constraint::Positive:
        case Constraint::AutoOrPositive:
            if (!(v > 0.0)) return "must be positive";
            break;
        case Constraint::NonNegative:
            if (!(v >= 0.0)) return "must be non-negative";
            break;
        case Constraint::Finite: break;
        case Constraint::PowerOfTwo:
            if (!(v >= 8.0 && v <= 1048576.0 && v == std::floor(v) &&
                  std::has_single_bit(static_cast<unsigned long long>(v)))) {
                return "must be a power of two between 8 and 1048576";
            }
            break;
    }
    return std::nullopt;
}

}  // namespace detail

/// Shortest decimal text that parses back to exactly `v`.
[[nodiscard]] inline std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

[[nodiscard]] inline Scenario parse_scenario(std::string_view text) {
    using namespace detail;
    Scenario s;
    std::string section;
    std::map<std::string, std::size_t> sections_seen;   // section -> header line
    std::map<std::string, std::size_t> keys_seen;       // "section.key" -> line

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ScenarioError(line_no, "malformed section header");
            const std::string name(trim(line.substr(1, line.size() - 2)));
            if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
                throw ScenarioError(line_no, "unknown section [" + name + "]");
            }
            if (sections_seen.count(name)) {
                throw ScenarioError(line_no, "duplicate section [" + name + "] (first on line " +
                                                 std::to_string(sections_seen[name]) + ")");
            }
            sections_seen[name] = line_no;
            section = name;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ScenarioError(line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ScenarioError(line_no, "missing key before '='");
        if (section.empty()) throw ScenarioError(line_no, "key '" + key + "' appears before any section header");
        const auto* info = find_key(section, key);
        if (!info) throw ScenarioError(line_no, "unknown key '" + key + "' in [" + section + "]");
        const std::string dotted = section + "." + key;
        if (const auto it = keys_seen.find(dotted); it != keys_seen.end()) {
            throw ScenarioError(line_no, "duplicate key '" + key + "' (first on line " + std::to_string(it->second) + ")");
        }
        keys_seen[dotted] = line_no;
        if (value.empty()) throw ScenarioError(line_no, "missing value for '" + key + "'");

        if (key == "topology") {
            if (value == "standalone") s.topology = TopologyKind::Standalone;
            else if (value == "injected") s.topology = TopologyKind::Injected;
            else if (value == "pair") s.topology = TopologyKind::Pair;
            else throw ScenarioError(line_no, "topology must be standalone, injected or pair");
        } else if (key == "mode") {
            if (value == "direct") s.mode = InjectionMode::Direct;
            else if (value == "coupled") s.mode = InjectionMode::Coupled;
            else throw ScenarioError(line_no, "mode must be direct or coupled");
        } else if (key == "kind") {
            if (value == "capacitive") s.kind = CouplingKind::Capacitive;
            else if (value == "resistive") s.kind = CouplingKind::Resistive;
            else if (value == "inductive") s.kind = CouplingKind::Inductive;
            else throw ScenarioError(line_no, "kind must be capacitive, resistive or inductive");
        } else if (info->optional_field && value == "auto") {
            s.*(info->optional_field) = std::nullopt;
        } else {
            const auto v = parse_number(value);
            if (!v) throw ScenarioError(line_no, "malformed number '" + std::string(value) + "' for '" + key + "'");
            if (auto why = check(info->constraint, *v)) throw ScenarioError(line_no, "'" + key + "' " + *why);
            if (info->optional_field) s.*(info->optional_field) = *v;
            else s.*(info->field) = *v;
        }
    }

    // Topology/key admissibility is decided once the whole file is read.
    auto line_of = [&](const std::string& dotted) -> std::size_t {
        const auto it = keys_seen.find(dotted);
        return it == keys_seen.end() ? 0 : it->second;
    };
    for (const auto& [name, line] : sections_seen) {
        if (name == "injection" && s.topology != TopologyKind::Injected) {
            throw ScenarioError(line, "[injection] is not allowed for topology " + std::string(to_string(s.topology)));
        }
        if (name == "coupling" && !has_coupling(s)) {
            throw ScenarioError(line, "[coupling] is only allowed for pair or coupled injection");
        }
    }
    for (const auto& [dotted, line] : keys_seen) {
        const auto dot = dotted.find('.');
        const auto* info = find_key(dotted.substr(0, dot), dotted.substr(dot + 1));
        if (info && !info->applies(s)) {
            throw ScenarioError(line, "key '" + dotted.substr(dot + 1) + "' does not apply to this topology/mode");
        }
    }

    const std::size_t ir_line = line_of("device.ir_uA");
    const std::size_t ic_line = line_of("device.ic_uA");
    if (!(s.ir_uA < s.ic_uA)) {
        throw ScenarioError(std::max(ir_line, ic_line), "retrapping current must be below the critical current");
    }
    return s;
}

[[nodiscard]] inline std::string render_scenario(const Scenario& s) {
    using namespace detail;
    std::string out;
    for (auto section : kSections) {
        if (section == "injection" && s.topology != TopologyKind::Injected) continue;
        if (section == "coupling" && !has_coupling(s)) continue;
        if (!out.empty()) out += '\n';
        out += "[" + std::string(section) + "]\n";
        if (section == "circuit") out += "topology = " + std::string(to_string(s.topology)) + "\n";
        if (section == "injection") out += "mode = " + std::string(to_string(s.mode)) + "\n";
        if (section == "coupling") out += "kind = " + std::string(to_string(s.kind)) + "\n";
        for (const auto& k : numeric_keys()) {
            if (k.section != section || (!k.field && !k.optional_field) || !k.applies(s)) continue;
            out += std::string(k.name) + " = ";
            if (k.optional_field) {
                const auto& v = s.*(k.optional_field);
                out += v ? format_number(*v) : "auto";
            } else {
                out += format_number(s.*(k.field));
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace scnw::scenario
