#pragma once

// Parameter exploration: lock-range boundary search, 1-D metric sweeps and
// 2-D lock maps. Points are independent; results are always collected by
// input index so the worker count never changes the output.

#include "scnw/analysis.hpp"
#include "scnw/build.hpp"
#include "scnw/csv.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace scnw::sweep {

/// Runs fn(0..n-1) on up to `workers` threads; element k of the result is
/// fn(k) or the message of the exception it threw.
template <typename Fn>
[[nodiscard]] auto parallel_map(std::size_t n, std::size_t workers, Fn&& fn) {
    using R = decltype(fn(std::size_t{0}));
    std::vector<std::variant<R, std::string>> out(n, std::string{"not evaluated"});
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                out[k] = fn(k);
            } catch (const std::exception& e) {
                out[k] = std::string(e.what());
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return out;
}

/// Assigns a numeric scenario key by dotted path, e.g. "device.lnw_nH".
inline void set_parameter(scenario::Scenario& s, std::string_view path, double value) {
    const auto dot = path.find('.');
    const auto* key = dot == std::string_view::npos ? nullptr
                                                    : scenario::detail::find_key(path.substr(0, dot), path.substr(dot + 1));
    if (!key || (!key->field && !key->optional_field)) {
        throw InvalidArgument("invalid parameter path '" + std::string(path) + "'");
    }
    if (!key->applies(s)) {
        throw InvalidArgument("parameter '" + std::string(path) + "' does not apply to this scenario");
    }
    if (auto why = scenario::detail::check(key->constraint, value)) {
        throw InvalidArgument("parameter '" + std::string(path) + "' " + *why);
    }
    if (key->optional_field) s.*(key->optional_field) = value;
    else s.*(key->field) = value;
    if (!(s.ir_uA < s.ic_uA)) throw InvalidArgument("retrapping current must be below the critical current");
}

struct LockRange {
    double f_low = 0.0;   // Hz
    double f_high = 0.0;  // Hz
    bool empty = true;
    bool multiple_intervals = false;  // coarse scan saw more than one locked run

    [[nodiscard]] double range() const noexcept { return empty ? 0.0 : f_high - f_low; }
};

struct LockRangeOptions {
    std::size_t coarse_steps = 64;
    double refine_tol = 0.0;  // Hz; 0 selects 1e-4 of the bracket centre
    std::size_t workers = 1;
};

/// Coarse scan of `locked_at` over a uniform grid, then bisection of the
/// outer edges of the widest locked run.
[[nodiscard]] inline LockRange find_lock_range(const std::function<bool(double)>& locked_at, double f_min,
                                               double f_max, const LockRangeOptions& opt = {}) {
    if (!(f_min < f_max) || f_min <= 0.0) throw InvalidArgument("lock-range bracket needs 0 < f_min < f_max");
    if (opt.coarse_steps < 16) throw InvalidArgument("lock-range search needs at least 16 coarse steps");
    const std::size_t n = opt.coarse_steps;
    auto grid = [&](std::size_t k) { return f_min + (f_max - f_min) * static_cast<double>(k) / static_cast<double>(n - 1); };
    const auto results = parallel_map(n, opt.workers, [&](std::size_t k) { return locked_at(grid(k)); });
    std::vector<bool> locked(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (const auto* err = std::get_if<std::string>(&results[k])) throw SimulationError(*err);
        locked[k] = std::get<bool>(results[k]);
    }

    std::size_t best_first = 0, best_len = 0, runs = 0;
    for (std::size_t k = 0; k < n;) {
        if (!locked[k]) { ++k; continue; }
        std::size_t j = k;
        while (j < n && locked[j]) ++j;
        ++runs;
        if (j - k > best_len) { best_first = k; best_len = j - k; }
        k = j;
    }
    LockRange r;
    if (best_len == 0) return r;
    r.empty = false;
    r.multiple_intervals = runs > 1;

    const double tol = opt.refine_tol > 0.0 ? opt.refine_tol : 1e-4 * 0.5 * (f_min + f_max);
    auto refine = [&](double inside, double outside) {
        while (std::abs(outside - inside) > tol) {
            const double mid = 0.5 * (inside + outside);
            if (locked_at(mid)) inside = mid;
            else outside = mid;
        }
        return inside;
    };
    const std::size_t last = best_first + best_len - 1;
    r.f_low = best_first == 0 ? grid(0) : refine(grid(best_first), grid(best_first - 1));
    r.f_high = last == n - 1 ? grid(n - 1) : refine(grid(last), grid(last + 1));
    return r;
}

/// Lock verdict for an injected scenario; analysis failures (too few events)
/// count as unlocked, simulation failures propagate.
[[nodiscard]] inline bool locked_at(scenario::Scenario s, double f_inj, const analysis::LockCriteria& c = {}) {
    s.freq_MHz = f_inj * 1e-6;
    const auto trace = simulate(s);
    try {
        return analysis::detect_lock(trace, f_inj, c).locked;
    } catch (const AnalysisError&) {
        return false;
    }
}

[[nodiscard]] inline LockRange find_lock_range(const scenario::Scenario& config, double f_min, double f_max,
                                               const LockRangeOptions& opt = {}) {
    if (config.topology != scenario::TopologyKind::Injected) {
        throw InvalidArgument("lock-range search needs an injected scenario");
    }
    return find_lock_range([&config](double f) { return locked_at(config, f); }, f_min, f_max, opt);
}

enum class Metric { FOsc, LockRange, LockDelay, LockedAmplitude, PhaseDiff };

[[nodiscard]] inline std::optional<Metric> parse_metric(std::string_view name) {
    if (name == "f_osc") return Metric::FOsc;
    if (name == "lock_range") return Metric::LockRange;
    if (name == "lock_delay") return Metric::LockDelay;
    if (name == "locked_amplitude") return Metric::LockedAmplitude;
    if (name == "phase_diff") return Metric::PhaseDiff;
    return std::nullopt;
}

struct SweepSpec {
    std::string path;
    std::vector<double> values;
    Metric metric = Metric::FOsc;
    // lock_range: bracket as multiples of the free-running frequency.
    double bracket_low = 0.7;
    double bracket_high = 1.3;
    std::size_t coarse_steps = 64;
};

[[nodiscard]] inline std::vector<double> grid_values(double from, double to, std::size_t steps, bool log_scale) {
    if (steps < 2) throw InvalidArgument("a sweep needs at least 2 values");
    if (!std::isfinite(from) || !std::isfinite(to)) throw InvalidArgument("sweep bounds must be finite");
    if (log_scale && !(from > 0.0 && to > 0.0)) throw InvalidArgument("log sweep bounds must be positive");
    std::vector<double> v(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(steps - 1);
        v[k] = log_scale ? from * std::pow(to / from, u) : from + (to - from) * u;
    }
    v.back() = to;
    return v;
}

[[nodiscard]] inline std::vector<std::string> metric_columns(Metric m) {
    switch (m) {
        case Metric::FOsc: return {"f_osc_MHz"};
        case Metric::LockRange: return {"f_low_MHz", "f_high_MHz", "range_MHz"};
        case Metric::LockDelay: return {"lock_delay_ns"};
        case Metric::LockedAmplitude: return {"locked_amplitude_mV"};
        case Metric::PhaseDiff: return {"phase_diff_deg"};
    }
    return {};
}

/// Measured free-running frequency: the scenario's oscillator simulated alone.
[[nodiscard]] inline double measured_f_osc(scenario::Scenario s) {
    s.topology = scenario::TopologyKind::Standalone;
    const auto trace = simulate(s);
    const auto& on = trace.switch_on[0];
    if (on.size() < 3) throw AnalysisError("oscillator produced fewer than 3 switching events");
    const std::size_t from = on.size() / 2;
    return static_cast<double>(on.size() - 1 - from) / (on.back() - on[from]);
}

/// Evaluates one metric; returns the metric columns, or throws.
[[nodiscard]] inline std::vector<double> evaluate_metric(const scenario::Scenario& s, const SweepSpec& spec) {
    switch (spec.metric) {
        case Metric::FOsc: return {measured_f_osc(s) * 1e-6};
        case Metric::LockRange: {
            const double f0 = device::free_running_period(oscillator_params(s)).frequency;
            const auto r = find_lock_range(s, spec.bracket_low * f0, spec.bracket_high * f0,
                                           {spec.coarse_steps, 0.0, 1});
            if (r.empty) return {std::nan(""), std::nan(""), 0.0};
            return {r.f_low * 1e-6, r.f_high * 1e-6, r.range() * 1e-6};
        }
        case Metric::LockDelay:
        case Metric::LockedAmplitude: {
            if (s.topology != scenario::TopologyKind::Injected) throw InvalidArgument("metric needs an injected scenario");
            const auto res = analysis::detect_lock(simulate(s), s.freq_MHz * 1e6);
            if (!res.locked) throw AnalysisError("not locked");
            if (spec.metric == Metric::LockDelay) return {*res.locking_delay * 1e9};
            return {res.locked_amplitude * 1e3};
        }
        case Metric::PhaseDiff: {
            if (s.topology != scenario::TopologyKind::Pair) throw InvalidArgument("metric needs a pair scenario");
            const auto pd = analysis::phase_difference(simulate(s));
            if (!pd.synchronized) throw AnalysisError("unsynchronized");
            return {pd.delta_phi_deg};
        }
    }
    return {};
}

/// One row per value in input order: value, metric columns, status.
[[nodiscard]] inline Table sweep_1d(const scenario::Scenario& base, const SweepSpec& spec, std::size_t workers = 1) {
    if (spec.values.size() < 2) throw InvalidArgument("a sweep needs at least 2 values");
    {
        auto probe = base;
        set_parameter(probe, spec.path, spec.values.front());
    }
    Table t;
    t.headers.push_back(spec.path);
    for (auto& c : metric_columns(spec.metric)) t.headers.push_back(c);
    t.headers.push_back("status");

    const auto results = parallel_map(spec.values.size(), workers, [&](std::size_t k) {
        auto s = base;
        set_parameter(s, spec.path, spec.values[k]);
        return evaluate_metric(s, spec);
    });
    const std::size_t width = metric_columns(spec.metric).size();
    for (std::size_t k = 0; k < results.size(); ++k) {
        std::vector<Cell> row{spec.values[k]};
        if (const auto* vals = std::get_if<std::vector<double>>(&results[k])) {
            for (double v : *vals) row.emplace_back(std::isnan(v) ? Cell{std::string("none")} : Cell{v});
            row.emplace_back(std::string(spec.metric == Metric::LockRange && std::isnan(vals->front()) ? "empty" : "ok"));
        } else {
            for (std::size_t j = 0; j < width; ++j) row.emplace_back(std::string("error"));
            row.emplace_back("error: " + std::get<std::string>(results[k]));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Lock verdict per (coupling value, injection frequency) cell; empty
/// optionals mark cells whose simulation failed.
struct LockMap {
    std::vector<double> coupling;     // in the scenario key's units
    std::vector<double> frequencies;  // Hz
    std::vector<std::vector<std::optional<bool>>> locked;
    std::vector<std::string> errors;

    /// Number of locked cells in row `r`.
    [[nodiscard]] std::size_t width(std::size_t r) const {
        std::size_t n = 0;
        for (const auto& c : locked[r]) n += c.value_or(false) ? 1 : 0;
        return n;
    }
};

[[nodiscard]] inline std::string coupling_path(const scenario::Scenario& s) {
    switch (s.kind) {
        case CouplingKind::Capacitive: return "coupling.cap_fF";
        case CouplingKind::Resistive: return "coupling.res_ohm";
        case CouplingKind::Inductive: return "coupling.ind_nH";
    }
    return {};
}

[[nodiscard]] inline LockMap lock_map(const scenario::Scenario& base, const std::vector<double>& coupling_values,
                                      const std::vector<double>& frequencies, std::size_t workers = 1) {
    if (coupling_values.size() < 2 || frequencies.size() < 2) {
        throw InvalidArgument("lock map needs at least 2 points on each axis");
    }
    if (base.topology != scenario::TopologyKind::Injected || base.mode != InjectionMode::Coupled) {
        throw InvalidArgument("lock map needs a coupled-injection scenario");
    }
    const std::string path = coupling_path(base);
    for (double v : coupling_values) {
        auto probe = base;
        set_parameter(probe, path, v);
    }
    const std::size_t nf = frequencies.size();
    const auto results = parallel_map(coupling_values.size() * nf, workers, [&](std::size_t k) {
        auto s = base;
        set_parameter(s, path, coupling_values[k / nf]);
        return locked_at(s, frequencies[k % nf]);
    });
    LockMap m{coupling_values, frequencies, {}, {}};
    m.locked.assign(coupling_values.size(), std::vector<std::optional<bool>>(nf));
    for (std::size_t k = 0; k < results.size(); ++k) {
        if (const auto* v = std::get_if<bool>(&results[k])) {
            m.locked[k / nf][k % nf] = *v;
        } else {
            m.errors.push_back(std::get<std::string>(results[k]));
        }
    }
    return m;
}

[[nodiscard]] inline Table lock_map_table(const LockMap& m, const std::string& coupling_header) {
    Table t;
    t.headers.push_back(coupling_header);
    for (double f : m.frequencies) t.headers.push_back("f" + scenario::format_number(f * 1e-6));
    for (std::size_t r = 0; r < m.coupling.size(); ++r) {
        std::vector<Cell> row{m.coupling[r]};
        for (const auto& c : m.locked[r]) {
            row.emplace_back(c ? Cell{*c ? 1.0 : 0.0} : Cell{std::string("error")});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace scnw::sweep
