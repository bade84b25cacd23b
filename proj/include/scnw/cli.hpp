#pragma once

// Command-line front end. `run` never calls std::exit and writes only to the
// streams it is given, so tests can drive it in-process.

#include "scnw/analysis.hpp"
#include "scnw/build.hpp"
#include "scnw/csv.hpp"
#include "scnw/device.hpp"
#include "scnw/scenario.hpp"
#include "scnw/svg.hpp"
#include "scnw/sweep.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace scnw::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kParse = 2, kRuntime = 3 };

/// Bad path, malformed list or other problem with the invocation itself.
class UsageError : public Error {
public:
    using Error::Error;
};

namespace detail {

[[nodiscard]] inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open output file '" + path + "'");
    return out;
}

[[nodiscard]] inline std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

[[nodiscard]] inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = scenario::detail::parse_number(scenario::detail::trim(item));
        if (!v) throw UsageError("malformed number '" + item + "' in list '" + text + "'");
        out.push_back(*v);
    }
    if (out.empty()) throw UsageError("empty value list");
    return out;
}

[[nodiscard]] inline double phase_code(device::Phase p) { return p == device::Phase::Normal ? 1.0 : 0.0; }

// Frequency the analysis window is decimated against.
[[nodiscard]] inline double reference_frequency(const scenario::Scenario& s) {
    if (s.topology == scenario::TopologyKind::Injected) return s.freq_MHz * 1e6;
    const auto op = oscillator_params(s);
    if (auto why = device::oscillation_violation(op)) throw AnalysisError("no reference frequency: " + *why);
    return device::free_running_period(op).frequency;
}

}  // namespace detail

/// Trace table: t_ns, then vout_mV, inw_uA and phase per wire (suffixed 1/2
/// for a pair), then the drive as iinj_uA or vsrc_mV.
inline void write_trace(const solver::Trace& tr, std::ostream& out) {
    std::vector<std::string> headers{"t_ns"};
    const bool pair = tr.wires == 2;
    for (std::size_t w = 0; w < tr.wires; ++w) {
        const std::string n = pair ? std::to_string(w + 1) : "";
        headers.push_back("vout" + n + "_mV");
        headers.push_back("inw" + n + "_uA");
        headers.push_back("phase" + n);
    }
    const bool drive = !tr.injection.empty();
    const bool voltage_drive = drive && tr.reference->mode == InjectionMode::Coupled;
    if (drive) headers.push_back(voltage_drive ? "vsrc_mV" : "iinj_uA");

    CsvWriter csv(out, headers);
    std::vector<Cell> row(headers.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        std::size_t c = 0;
        row[c++] = tr.time(k) * 1e9;
        for (std::size_t w = 0; w < tr.wires; ++w) {
            row[c++] = tr.v_out[w][k] * 1e3;
            row[c++] = tr.i_nw[w][k] * 1e6;
            row[c++] = detail::phase_code(tr.phase[w][k]);
        }
        if (drive) row[c++] = tr.injection[k] * (voltage_drive ? 1e3 : 1e6);
        csv.row(row);
    }
    csv.finish();
}

// Evenly strided subset of the trace, at most `max_points` per series.
[[nodiscard]] inline std::string trace_svg(const solver::Trace& tr, std::size_t max_points = 4000) {
    const std::size_t n = tr.size();
    const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
    std::vector<svg::Series> series;
    for (std::size_t w = 0; w < tr.wires; ++w) {
        svg::Series s{tr.wires == 2 ? "v_out " + std::to_string(w + 1) : "v_out", {}, {}};
        for (std::size_t k = 0; k < n; k += stride) {
            s.x.push_back(tr.time(k) * 1e9);
            s.y.push_back(tr.v_out[w][k] * 1e3);
        }
        series.push_back(std::move(s));
    }
    return svg::render_svg_plot(series, {"time (ns)", "output voltage (mV)", "", 720, 450});
}

namespace detail {

struct Options {
    std::string scenario;
    std::string out;
    std::string svg;
    std::size_t workers = 1;
    std::size_t points = 0;
    std::string window = "hann";
    double fmin_MHz = 0.0;
    double fmax_MHz = 0.0;
    std::size_t coarse = 64;
    std::string param;
    double from = 0.0;
    double to = 0.0;
    std::size_t steps = 6;
    std::string scale = "linear";
    std::string metric;
    double bracket_low = 0.7;
    double bracket_high = 1.3;
    std::string coupling_values;
    std::size_t fsteps = 16;
    double imax_uA = 0.0;
    std::size_t iv_steps = 101;
    bool shunted = false;
};

inline int cmd_simulate(const Options& o, const scenario::Scenario& s, std::ostream&, std::ostream&) {
    const auto tr = simulate(s);
    auto csv = open_output(o.out);
    write_trace(tr, csv);
    if (!o.svg.empty()) {
        auto svg = open_output(o.svg);
        svg << trace_svg(tr);
        if (!svg) throw Error("failed writing SVG output");
    }
    return kOk;
}

inline int cmd_spectrum(const Options& o, const scenario::Scenario& s, std::ostream& out, std::ostream&) {
    const auto tr = simulate(s);
    const std::size_t n = o.points ? o.points : s.points;
    const auto win = analysis::analysis_window(tr, 0, reference_frequency(s), n);
    const auto w = o.window == "hann" ? analysis::Window::Hann : analysis::Window::Rectangular;
    const auto spec = analysis::fft_spectrum(win.samples, win.dt, w);
    Table t{{"f_MHz", "magnitude"}, {}};
    for (std::size_t k = 0; k <= n / 2; ++k) t.rows.push_back({spec.frequency(k) * 1e-6, spec.magnitudes[k]});
    auto csv = open_output(o.out);
    write_csv(t, csv);
    const auto peak = analysis::dominant_peak(spec);
    out << "peak_MHz = " << short_number(peak.frequency * 1e-6) << '\n';
    out << "peak_magnitude = " << short_number(peak.magnitude) << '\n';
    out << "bin_width_MHz = " << short_number(spec.bin_width * 1e-6) << '\n';
    return kOk;
}

inline int cmd_lockcheck(const Options&, const scenario::Scenario& s, std::ostream& out, std::ostream&) {
    if (s.topology != scenario::TopologyKind::Injected) throw UsageError("lockcheck needs an injected scenario");
    const auto r = analysis::detect_lock(simulate(s), s.freq_MHz * 1e6);
    out << "locked = " << (r.locked ? "yes" : "no") << '\n';
    out << "f_dominant_MHz = " << short_number(r.f_dominant * 1e-6) << '\n';
    out << "locking_delay_ns = " << (r.locking_delay ? short_number(*r.locking_delay * 1e9) : "none") << '\n';
    out << "locked_amplitude_mV = " << short_number(r.locked_amplitude * 1e3) << '\n';
    return kOk;
}

inline int cmd_lockrange(const Options& o, const scenario::Scenario& s, std::ostream& out, std::ostream& err) {
    const auto r = sweep::find_lock_range(s, o.fmin_MHz * 1e6, o.fmax_MHz * 1e6, {o.coarse, 0.0, o.workers});
    if (r.multiple_intervals) err << "warning: more than one locked interval; reporting the widest\n";
    Table t{{"f_low_MHz", "f_high_MHz", "range_MHz", "status"}, {}};
    if (r.empty) {
        t.rows.push_back({std::string("none"), std::string("none"), 0.0, std::string("empty")});
    } else {
        t.rows.push_back({r.f_low * 1e-6, r.f_high * 1e-6, r.range() * 1e-6,
                          std::string(r.multiple_intervals ? "multiple_intervals" : "ok")});
    }
    auto csv = open_output(o.out);
    write_csv(t, csv);
    if (r.empty) {
        out << "lock range: empty\n";
    } else {
        out << "f_low_MHz = " << short_number(r.f_low * 1e-6) << '\n';
        out << "f_high_MHz = " << short_number(r.f_high * 1e-6) << '\n';
        out << "range_MHz = " << short_number(r.range() * 1e-6) << '\n';
    }
    return kOk;
}

inline int cmd_sweep(const Options& o, const scenario::Scenario& s, std::ostream&, std::ostream& err) {
    const auto metric = sweep::parse_metric(o.metric);
    if (!metric) throw UsageError("unknown metric '" + o.metric + "'");
    sweep::SweepSpec spec;
    spec.path = o.param;
    spec.values = sweep::grid_values(o.from, o.to, o.steps, o.scale == "log");
    spec.metric = *metric;
    spec.bracket_low = o.bracket_low;
    spec.bracket_high = o.bracket_high;
    spec.coarse_steps = o.coarse;
    const auto t = sweep::sweep_1d(s, spec, o.workers);
    std::size_t failed = 0;
    for (const auto& row : t.rows) failed += render_cell(row.back()).starts_with("error") ? 1 : 0;
    if (failed) err << "warning: " << failed << " of " << t.rows.size() << " points failed\n";
    auto csv = open_output(o.out);
    write_csv(t, csv);
    return kOk;
}

inline int cmd_lockmap(const Options& o, const scenario::Scenario& s, std::ostream&, std::ostream& err) {
    if (o.fsteps < 2) throw UsageError("--fsteps must be at least 2");
    const auto values = parse_list(o.coupling_values);
    const auto freqs = sweep::grid_values(o.fmin_MHz * 1e6, o.fmax_MHz * 1e6, o.fsteps, false);
    const auto m = sweep::lock_map(s, values, freqs, o.workers);
    if (!m.errors.empty()) err << "warning: " << m.errors.size() << " cells failed: " << m.errors.front() << '\n';
    auto csv = open_output(o.out);
    write_csv(sweep::lock_map_table(m, sweep::coupling_path(s)), csv);
    return kOk;
}

inline int cmd_couple(const Options& o, const scenario::Scenario& s, std::ostream& out, std::ostream&) {
    if (s.topology != scenario::TopologyKind::Pair) throw UsageError("couple needs a pair scenario");
    const auto tr = simulate(s);
    const auto pd = analysis::phase_difference(tr);
    const double period = 0.5 * (pd.period1 + pd.period2);
    const auto offsets = analysis::nearest_offsets(tr.switch_on[0], tr.switch_on[1]);
    Table t{{"t1_ns", "offset_ns", "offset_deg"}, {}};
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        if (!std::isfinite(offsets[k])) continue;
        t.rows.push_back({tr.switch_on[0][k] * 1e9, offsets[k] * 1e9, analysis::wrap180(360.0 * offsets[k] / period)});
    }
    auto csv = open_output(o.out);
    write_csv(t, csv);
    out << "synchronized = " << (pd.synchronized ? "yes" : "no") << '\n';
    out << "delta_phi_deg = " << (pd.synchronized ? short_number(pd.delta_phi_deg) : "unsynchronized") << '\n';
    out << "period1_ns = " << short_number(pd.period1 * 1e9) << '\n';
    out << "period2_ns = " << short_number(pd.period2 * 1e9) << '\n';
    return kOk;
}

inline int cmd_iv(const Options& o, const scenario::Scenario& s, std::ostream&, std::ostream&) {
    const std::size_t n = o.iv_steps;
    if (n < 2) throw UsageError("--steps must be at least 2");
    std::vector<double> ramp_uA;
    for (std::size_t k = 0; k < n; ++k) ramp_uA.push_back(o.imax_uA * static_cast<double>(k) / static_cast<double>(n - 1));
    for (std::size_t k = n - 1; k-- > 0;) ramp_uA.push_back(ramp_uA[k]);
    std::vector<double> ramp(ramp_uA.size());
    std::transform(ramp_uA.begin(), ramp_uA.end(), ramp.begin(), [](double i) { return i * 1e-6; });
    const auto op = oscillator_params(s);
    const auto curve = device::dc_iv_curve(op.nw, o.shunted ? std::optional<double>(op.r_s) : std::nullopt, ramp);
    Table t{{"i_uA", "v_mV", "phase", "relaxing"}, {}};
    for (std::size_t k = 0; k < curve.size(); ++k) {
        const auto& p = curve[k];
        t.rows.push_back({ramp_uA[k], p.voltage * 1e3, phase_code(p.phase), p.relaxing ? 1.0 : 0.0});
    }
    auto csv = open_output(o.out);
    write_csv(t, csv);
    return kOk;
}

}  // namespace detail

/// Parses argv, runs one subcommand and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using detail::Options;
    Options o;
    CLI::App app{"Superconducting nanowire oscillator simulator", "scnw"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    using Handler = int (*)(const Options&, const scenario::Scenario&, std::ostream&, std::ostream&);
    std::vector<std::pair<CLI::App*, Handler>> commands;
    auto command = [&](const char* name, const char* about, Handler h) {
        auto* sub = app.add_subcommand(name, about);
        sub->add_option("scenario", o.scenario, "Scenario file")->required();
        sub->add_option("--workers", o.workers, "Parallel workers for sweeps (default 1)")->check(CLI::PositiveNumber);
        commands.emplace_back(sub, h);
        return sub;
    };
    auto out_option = [&](CLI::App* sub, const char* what) {
        sub->add_option("--out", o.out, what)->required();
    };

    auto* sim = command("simulate", "Integrate the scenario and write the trace", detail::cmd_simulate);
    out_option(sim, "Trace CSV (t_ns, vout_mV, inw_uA, phase, ...)");
    sim->add_option("--svg", o.svg, "Also plot v_out (mV) against time (ns) as SVG");

    auto* spec = command("spectrum", "Windowed FFT of v_out over the trailing samples", detail::cmd_spectrum);
    spec->add_option("--points", o.points, "FFT length, a power of two (default: scenario points)");
    spec->add_option("--window", o.window, "Window function")->check(CLI::IsMember({"hann", "rect"}));
    out_option(spec, "Spectrum CSV (f_MHz, magnitude in V)");

    command("lockcheck", "Print lock verdict, dominant frequency, locking delay and amplitude", detail::cmd_lockcheck);

    auto* range = command("lockrange", "Search the locking range of an injected scenario", detail::cmd_lockrange);
    range->add_option("--fmin-MHz", o.fmin_MHz, "Lower injection frequency (MHz)")->required()->check(CLI::PositiveNumber);
    range->add_option("--fmax-MHz", o.fmax_MHz, "Upper injection frequency (MHz)")->required()->check(CLI::PositiveNumber);
    range->add_option("--coarse", o.coarse, "Coarse grid points (>= 16, default 64)");
    out_option(range, "Range CSV (f_low_MHz, f_high_MHz, range_MHz, status)");

    auto* sw = command("sweep", "Evaluate a metric over a 1-D parameter grid", detail::cmd_sweep);
    sw->add_option("--param", o.param, "Dotted scenario key, e.g. circuit.rs_ohm (unit from the key)")->required();
    sw->add_option("--from", o.from, "First value (unit of the key)")->required();
    sw->add_option("--to", o.to, "Last value (unit of the key)")->required();
    sw->add_option("--steps", o.steps, "Number of values (>= 2, default 6)");
    sw->add_option("--scale", o.scale, "Grid spacing")->check(CLI::IsMember({"linear", "log"}));
    sw->add_option("--metric", o.metric, "f_osc (MHz), lock_range (MHz), lock_delay (ns), locked_amplitude (mV), phase_diff (deg)")
        ->required()
        ->check(CLI::IsMember({"f_osc", "lock_range", "lock_delay", "locked_amplitude", "phase_diff"}));
    sw->add_option("--bracket-low", o.bracket_low, "lock_range search start, multiple of f_osc (default 0.7)");
    sw->add_option("--bracket-high", o.bracket_high, "lock_range search end, multiple of f_osc (default 1.3)");
    sw->add_option("--coarse", o.coarse, "lock_range coarse grid points (default 64)");
    out_option(sw, "Sweep CSV (value, metric columns, status)");

    auto* map = command("lockmap", "Lock verdicts over coupling value x injection frequency", detail::cmd_lockmap);
    map->add_option("--coupling-values", o.coupling_values, "Comma-separated values in the unit of the coupling key (fF, ohm or nH)")->required();
    map->add_option("--fmin-MHz", o.fmin_MHz, "Lowest injection frequency (MHz)")->required()->check(CLI::PositiveNumber);
    map->add_option("--fmax-MHz", o.fmax_MHz, "Highest injection frequency (MHz)")->required()->check(CLI::PositiveNumber);
    map->add_option("--fsteps", o.fsteps, "Frequency grid points (default 16)");
    out_option(map, "Map CSV (coupling value, then one 0/1 column per frequency)");

    auto* cpl = command("couple", "Simulate a coupled pair and print its phase difference", detail::cmd_couple);
    out_option(cpl, "Per-event CSV (t1_ns, offset_ns, offset_deg)");

    auto* iv = command("iv", "Quasi-static I-V sweep, up to --imax-uA and back", detail::cmd_iv);
    iv->add_option("--imax-uA", o.imax_uA, "Peak bias current (uA)")->required()->check(CLI::PositiveNumber);
    iv->add_option("--steps", o.iv_steps, "Points on each ramp (default 101)");
    iv->add_flag("--shunted", o.shunted, "Include the shunt resistor of the scenario");
    out_option(iv, "I-V CSV (i_uA, v_mV, phase, relaxing)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    Handler handler = nullptr;
    for (const auto& [sub, h] : commands) {
        if (sub->parsed()) handler = h;
    }
    try {
        const auto s = scenario::parse_scenario(detail::read_file(o.scenario));
        return handler(o, s, out, err);
    } catch (const ScenarioError& e) {
        err << "error: " << o.scenario << ": " << e.what() << '\n';
        return kParse;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntime;
    }
}

}  // namespace scnw::cli
