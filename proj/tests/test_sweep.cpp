#include "scnw/sweep.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>
#include <stdexcept>

using namespace scnw;
using namespace scnw::sweep;
using Catch::Approx;

namespace {

std::string csv(const Table& t) {
    std::ostringstream out;
    write_csv(t, out);
    return out.str();
}

scenario::Scenario direct(double amp_uA) {
    scenario::Scenario s;
    s.topology = scenario::TopologyKind::Injected;
    s.amp_uA = amp_uA;
    return s;
}

}  // namespace

TEST_CASE("grid values") {
    const auto lin = grid_values(1.0, 2.0, 5, false);
    CHECK(lin == std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0});
    const auto lg = grid_values(10.0, 1000.0, 3, true);
    CHECK(lg[0] == 10.0);
    CHECK(lg[1] == Approx(100.0).epsilon(1e-12));
    CHECK(lg[2] == 1000.0);
    const auto down = grid_values(1e6, 1e3, 4, true);
    CHECK(down.back() == 1e3);
    CHECK(down[1] == Approx(1e5).epsilon(1e-12));
    CHECK_THROWS_AS(grid_values(1.0, 2.0, 1, false), InvalidArgument);
    CHECK_THROWS_AS(grid_values(0.0, 2.0, 3, true), InvalidArgument);
    CHECK_THROWS_AS(grid_values(1.0, HUGE_VAL, 3, false), InvalidArgument);
}

TEST_CASE("set_parameter by dotted path") {
    scenario::Scenario s;
    set_parameter(s, "device.lnw_nH", 90.0);
    CHECK(s.lnw_nH == 90.0);
    set_parameter(s, "solver.tstop_ns", 12.0);
    CHECK(s.tstop_ns == 12.0);
    CHECK_THROWS_WITH(set_parameter(s, "device.nope", 1.0), Catch::Matchers::ContainsSubstring("invalid parameter path"));
    CHECK_THROWS_AS(set_parameter(s, "lnw_nH", 1.0), InvalidArgument);
    CHECK_THROWS_AS(set_parameter(s, "circuit.topology", 1.0), InvalidArgument);
    CHECK_THROWS_WITH(set_parameter(s, "coupling.res_ohm", 10.0), Catch::Matchers::ContainsSubstring("does not apply"));
    CHECK_THROWS_WITH(set_parameter(s, "device.rnw_ohm", -1.0), Catch::Matchers::ContainsSubstring("must be positive"));
    CHECK_THROWS_AS(set_parameter(s, "device.ir_uA", 40.0), InvalidArgument);
}

TEST_CASE("metric names") {
    CHECK(parse_metric("f_osc") == Metric::FOsc);
    CHECK(parse_metric("lock_range") == Metric::LockRange);
    CHECK(parse_metric("lock_delay") == Metric::LockDelay);
    CHECK(parse_metric("locked_amplitude") == Metric::LockedAmplitude);
    CHECK(parse_metric("phase_diff") == Metric::PhaseDiff);
    CHECK_FALSE(parse_metric("f_OSC"));
}

TEST_CASE("parallel map keeps input order and captures errors") {
    for (std::size_t workers : {1u, 3u, 8u, 64u}) {
        const auto out = parallel_map(50, workers, [](std::size_t k) {
            if (k % 7 == 3) throw std::runtime_error("bad " + std::to_string(k));
            return static_cast<int>(k * k);
        });
        REQUIRE(out.size() == 50);
        for (std::size_t k = 0; k < 50; ++k) {
            if (k % 7 == 3) CHECK(std::get<std::string>(out[k]) == "bad " + std::to_string(k));
            else CHECK(std::get<int>(out[k]) == static_cast<int>(k * k));
        }
    }
}

TEST_CASE("lock-range search on a synthetic predicate") {
    auto inside = [](double lo, double hi) { return [lo, hi](double f) { return f >= lo && f <= hi; }; };
    SECTION("interior interval is refined to tolerance") {
        const auto r = find_lock_range(inside(3.3, 6.1), 1.0, 10.0, {16, 1e-6, 1});
        REQUIRE_FALSE(r.empty);
        CHECK(r.f_low == Approx(3.3).margin(1e-6));
        CHECK(r.f_high == Approx(6.1).margin(1e-6));
        CHECK(r.f_low >= 3.3);
        CHECK(r.f_high <= 6.1);
        CHECK(r.range() == Approx(2.8).margin(2e-6));
        CHECK_FALSE(r.multiple_intervals);
    }
    SECTION("interval touching the bracket stops at the bracket") {
        const auto r = find_lock_range(inside(0.0, 4.0), 1.0, 10.0, {16, 1e-6, 1});
        CHECK(r.f_low == 1.0);
        CHECK(r.f_high == Approx(4.0).margin(1e-6));
        const auto all = find_lock_range(inside(0.0, 100.0), 1.0, 10.0, {16, 1e-6, 1});
        CHECK(all.f_low == 1.0);
        CHECK(all.f_high == 10.0);
    }
    SECTION("two runs: the widest wins and is flagged") {
        auto two = [](double f) { return (f > 2.0 && f < 3.0) || (f > 5.0 && f < 8.0); };
        const auto r = find_lock_range(two, 1.0, 10.0, {32, 1e-6, 1});
        CHECK(r.multiple_intervals);
        CHECK(r.f_low == Approx(5.0).margin(1e-6));
        CHECK(r.f_high == Approx(8.0).margin(1e-6));
    }
    SECTION("nothing locks") {
        const auto r = find_lock_range([](double) { return false; }, 1.0, 10.0);
        CHECK(r.empty);
        CHECK(r.range() == 0.0);
    }
    SECTION("worker count does not change the result") {
        const auto a = find_lock_range(inside(3.3, 6.1), 1.0, 10.0, {64, 0.0, 1});
        const auto b = find_lock_range(inside(3.3, 6.1), 1.0, 10.0, {64, 0.0, 8});
        CHECK(a.f_low == b.f_low);
        CHECK(a.f_high == b.f_high);
    }
    SECTION("preconditions and error propagation") {
        CHECK_THROWS_AS(find_lock_range(inside(1, 2), 5.0, 1.0), InvalidArgument);
        CHECK_THROWS_AS(find_lock_range(inside(1, 2), 1.0, 5.0, {8, 0.0, 1}), InvalidArgument);
        auto failing = [](double f) -> bool {
            if (f > 5.0) throw SimulationError("diverged");
            return true;
        };
        CHECK_THROWS_WITH(find_lock_range(failing, 1.0, 10.0), Catch::Matchers::ContainsSubstring("diverged"));
    }
}

TEST_CASE("lock range of the reference oscillator") {
    const double f0 = device::free_running_period(device::OscillatorParams{}).frequency;
    const LockRangeOptions opt{16, 0.0, 2};
    SECTION("zero amplitude never locks") {
        CHECK(find_lock_range(direct(0.0), 0.9 * f0, 1.1 * f0, opt).empty);
    }
    SECTION("6 uA brackets the free-running frequency and doubling widens it") {
        const auto r6 = find_lock_range(direct(6.0), 0.7 * f0, 1.3 * f0, opt);
        REQUIRE_FALSE(r6.empty);
        CHECK(r6.f_low <= 0.99 * f0);
        CHECK(r6.f_high >= 1.01 * f0);
        CHECK(r6.f_low >= 0.7 * f0);
        CHECK(r6.f_high <= 1.3 * f0);
        CHECK(locked_at(direct(6.0), r6.f_low));
        CHECK(locked_at(direct(6.0), r6.f_high));
        const auto r12 = find_lock_range(direct(12.0), 0.7 * f0, 1.3 * f0, opt);
        CHECK(r12.range() > r6.range());
    }
    SECTION("non-injected scenarios are rejected") {
        CHECK_THROWS_AS(find_lock_range(scenario::Scenario{}, 0.9 * f0, 1.1 * f0, opt), InvalidArgument);
    }
}

TEST_CASE("1-D sweep of the free-running frequency") {
    scenario::Scenario base;
    SweepSpec spec;
    spec.metric = Metric::FOsc;
    SECTION("rises with r_s") {
        spec.path = "circuit.rs_ohm";
        spec.values = grid_values(30.0, 80.0, 6, false);
        const auto t = sweep_1d(base, spec);
        CHECK(t.headers == std::vector<std::string>{"circuit.rs_ohm", "f_osc_MHz", "status"});
        REQUIRE(t.rows.size() == 6);
        for (std::size_t k = 1; k < 6; ++k) CHECK(std::get<double>(t.rows[k][1]) > std::get<double>(t.rows[k - 1][1]));
        for (std::size_t k = 0; k < 6; ++k) {
            auto s = base;
            s.rs_ohm = spec.values[k];
            const double oracle = device::free_running_period(oscillator_params(s)).frequency * 1e-6;
            CHECK(std::get<double>(t.rows[k][1]) == Approx(oracle).epsilon(2e-3));
        }
    }
    SECTION("falls with l_nw") {
        spec.path = "device.lnw_nH";
        spec.values = grid_values(50.0, 100.0, 6, false);
        const auto t = sweep_1d(base, spec);
        for (std::size_t k = 1; k < 6; ++k) CHECK(std::get<double>(t.rows[k][1]) < std::get<double>(t.rows[k - 1][1]));
    }
    SECTION("failed points carry an error marker") {
        spec.path = "circuit.ibias_uA";
        spec.values = {35.0, 20.0, 40.0};
        const auto t = sweep_1d(base, spec);
        CHECK(std::get<std::string>(t.rows[0][2]) == "ok");
        CHECK(std::get<std::string>(t.rows[1][1]) == "error");
        CHECK(std::get<std::string>(t.rows[1][2]).rfind("error: ", 0) == 0);
        CHECK(std::get<std::string>(t.rows[2][2]) == "ok");
    }
    SECTION("invalid specs") {
        spec.path = "device.bogus";
        spec.values = {1.0, 2.0};
        CHECK_THROWS_AS(sweep_1d(base, spec), InvalidArgument);
        spec.path = "device.lnw_nH";
        spec.values = {1.0};
        CHECK_THROWS_AS(sweep_1d(base, spec), InvalidArgument);
    }
}

TEST_CASE("sweep output is independent of the worker count") {
    auto base = direct(6.0);
    base.tstop_ns = 300.0;
    SweepSpec spec{"injection.amp_uA", {0.0, 3.0, 6.0, 9.0, 12.0}, Metric::LockDelay};
    const auto one = csv(sweep_1d(base, spec, 1));
    const auto eight = csv(sweep_1d(base, spec, 8));
    CHECK(one == eight);
    CHECK(one.find("error: not locked") != std::string::npos);
    spec.metric = Metric::LockedAmplitude;
    CHECK(csv(sweep_1d(base, spec, 1)) == csv(sweep_1d(base, spec, 8)));
}

TEST_CASE("phase_diff metric needs a pair") {
    SweepSpec spec{"device.lnw_nH", {70.0, 72.0}, Metric::PhaseDiff};
    const auto t = sweep_1d(scenario::Scenario{}, spec);
    CHECK(std::get<std::string>(t.rows[0][2]).find("needs a pair scenario") != std::string::npos);
}

TEST_CASE("lock map") {
    scenario::Scenario base = direct(0.0);
    base.mode = InjectionMode::Coupled;
    base.amp_mV = 0.0;
    base.kind = CouplingKind::Resistive;
    const std::vector<double> coupling{1000.0, 250.0};
    const std::vector<double> freqs{380e6, 420e6, 460e6};
    SECTION("zero amplitude is all false") {
        const auto m = lock_map(base, coupling, freqs, 4);
        CHECK(m.errors.empty());
        for (std::size_t r = 0; r < 2; ++r) {
            CHECK(m.width(r) == 0);
            for (const auto& c : m.locked[r]) CHECK(c == std::optional<bool>(false));
        }
        const auto text = csv(lock_map_table(m, "res_ohm"));
        CHECK(text == "res_ohm,f380,f420,f460\n1000,0,0,0\n250,0,0,0\n");
    }
    SECTION("worker count does not change the map") {
        base.amp_mV = 1.0;
        const auto a = csv(lock_map_table(lock_map(base, coupling, freqs, 1), "res_ohm"));
        const auto b = csv(lock_map_table(lock_map(base, coupling, freqs, 8), "res_ohm"));
        CHECK(a == b);
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(lock_map(base, {100.0}, freqs), InvalidArgument);
        CHECK_THROWS_AS(lock_map(base, coupling, {420e6}), InvalidArgument);
        CHECK_THROWS_AS(lock_map(direct(6.0), coupling, freqs), InvalidArgument);
        CHECK_THROWS_AS(lock_map(base, {100.0, -1.0}, freqs), InvalidArgument);
    }
}
