#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "flexplan/instance_io.hpp"
#include "flexplan/system_model.hpp"
#include "toys.hpp"

using namespace flexplan;

TEST_CASE("validation flags efficiency out of range with a field path") {
    toys::SystemBuilder b(4);
    b.add(toys::quick_unit());
    StorageTech s = toys::battery();
    s.efficiency = 1.2;
    b.add(s);
    b.scenario({toys::flat_profile(4, 12, 60.0)});
    ValidationReport rep = validate_system(b.spec);
    REQUIRE(!rep.ok());
    bool found = false;
    for (const auto& e : rep.errors)
        if (e.find("efficiency out of (0,1]") != std::string::npos &&
            e.find("storage[0]") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("min_up of one lands the unit in the single-hour set") {
    toys::SystemBuilder b(4);
    ThermalTech t = toys::quick_unit();
    t.min_up = 1;
    b.add(t);
    b.scenario({toys::flat_profile(4, 12, 60.0)});
    SystemSpec spec = b.build();
    REQUIRE(spec.single_hour_units.size() == 1);
    CHECK(spec.single_hour_units[0] == 0);
}

TEST_CASE("slow-start units must synchronize at minimum output") {
    toys::SystemBuilder b(4);
    ThermalTech t = toys::slow_unit();
    t.su_capability = 80.0;
    t.pmin = 100.0;
    b.add(t);
    b.scenario({toys::flat_profile(4, 12, 60.0)});
    ValidationReport rep = validate_system(b.spec);
    REQUIRE(!rep.ok());
    CHECK(rep.joined().find("slow-start requires SU_g = SD_g = P_g") != std::string::npos);
}

TEST_CASE("quick-start units cannot take multi-hour startups") {
    toys::SystemBuilder b(4);
    ThermalTech t = toys::quick_unit();
    t.su_duration = {2};
    b.add(t);
    b.scenario({toys::flat_profile(4, 12, 60.0)});
    ValidationReport rep = validate_system(b.spec);
    REQUIRE(!rep.ok());
    CHECK(rep.joined().find("SU_D <= 1") != std::string::npos);
}

TEST_CASE("validation reports every violation, not just the first") {
    toys::SystemBuilder b(4);
    ThermalTech t = toys::quick_unit();
    t.min_up = 0;
    t.pmin = -5;
    t.pmax = -10;
    b.add(t);
    StorageTech s = toys::battery();
    s.efficiency = 0.0;
    s.initial_soc_fraction = 2.0;
    b.add(s);
    b.scenario({toys::flat_profile(4, 12, 60.0)});
    ValidationReport rep = validate_system(b.spec);
    CHECK(rep.errors.size() >= 4);
}

TEST_CASE("startup trajectory is the linear ramp with trapezoid energies") {
    ThermalTech t = toys::slow_unit("gs", 300, 100, 2, 2);
    Trajectory tr = derive_trajectories(t);
    REQUIRE(tr.su_power[0].size() == 2);
    CHECK(tr.su_power[0][0] == doctest::Approx(50.0));
    CHECK(tr.su_power[0][1] == doctest::Approx(100.0));
    CHECK(tr.su_energy[0][0] == doctest::Approx(25.0));
    CHECK(tr.su_energy[0][1] == doctest::Approx(75.0));
    REQUIRE(tr.sd_power.size() == 3);
    CHECK(tr.sd_power[0] == doctest::Approx(100.0));
    CHECK(tr.sd_power[1] == doctest::Approx(50.0));
    CHECK(tr.sd_power[2] == doctest::Approx(0.0));
    CHECK(tr.sd_energy[0] == doctest::Approx(75.0));
    CHECK(tr.sd_energy[1] == doctest::Approx(25.0));
}

TEST_CASE("single-step startup ramps straight to minimum") {
    ThermalTech t = toys::slow_unit("gs", 300, 100, 1, 1);
    Trajectory tr = derive_trajectories(t);
    REQUIRE(tr.su_power[0].size() == 1);
    CHECK(tr.su_power[0][0] == doctest::Approx(100.0));
    CHECK(tr.su_energy[0][0] == doctest::Approx(50.0));
}

TEST_CASE("trajectory energies are exact trapezoids and sum to pmin*dur/2") {
    std::mt19937 rng(404);
    std::uniform_real_distribution<double> pm(20.0, 400.0);
    for (int trial = 0; trial < 20; ++trial) {
        int dur = 1 + static_cast<int>(rng() % 5);
        ThermalTech t = toys::slow_unit("gs", 500, pm(rng), dur, 1 + static_cast<int>(rng() % 4));
        Trajectory tr = derive_trajectories(t);
        double prev = 0.0, sum = 0.0;
        for (size_t i = 0; i < tr.su_power[0].size(); ++i) {
            CHECK(tr.su_energy[0][i] == doctest::Approx(0.5 * (prev + tr.su_power[0][i])));
            prev = tr.su_power[0][i];
            sum += tr.su_energy[0][i];
        }
        CHECK(sum == doctest::Approx(t.pmin * dur / 2.0));
    }
}

TEST_CASE("trajectory derivation rejects nonpositive durations") {
    ThermalTech t = toys::slow_unit();
    t.sd_duration = 0;
    CHECK_THROWS(derive_trajectories(t));
}

TEST_CASE("profile aggregation: constant, ramp, zero") {
    TimeGrid grid{1, 5};
    HourlyAggregate flat = aggregate_profiles(toys::flat_profile(1, 12, 100.0), grid);
    CHECK(flat.energy[1] == doctest::Approx(100.0));
    CHECK(flat.boundary_power[1] == doctest::Approx(100.0));
    CHECK(flat.boundary_power[0] == doctest::Approx(100.0));

    std::vector<double> ramp;
    for (int k = 1; k <= 12; ++k) ramp.push_back(10.0 * k);
    HourlyAggregate r = aggregate_profiles(ramp, grid);
    CHECK(r.boundary_power[1] == doctest::Approx(120.0));
    CHECK(r.energy[1] == doctest::Approx(65.0));

    HourlyAggregate zero = aggregate_profiles(toys::flat_profile(1, 12, 0.0), grid);
    CHECK(zero.energy[1] == doctest::Approx(0.0));
    CHECK(zero.boundary_power[1] == doctest::Approx(0.0));

    CHECK_THROWS(aggregate_profiles(std::vector<double>(7, 1.0), grid));
}

TEST_CASE("hourly mean stays within the in-hour variation of the trapezoid") {
    std::mt19937 rng(811);
    std::uniform_real_distribution<double> level(0.0, 200.0);
    TimeGrid grid{6, 5};
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> prof;
        for (int i = 0; i < grid.num_steps(); ++i) prof.push_back(level(rng));
        HourlyAggregate a = aggregate_profiles(prof, grid);
        for (int t = 1; t <= grid.hours; ++t) {
            double lo = 1e300, hi = -1e300;
            for (int k = 0; k < 12; ++k) {
                double v = prof[(t - 1) * 12 + k];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            double trap = 0.5 * (a.boundary_power[t - 1] + a.boundary_power[t]);
            CHECK(std::abs(trap - a.energy[t]) <= (hi - lo) + 1e-9);
        }
    }
}

TEST_CASE("hold-then-linear profiles make mean and trapezoid coincide") {
    TimeGrid grid{4, 5};
    std::vector<double> boundaries = {40.0, 90.0, 30.0, 120.0, 60.0};
    HourlyAggregate a = aggregate_profiles(toys::hold_then_linear(4, 12, boundaries), grid);
    for (int t = 1; t <= 4; ++t) {
        CHECK(a.boundary_power[t] == doctest::Approx(boundaries[t]));
        CHECK(a.energy[t] ==
              doctest::Approx(0.5 * (a.boundary_power[t - 1] + a.boundary_power[t])));
    }
}

TEST_CASE("two-bus shift factors: unit factor toward the slack") {
    NetworkSpec net;
    net.buses = {Bus{"slack", false}, Bus{"gen", false}};
    net.lines = {Line{"l0", 1, 0, 10.0, 0.1}};
    net.slack_bus = 0;
    auto sf = compute_shift_factors(net);
    CHECK(sf[0][1] == doctest::Approx(1.0));
    CHECK(sf[0][0] == doctest::Approx(0.0));
}

TEST_CASE("triangle network splits two thirds / one third") {
    NetworkSpec net;
    net.buses = {Bus{"b1", false}, Bus{"b2", false}, Bus{"b3", false}};
    net.lines = {Line{"direct", 1, 0, 10, 1.0}, Line{"leg1", 1, 2, 10, 1.0},
                 Line{"leg2", 2, 0, 10, 1.0}};
    net.slack_bus = 0;
    auto sf = compute_shift_factors(net);
    CHECK(sf[0][1] == doctest::Approx(2.0 / 3.0));
    CHECK(sf[1][1] == doctest::Approx(1.0 / 3.0));
    CHECK(sf[2][1] == doctest::Approx(1.0 / 3.0));
    CHECK(sf[0][0] == doctest::Approx(0.0));
}

TEST_CASE("disconnected buses are rejected") {
    NetworkSpec net;
    net.buses = {Bus{"a", false}, Bus{"b", false}, Bus{"island", false}};
    net.lines = {Line{"l0", 0, 1, 10, 0.1}};
    net.slack_bus = 0;
    CHECK_THROWS_WITH_AS(static_cast<void>(compute_shift_factors(net)),
                         doctest::Contains("disconnected"), std::invalid_argument);
}

TEST_CASE("shift-factor flows reproduce a dense DC solve") {
    std::mt19937 rng(2718);
    std::uniform_real_distribution<double> xr(0.05, 0.5);
    std::uniform_real_distribution<double> inj(-100.0, 100.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int nb = 4 + static_cast<int>(rng() % 4);
        NetworkSpec net;
        for (int b = 0; b < nb; ++b) net.buses.push_back(Bus{"b" + std::to_string(b), false});
        // Random spanning tree plus extra chords.
        for (int b = 1; b < nb; ++b) {
            int parent = static_cast<int>(rng() % b);
            net.lines.push_back(
                Line{"t" + std::to_string(b), parent, b, 100.0, xr(rng)});
        }
        for (int extra = 0; extra < nb / 2; ++extra) {
            int a = static_cast<int>(rng() % nb), b2 = static_cast<int>(rng() % nb);
            if (a == b2) continue;
            net.lines.push_back(
                Line{"c" + std::to_string(extra), a, b2, 100.0, xr(rng)});
        }
        net.slack_bus = 0;
        auto sf = compute_shift_factors(net);

        std::vector<double> injections(nb, 0.0);
        double total = 0.0;
        for (int b = 1; b < nb; ++b) {
            injections[b] = inj(rng);
            total += injections[b];
        }
        injections[0] = -total;

        // Dense DC solve: B theta = injections (slack removed).
        const int n = nb - 1;
        std::vector<std::vector<double>> B(n, std::vector<double>(n, 0.0));
        std::vector<double> rhs(n, 0.0);
        auto red = [&](int b) { return b - 1; };
        for (const Line& l : net.lines) {
            double y = 1.0 / l.reactance;
            if (l.from != 0 && l.to != 0) {
                B[red(l.from)][red(l.from)] += y;
                B[red(l.to)][red(l.to)] += y;
                B[red(l.from)][red(l.to)] -= y;
                B[red(l.to)][red(l.from)] -= y;
            } else {
                int other = l.from == 0 ? l.to : l.from;
                B[red(other)][red(other)] += y;
            }
        }
        for (int b = 1; b < nb; ++b) rhs[red(b)] = injections[b];
        // Gaussian elimination.
        std::vector<double> theta(n, 0.0);
        for (int k = 0; k < n; ++k) {
            int piv = k;
            for (int i = k + 1; i < n; ++i)
                if (std::abs(B[i][k]) > std::abs(B[piv][k])) piv = i;
            std::swap(B[piv], B[k]);
            std::swap(rhs[piv], rhs[k]);
            for (int i = k + 1; i < n; ++i) {
                double f = B[i][k] / B[k][k];
                for (int j2 = k; j2 < n; ++j2) B[i][j2] -= f * B[k][j2];
                rhs[i] -= f * rhs[k];
            }
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = rhs[i];
            for (int j2 = i + 1; j2 < n; ++j2) s -= B[i][j2] * theta[j2];
            theta[i] = s / B[i][i];
        }
        auto angle = [&](int b) { return b == 0 ? 0.0 : theta[red(b)]; };
        for (size_t l = 0; l < net.lines.size(); ++l) {
            double dc_flow =
                (angle(net.lines[l].from) - angle(net.lines[l].to)) / net.lines[l].reactance;
            double sf_flow = 0.0;
            for (int b = 0; b < nb; ++b) sf_flow += sf[l][b] * injections[b];
            CHECK(std::abs(dc_flow - sf_flow) < 1e-8 * (1.0 + std::abs(dc_flow)));
        }
    }
}

TEST_CASE("supplied shift factors are checked for slack column and bound") {
    toys::SystemBuilder b(4);
    b.add_bus("b1", false);
    b.add_line("l0", 0, 1, 10.0);
    b.add(toys::quick_unit());
    b.scenario({toys::flat_profile(4, 12, 60.0)});
    b.spec.network.shift_factors = {{0.5, 0.0}};  // nonzero at slack? no: [slack]=0.5
    ValidationReport rep = validate_system(b.spec);
    REQUIRE(!rep.ok());
    CHECK(rep.joined().find("slack-bus column") != std::string::npos);
}

TEST_CASE("csv profile reader enforces header, step order, and numbers") {
    const std::string dir = "/tmp/flexplan_io_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir + "/good.csv");
        f << "step,value\n1,10\n2,20\n";
    }
    auto vals = read_profile_csv(dir + "/good.csv");
    REQUIRE(vals.size() == 2);
    CHECK(vals[1] == doctest::Approx(20.0));
    {
        std::ofstream f(dir + "/bad_row.csv");
        f << "step,value\n1,10\n2,oops\n";
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(read_profile_csv(dir + "/bad_row.csv")),
                         doctest::Contains(":3"), InstanceError);
    {
        std::ofstream f(dir + "/bad_order.csv");
        f << "step,value\n1,10\n3,30\n";
    }
    CHECK_THROWS(static_cast<void>(read_profile_csv(dir + "/bad_order.csv")));
}

TEST_CASE("instance loader round-trips a small instance") {
    const std::string dir = "/tmp/flexplan_io_inst";
    std::filesystem::create_directories(dir + "/profiles");
    {
        std::ofstream f(dir + "/profiles/demand.csv");
        f << "step,value\n";
        for (int i = 1; i <= 48; ++i) f << i << "," << 50.0 + i << "\n";
        std::ofstream g(dir + "/profiles/windcf.csv");
        g << "step,value\n";
        for (int i = 1; i <= 48; ++i) g << i << "," << 0.5 << "\n";
    }
    {
        std::ofstream f(dir + "/instance.json");
        f << R"({
  "name": "io-toy",
  "horizon_hours": 4,
  "sub_step_minutes": 5,
  "buses": [{"id": "hub", "demand": true}, {"id": "far"}],
  "slack_bus": "hub",
  "lines": [{"id": "l0", "from": "hub", "to": "far", "limit_mw": 80, "reactance": 0.1}],
  "thermal": [{
    "id": "gas", "bus": "hub", "pmax": 150, "pmin": 40,
    "ramp_up": 2, "ramp_down": 2, "min_up": 1, "min_down": 1,
    "startup_segments": [{"offline_hours": 1, "cost": 300}],
    "var_cost": 35, "invest_cost": 20000, "max_new_units": 2,
    "start_class": "quick"
  }],
  "storage": [{
    "id": "bat", "bus": "far", "energy_to_power": 2, "efficiency": 0.9,
    "ramp_up": 3, "ramp_down": 3, "invest_cost": 11000, "max_new_mw": 60
  }],
  "renewable": [{
    "id": "wind", "bus": "far", "invest_cost": 8000, "max_new_mw": 90,
    "profiles": {"w0": "profiles/windcf.csv"}
  }],
  "scenarios": [{
    "id": "w0", "probability": 1.0,
    "demand_profiles": {"hub": "profiles/demand.csv"},
    "reserve_up": 10, "reserve_down": [5, 5, 5, 5]
  }]
})";
    }
    SystemSpec spec = load_instance(dir);
    ValidationReport rep = validate_system(spec);
    REQUIRE(rep.ok());
    CHECK(spec.grid.hours == 4);
    CHECK(spec.num_buses() == 2);
    CHECK(spec.num_lines() == 1);
    CHECK(spec.num_tech() == 3);
    CHECK(spec.num_scenarios() == 1);
    CHECK(spec.scenarios[0].reserve_up[2] == doctest::Approx(10.0));
    CHECK(spec.scenarios[0].reserve_down[2] == doctest::Approx(5.0));
    CHECK(spec.thermal[0].bus == 0);
    CHECK(spec.renewable[0].availability[0].size() == 48);

    SUBCASE("missing keys carry context") {
        std::ofstream f(dir + "/instance.json", std::ios::trunc);
        f << R"({"horizon_hours": 4, "buses": [{"id": "hub"}],
                 "scenarios": [{"id": "w0", "demand_profiles": {}}]})";
        f.close();
        CHECK_THROWS_WITH_AS(static_cast<void>(load_instance(dir)),
                             doctest::Contains("probability"), InstanceError);
    }
}

TEST_CASE("empty scenario set is a validation error") {
    toys::SystemBuilder b(4);
    b.add(toys::quick_unit());
    ValidationReport rep = validate_system(b.spec);
    REQUIRE(!rep.ok());
    CHECK(rep.joined().find("no scenarios") != std::string::npos);
}
