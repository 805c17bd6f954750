#pragma once

// Domain types for a planning instance, input validation, and derivation of
// startup/shutdown trajectories, hourly profile aggregates, and network
// shift factors.

#include <optional>
#include <string>
#include <vector>

namespace flexplan {

enum class StartClass { Quick, Slow };

struct StartupSegment {
    int offline_hours = 1;   // offline-time threshold where this segment begins
    double cost = 0.0;       // $/start
};

struct ThermalTech {
    std::string id;
    int bus = 0;
    double pmax = 0.0;            // MW
    double pmin = 0.0;            // MW
    double ramp_up = 0.0;         // MW/min
    double ramp_down = 0.0;       // MW/min
    double su_capability = 0.0;   // MW
    double sd_capability = 0.0;   // MW
    std::vector<int> su_duration = {1};  // hours, one entry per startup segment
    int sd_duration = 1;          // hours
    int min_up = 1;               // hours
    int min_down = 1;             // hours
    std::vector<StartupSegment> startup_segments = {{1, 0.0}};
    double var_cost = 0.0;        // $/MWh
    double no_load_cost = 0.0;    // $/h
    double sd_cost = 0.0;         // $/start
    double emission_rate = 0.0;   // ton/MWh
    double co2_price = 0.0;       // $/ton
    double reserve_cost_up = 0.0;   // $/MW
    double reserve_cost_down = 0.0; // $/MW
    double invest_cost = 0.0;     // $/unit
    int initial_units = 0;
    int max_new_units = 0;
    StartClass start_class = StartClass::Quick;

    double emission_cost() const { return emission_rate * co2_price; }
    int fleet_limit() const { return initial_units + max_new_units; }
    int num_segments() const { return static_cast<int>(startup_segments.size()); }
};

struct StorageTech {
    std::string id;
    int bus = 0;
    double energy_to_power = 1.0;  // hours
    double efficiency = 1.0;       // charge efficiency, (0,1]
    double ramp_up = 0.0;          // MW/min
    double ramp_down = 0.0;        // MW/min
    double var_cost = 0.0;         // $/MWh on discharge
    double reserve_cost_up = 0.0;
    double reserve_cost_down = 0.0;
    double invest_cost = 0.0;      // $/MW
    double initial_mw = 0.0;
    double max_new_mw = 0.0;
    double initial_soc_fraction = 0.5;

    double capacity_limit() const { return initial_mw + max_new_mw; }
};

struct RenewableTech {
    std::string id;
    int bus = 0;
    double var_cost = 0.0;
    double invest_cost = 0.0;  // $/MW
    double initial_mw = 0.0;
    double max_new_mw = 0.0;
    // availability[scenario][step], p.u. in [0,1], length = horizon * steps/hour
    std::vector<std::vector<double>> availability;
};

struct Bus {
    std::string id;
    bool has_demand = false;
};

struct Line {
    std::string id;
    int from = 0;
    int to = 0;
    double limit_mw = 0.0;
    double reactance = 0.0;  // p.u.
};

struct NetworkSpec {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    int slack_bus = 0;
    // Optional precomputed shift factors, [line][bus].
    std::optional<std::vector<std::vector<double>>> shift_factors;
    double shift_factor_bound = 10.0;
};

struct Scenario {
    std::string id;
    double probability = 1.0;
    // demand[bus][step] in MW; empty vector for buses without demand.
    std::vector<std::vector<double>> demand;
    std::vector<double> reserve_up;    // MW per hour, length T
    std::vector<double> reserve_down;  // MW per hour, length T
};

struct TimeGrid {
    int hours = 24;
    int sub_step_minutes = 5;
    int steps_per_hour() const { return 60 / sub_step_minutes; }
    int num_steps() const { return hours * steps_per_hour(); }
};

/// Startup/shutdown power and energy trajectory samples of a slow unit.
struct Trajectory {
    // Per startup segment k: power samples i = 1..SU_D[k] (linear ramp to
    // pmin) and the energy trapezoids of consecutive samples (with P_0 = 0).
    std::vector<std::vector<double>> su_power;
    std::vector<std::vector<double>> su_energy;
    // Shutdown: SD_D + 1 power samples starting at pmin and ending at 0, and
    // the SD_D energy trapezoids between them.
    std::vector<double> sd_power;
    std::vector<double> sd_energy;
};

/// Hourly aggregates of one 5-minute series: boundary power (index 0..T,
/// where entry 0 repeats the first sample) and hourly mean energy (index
/// 1..T; entry 0 unused).
struct HourlyAggregate {
    std::vector<double> boundary_power;
    std::vector<double> energy;
};

struct SystemSpec {
    std::string name;
    TimeGrid grid;
    NetworkSpec network;
    std::vector<ThermalTech> thermal;
    std::vector<StorageTech> storage;
    std::vector<RenewableTech> renewable;
    std::vector<Scenario> scenarios;

    // Derived by validate_system.
    std::vector<int> quick_units;   // thermal indices with start_class quick
    std::vector<int> slow_units;
    std::vector<int> single_hour_units;  // G^1: min_up == 1
    std::vector<Trajectory> trajectories;               // per thermal (empty for quick)
    std::vector<std::vector<double>> shift_factors;     // [line][bus]
    // demand_hourly[scenario][bus], renewable_hourly[scenario][renewable]
    std::vector<std::vector<HourlyAggregate>> demand_hourly;
    std::vector<std::vector<HourlyAggregate>> renewable_hourly;
    bool validated = false;

    int num_thermal() const { return static_cast<int>(thermal.size()); }
    int num_storage() const { return static_cast<int>(storage.size()); }
    int num_renewable() const { return static_cast<int>(renewable.size()); }
    int num_tech() const { return num_thermal() + num_storage() + num_renewable(); }
    int num_buses() const { return static_cast<int>(network.buses.size()); }
    int num_lines() const { return static_cast<int>(network.lines.size()); }
    int num_scenarios() const { return static_cast<int>(scenarios.size()); }

    // Global technology index: thermal, then storage, then renewable.
    int tech_index_thermal(int g) const { return g; }
    int tech_index_storage(int s) const { return num_thermal() + s; }
    int tech_index_renewable(int v) const { return num_thermal() + num_storage() + v; }
    int bus_of_tech(int j) const;
};

struct ValidationReport {
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
    std::string joined() const;
};

/// Checks every type invariant, then populates the derived members
/// (classifications, trajectories, aggregates, shift factors). Returns the
/// full list of violations; the spec is only marked validated when empty.
ValidationReport validate_system(SystemSpec& spec);

/// Linear-ramp trajectory of a slow-start unit. Throws on nonpositive
/// durations.
Trajectory derive_trajectories(const ThermalTech& tech);

/// Boundary power and hourly mean energy of a 5-minute series. Throws on a
/// length mismatch.
HourlyAggregate aggregate_profiles(const std::vector<double>& five_min, const TimeGrid& grid);

/// Standard DC power-transfer-distribution factors, [line][bus]; the slack
/// column is zero. Throws on a disconnected network or nonpositive
/// reactances.
std::vector<std::vector<double>> compute_shift_factors(const NetworkSpec& network);

}  // namespace flexplan
