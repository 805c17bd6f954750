#pragma once

// Stage 2: per-scenario 5-minute economic dispatch LP with investments,
// commitment, reserves, and storage modes taken from stage 1 as fixed data.
// Slack variables price non-served energy and reserve shortfall, so the LP
// is feasible by construction.

#include <vector>

#include "flexplan/planning_pipeline.hpp"
#include "flexplan/system_model.hpp"

namespace flexplan {

struct DispatchOptions {
    bool soc_floor = false;          // end-of-hour SoC >= stage-1 SoC
    bool enforce_network = true;
    bool fix_storage_mode = true;
    double nse_penalty = 10000.0;    // $/MWh, also prices oversupply spill
    double reserve_shortfall_penalty = 5000.0;  // $/MW
    int max_threads = 1;
};

/// Hourly stage-1 decisions expanded onto the 5-minute grid for one
/// scenario. Trajectory output of slow starts is fixed data here.
struct ExpandedCommitment {
    // [g][step], step 0-based over hours*steps_per_hour.
    std::vector<std::vector<double>> units;
    std::vector<std::vector<double>> trajectory_mw;
    // Quick-start pre-commitment ramp envelope (power models): upper bound
    // on extra output during the hour before a start.
    std::vector<std::vector<double>> prestart_cap_mw;
    std::vector<std::vector<double>> gamma;  // [s][step]
};

ExpandedCommitment expand_commitment(const SystemSpec& spec, const Stage1Solution& sol,
                                     int scenario);

struct DispatchResult {
    int scenario = 0;
    // [asset][step] series.
    std::vector<std::vector<double>> thermal_mw;   // committed + trajectory + prestart
    std::vector<std::vector<double>> discharge_mw;
    std::vector<std::vector<double>> charge_mw;
    std::vector<std::vector<double>> soc_mwh;
    std::vector<std::vector<double>> renewable_mw;
    std::vector<double> nse_mw, spill_mw;          // per step, summed over buses
    double nse_mwh = 0.0, spill_mwh = 0.0;
    double reserve_shortfall_mw = 0.0;             // worst step
    double variable_cost = 0.0;                    // incl. emission cost
    double penalty_cost = 0.0;
    // Deviation of total thermal output vs. the stage-1 schedule.
    std::vector<double> deviation_mwh;             // per hour, 1-based
    std::vector<double> deviation_pct;             // per hour, 1-based
    std::vector<double> deviation_step_mw;         // per step
    double max_balance_residual = 0.0;
    double max_soc_residual = 0.0;
};

DispatchResult run_dispatch_scenario(const SystemSpec& spec, const Stage1Solution& sol,
                                     int scenario, const DispatchOptions& opt);

struct StageTwoResult {
    std::vector<DispatchResult> scenarios;
    // Probability-weighted aggregates.
    double dispatch_cost = 0.0;       // variable + emission + penalties
    double commitment_cost = 0.0;     // stage-1 no-load/startup/shutdown/reserve, re-added
    double operating_cost = 0.0;      // dispatch_cost + commitment_cost
    double nse_mwh = 0.0;
    double wall_seconds = 0.0;
};

/// Dispatches every scenario (in parallel when allowed) and merges by
/// scenario probability.
StageTwoResult run_dispatch(const SystemSpec& spec, const Stage1Solution& sol,
                            const DispatchOptions& opt);

/// Signed per-hour deviation series: dispatched thermal energy minus the
/// scheduled thermal quantity, in MWh and as a percentage of the schedule.
void compute_deviations(const SystemSpec& spec, const Stage1Solution& sol,
                        DispatchResult& result);

}  // namespace flexplan
