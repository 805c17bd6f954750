#pragma once

// Stage-1 orchestration: build the requested model, solve, extract the
// decision bundle; the semi-relaxed scheme solves investments against a
// continuous UC first, then re-solves integer UC with investments fixed.
// extract_fixing_plan produces the assignments stage 2 pins down.

#include <string>
#include <vector>

#include "flexplan/formulation_energy.hpp"
#include "flexplan/formulation_power.hpp"
#include "flexplan/solver.hpp"
#include "flexplan/system_model.hpp"

namespace flexplan {

class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PipelineOptions {
    BuildOptions build;
    double gap = 1e-3;
    double time_limit_s = 1e18;
    uint64_t seed = 0;
    /// Stage 2 keeps the stage-1 charge/discharge mode; clearing this frees
    /// gamma for redispatch experiments.
    bool fix_storage_mode = true;
};

struct ObjectiveBreakdown {
    double invest_thermal = 0.0;
    double invest_ess = 0.0;
    double invest_vres = 0.0;
    double operating = 0.0;
    double total() const { return invest_thermal + invest_ess + invest_vres + operating; }
};

// t-indexed vectors below are 1-based with slot 0 unused.
using Series3 = std::vector<std::vector<std::vector<double>>>;   // [w][asset][t]
using Series4 = std::vector<std::vector<std::vector<std::vector<double>>>>;

struct Stage1Solution {
    ModelKind kind = ModelKind::PB;
    BuildOptions build;
    std::vector<double> investments;  // per global tech index
    Series3 u, y, z;                  // [w][g][t], thermal cluster counts
    Series4 delta;                    // [w][g][k][t]
    Series3 gamma;                    // [w][s][t]
    Series3 rup, rdn;                 // [w][j][t], zero rows for vRES
    Series3 ehat;                     // [w][j][t]
    Series3 chat;                     // [w][s][t]
    Series3 phat;                     // [w][j][t], power models only
    Series3 charge_power;             // [w][s][t], power models only
    Series3 phi;                      // [w][s][t]
    ObjectiveBreakdown breakdown;
    SolveResult stats;
    double stage1a_objective = 0.0;   // semi-relaxed runs only
    bool has_stage1a = false;

    double installed_mw(const SystemSpec& spec, int j) const;
};

/// Builds per the composition table, solves to the gap, extracts and checks
/// the solution (commitment logic residuals, startup-type totals, objective
/// decomposition, and the fixing-plan round-trip). Throws PipelineError on
/// infeasible/unbounded instances with the solver's witness rows.
Stage1Solution run_stage1(const SystemSpec& spec, ModelKind kind, const PipelineOptions& opt);

/// Stage 1a: power-based model with continuous UC and integer investments;
/// stage 1b: integer UC under the fixed investments. Returns the stage-1b
/// solution tagged with both objectives.
Stage1Solution run_stage1_semirelaxed(const SystemSpec& spec, const PipelineOptions& opt);

/// Assignments for stage 2: investments, commitment path, startup types,
/// storage modes, and both reserves. Dispatch quantities and the storage
/// level stay free.
std::vector<FixAssignment> extract_fixing_plan(const Stage1Solution& sol,
                                               const SystemSpec& spec);

/// The stage-1 model for a kind (PB for SR-PB).
BuiltModel build_stage1_model(const SystemSpec& spec, ModelKind kind, const BuildOptions& opt);

}  // namespace flexplan
