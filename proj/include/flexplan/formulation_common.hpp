#pragma once

// Shared formulation machinery: model kinds, build options, variable
// creation, and the constraint families common to the energy- and
// power-based models (reserve requirements, thermal investment link, unit
// commitment logic, storage inventory).

#include <string>
#include <vector>

#include "flexplan/milp_core.hpp"
#include "flexplan/system_model.hpp"

namespace flexplan {

enum class ModelKind { EB, EBs, PB, SRPB };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct BuildOptions {
    double tau_minutes = 5.0;
    bool include_network = true;
    bool integer_storage_investment = false;
    /// End-of-horizon storage policy: phi_T >= initial SoC per scenario.
    bool terminal_soc_floor = true;
};

/// Mutable build state threaded through the emitters.
struct FormulationContext {
    const SystemSpec& spec;
    BuildOptions opt;
    MilpModel model;
    VariableMap vars;

    int col(std::string sym, std::vector<int> idx) const {
        return vars.column(VarKey{std::move(sym), std::move(idx)});
    }
    int make(std::string sym, std::vector<int> idx, double lb, double ub, VarKind kind,
             double obj = 0.0) {
        VarKey key{std::move(sym), std::move(idx)};
        int c = model.add_variable(VariableMap::variable_name(key), lb, ub, kind, obj);
        vars.bind(std::move(key), c);
        return c;
    }
};

/// Row-name helper: base_w{w}_g{j}_t{t} style tags.
std::string rname(const std::string& base, std::initializer_list<int> idx);

// Variable families shared by every model: x (investment), u/y/z/delta
// (commitment), gamma (storage mode), r+/r- (reserves), phi (storage level),
// ehat (energy output, all technologies).
void create_shared_variables(FormulationContext& ctx);

// Objective coefficients of Eq. (1)/(30): investment plus probability-
// weighted variable, emission, reserve, no-load, shutdown, and startup costs.
void build_objective_coeffs(FormulationContext& ctx);

// Reserve requirements (4)-(5); thermal and storage technologies provide.
void build_reserve_requirements(FormulationContext& ctx);

// Thermal commitment/investment link (6).
void build_thermal_investment_link(FormulationContext& ctx);

// Commitment logic (10), minimum up/down times (11)-(12), startup-type
// windows (13) and selection (14).
void build_uc_logic(FormulationContext& ctx);

// Storage inventory (23) with charge efficiency, SoC bounds with the
// two-hour reserve sustain windows (24)-(25), and the optional terminal
// SoC policy row.
void build_storage_inventory(FormulationContext& ctx);

/// Branch priorities by symbol class: investments first, then commitment
/// counts, storage modes, startup types, start/stop counters.
std::vector<int> branch_priorities(const MilpModel& model, const VariableMap& vars);

struct FormulaCounts {
    long variables = 0;
    long constraints = 0;
};

}  // namespace flexplan
