#pragma once

// Power-based GEP-UC model: instantaneous powers at hour boundaries,
// trapezoidal calculated energy, quick/slow startup and shutdown power
// trajectories, and reserve deliverability at tau minutes and hour end.

#include "flexplan/formulation_common.hpp"
#include "flexplan/formulation_energy.hpp"  // BuiltModel

namespace flexplan {

struct PowerFormulationConfig {
    BuildOptions options;
};

// Power-form variables: p (above minimum), phat (total boundary power),
// c (charged power) and chat (charged energy via the coupling rows).
void create_power_variables(FormulationContext& ctx);

// Calculated energy (31) and charged energy (32).
void build_energy_coupling(FormulationContext& ctx);

// Instantaneous power balance (33) and flow limits (34).
void build_system_constraints_pb(FormulationContext& ctx);

// Storage power capability (35)-(36) and renewable boundary power (37).
void build_investment_links_pb(FormulationContext& ctx);

// Power limits (38)-(39) and total output (40) quick / (41) slow with the
// trajectory samples.
void build_thermal_output_pb(FormulationContext& ctx);

// Mode exclusion on powers (42)-(43); inventory rows are shared.
void build_storage_pb(FormulationContext& ctx);

// tau-minute ramp (44)-(45), within-hour capacity (46)-(47), and the
// storage analogues (48)-(51).
void build_flexibility_pb(FormulationContext& ctx);

/// Full PB model per the composition table (also the SR-PB stage model).
BuiltModel build_power_model(const SystemSpec& spec, const PowerFormulationConfig& config);

FormulaCounts predict_counts_power(const SystemSpec& spec, const PowerFormulationConfig& config);

}  // namespace flexplan
