#pragma once

// Energy-based GEP-UC model: hourly energy blocks with demand balance,
// shift-factor flow limits, clustered UC, storage, and tau-minute ramp
// capability written on energy deltas. The EBs variant adds startup and
// shutdown energy trajectories for slow-start units.

#include "flexplan/formulation_common.hpp"

namespace flexplan {

struct EnergyFormulationConfig {
    ModelKind variant = ModelKind::EB;  // EB or EBs
    BuildOptions options;
};

struct BuiltModel {
    MilpModel model;
    VariableMap vars;
};

// Variables specific to the energy form: e (above-minimum energy) and chat
// (charged energy), on top of the shared families.
void create_energy_variables(FormulationContext& ctx);

// Energy demand balance (2) and transmission limits (3).
void build_system_constraints_eb(FormulationContext& ctx);

// Storage capability (7)-(8) and renewable availability (9).
void build_investment_links_eb(FormulationContext& ctx);

// Production limits (15)-(18) and total energy (19), or (20) with the
// slow-unit trajectory terms when building the EBs variant.
void build_thermal_output_eb(FormulationContext& ctx, ModelKind variant);

// Charge/discharge exclusion (21)-(22); inventory rows are shared.
void build_storage_eb(FormulationContext& ctx);

// tau-minute ramp capability on energy deltas, thermal (26)-(27) and
// storage (28)-(29).
void build_flexibility_eb(FormulationContext& ctx);

/// Full EB/EBs model per the composition table.
BuiltModel build_energy_model(const SystemSpec& spec, const EnergyFormulationConfig& config);

/// Closed-form variable/constraint counts the builder must produce.
FormulaCounts predict_counts_energy(const SystemSpec& spec, const EnergyFormulationConfig& config);

}  // namespace flexplan
