#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "flexplan/formulation_energy.hpp"
#include "flexplan/formulation_power.hpp"
#include "flexplan/lp_io.hpp"
#include "flexplan/solver.hpp"
#include "oracles.hpp"
#include "toys.hpp"

using namespace flexplan;

namespace {

SolveOptions tight_gap() {
    SolveOptions o;
    o.gap = 1e-9;
    return o;
}

SystemSpec one_unit_system(const ThermalTech& unit, int T, double demand_mw, double rup = 0.0,
                           double rdn = 0.0) {
    toys::SystemBuilder b(T);
    b.add(unit);
    b.scenario({toys::flat_profile(T, 12, demand_mw)}, rup, rdn);
    return b.build();
}

// Commitment-polytope harness for the tightness checks: single unit with a
// fleet of one, only the UC logic plus the thermal output family, random
// costs on the discrete path and the dispatch variable.
struct TightnessDraw {
    double lp_obj = 0.0;
    double mip_obj = 0.0;
    bool ok = false;
};

TightnessDraw tightness_trial(bool power_based, bool slow, std::mt19937& rng) {
    std::uniform_int_distribution<int> updn(1, 3);
    std::uniform_real_distribution<double> cost(-1.0, 1.0);
    std::uniform_real_distribution<double> level(0.0, 1.0);

    ThermalTech unit = slow ? toys::slow_unit("g", 300, 100, 2, 2) : toys::quick_unit("g", 300, 80);
    unit.min_up = updn(rng);
    unit.min_down = updn(rng);
    if (!slow) {
        // Random SU/SD capabilities between pmin and pmax.
        unit.su_capability = unit.pmin + level(rng) * (unit.pmax - unit.pmin);
        unit.sd_capability = unit.pmin + level(rng) * (unit.pmax - unit.pmin);
    }
    unit.initial_units = 1;
    unit.max_new_units = 0;

    const int T = 6;
    toys::SystemBuilder b(T);
    b.add(unit);
    b.scenario({toys::flat_profile(T, 12, 0.0)});
    SystemSpec spec = b.build();

    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    if (power_based)
        create_power_variables(ctx);
    else
        create_energy_variables(ctx);
    build_uc_logic(ctx);
    if (power_based)
        build_thermal_output_pb(ctx);
    else
        build_thermal_output_eb(ctx, ModelKind::EB);

    for (int t = 1; t <= T; ++t) {
        ctx.model.set_objective_coeff(ctx.col("u", {0, 0, t}), cost(rng));
        ctx.model.set_objective_coeff(ctx.col("y", {0, 0, t}), cost(rng));
        ctx.model.set_objective_coeff(ctx.col("z", {0, 0, t}), cost(rng));
        ctx.model.set_objective_coeff(ctx.col(power_based ? "p" : "e", {0, 0, t}),
                                      cost(rng) * 0.01);
    }

    TightnessDraw out;
    SolveResult mip = solve(ctx.model, tight_gap());
    if (mip.status != SolveStatus::OptimalWithinGap) return out;
    MilpModel relaxed = relax_integrality(ctx.model, ctx.vars, {"u", "y", "z", "delta"});
    SolveResult lp = solve(relaxed, tight_gap());
    if (lp.status != SolveStatus::OptimalWithinGap) return out;
    out.lp_obj = lp.objective;
    out.mip_obj = mip.objective;
    out.ok = true;
    return out;
}

}  // namespace

TEST_CASE("variable and constraint counts match the closed-form formulas") {
    std::vector<SystemSpec> specs;
    {
        toys::SystemBuilder b(4);
        b.add(toys::quick_unit());
        b.scenario({toys::flat_profile(4, 12, 80.0)});
        specs.push_back(b.build());
    }
    {
        toys::SystemBuilder b(6);
        b.add_bus("b1", false);
        b.add_line("l0", 0, 1, 50.0);
        ThermalTech slow = toys::slow_unit();
        slow.startup_segments = {{2, 700.0}, {5, 1400.0}};
        slow.su_duration = {1, 2};
        b.add(toys::quick_unit());
        b.add(slow);
        b.add(toys::battery());
        b.add(toys::wind(6, 12, toys::flat_profile(6, 12, 0.4)));
        b.scenario({toys::flat_profile(6, 12, 120.0)}, 10.0, 8.0);
        specs.push_back(b.build());
    }
    {
        toys::SystemBuilder b(8);
        b.add(toys::quick_unit("g0"));
        b.add(toys::quick_unit("g1", 120, 30));
        b.add(toys::battery());
        b.scenario({toys::flat_profile(8, 12, 90.0)}, 5.0, 5.0, 0.5, "wa");
        b.scenario({toys::flat_profile(8, 12, 140.0)}, 5.0, 5.0, 0.5, "wb");
        specs.push_back(b.build());
    }
    for (const SystemSpec& spec : specs) {
        for (ModelKind variant : {ModelKind::EB, ModelKind::EBs}) {
            if (variant == ModelKind::EBs && spec.slow_units.empty()) continue;
            EnergyFormulationConfig cfg;
            cfg.variant = variant;
            BuiltModel built = build_energy_model(spec, cfg);
            FormulaCounts want = predict_counts_energy(spec, cfg);
            CHECK(built.model.num_variables() == want.variables);
            CHECK(built.model.num_constraints() == want.constraints);
        }
        PowerFormulationConfig pcfg;
        BuiltModel built = build_power_model(spec, pcfg);
        FormulaCounts want = predict_counts_power(spec, pcfg);
        CHECK(built.model.num_variables() == want.variables);
        CHECK(built.model.num_constraints() == want.constraints);
    }
}

TEST_CASE("two builds of the same spec export identical bytes") {
    toys::SystemBuilder b(5);
    b.add(toys::quick_unit());
    b.add(toys::battery());
    b.scenario({toys::flat_profile(5, 12, 70.0)}, 4.0, 4.0);
    SystemSpec spec = b.build();
    EnergyFormulationConfig cfg;
    BuiltModel m1 = build_energy_model(spec, cfg);
    BuiltModel m2 = build_energy_model(spec, cfg);
    CHECK(write_lp(m1.model) == write_lp(m2.model));
    PowerFormulationConfig pcfg;
    CHECK(write_lp(build_power_model(spec, pcfg).model) ==
          write_lp(build_power_model(spec, pcfg).model));
}

TEST_CASE("EB: single asset covers the hourly energy balance exactly") {
    SystemSpec spec = one_unit_system(toys::quick_unit("g", 200, 50), 4, 100.0);
    EnergyFormulationConfig cfg;
    BuiltModel built = build_energy_model(spec, cfg);
    SolveResult r = solve(built.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    for (int t = 1; t <= 4; ++t)
        CHECK(r.values[built.vars.column({"ehat", {0, 0, t}})] == doctest::Approx(100.0));
    CHECK(oracles::model_residual(built.model, r.values) < 1e-7);
}

TEST_CASE("EB: reserve requirement above any buildable headroom is infeasible") {
    ThermalTech unit = toys::quick_unit("g", 90, 50);  // headroom 40 per unit
    unit.max_new_units = 1;
    unit.ramp_up = 20.0;  // ample tau-ramp so the capacity bound is what binds
    unit.ramp_down = 20.0;
    SystemSpec spec = one_unit_system(unit, 3, 60.0, 50.0, 0.0);
    EnergyFormulationConfig cfg;
    BuiltModel built = build_energy_model(spec, cfg);
    SolveResult r = solve(built.model);
    CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("EB: congested line forces the local unit to cover the remainder") {
    // Cheap unit at the slack bus, expensive unit at a demand pocket behind
    // a 10 MW line; pocket demand 15 MW.
    toys::SystemBuilder b(3);
    b.spec.network.buses[0].has_demand = false;
    b.add_bus("pocket", true);
    b.add_line("tie", 0, 1, 10.0);
    ThermalTech cheap = toys::quick_unit("cheap", 100, 0);
    cheap.ramp_up = cheap.ramp_down = 50.0;
    cheap.var_cost = 5.0;
    cheap.su_capability = 100.0;
    cheap.sd_capability = 100.0;
    cheap.invest_cost = 100.0;
    cheap.no_load_cost = 1.0;
    cheap.startup_segments = {{1, 10.0}};
    ThermalTech dear = toys::quick_unit("dear", 100, 0);
    dear.bus = 1;
    dear.ramp_up = dear.ramp_down = 50.0;
    dear.var_cost = 50.0;
    dear.su_capability = 100.0;
    dear.sd_capability = 100.0;
    dear.invest_cost = 100.0;
    dear.no_load_cost = 1.0;
    dear.startup_segments = {{1, 10.0}};
    b.add(cheap);
    b.add(dear);
    b.scenario({{}, toys::flat_profile(3, 12, 15.0)});
    SystemSpec spec = b.build();
    EnergyFormulationConfig cfg;
    BuiltModel built = build_energy_model(spec, cfg);
    SolveResult r = solve(built.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(r.values[built.vars.column({"ehat", {0, 0, 2}})] == doctest::Approx(10.0));
    CHECK(r.values[built.vars.column({"ehat", {0, 1, 2}})] == doctest::Approx(5.0));
}

TEST_CASE("UC logic: commitment steps produce the matching start counter") {
    ThermalTech unit = toys::quick_unit();
    unit.max_new_units = 2;
    SystemSpec spec = one_unit_system(unit, 5, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_energy_variables(ctx);
    build_uc_logic(ctx);
    // u: 0 0 1 1 0 -> y_3 = 1, z_3 = 0, z_5 = 1.
    std::vector<int> path = {0, 0, 1, 1, 0};
    for (int t = 1; t <= 5; ++t) {
        int c = ctx.col("u", {0, 0, t});
        ctx.model.set_bounds(c, path[t - 1], path[t - 1]);
        ctx.model.set_objective_coeff(ctx.col("y", {0, 0, t}), 1.0);
        ctx.model.set_objective_coeff(ctx.col("z", {0, 0, t}), 1.0);
    }
    SolveResult r = solve(ctx.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(r.values[ctx.col("y", {0, 0, 3})] == doctest::Approx(1.0));
    CHECK(r.values[ctx.col("z", {0, 0, 3})] == doctest::Approx(0.0));
    CHECK(r.values[ctx.col("z", {0, 0, 5})] == doctest::Approx(1.0));
}

TEST_CASE("UC logic: a start pins the unit up for its minimum up time") {
    ThermalTech unit = toys::quick_unit();
    unit.min_up = 3;
    unit.initial_units = 1;
    unit.max_new_units = 0;
    SystemSpec spec = one_unit_system(unit, 5, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_energy_variables(ctx);
    build_uc_logic(ctx);
    int y2 = ctx.col("y", {0, 0, 2});
    ctx.model.set_bounds(y2, 1.0, 1.0);
    for (int t = 1; t <= 5; ++t) ctx.model.set_objective_coeff(ctx.col("u", {0, 0, t}), 1.0);
    SolveResult r = solve(ctx.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    for (int t = 2; t <= 4; ++t)
        CHECK(r.values[ctx.col("u", {0, 0, t})] == doctest::Approx(1.0));
    CHECK(r.values[ctx.col("u", {0, 0, 5})] == doctest::Approx(0.0));
}

TEST_CASE("startup segments: after five hours down only the coldest applies") {
    ThermalTech unit = toys::quick_unit();
    unit.min_up = 1;
    unit.min_down = 1;
    unit.initial_units = 1;
    unit.max_new_units = 0;
    unit.startup_segments = {{2, 500.0}, {4, 1500.0}};
    unit.su_duration = {1, 1};
    SystemSpec spec = one_unit_system(unit, 8, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_energy_variables(ctx);
    build_uc_logic(ctx);
    // Commit hour 1, down hours 2..6 (5 hours), restart hour 7.
    std::vector<int> path = {1, 0, 0, 0, 0, 0, 1, 1};
    for (int t = 1; t <= 8; ++t)
        ctx.model.set_bounds(ctx.col("u", {0, 0, t}), path[t - 1], path[t - 1]);
    // Prefer the hot segment if the window allowed it.
    ctx.model.set_objective_coeff(ctx.col("delta", {0, 0, 0, 7}), 1.0);
    ctx.model.set_objective_coeff(ctx.col("delta", {0, 0, 1, 7}), 2.0);
    SolveResult r = solve(ctx.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(r.values[ctx.col("delta", {0, 0, 0, 7})] == doctest::Approx(0.0));
    CHECK(r.values[ctx.col("delta", {0, 0, 1, 7})] == doctest::Approx(1.0));

    // Down exactly 2..3 hours admits the hot segment.
    // (restart at hour 5 after stopping at hour 2: down 3 hours)
    for (int t = 1; t <= 8; ++t) {
        int v = (t == 1 || t >= 5) ? 1 : 0;
        ctx.model.set_bounds(ctx.col("u", {0, 0, t}), v, v);
    }
    SolveResult r2 = solve(ctx.model, tight_gap());
    REQUIRE(r2.status == SolveStatus::OptimalWithinGap);
    CHECK(r2.values[ctx.col("delta", {0, 0, 0, 5})] == doctest::Approx(1.0));
}

TEST_CASE("EB single-hour units: start-and-stop hour capped by min(SU,SD)") {
    ThermalTech unit = toys::quick_unit("g", 300, 80);
    unit.min_up = 1;
    unit.min_down = 1;
    unit.su_capability = 120.0;
    unit.sd_capability = 150.0;
    unit.initial_units = 1;
    unit.max_new_units = 0;
    SystemSpec spec = one_unit_system(unit, 3, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_energy_variables(ctx);
    build_uc_logic(ctx);
    build_thermal_output_eb(ctx, ModelKind::EB);
    // On only in hour 2.
    std::vector<int> path = {0, 1, 0};
    for (int t = 1; t <= 3; ++t)
        ctx.model.set_bounds(ctx.col("u", {0, 0, t}), path[t - 1], path[t - 1]);
    ctx.model.set_objective_coeff(ctx.col("e", {0, 0, 2}), -1.0);
    SolveResult r = solve(ctx.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(r.values[ctx.col("e", {0, 0, 2})] ==
          doctest::Approx(std::min(unit.su_capability, unit.sd_capability) - unit.pmin));
}

TEST_CASE("EBs: pre-synchronization hours carry the trajectory energy") {
    ThermalTech unit = toys::slow_unit("g", 300, 100, 2, 2);
    unit.initial_units = 1;
    unit.max_new_units = 0;
    SystemSpec spec = one_unit_system(unit, 6, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_energy_variables(ctx);
    build_uc_logic(ctx);
    build_thermal_output_eb(ctx, ModelKind::EBs);
    // Commit hours 3..6 (start at 3).
    std::vector<int> path = {0, 0, 1, 1, 1, 1};
    for (int t = 1; t <= 6; ++t)
        ctx.model.set_bounds(ctx.col("u", {0, 0, t}), path[t - 1], path[t - 1]);
    for (int t = 1; t <= 6; ++t) ctx.model.set_objective_coeff(ctx.col("e", {0, 0, t}), 1.0);
    SolveResult r = solve(ctx.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(r.values[ctx.col("ehat", {0, 0, 1})] == doctest::Approx(25.0));
    CHECK(r.values[ctx.col("ehat", {0, 0, 2})] == doctest::Approx(75.0));
    CHECK(r.values[ctx.col("ehat", {0, 0, 3})] == doctest::Approx(100.0));
}

TEST_CASE("EB storage: mode flag, inventory arithmetic, and reserve floors") {
    StorageTech st = toys::battery("s", 100.0);
    st.initial_mw = 50.0;
    st.max_new_mw = 0.0;
    st.efficiency = 0.9;
    toys::SystemBuilder b(3);
    b.add(st);
    b.scenario({toys::flat_profile(3, 12, 0.0)});
    SystemSpec spec = b.build();
    BuildOptions opt;
    opt.terminal_soc_floor = false;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_energy_variables(ctx);
    build_storage_eb(ctx);
    const int j = spec.tech_index_storage(0);

    SUBCASE("charging is blocked while discharging mode is set") {
        ctx.model.set_bounds(ctx.col("gamma", {0, j, 2}), 1.0, 1.0);
        ctx.model.set_objective_coeff(ctx.col("chat", {0, j, 2}), -1.0);
        SolveResult r = solve(ctx.model, tight_gap());
        REQUIRE(r.status == SolveStatus::OptimalWithinGap);
        CHECK(r.values[ctx.col("chat", {0, j, 2})] == doctest::Approx(0.0));
    }
    SUBCASE("inventory follows phi_t = phi_{t-1} + eta c - e") {
        // Initial SoC = 0.5 * 2h * 50 MW = 50 MWh; charge 10 in hour 1.
        ctx.model.set_bounds(ctx.col("chat", {0, j, 1}), 10.0, 10.0);
        ctx.model.set_bounds(ctx.col("ehat", {0, j, 1}), 0.0, 0.0);
        ctx.model.set_bounds(ctx.col("gamma", {0, j, 1}), 0.0, 0.0);
        SolveResult r = solve(ctx.model, tight_gap());
        REQUIRE(r.status == SolveStatus::OptimalWithinGap);
        CHECK(r.values[ctx.col("phi", {0, j, 1})] == doctest::Approx(50.0 + 0.9 * 10.0));
    }
    SUBCASE("empty storage cannot sustain up-reserve") {
        ctx.model.set_bounds(ctx.col("phi", {0, j, 2}), 0.0, 0.0);
        ctx.model.set_objective_coeff(ctx.col("rup", {0, j, 1}), -1.0);
        ctx.model.set_objective_coeff(ctx.col("rup", {0, j, 2}), -1.0);
        SolveResult r = solve(ctx.model, tight_gap());
        REQUIRE(r.status == SolveStatus::OptimalWithinGap);
        CHECK(r.values[ctx.col("rup", {0, j, 1})] == doctest::Approx(0.0));
        CHECK(r.values[ctx.col("rup", {0, j, 2})] == doctest::Approx(0.0));
    }
}

TEST_CASE("EB flexibility: ramp rows carry tau*RU coefficients") {
    ThermalTech unit = toys::quick_unit();
    unit.ramp_up = 1.0;
    SystemSpec spec = one_unit_system(unit, 2, 0.0);
    EnergyFormulationConfig cfg;
    cfg.options.tau_minutes = 5.0;
    BuiltModel built = build_energy_model(spec, cfg);
    bool found = false;
    for (int i = 0; i < built.model.num_constraints(); ++i) {
        const MilpConstraint& c = built.model.constraint(i);
        if (c.name == "eq26_0_0_2") {
            found = true;
            double ucoef = 0.0;
            for (auto& [col, v] : c.terms)
                if (col == built.vars.column({"u", {0, 0, 2}})) ucoef = v;
            CHECK(ucoef == doctest::Approx(-5.0));
        }
    }
    CHECK(found);
}

TEST_CASE("PB: trapezoid coupling ties energies to boundary powers") {
    ThermalTech unit = toys::quick_unit("g", 250, 40);
    unit.ramp_up = unit.ramp_down = 10.0;
    toys::SystemBuilder b(4);
    b.add(unit);
    std::vector<double> boundaries = {60.0, 110.0, 90.0, 130.0, 70.0};
    b.scenario({toys::hold_then_linear(4, 12, boundaries)});
    SystemSpec spec = b.build();
    PowerFormulationConfig cfg;
    BuiltModel built = build_power_model(spec, cfg);
    SolveResult r = solve(built.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(oracles::trapezoid_coupling_residual(spec, built.vars, r.values) < 1e-9);
    // Boundary powers track the demand boundaries.
    for (int t = 1; t <= 4; ++t)
        CHECK(r.values[built.vars.column({"phat", {0, 0, t}})] ==
              doctest::Approx(boundaries[t]));
    CHECK(oracles::reserve_deliverability_residual(spec, built.vars, r.values, 5.0) < 1e-6);
}

TEST_CASE("PB: quick start synchronizes at its startup capability") {
    ThermalTech unit = toys::quick_unit("g", 300, 80);
    unit.su_capability = 140.0;
    unit.initial_units = 1;
    unit.max_new_units = 0;
    SystemSpec spec = one_unit_system(unit, 3, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_power_variables(ctx);
    build_uc_logic(ctx);
    build_thermal_output_pb(ctx);
    // Start at hour 3: boundary 2 may already carry up to SU.
    std::vector<int> path = {0, 0, 1};
    for (int t = 1; t <= 3; ++t)
        ctx.model.set_bounds(ctx.col("u", {0, 0, t}), path[t - 1], path[t - 1]);
    SolveResult lo = solve(ctx.model, tight_gap());
    REQUIRE(lo.status == SolveStatus::OptimalWithinGap);
    CHECK(lo.values[ctx.col("phat", {0, 0, 2})] == doctest::Approx(unit.pmin));
    ctx.model.set_objective_coeff(ctx.col("phat", {0, 0, 2}), -1.0);
    SolveResult hi = solve(ctx.model, tight_gap());
    REQUIRE(hi.status == SolveStatus::OptimalWithinGap);
    CHECK(hi.values[ctx.col("phat", {0, 0, 2})] == doctest::Approx(unit.su_capability));
}

TEST_CASE("PB: slow start walks the boundary-power ramp before commitment") {
    ThermalTech unit = toys::slow_unit("g", 300, 100, 2, 2);
    unit.initial_units = 1;
    unit.max_new_units = 0;
    SystemSpec spec = one_unit_system(unit, 8, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_power_variables(ctx);
    build_uc_logic(ctx);
    build_thermal_output_pb(ctx);
    // Commit hours 5..8; startup trajectory boundaries: t'-3 = 2 at 50,
    // t'-2 = 3 at 100, t'-1 = 4 at 100 via the y term.
    std::vector<int> path = {0, 0, 0, 0, 1, 1, 1, 1};
    for (int t = 1; t <= 8; ++t)
        ctx.model.set_bounds(ctx.col("u", {0, 0, t}), path[t - 1], path[t - 1]);
    SolveResult r = solve(ctx.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(r.values[ctx.col("phat", {0, 0, 1})] == doctest::Approx(0.0));
    CHECK(r.values[ctx.col("phat", {0, 0, 2})] == doctest::Approx(50.0));
    CHECK(r.values[ctx.col("phat", {0, 0, 3})] == doctest::Approx(100.0));
    CHECK(r.values[ctx.col("phat", {0, 0, 4})] == doctest::Approx(100.0));
}

TEST_CASE("PB: steady committed unit ranges between pmin and pmax") {
    ThermalTech unit = toys::quick_unit("g", 300, 100);
    unit.initial_units = 1;
    unit.max_new_units = 0;
    SystemSpec spec = one_unit_system(unit, 3, 0.0);
    BuildOptions opt;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_power_variables(ctx);
    build_uc_logic(ctx);
    build_thermal_output_pb(ctx);
    for (int t = 1; t <= 3; ++t) ctx.model.set_bounds(ctx.col("u", {0, 0, t}), 1.0, 1.0);
    ctx.model.set_objective_coeff(ctx.col("phat", {0, 0, 2}), 1.0);
    SolveResult lo = solve(ctx.model, tight_gap());
    REQUIRE(lo.status == SolveStatus::OptimalWithinGap);
    CHECK(lo.values[ctx.col("phat", {0, 0, 2})] == doctest::Approx(100.0));
    ctx.model.set_objective_coeff(ctx.col("phat", {0, 0, 2}), -1.0);
    SolveResult hi = solve(ctx.model, tight_gap());
    CHECK(hi.values[ctx.col("phat", {0, 0, 2})] == doctest::Approx(300.0));
}

TEST_CASE("PB storage: discharge boundary power needs the mode flag") {
    StorageTech st = toys::battery("s", 80.0);
    st.initial_mw = 40.0;
    st.max_new_mw = 40.0;
    toys::SystemBuilder b(3);
    b.add(st);
    b.scenario({toys::flat_profile(3, 12, 0.0)});
    SystemSpec spec = b.build();
    BuildOptions opt;
    opt.terminal_soc_floor = false;
    FormulationContext ctx{spec, opt, {}, {}};
    create_shared_variables(ctx);
    create_power_variables(ctx);
    build_energy_coupling(ctx);
    build_storage_pb(ctx);
    const int j = spec.tech_index_storage(0);
    ctx.model.set_bounds(ctx.col("gamma", {0, j, 2}), 0.0, 0.0);
    ctx.model.set_objective_coeff(ctx.col("phat", {0, j, 2}), -1.0);
    SolveResult r = solve(ctx.model, tight_gap());
    REQUIRE(r.status == SolveStatus::OptimalWithinGap);
    CHECK(r.values[ctx.col("phat", {0, j, 2})] == doctest::Approx(0.0));
}

TEST_CASE("PB flexibility: ramp and within-hour capacity rows") {
    ThermalTech unit = toys::quick_unit();
    unit.ramp_up = 1.0;
    SystemSpec spec = one_unit_system(unit, 2, 0.0);
    PowerFormulationConfig cfg;
    cfg.options.tau_minutes = 5.0;
    BuiltModel built = build_power_model(spec, cfg);
    double ucoef44 = 0.0, prev46 = -1.0;
    for (int i = 0; i < built.model.num_constraints(); ++i) {
        const MilpConstraint& c = built.model.constraint(i);
        if (c.name == "eq44_0_0_2")
            for (auto& [col, v] : c.terms)
                if (col == built.vars.column({"u", {0, 0, 2}})) ucoef44 = v;
        if (c.name == "eq46_0_0_2")
            for (auto& [col, v] : c.terms)
                if (col == built.vars.column({"p", {0, 0, 1}})) prev46 = v;
    }
    CHECK(ucoef44 == doctest::Approx(-5.0));
    CHECK(prev46 == doctest::Approx(55.0 / 60.0));
}

TEST_CASE("PB with tau=60 collapses to end-of-hour capacity rows") {
    SystemSpec spec = one_unit_system(toys::quick_unit(), 3, 0.0);
    PowerFormulationConfig cfg;
    cfg.options.tau_minutes = 60.0;
    BuiltModel built = build_power_model(spec, cfg);
    for (int i = 0; i < built.model.num_constraints(); ++i) {
        const MilpConstraint& c = built.model.constraint(i);
        if (c.name.rfind("eq46_", 0) == 0 || c.name.rfind("eq47_", 0) == 0) {
            for (auto& [col, v] : c.terms) {
                const VarKey& k = built.vars.key_of(col);
                if (k.symbol == "p") CHECK(v == doctest::Approx(k.indices[2] == 0 ? 0.0 : 1.0));
            }
            // No reference to the previous boundary at all.
            for (auto& [col, v] : c.terms) {
                (void)v;
                const VarKey& k = built.vars.key_of(col);
                if (k.symbol == "p")
                    CHECK(k.indices[2] == std::stoi(c.name.substr(c.name.rfind('_') + 1)));
            }
        }
    }
}

TEST_CASE("EB convex hull: LP relaxation matches the integer optimum") {
    std::mt19937 rng(314159);
    int solved = 0;
    for (int trial = 0; trial < 25; ++trial) {
        TightnessDraw d = tightness_trial(false, false, rng);
        REQUIRE(d.ok);
        CHECK(d.lp_obj == doctest::Approx(d.mip_obj).epsilon(1e-6));
        ++solved;
    }
    CHECK(solved == 25);
}

TEST_CASE("PB convex hull: LP relaxation matches the integer optimum") {
    std::mt19937 rng(271828);
    for (int trial = 0; trial < 25; ++trial) {
        TightnessDraw d = tightness_trial(true, trial % 2 == 1, rng);
        REQUIRE(d.ok);
        CHECK(d.lp_obj == doctest::Approx(d.mip_obj).epsilon(1e-6));
    }
}

TEST_CASE("EBs with unit durations and zeroed samples reproduces EB") {
    ThermalTech unit = toys::slow_unit("g", 260, 90, 1, 1);
    unit.min_up = 2;
    unit.min_down = 2;
    unit.ramp_up = 8.0;  // loose enough for the first-hour climb under (26)
    unit.ramp_down = 8.0;
    toys::SystemBuilder b(6);
    b.add(unit);
    // The cluster starts in hour 1, so the first hour sits exactly at pmin.
    std::vector<double> boundaries = {90.0, 90.0, 150.0, 130.0, 170.0, 150.0, 120.0};
    b.scenario({toys::hold_then_linear(6, 12, boundaries)});
    SystemSpec spec = b.build();

    EnergyFormulationConfig cfg;
    cfg.variant = ModelKind::EB;
    SolveResult eb = solve(build_energy_model(spec, cfg).model, tight_gap());
    REQUIRE(eb.status == SolveStatus::OptimalWithinGap);

    SystemSpec zeroed = spec;
    for (Trajectory& tr : zeroed.trajectories) {
        for (auto& seg : tr.su_energy) seg.assign(seg.size(), 0.0);
        tr.sd_energy.assign(tr.sd_energy.size(), 0.0);
    }
    cfg.variant = ModelKind::EBs;
    BuiltModel ebs = build_energy_model(zeroed, cfg);
    SolveResult r2 = solve(ebs.model, tight_gap());
    REQUIRE(r2.status == SolveStatus::OptimalWithinGap);
    CHECK(r2.objective == doctest::Approx(eb.objective).epsilon(1e-6));
    for (int t = 1; t <= 6; ++t) {
        VarKey key{"u", {0, 0, t}};
        CHECK(r2.values[ebs.vars.column(key)] ==
              doctest::Approx(eb.values[ebs.vars.column(key)]));
    }
}

TEST_CASE("EBs without slow units is rejected") {
    SystemSpec spec = one_unit_system(toys::quick_unit(), 3, 50.0);
    EnergyFormulationConfig cfg;
    cfg.variant = ModelKind::EBs;
    CHECK_THROWS_WITH_AS(static_cast<void>(build_energy_model(spec, cfg)),
                         doctest::Contains("without trajectory data"), std::invalid_argument);
}
