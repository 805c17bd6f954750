#include "flexplan/formulation_common.hpp"

#include <stdexcept>

namespace flexplan {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::EB: return "eb";
        case ModelKind::EBs: return "ebs";
        case ModelKind::PB: return "pb";
        case ModelKind::SRPB: return "sr-pb";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "eb") return ModelKind::EB;
    if (name == "ebs") return ModelKind::EBs;
    if (name == "pb") return ModelKind::PB;
    if (name == "sr-pb" || name == "srpb") return ModelKind::SRPB;
    throw std::invalid_argument("unknown model kind '" + name + "' (eb, ebs, pb, sr-pb)");
}

std::string rname(const std::string& base, std::initializer_list<int> idx) {
    std::string s = base;
    for (int i : idx) {
        s += '_';
        s += std::to_string(i);
    }
    return s;
}

void create_shared_variables(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    const int T = sp.grid.hours;

    for (int g = 0; g < sp.num_thermal(); ++g)
        ctx.make("x", {sp.tech_index_thermal(g)}, 0.0, sp.thermal[g].max_new_units,
                 VarKind::Integer);
    VarKind storage_kind =
        ctx.opt.integer_storage_investment ? VarKind::Integer : VarKind::Continuous;
    for (int s = 0; s < sp.num_storage(); ++s)
        ctx.make("x", {sp.tech_index_storage(s)}, 0.0, sp.storage[s].max_new_mw, storage_kind);
    for (int v = 0; v < sp.num_renewable(); ++v)
        ctx.make("x", {sp.tech_index_renewable(v)}, 0.0, sp.renewable[v].max_new_mw, storage_kind);

    for (int w = 0; w < sp.num_scenarios(); ++w) {
        for (int g = 0; g < sp.num_thermal(); ++g) {
            const int j = sp.tech_index_thermal(g);
            const double fleet = sp.thermal[g].fleet_limit();
            for (int t = 1; t <= T; ++t) {
                ctx.make("u", {w, j, t}, 0.0, fleet, VarKind::Integer);
                ctx.make("y", {w, j, t}, 0.0, fleet, VarKind::Integer);
                ctx.make("z", {w, j, t}, 0.0, fleet, VarKind::Integer);
                for (int k = 0; k < sp.thermal[g].num_segments(); ++k)
                    ctx.make("delta", {w, j, k, t}, 0.0, fleet, VarKind::Integer);
            }
        }
        for (int s = 0; s < sp.num_storage(); ++s) {
            const int j = sp.tech_index_storage(s);
            for (int t = 1; t <= T; ++t) {
                ctx.make("gamma", {w, j, t}, 0.0, 1.0, VarKind::Binary);
                ctx.make("phi", {w, j, t}, 0.0, kInf, VarKind::Continuous);
            }
        }
        // Reserves exist for thermal and storage technologies only; vRES
        // provide none.
        for (int g = 0; g < sp.num_thermal(); ++g)
            for (int t = 1; t <= T; ++t) {
                ctx.make("rup", {w, sp.tech_index_thermal(g), t}, 0.0, kInf, VarKind::Continuous);
                ctx.make("rdn", {w, sp.tech_index_thermal(g), t}, 0.0, kInf, VarKind::Continuous);
            }
        for (int s = 0; s < sp.num_storage(); ++s)
            for (int t = 1; t <= T; ++t) {
                ctx.make("rup", {w, sp.tech_index_storage(s), t}, 0.0, kInf, VarKind::Continuous);
                ctx.make("rdn", {w, sp.tech_index_storage(s), t}, 0.0, kInf, VarKind::Continuous);
            }
        for (int j = 0; j < sp.num_tech(); ++j)
            for (int t = 1; t <= T; ++t)
                ctx.make("ehat", {w, j, t}, 0.0, kInf, VarKind::Continuous);
    }
}

void build_objective_coeffs(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    const int T = sp.grid.hours;
    for (int g = 0; g < sp.num_thermal(); ++g)
        ctx.model.set_objective_coeff(ctx.col("x", {sp.tech_index_thermal(g)}),
                                      sp.thermal[g].invest_cost);
    for (int s = 0; s < sp.num_storage(); ++s)
        ctx.model.set_objective_coeff(ctx.col("x", {sp.tech_index_storage(s)}),
                                      sp.storage[s].invest_cost);
    for (int v = 0; v < sp.num_renewable(); ++v)
        ctx.model.set_objective_coeff(ctx.col("x", {sp.tech_index_renewable(v)}),
                                      sp.renewable[v].invest_cost);

    for (int w = 0; w < sp.num_scenarios(); ++w) {
        const double pi = sp.scenarios[w].probability;
        for (int t = 1; t <= T; ++t) {
            for (int g = 0; g < sp.num_thermal(); ++g) {
                const ThermalTech& th = sp.thermal[g];
                const int j = sp.tech_index_thermal(g);
                ctx.model.set_objective_coeff(ctx.col("ehat", {w, j, t}),
                                              pi * (th.var_cost + th.emission_cost()));
                ctx.model.set_objective_coeff(ctx.col("u", {w, j, t}), pi * th.no_load_cost);
                ctx.model.set_objective_coeff(ctx.col("z", {w, j, t}), pi * th.sd_cost);
                for (int k = 0; k < th.num_segments(); ++k)
                    ctx.model.set_objective_coeff(ctx.col("delta", {w, j, k, t}),
                                                  pi * th.startup_segments[k].cost);
                ctx.model.set_objective_coeff(ctx.col("rup", {w, j, t}), pi * th.reserve_cost_up);
                ctx.model.set_objective_coeff(ctx.col("rdn", {w, j, t}),
                                              pi * th.reserve_cost_down);
            }
            for (int s = 0; s < sp.num_storage(); ++s) {
                const StorageTech& st = sp.storage[s];
                const int j = sp.tech_index_storage(s);
                ctx.model.set_objective_coeff(ctx.col("ehat", {w, j, t}), pi * st.var_cost);
                ctx.model.set_objective_coeff(ctx.col("rup", {w, j, t}), pi * st.reserve_cost_up);
                ctx.model.set_objective_coeff(ctx.col("rdn", {w, j, t}),
                                              pi * st.reserve_cost_down);
            }
            for (int v = 0; v < sp.num_renewable(); ++v)
                ctx.model.set_objective_coeff(
                    ctx.col("ehat", {w, sp.tech_index_renewable(v), t}),
                    pi * sp.renewable[v].var_cost);
        }
    }
}

void build_reserve_requirements(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            std::vector<std::pair<int, double>> up, dn;
            for (int g = 0; g < sp.num_thermal(); ++g) {
                up.emplace_back(ctx.col("rup", {w, sp.tech_index_thermal(g), t}), 1.0);
                dn.emplace_back(ctx.col("rdn", {w, sp.tech_index_thermal(g), t}), 1.0);
            }
            for (int s = 0; s < sp.num_storage(); ++s) {
                up.emplace_back(ctx.col("rup", {w, sp.tech_index_storage(s), t}), 1.0);
                dn.emplace_back(ctx.col("rdn", {w, sp.tech_index_storage(s), t}), 1.0);
            }
            ctx.model.add_constraint(rname("eq4", {w, t}), RowSense::GreaterEqual,
                                     sp.scenarios[w].reserve_up[t - 1], std::move(up));
            ctx.model.add_constraint(rname("eq5", {w, t}), RowSense::GreaterEqual,
                                     sp.scenarios[w].reserve_down[t - 1], std::move(dn));
        }
}

void build_thermal_investment_link(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int g = 0; g < sp.num_thermal(); ++g) {
            const int j = sp.tech_index_thermal(g);
            const int xg = ctx.col("x", {j});
            for (int t = 1; t <= sp.grid.hours; ++t)
                ctx.model.add_constraint(rname("eq6", {w, j, t}), RowSense::LessEqual,
                                         sp.thermal[g].initial_units,
                                         {{ctx.col("u", {w, j, t}), 1.0}, {xg, -1.0}});
        }
}

void build_uc_logic(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    const int T = sp.grid.hours;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int g = 0; g < sp.num_thermal(); ++g) {
            const ThermalTech& th = sp.thermal[g];
            const int j = sp.tech_index_thermal(g);
            const int xg = ctx.col("x", {j});
            for (int t = 1; t <= T; ++t) {
                // (10): u_t - u_{t-1} = y_t - z_t, all units offline at t = 0.
                std::vector<std::pair<int, double>> logic = {{ctx.col("u", {w, j, t}), 1.0},
                                                             {ctx.col("y", {w, j, t}), -1.0},
                                                             {ctx.col("z", {w, j, t}), 1.0}};
                if (t > 1) logic.emplace_back(ctx.col("u", {w, j, t - 1}), -1.0);
                ctx.model.add_constraint(rname("eq10", {w, j, t}), RowSense::Equal, 0.0,
                                         std::move(logic));
            }
            for (int t = th.min_up; t <= T; ++t) {
                std::vector<std::pair<int, double>> terms;
                for (int i = t - th.min_up + 1; i <= t; ++i)
                    terms.emplace_back(ctx.col("y", {w, j, i}), 1.0);
                terms.emplace_back(ctx.col("u", {w, j, t}), -1.0);
                ctx.model.add_constraint(rname("eq11", {w, j, t}), RowSense::LessEqual, 0.0,
                                         std::move(terms));
            }
            for (int t = th.min_down; t <= T; ++t) {
                std::vector<std::pair<int, double>> terms;
                for (int i = t - th.min_down + 1; i <= t; ++i)
                    terms.emplace_back(ctx.col("z", {w, j, i}), 1.0);
                terms.emplace_back(ctx.col("u", {w, j, t}), 1.0);
                terms.emplace_back(xg, -1.0);
                ctx.model.add_constraint(rname("eq12", {w, j, t}), RowSense::LessEqual,
                                         th.initial_units, std::move(terms));
            }
            // (13): segment k is admissible only when the shutdown happened
            // within its offline window [T_k, T_{k+1}); out-of-horizon
            // history carries no shutdowns (units start long-cold).
            for (int k = 0; k + 1 < th.num_segments(); ++k)
                for (int t = 1; t <= T; ++t) {
                    std::vector<std::pair<int, double>> terms = {
                        {ctx.col("delta", {w, j, k, t}), 1.0}};
                    for (int i = th.startup_segments[k].offline_hours;
                         i <= th.startup_segments[k + 1].offline_hours - 1; ++i)
                        if (t - i >= 1) terms.emplace_back(ctx.col("z", {w, j, t - i}), -1.0);
                    ctx.model.add_constraint(rname("eq13", {w, j, k, t}), RowSense::LessEqual, 0.0,
                                             std::move(terms));
                }
            for (int t = 1; t <= T; ++t) {
                std::vector<std::pair<int, double>> terms;
                for (int k = 0; k < th.num_segments(); ++k)
                    terms.emplace_back(ctx.col("delta", {w, j, k, t}), 1.0);
                terms.emplace_back(ctx.col("y", {w, j, t}), -1.0);
                ctx.model.add_constraint(rname("eq14", {w, j, t}), RowSense::Equal, 0.0,
                                         std::move(terms));
            }
        }
}

void build_storage_inventory(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    const int T = sp.grid.hours;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int s = 0; s < sp.num_storage(); ++s) {
            const StorageTech& st = sp.storage[s];
            const int j = sp.tech_index_storage(s);
            const int xs = ctx.col("x", {j});
            const double soc0_per_mw = st.initial_soc_fraction * st.energy_to_power;
            for (int t = 1; t <= T; ++t) {
                // (23): phi_t = phi_{t-1} + eta*chat - ehat; phi_0 is the
                // initial fraction of installed energy capacity, affine in x.
                std::vector<std::pair<int, double>> inv = {
                    {ctx.col("phi", {w, j, t}), 1.0},
                    {ctx.col("chat", {w, j, t}), -st.efficiency},
                    {ctx.col("ehat", {w, j, t}), 1.0}};
                double rhs = 0.0;
                if (t > 1) {
                    inv.emplace_back(ctx.col("phi", {w, j, t - 1}), -1.0);
                } else {
                    inv.emplace_back(xs, -soc0_per_mw);
                    rhs = soc0_per_mw * st.initial_mw;
                }
                ctx.model.add_constraint(rname("eq23", {w, j, t}), RowSense::Equal, rhs,
                                         std::move(inv));

                std::vector<std::pair<int, double>> cap = {{ctx.col("phi", {w, j, t}), 1.0},
                                                           {xs, -st.energy_to_power}};
                for (int i = t - 1; i <= t; ++i)
                    if (i >= 1) cap.emplace_back(ctx.col("rdn", {w, j, i}), 1.0);
                ctx.model.add_constraint(rname("eq24", {w, j, t}), RowSense::LessEqual,
                                         st.energy_to_power * st.initial_mw, std::move(cap));

                std::vector<std::pair<int, double>> floor = {{ctx.col("phi", {w, j, t}), 1.0}};
                for (int i = t - 1; i <= t; ++i)
                    if (i >= 1) floor.emplace_back(ctx.col("rup", {w, j, i}), -1.0);
                ctx.model.add_constraint(rname("eq25", {w, j, t}), RowSense::GreaterEqual, 0.0,
                                         std::move(floor));
            }
            if (ctx.opt.terminal_soc_floor)
                ctx.model.add_constraint(rname("soc_end", {w, j}), RowSense::GreaterEqual,
                                         soc0_per_mw * st.initial_mw,
                                         {{ctx.col("phi", {w, j, T}), 1.0},
                                          {xs, -soc0_per_mw}});
        }
}

std::vector<int> branch_priorities(const MilpModel& model, const VariableMap& vars) {
    std::vector<int> prio(model.num_variables(), 9);
    auto assign = [&](const std::string& sym, int p) {
        for (int c : vars.columns_of(sym)) prio[c] = p;
    };
    assign("x", 0);
    assign("u", 1);
    assign("gamma", 2);
    assign("delta", 3);
    assign("y", 4);
    assign("z", 5);
    return prio;
}

}  // namespace flexplan
