#include "flexplan/formulation_energy.hpp"

#include <algorithm>
#include <stdexcept>

namespace flexplan {

void create_energy_variables(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w) {
        for (int g = 0; g < sp.num_thermal(); ++g)
            for (int t = 1; t <= sp.grid.hours; ++t)
                ctx.make("e", {w, sp.tech_index_thermal(g), t}, 0.0, kInf, VarKind::Continuous);
        for (int s = 0; s < sp.num_storage(); ++s)
            for (int t = 1; t <= sp.grid.hours; ++t)
                ctx.make("chat", {w, sp.tech_index_storage(s), t}, 0.0, kInf,
                         VarKind::Continuous);
    }
}

void build_system_constraints_eb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            // (2): total energy output minus charged energy meets demand.
            std::vector<std::pair<int, double>> bal;
            for (int j = 0; j < sp.num_tech(); ++j)
                bal.emplace_back(ctx.col("ehat", {w, j, t}), 1.0);
            for (int s = 0; s < sp.num_storage(); ++s)
                bal.emplace_back(ctx.col("chat", {w, sp.tech_index_storage(s), t}), -1.0);
            double demand = 0.0;
            for (int b = 0; b < sp.num_buses(); ++b) demand += sp.demand_hourly[w][b].energy[t];
            ctx.model.add_constraint(rname("eq2", {w, t}), RowSense::Equal, demand,
                                     std::move(bal));

            if (!ctx.opt.include_network) continue;
            for (int l = 0; l < sp.num_lines(); ++l) {
                const double limit = sp.network.lines[l].limit_mw;
                std::vector<std::pair<int, double>> flow;
                for (int j = 0; j < sp.num_tech(); ++j) {
                    double gamma = sp.shift_factors[l][sp.bus_of_tech(j)];
                    if (gamma != 0.0) flow.emplace_back(ctx.col("ehat", {w, j, t}), gamma);
                }
                for (int s = 0; s < sp.num_storage(); ++s) {
                    double gamma = sp.shift_factors[l][sp.storage[s].bus];
                    if (gamma != 0.0)
                        flow.emplace_back(ctx.col("chat", {w, sp.tech_index_storage(s), t}),
                                          -gamma);
                }
                double load_term = 0.0;
                for (int b = 0; b < sp.num_buses(); ++b)
                    load_term += sp.shift_factors[l][b] * sp.demand_hourly[w][b].energy[t];
                ctx.model.add_constraint(rname("eq3hi", {l, w, t}), RowSense::LessEqual,
                                         limit + load_term, flow);
                ctx.model.add_constraint(rname("eq3lo", {l, w, t}), RowSense::GreaterEqual,
                                         -limit + load_term, std::move(flow));
            }
        }
}

void build_investment_links_eb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            for (int s = 0; s < sp.num_storage(); ++s) {
                const int j = sp.tech_index_storage(s);
                const int xs = ctx.col("x", {j});
                const double x0 = sp.storage[s].initial_mw;
                ctx.model.add_constraint(rname("eq7", {w, j, t}), RowSense::LessEqual, x0,
                                         {{ctx.col("ehat", {w, j, t}), 1.0},
                                          {ctx.col("chat", {w, j, t}), -1.0},
                                          {ctx.col("rup", {w, j, t}), 1.0},
                                          {xs, -1.0}});
                ctx.model.add_constraint(rname("eq8", {w, j, t}), RowSense::GreaterEqual, -x0,
                                         {{ctx.col("ehat", {w, j, t}), 1.0},
                                          {ctx.col("chat", {w, j, t}), -1.0},
                                          {ctx.col("rdn", {w, j, t}), -1.0},
                                          {xs, 1.0}});
            }
            for (int v = 0; v < sp.num_renewable(); ++v) {
                const int j = sp.tech_index_renewable(v);
                const double avail = sp.renewable_hourly[w][v].energy[t];
                ctx.model.add_constraint(rname("eq9", {w, j, t}), RowSense::LessEqual,
                                         avail * sp.renewable[v].initial_mw,
                                         {{ctx.col("ehat", {w, j, t}), 1.0},
                                          {ctx.col("x", {j}), -avail}});
            }
        }
}

void build_thermal_output_eb(FormulationContext& ctx, ModelKind variant) {
    const SystemSpec& sp = ctx.spec;
    const int T = sp.grid.hours;
    if (variant == ModelKind::EBs && sp.slow_units.empty())
        throw std::invalid_argument(
            "EBs requested without trajectory data: no slow-start units in the instance");

    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int g = 0; g < sp.num_thermal(); ++g) {
            const ThermalTech& th = sp.thermal[g];
            const int j = sp.tech_index_thermal(g);
            const double span = th.pmax - th.pmin;
            const bool single_hour = th.min_up == 1;
            for (int t = 1; t <= T; ++t) {
                const int e = ctx.col("e", {w, j, t});
                const int up = ctx.col("rup", {w, j, t});
                const int dn = ctx.col("rdn", {w, j, t});
                const int u = ctx.col("u", {w, j, t});
                const int y = ctx.col("y", {w, j, t});
                if (single_hour) {
                    // (15)-(16): start/stop hours capped by SU/SD capability.
                    std::vector<std::pair<int, double>> c15 = {
                        {e, 1.0}, {up, 1.0}, {u, -span},
                        {y, std::max(th.sd_capability - th.su_capability, 0.0)}};
                    if (t < T)
                        c15.emplace_back(ctx.col("z", {w, j, t + 1}),
                                         th.pmax - th.sd_capability);
                    ctx.model.add_constraint(rname("eq15", {w, j, t}), RowSense::LessEqual, 0.0,
                                             std::move(c15));
                    std::vector<std::pair<int, double>> c16 = {
                        {e, 1.0}, {up, 1.0}, {u, -span}, {y, th.pmax - th.su_capability}};
                    if (t < T)
                        c16.emplace_back(ctx.col("z", {w, j, t + 1}),
                                         std::max(th.su_capability - th.sd_capability, 0.0));
                    ctx.model.add_constraint(rname("eq16", {w, j, t}), RowSense::LessEqual, 0.0,
                                             std::move(c16));
                } else {
                    std::vector<std::pair<int, double>> c17 = {
                        {e, 1.0}, {up, 1.0}, {u, -span}, {y, th.pmax - th.su_capability}};
                    if (t < T)
                        c17.emplace_back(ctx.col("z", {w, j, t + 1}),
                                         th.pmax - th.sd_capability);
                    ctx.model.add_constraint(rname("eq17", {w, j, t}), RowSense::LessEqual, 0.0,
                                             std::move(c17));
                }
                ctx.model.add_constraint(rname("eq18", {w, j, t}), RowSense::GreaterEqual, 0.0,
                                         {{e, 1.0}, {dn, -1.0}});

                const bool with_trajectories =
                    variant == ModelKind::EBs && th.start_class == StartClass::Slow;
                std::vector<std::pair<int, double>> total = {
                    {ctx.col("ehat", {w, j, t}), 1.0}, {u, -th.pmin}, {e, -1.0}};
                if (with_trajectories) {
                    const Trajectory& tr = sp.trajectories[g];
                    // Startup energy lands in the SU_D hours before the
                    // commitment hour of the startup-type event.
                    for (int k = 0; k < th.num_segments(); ++k) {
                        const int dur = th.su_duration[k];
                        for (int i = 1; i <= dur; ++i) {
                            const int td = t - i + dur + 1;
                            if (td >= 1 && td <= T)
                                total.emplace_back(ctx.col("delta", {w, j, k, td}),
                                                   -tr.su_energy[k][i - 1]);
                        }
                    }
                    for (int i = 1; i <= th.sd_duration; ++i) {
                        const int tz = t - i + 1;
                        if (tz >= 1 && tz <= T)
                            total.emplace_back(ctx.col("z", {w, j, tz}), -tr.sd_energy[i - 1]);
                    }
                    ctx.model.add_constraint(rname("eq20", {w, j, t}), RowSense::Equal, 0.0,
                                             std::move(total));
                } else {
                    ctx.model.add_constraint(rname("eq19", {w, j, t}), RowSense::Equal, 0.0,
                                             std::move(total));
                }
            }
        }
}

void build_storage_eb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int s = 0; s < sp.num_storage(); ++s) {
            const int j = sp.tech_index_storage(s);
            const double mcap = sp.storage[s].capacity_limit();
            for (int t = 1; t <= sp.grid.hours; ++t) {
                ctx.model.add_constraint(rname("eq21", {w, j, t}), RowSense::LessEqual, mcap,
                                         {{ctx.col("chat", {w, j, t}), 1.0},
                                          {ctx.col("gamma", {w, j, t}), mcap}});
                ctx.model.add_constraint(rname("eq22", {w, j, t}), RowSense::LessEqual, 0.0,
                                         {{ctx.col("ehat", {w, j, t}), 1.0},
                                          {ctx.col("gamma", {w, j, t}), -mcap}});
            }
        }
    build_storage_inventory(ctx);
}

void build_flexibility_eb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    const double tau = ctx.opt.tau_minutes;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            for (int g = 0; g < sp.num_thermal(); ++g) {
                const ThermalTech& th = sp.thermal[g];
                const int j = sp.tech_index_thermal(g);
                // (26): hourly climb plus reserve within tau-min ramping.
                std::vector<std::pair<int, double>> up = {
                    {ctx.col("e", {w, j, t}), 1.0},
                    {ctx.col("rup", {w, j, t}), 1.0},
                    {ctx.col("u", {w, j, t}), -tau * th.ramp_up}};
                if (t > 1) up.emplace_back(ctx.col("e", {w, j, t - 1}), -1.0);
                ctx.model.add_constraint(rname("eq26", {w, j, t}), RowSense::LessEqual, 0.0,
                                         std::move(up));
                // (27): symmetric descent against the previous commitment.
                std::vector<std::pair<int, double>> dn = {{ctx.col("e", {w, j, t}), 1.0},
                                                          {ctx.col("rdn", {w, j, t}), -1.0}};
                if (t > 1) {
                    dn.emplace_back(ctx.col("e", {w, j, t - 1}), -1.0);
                    dn.emplace_back(ctx.col("u", {w, j, t - 1}), tau * th.ramp_down);
                }
                ctx.model.add_constraint(rname("eq27", {w, j, t}), RowSense::GreaterEqual, 0.0,
                                         std::move(dn));
            }
            for (int s = 0; s < sp.num_storage(); ++s) {
                const StorageTech& st = sp.storage[s];
                const int j = sp.tech_index_storage(s);
                const int xs = ctx.col("x", {j});
                std::vector<std::pair<int, double>> up = {
                    {ctx.col("chat", {w, j, t}), 1.0},
                    {ctx.col("ehat", {w, j, t}), 1.0},
                    {ctx.col("rup", {w, j, t}), 1.0},
                    {xs, -tau * st.ramp_up}};
                if (t > 1) {
                    up.emplace_back(ctx.col("chat", {w, j, t - 1}), -1.0);
                    up.emplace_back(ctx.col("ehat", {w, j, t - 1}), -1.0);
                }
                ctx.model.add_constraint(rname("eq28", {w, j, t}), RowSense::LessEqual,
                                         tau * st.ramp_up * st.initial_mw, std::move(up));
                std::vector<std::pair<int, double>> dn = {{ctx.col("chat", {w, j, t}), 1.0},
                                                          {ctx.col("ehat", {w, j, t}), 1.0},
                                                          {ctx.col("rdn", {w, j, t}), -1.0},
                                                          {xs, tau * st.ramp_down}};
                if (t > 1) {
                    dn.emplace_back(ctx.col("chat", {w, j, t - 1}), -1.0);
                    dn.emplace_back(ctx.col("ehat", {w, j, t - 1}), -1.0);
                }
                ctx.model.add_constraint(rname("eq29", {w, j, t}), RowSense::GreaterEqual,
                                         -tau * st.ramp_down * st.initial_mw, std::move(dn));
            }
        }
}

BuiltModel build_energy_model(const SystemSpec& spec, const EnergyFormulationConfig& config) {
    if (!spec.validated)
        throw std::invalid_argument("build_energy_model: spec must pass validate_system first");
    if (config.variant != ModelKind::EB && config.variant != ModelKind::EBs)
        throw std::invalid_argument("build_energy_model: variant must be EB or EBs");
    FormulationContext ctx{spec, config.options, {}, {}};
    create_shared_variables(ctx);
    create_energy_variables(ctx);
    build_objective_coeffs(ctx);
    build_system_constraints_eb(ctx);
    build_reserve_requirements(ctx);
    build_thermal_investment_link(ctx);
    build_investment_links_eb(ctx);
    build_uc_logic(ctx);
    build_thermal_output_eb(ctx, config.variant);
    build_storage_eb(ctx);
    build_flexibility_eb(ctx);
    return BuiltModel{std::move(ctx.model), std::move(ctx.vars)};
}

FormulaCounts predict_counts_energy(const SystemSpec& spec,
                                    const EnergyFormulationConfig& config) {
    const long T = spec.grid.hours;
    const long W = spec.num_scenarios();
    const long G = spec.num_thermal();
    const long S = spec.num_storage();
    const long V = spec.num_renewable();
    const long J = G + S + V;
    const long L = config.options.include_network ? spec.num_lines() : 0;
    long segs = 0, seg_windows = 0, minup_rows = 0, mindown_rows = 0, g1 = 0;
    for (const ThermalTech& th : spec.thermal) {
        segs += th.num_segments();
        seg_windows += th.num_segments() - 1;
        minup_rows += std::max<long>(0, T - th.min_up + 1);
        mindown_rows += std::max<long>(0, T - th.min_down + 1);
        if (th.min_up == 1) ++g1;
    }
    FormulaCounts c;
    c.variables = J                                  // x
                  + W * T * (3 * G + segs + 2 * S     // u,y,z,delta; gamma,phi
                             + 2 * (G + S)            // r+,r-
                             + J                      // ehat
                             + G + S);                // e, chat
    c.constraints = W * T                             // (2)
                    + 2 * L * W * T                   // (3)
                    + 2 * W * T                       // (4)-(5)
                    + W * G * T                       // (6)
                    + 2 * W * S * T + W * V * T       // (7)-(9)
                    + W * G * T                       // (10)
                    + W * (minup_rows + mindown_rows) // (11)-(12)
                    + W * seg_windows * T             // (13)
                    + W * G * T                       // (14)
                    + W * (2 * g1 + (G - g1)) * T     // (15)-(17)
                    + W * G * T                       // (18)
                    + W * G * T                       // (19)/(20)
                    + 2 * W * S * T                   // (21)-(22)
                    + 3 * W * S * T                   // (23)-(25)
                    + 2 * W * G * T                   // (26)-(27)
                    + 2 * W * S * T;                  // (28)-(29)
    if (config.options.terminal_soc_floor) c.constraints += W * S;
    return c;
}

}  // namespace flexplan
