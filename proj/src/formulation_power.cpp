#include "flexplan/formulation_power.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flexplan {

void create_power_variables(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w) {
        for (int g = 0; g < sp.num_thermal(); ++g)
            for (int t = 1; t <= sp.grid.hours; ++t)
                ctx.make("p", {w, sp.tech_index_thermal(g), t}, 0.0, kInf, VarKind::Continuous);
        for (int j = 0; j < sp.num_tech(); ++j)
            for (int t = 1; t <= sp.grid.hours; ++t)
                ctx.make("phat", {w, j, t}, 0.0, kInf, VarKind::Continuous);
        for (int s = 0; s < sp.num_storage(); ++s)
            for (int t = 1; t <= sp.grid.hours; ++t) {
                ctx.make("c", {w, sp.tech_index_storage(s), t}, 0.0, kInf, VarKind::Continuous);
                ctx.make("chat", {w, sp.tech_index_storage(s), t}, 0.0, kInf,
                         VarKind::Continuous);
            }
    }
}

void build_energy_coupling(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            for (int j = 0; j < sp.num_tech(); ++j) {
                // (31): calculated energy is the trapezoid of boundary powers.
                std::vector<std::pair<int, double>> terms = {
                    {ctx.col("ehat", {w, j, t}), 1.0}, {ctx.col("phat", {w, j, t}), -0.5}};
                if (t > 1) terms.emplace_back(ctx.col("phat", {w, j, t - 1}), -0.5);
                ctx.model.add_constraint(rname("eq31", {w, j, t}), RowSense::Equal, 0.0,
                                         std::move(terms));
            }
            for (int s = 0; s < sp.num_storage(); ++s) {
                const int j = sp.tech_index_storage(s);
                std::vector<std::pair<int, double>> terms = {{ctx.col("chat", {w, j, t}), 1.0},
                                                             {ctx.col("c", {w, j, t}), -0.5}};
                if (t > 1) terms.emplace_back(ctx.col("c", {w, j, t - 1}), -0.5);
                ctx.model.add_constraint(rname("eq32", {w, j, t}), RowSense::Equal, 0.0,
                                         std::move(terms));
            }
        }
}

void build_system_constraints_pb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            // (33): instantaneous balance at the hour boundary.
            std::vector<std::pair<int, double>> bal;
            for (int j = 0; j < sp.num_tech(); ++j)
                bal.emplace_back(ctx.col("phat", {w, j, t}), 1.0);
            for (int s = 0; s < sp.num_storage(); ++s)
                bal.emplace_back(ctx.col("c", {w, sp.tech_index_storage(s), t}), -1.0);
            double demand = 0.0;
            for (int b = 0; b < sp.num_buses(); ++b)
                demand += sp.demand_hourly[w][b].boundary_power[t];
            ctx.model.add_constraint(rname("eq33", {w, t}), RowSense::Equal, demand,
                                     std::move(bal));

            if (!ctx.opt.include_network) continue;
            for (int l = 0; l < sp.num_lines(); ++l) {
                const double limit = sp.network.lines[l].limit_mw;
                std::vector<std::pair<int, double>> flow;
                for (int j = 0; j < sp.num_tech(); ++j) {
                    double gamma = sp.shift_factors[l][sp.bus_of_tech(j)];
                    if (gamma != 0.0) flow.emplace_back(ctx.col("phat", {w, j, t}), gamma);
                }
                for (int s = 0; s < sp.num_storage(); ++s) {
                    double gamma = sp.shift_factors[l][sp.storage[s].bus];
                    if (gamma != 0.0)
                        flow.emplace_back(ctx.col("c", {w, sp.tech_index_storage(s), t}), -gamma);
                }
                double load_term = 0.0;
                for (int b = 0; b < sp.num_buses(); ++b)
                    load_term +=
                        sp.shift_factors[l][b] * sp.demand_hourly[w][b].boundary_power[t];
                ctx.model.add_constraint(rname("eq34hi", {l, w, t}), RowSense::LessEqual,
                                         limit + load_term, flow);
                ctx.model.add_constraint(rname("eq34lo", {l, w, t}), RowSense::GreaterEqual,
                                         -limit + load_term, std::move(flow));
            }
        }
}

void build_investment_links_pb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            for (int s = 0; s < sp.num_storage(); ++s) {
                const int j = sp.tech_index_storage(s);
                const int xs = ctx.col("x", {j});
                const double x0 = sp.storage[s].initial_mw;
                ctx.model.add_constraint(rname("eq35", {w, j, t}), RowSense::LessEqual, x0,
                                         {{ctx.col("phat", {w, j, t}), 1.0},
                                          {ctx.col("c", {w, j, t}), -1.0},
                                          {ctx.col("rup", {w, j, t}), 1.0},
                                          {xs, -1.0}});
                ctx.model.add_constraint(rname("eq36", {w, j, t}), RowSense::GreaterEqual, -x0,
                                         {{ctx.col("phat", {w, j, t}), 1.0},
                                          {ctx.col("c", {w, j, t}), -1.0},
                                          {ctx.col("rdn", {w, j, t}), -1.0},
                                          {xs, 1.0}});
            }
            for (int v = 0; v < sp.num_renewable(); ++v) {
                const int j = sp.tech_index_renewable(v);
                const double avail = sp.renewable_hourly[w][v].boundary_power[t];
                ctx.model.add_constraint(rname("eq37", {w, j, t}), RowSense::LessEqual,
                                         avail * sp.renewable[v].initial_mw,
                                         {{ctx.col("phat", {w, j, t}), 1.0},
                                          {ctx.col("x", {j}), -avail}});
            }
        }
}

void build_thermal_output_pb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    const int T = sp.grid.hours;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int g = 0; g < sp.num_thermal(); ++g) {
            const ThermalTech& th = sp.thermal[g];
            const int j = sp.tech_index_thermal(g);
            const double span = th.pmax - th.pmin;
            for (int t = 1; t <= T; ++t) {
                const int p = ctx.col("p", {w, j, t});
                // (38): boundary power above minimum with start/stop caps.
                std::vector<std::pair<int, double>> c38 = {{p, 1.0},
                                                           {ctx.col("rup", {w, j, t}), 1.0},
                                                           {ctx.col("u", {w, j, t}), -span}};
                if (t < T) {
                    c38.emplace_back(ctx.col("z", {w, j, t + 1}), th.pmax - th.sd_capability);
                    c38.emplace_back(ctx.col("y", {w, j, t + 1}),
                                     -(th.su_capability - th.pmin));
                }
                ctx.model.add_constraint(rname("eq38", {w, j, t}), RowSense::LessEqual, 0.0,
                                         std::move(c38));
                ctx.model.add_constraint(rname("eq39", {w, j, t}), RowSense::GreaterEqual, 0.0,
                                         {{p, 1.0}, {ctx.col("rdn", {w, j, t}), -1.0}});

                // (40)/(41): total boundary power; slow units add fixed
                // trajectory samples tied to startup-type and shutdown events.
                std::vector<std::pair<int, double>> total = {
                    {ctx.col("phat", {w, j, t}), 1.0},
                    {ctx.col("u", {w, j, t}), -th.pmin},
                    {p, -1.0}};
                if (t < T) total.emplace_back(ctx.col("y", {w, j, t + 1}), -th.pmin);
                if (th.start_class == StartClass::Quick) {
                    ctx.model.add_constraint(rname("eq40", {w, j, t}), RowSense::Equal, 0.0,
                                             std::move(total));
                } else {
                    const Trajectory& tr = sp.trajectories[g];
                    for (int k = 0; k < th.num_segments(); ++k) {
                        const int dur = th.su_duration[k];
                        for (int i = 1; i <= dur; ++i) {
                            const int td = t - i + dur + 2;
                            if (td >= 1 && td <= T)
                                total.emplace_back(ctx.col("delta", {w, j, k, td}),
                                                   -tr.su_power[k][i - 1]);
                        }
                    }
                    for (int i = 2; i <= th.sd_duration + 1; ++i) {
                        const int tz = t - i + 2;
                        if (tz >= 1 && tz <= T)
                            total.emplace_back(ctx.col("z", {w, j, tz}), -tr.sd_power[i - 1]);
                    }
                    ctx.model.add_constraint(rname("eq41", {w, j, t}), RowSense::Equal, 0.0,
                                             std::move(total));
                }
            }
        }
}

void build_storage_pb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int s = 0; s < sp.num_storage(); ++s) {
            const int j = sp.tech_index_storage(s);
            const double mcap = sp.storage[s].capacity_limit();
            for (int t = 1; t <= sp.grid.hours; ++t) {
                ctx.model.add_constraint(rname("eq42", {w, j, t}), RowSense::LessEqual, mcap,
                                         {{ctx.col("c", {w, j, t}), 1.0},
                                          {ctx.col("gamma", {w, j, t}), mcap}});
                ctx.model.add_constraint(rname("eq43", {w, j, t}), RowSense::LessEqual, 0.0,
                                         {{ctx.col("phat", {w, j, t}), 1.0},
                                          {ctx.col("gamma", {w, j, t}), -mcap}});
            }
        }
    build_storage_inventory(ctx);
}

void build_flexibility_pb(FormulationContext& ctx) {
    const SystemSpec& sp = ctx.spec;
    const double tau = ctx.opt.tau_minutes;
    const double step = tau / 60.0;
    const double rest = (60.0 - tau) / 60.0;
    for (int w = 0; w < sp.num_scenarios(); ++w)
        for (int t = 1; t <= sp.grid.hours; ++t) {
            for (int g = 0; g < sp.num_thermal(); ++g) {
                const ThermalTech& th = sp.thermal[g];
                const int j = sp.tech_index_thermal(g);
                const int p = ctx.col("p", {w, j, t});
                const int up = ctx.col("rup", {w, j, t});
                const int dn = ctx.col("rdn", {w, j, t});
                // (44)-(45): tau-minute ramp capability.
                std::vector<std::pair<int, double>> c44 = {
                    {p, step}, {up, 1.0}, {ctx.col("u", {w, j, t}), -tau * th.ramp_up}};
                if (t > 1) c44.emplace_back(ctx.col("p", {w, j, t - 1}), -step);
                ctx.model.add_constraint(rname("eq44", {w, j, t}), RowSense::LessEqual, 0.0,
                                         std::move(c44));
                std::vector<std::pair<int, double>> c45 = {{p, step}, {dn, -1.0}};
                if (t > 1) {
                    c45.emplace_back(ctx.col("p", {w, j, t - 1}), -step);
                    c45.emplace_back(ctx.col("u", {w, j, t - 1}), tau * th.ramp_down);
                }
                ctx.model.add_constraint(rname("eq45", {w, j, t}), RowSense::GreaterEqual, 0.0,
                                         std::move(c45));
                // (46)-(47): power-capacity limit at minute tau.
                const double span = th.pmax - th.pmin;
                std::vector<std::pair<int, double>> c46 = {
                    {p, step}, {up, 1.0}, {ctx.col("u", {w, j, t}), -span}};
                if (t > 1 && rest != 0.0) c46.emplace_back(ctx.col("p", {w, j, t - 1}), rest);
                ctx.model.add_constraint(rname("eq46", {w, j, t}), RowSense::LessEqual, 0.0,
                                         std::move(c46));
                std::vector<std::pair<int, double>> c47 = {{p, step}, {dn, -1.0}};
                if (t > 1 && rest != 0.0) c47.emplace_back(ctx.col("p", {w, j, t - 1}), rest);
                ctx.model.add_constraint(rname("eq47", {w, j, t}), RowSense::GreaterEqual, 0.0,
                                         std::move(c47));
            }
            for (int s = 0; s < sp.num_storage(); ++s) {
                const StorageTech& st = sp.storage[s];
                const int j = sp.tech_index_storage(s);
                const int c = ctx.col("c", {w, j, t});
                const int ph = ctx.col("phat", {w, j, t});
                const int up = ctx.col("rup", {w, j, t});
                const int dn = ctx.col("rdn", {w, j, t});
                const int xs = ctx.col("x", {j});
                // (48)/(50): tau-minute combined charge/discharge ramping.
                std::vector<std::pair<int, double>> c48 = {
                    {c, step}, {ph, step}, {up, 1.0}, {xs, -tau * st.ramp_up}};
                if (t > 1) {
                    c48.emplace_back(ctx.col("c", {w, j, t - 1}), -step);
                    c48.emplace_back(ctx.col("phat", {w, j, t - 1}), -step);
                }
                ctx.model.add_constraint(rname("eq48", {w, j, t}), RowSense::LessEqual,
                                         tau * st.ramp_up * st.initial_mw, std::move(c48));
                std::vector<std::pair<int, double>> c50 = {
                    {c, step}, {ph, step}, {dn, -1.0}, {xs, tau * st.ramp_down}};
                if (t > 1) {
                    c50.emplace_back(ctx.col("c", {w, j, t - 1}), -step);
                    c50.emplace_back(ctx.col("phat", {w, j, t - 1}), -step);
                }
                ctx.model.add_constraint(rname("eq50", {w, j, t}), RowSense::GreaterEqual,
                                         -tau * st.ramp_down * st.initial_mw, std::move(c50));
                // (49)/(51): power-capacity limit within the hour.
                std::vector<std::pair<int, double>> c49 = {
                    {c, step}, {ph, step}, {up, 1.0}, {xs, -1.0}};
                if (t > 1 && rest != 0.0) {
                    c49.emplace_back(ctx.col("c", {w, j, t - 1}), rest);
                    c49.emplace_back(ctx.col("phat", {w, j, t - 1}), rest);
                }
                ctx.model.add_constraint(rname("eq49", {w, j, t}), RowSense::LessEqual,
                                         st.initial_mw, std::move(c49));
                std::vector<std::pair<int, double>> c51 = {{c, step}, {ph, step}, {dn, -1.0}};
                if (t > 1 && rest != 0.0) {
                    c51.emplace_back(ctx.col("c", {w, j, t - 1}), rest);
                    c51.emplace_back(ctx.col("phat", {w, j, t - 1}), rest);
                }
                ctx.model.add_constraint(rname("eq51", {w, j, t}), RowSense::GreaterEqual, 0.0,
                                         std::move(c51));
            }
        }
}

BuiltModel build_power_model(const SystemSpec& spec, const PowerFormulationConfig& config) {
    if (!spec.validated)
        throw std::invalid_argument("build_power_model: spec must pass validate_system first");
    if (60.0 / config.options.tau_minutes !=
        std::floor(60.0 / config.options.tau_minutes))
        throw std::invalid_argument("build_power_model: tau must divide 60");
    FormulationContext ctx{spec, config.options, {}, {}};
    create_shared_variables(ctx);
    create_power_variables(ctx);
    build_objective_coeffs(ctx);
    build_energy_coupling(ctx);
    build_system_constraints_pb(ctx);
    build_reserve_requirements(ctx);
    build_thermal_investment_link(ctx);
    build_investment_links_pb(ctx);
    build_uc_logic(ctx);
    build_thermal_output_pb(ctx);
    build_storage_pb(ctx);
    build_flexibility_pb(ctx);
    return BuiltModel{std::move(ctx.model), std::move(ctx.vars)};
}

FormulaCounts predict_counts_power(const SystemSpec& spec, const PowerFormulationConfig& config) {
    const long T = spec.grid.hours;
    const long W = spec.num_scenarios();
    const long G = spec.num_thermal();
    const long S = spec.num_storage();
    const long V = spec.num_renewable();
    const long J = G + S + V;
    const long L = config.options.include_network ? spec.num_lines() : 0;
    long segs = 0, seg_windows = 0, minup_rows = 0, mindown_rows = 0;
    for (const ThermalTech& th : spec.thermal) {
        segs += th.num_segments();
        seg_windows += th.num_segments() - 1;
        minup_rows += std::max<long>(0, T - th.min_up + 1);
        mindown_rows += std::max<long>(0, T - th.min_down + 1);
    }
    FormulaCounts c;
    c.variables = J + W * T * (3 * G + segs + 2 * S + 2 * (G + S) + J  // shared
                               + G + J + 2 * S);                        // p, phat, c, chat
    c.constraints = W * J * T + W * S * T            // (31)-(32)
                    + W * T + 2 * L * W * T          // (33)-(34)
                    + 2 * W * T                      // (4)-(5)
                    + W * G * T                      // (6)
                    + 2 * W * S * T + W * V * T      // (35)-(37)
                    + W * G * T                      // (10)
                    + W * (minup_rows + mindown_rows)
                    + W * seg_windows * T            // (13)
                    + W * G * T                      // (14)
                    + 2 * W * G * T                  // (38)-(39)
                    + W * G * T                      // (40)/(41)
                    + 3 * W * S * T                  // (23)-(25)
                    + 2 * W * S * T                  // (42)-(43)
                    + 4 * W * G * T                  // (44)-(47)
                    + 4 * W * S * T;                 // (48)-(51)
    if (config.options.terminal_soc_floor) c.constraints += W * S;
    return c;
}

}  // namespace flexplan
