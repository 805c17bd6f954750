#include "flexplan/realtime_dispatch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <atomic>
#include <thread>

#include "flexplan/solver.hpp"

namespace flexplan {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int hour_of_step(int k, int spH) { return k / spH + 1; }  // k is 0-based

}  // namespace

ExpandedCommitment expand_commitment(const SystemSpec& spec, const Stage1Solution& sol,
                                     int w) {
    const int spH = spec.grid.steps_per_hour();
    const int N = spec.grid.num_steps();
    const int T = spec.grid.hours;
    const bool power = sol.kind == ModelKind::PB || sol.kind == ModelKind::SRPB;
    const bool energy_traj = sol.kind == ModelKind::EBs;

    ExpandedCommitment ex;
    ex.units.assign(spec.num_thermal(), std::vector<double>(N, 0.0));
    ex.trajectory_mw.assign(spec.num_thermal(), std::vector<double>(N, 0.0));
    ex.prestart_cap_mw.assign(spec.num_thermal(), std::vector<double>(N, 0.0));
    ex.gamma.assign(spec.num_storage(), std::vector<double>(N, 0.0));

    for (int g = 0; g < spec.num_thermal(); ++g) {
        for (int k = 0; k < N; ++k) ex.units[g][k] = sol.u[w][g][hour_of_step(k, spH)];
        const ThermalTech& th = spec.thermal[g];
        if (th.start_class == StartClass::Slow && (power || energy_traj)) {
            const Trajectory& tr = spec.trajectories[g];
            // Boundary powers of one started unit around a commitment at
            // hour ts. Boundary index b carries the power at the end of
            // hour b; boundary 0 is the horizon start.
            for (int seg = 0; seg < th.num_segments(); ++seg) {
                const int dur = th.su_duration[seg];
                for (int ts = 1; ts <= T; ++ts) {
                    double count = sol.delta[w][g][seg][ts];
                    if (count <= 0.5) continue;
                    // Power at boundaries preceding the start.
                    auto boundary_power = [&](int b) -> double {
                        if (power) {
                            // ramp ends at ts-2, holds pmin through ts-1
                            if (b >= ts - 1) return th.pmin;
                            int i = b - (ts - dur - 2);
                            if (i <= 0) return 0.0;
                            return tr.su_power[seg][std::min(i, dur) - 1];
                        }
                        // energy convention: ramp ends exactly at ts-1
                        if (b >= ts) return th.pmin;
                        int i = b - (ts - dur - 1);
                        if (i <= 0) return 0.0;
                        return tr.su_power[seg][i - 1];
                    };
                    int first_hour = power ? ts - dur - 1 : ts - dur;
                    for (int h = std::max(1, first_hour); h <= ts - 1; ++h) {
                        double a = boundary_power(h - 1), b = boundary_power(h);
                        for (int i = 1; i <= spH; ++i)
                            ex.trajectory_mw[g][(h - 1) * spH + i - 1] +=
                                count * (a + (b - a) * static_cast<double>(i) / spH);
                    }
                }
            }
            for (int tz = 1; tz <= T; ++tz) {
                double count = sol.z[w][g][tz];
                if (count <= 0.5) continue;
                const int dur = th.sd_duration;
                auto boundary_power = [&](int b) -> double {
                    // Power at boundary b during the shutdown ramp; at
                    // boundary tz-1 the fleet is still committed.
                    int i = b - (tz - 1);
                    if (i <= 0) return th.pmin;
                    if (power) return i < static_cast<int>(tr.sd_power.size()) - 1
                                          ? tr.sd_power[i + 1]
                                          : 0.0;
                    return i <= dur ? th.pmin * (1.0 - static_cast<double>(i) / dur) : 0.0;
                };
                int last_hour = power ? tz + dur - 1 : tz + dur - 1;
                for (int h = tz; h <= std::min(T, last_hour); ++h) {
                    double a = boundary_power(h - 1), b = boundary_power(h);
                    for (int i = 1; i <= spH; ++i)
                        ex.trajectory_mw[g][(h - 1) * spH + i - 1] +=
                            count * (a + (b - a) * static_cast<double>(i) / spH);
                }
            }
        }
        if (th.start_class == StartClass::Quick && power) {
            // Starting units may ramp toward SU during the hour before
            // commitment; the envelope grows linearly to the boundary.
            for (int ts = 2; ts <= T; ++ts) {
                double count = sol.y[w][g][ts];
                if (count <= 0.5) continue;
                for (int i = 1; i <= spH; ++i)
                    ex.prestart_cap_mw[g][(ts - 2) * spH + i - 1] +=
                        count * th.su_capability * static_cast<double>(i) / spH;
            }
        }
    }
    for (int s = 0; s < spec.num_storage(); ++s)
        for (int k = 0; k < N; ++k) ex.gamma[s][k] = sol.gamma[w][s][hour_of_step(k, spH)];
    return ex;
}

DispatchResult run_dispatch_scenario(const SystemSpec& spec, const Stage1Solution& sol, int w,
                                     const DispatchOptions& opt) {
    const int spH = spec.grid.steps_per_hour();
    const int N = spec.grid.num_steps();
    const int G = spec.num_thermal(), S = spec.num_storage(), V = spec.num_renewable();
    const double dt = spec.grid.sub_step_minutes / 60.0;
    const double tau = spec.grid.sub_step_minutes;
    const bool network = opt.enforce_network && spec.num_lines() > 0;
    ExpandedCommitment ex = expand_commitment(spec, sol, w);

    MilpModel m;
    VariableMap vars;
    auto make = [&](const char* sym, std::vector<int> idx, double lb, double ub, double obj) {
        VarKey key{sym, std::move(idx)};
        int c = m.add_variable(VariableMap::variable_name(key), lb, ub, VarKind::Continuous, obj);
        vars.bind(std::move(key), c);
        return c;
    };

    // Fixed per-step baseline output (committed minimum + trajectories).
    std::vector<std::vector<double>> base(G, std::vector<double>(N, 0.0));
    for (int g = 0; g < G; ++g)
        for (int k = 0; k < N; ++k)
            base[g][k] = spec.thermal[g].pmin * ex.units[g][k] + ex.trajectory_mw[g][k];

    const double pen_e = opt.nse_penalty * dt;          // $ per MW-step
    const double pen_r = opt.reserve_shortfall_penalty * dt;
    for (int g = 0; g < G; ++g) {
        const ThermalTech& th = spec.thermal[g];
        const double cost = (th.var_cost + th.emission_cost()) * dt;
        for (int k = 0; k < N; ++k) {
            double span = (th.pmax - th.pmin) * ex.units[g][k];
            make("a", {g, k}, 0.0, span, cost);
            make("pre", {g, k}, 0.0, ex.prestart_cap_mw[g][k],
                 ex.prestart_cap_mw[g][k] > 0 ? cost : 0.0);
            make("sup", {g, k}, 0.0, kInf, pen_r);
            make("sdn", {g, k}, 0.0, kInf, pen_r);
        }
    }
    for (int s = 0; s < S; ++s) {
        const StorageTech& st = spec.storage[s];
        const double cap = st.initial_mw + sol.investments[spec.tech_index_storage(s)];
        for (int k = 0; k < N; ++k) {
            double dmax = cap, cmax = cap;
            if (opt.fix_storage_mode) {
                dmax = ex.gamma[s][k] > 0.5 ? cap : 0.0;
                cmax = ex.gamma[s][k] > 0.5 ? 0.0 : cap;
            }
            make("d", {s, k}, 0.0, dmax, st.var_cost * dt);
            make("c", {s, k}, 0.0, cmax, 0.0);
            make("soc", {s, k}, 0.0, st.energy_to_power * cap, 0.0);
            make("supS", {s, k}, 0.0, kInf, pen_r);
            make("sdnS", {s, k}, 0.0, kInf, pen_r);
        }
    }
    for (int v = 0; v < V; ++v) {
        const RenewableTech& rv = spec.renewable[v];
        const double cap = rv.initial_mw + sol.investments[spec.tech_index_renewable(v)];
        for (int k = 0; k < N; ++k)
            make("pv", {v, k}, 0.0, rv.availability[w][k] * cap, rv.var_cost * dt);
    }
    const int nslack = network ? spec.num_buses() : 1;
    for (int b = 0; b < nslack; ++b)
        for (int k = 0; k < N; ++k) {
            make("nse", {b, k}, 0.0, kInf, pen_e);
            make("spill", {b, k}, 0.0, kInf, pen_e);
        }

    // Per-step system balance and optional flow limits.
    for (int k = 0; k < N; ++k) {
        std::vector<std::pair<int, double>> bal;
        double rhs = 0.0;
        for (int b = 0; b < spec.num_buses(); ++b)
            if (!spec.scenarios[w].demand[b].empty()) rhs += spec.scenarios[w].demand[b][k];
        for (int g = 0; g < G; ++g) {
            bal.emplace_back(vars.column({"a", {g, k}}), 1.0);
            bal.emplace_back(vars.column({"pre", {g, k}}), 1.0);
            rhs -= base[g][k];
        }
        for (int s = 0; s < S; ++s) {
            bal.emplace_back(vars.column({"d", {s, k}}), 1.0);
            bal.emplace_back(vars.column({"c", {s, k}}), -1.0);
        }
        for (int v = 0; v < V; ++v) bal.emplace_back(vars.column({"pv", {v, k}}), 1.0);
        for (int b = 0; b < nslack; ++b) {
            bal.emplace_back(vars.column({"nse", {b, k}}), 1.0);
            bal.emplace_back(vars.column({"spill", {b, k}}), -1.0);
        }
        m.add_constraint(rname("bal", {k}), RowSense::Equal, rhs, std::move(bal));

        if (network) {
            for (int l = 0; l < spec.num_lines(); ++l) {
                std::vector<std::pair<int, double>> flow;
                double frhs = 0.0;
                auto add = [&](int col, int bus, double sign) {
                    double gamma = spec.shift_factors[l][bus];
                    if (gamma != 0.0) flow.emplace_back(col, sign * gamma);
                };
                for (int g = 0; g < G; ++g) {
                    add(vars.column({"a", {g, k}}), spec.thermal[g].bus, 1.0);
                    add(vars.column({"pre", {g, k}}), spec.thermal[g].bus, 1.0);
                    frhs -= spec.shift_factors[l][spec.thermal[g].bus] * base[g][k];
                }
                for (int s = 0; s < S; ++s) {
                    add(vars.column({"d", {s, k}}), spec.storage[s].bus, 1.0);
                    add(vars.column({"c", {s, k}}), spec.storage[s].bus, -1.0);
                }
                for (int v = 0; v < V; ++v)
                    add(vars.column({"pv", {v, k}}), spec.renewable[v].bus, 1.0);
                for (int b = 0; b < spec.num_buses(); ++b) {
                    add(vars.column({"nse", {b, k}}), b, 1.0);
                    add(vars.column({"spill", {b, k}}), b, -1.0);
                    if (!spec.scenarios[w].demand[b].empty())
                        frhs += spec.shift_factors[l][b] * spec.scenarios[w].demand[b][k];
                }
                double lim = spec.network.lines[l].limit_mw;
                m.add_constraint(rname("fhi", {l, k}), RowSense::LessEqual, lim + frhs, flow);
                m.add_constraint(rname("flo", {l, k}), RowSense::GreaterEqual, -lim + frhs,
                                 std::move(flow));
            }
        }
    }

    // Thermal: reserve headroom/footroom with shortfall slacks, step ramps.
    for (int g = 0; g < G; ++g) {
        const ThermalTech& th = spec.thermal[g];
        for (int k = 0; k < N; ++k) {
            const int h = hour_of_step(k, spH);
            const int j = spec.tech_index_thermal(g);
            double headroom = (th.pmax - th.pmin) * ex.units[g][k] - sol.rup[w][j][h];
            m.add_constraint(rname("head", {g, k}), RowSense::LessEqual, headroom,
                             {{vars.column({"a", {g, k}}), 1.0},
                              {vars.column({"sup", {g, k}}), -1.0}});
            m.add_constraint(rname("foot", {g, k}), RowSense::GreaterEqual, sol.rdn[w][j][h],
                             {{vars.column({"a", {g, k}}), 1.0},
                              {vars.column({"sdn", {g, k}}), 1.0}});
            std::vector<std::pair<int, double>> rampup = {{vars.column({"a", {g, k}}), 1.0}};
            if (k > 0) rampup.emplace_back(vars.column({"a", {g, k - 1}}), -1.0);
            m.add_constraint(rname("rampup", {g, k}), RowSense::LessEqual,
                             tau * th.ramp_up * ex.units[g][k], std::move(rampup));
            std::vector<std::pair<int, double>> rampdn = {{vars.column({"a", {g, k}}), 1.0}};
            double prev_units = k > 0 ? ex.units[g][k - 1] : 0.0;
            if (k > 0) rampdn.emplace_back(vars.column({"a", {g, k - 1}}), -1.0);
            m.add_constraint(rname("rampdn", {g, k}), RowSense::GreaterEqual,
                             -tau * th.ramp_down * prev_units, std::move(rampdn));
        }
    }

    // Storage: power headroom with shortfall slacks and the SoC recursion.
    for (int s = 0; s < S; ++s) {
        const StorageTech& st = spec.storage[s];
        const int j = spec.tech_index_storage(s);
        const double cap = st.initial_mw + sol.investments[j];
        const double soc0 = st.initial_soc_fraction * st.energy_to_power * cap;
        for (int k = 0; k < N; ++k) {
            const int h = hour_of_step(k, spH);
            m.add_constraint(rname("sheadS", {s, k}), RowSense::LessEqual,
                             cap - sol.rup[w][j][h],
                             {{vars.column({"d", {s, k}}), 1.0},
                              {vars.column({"c", {s, k}}), -1.0},
                              {vars.column({"supS", {s, k}}), -1.0}});
            m.add_constraint(rname("sfootS", {s, k}), RowSense::GreaterEqual,
                             -cap + sol.rdn[w][j][h],
                             {{vars.column({"d", {s, k}}), 1.0},
                              {vars.column({"c", {s, k}}), -1.0},
                              {vars.column({"sdnS", {s, k}}), 1.0}});
            std::vector<std::pair<int, double>> soc = {
                {vars.column({"soc", {s, k}}), 1.0},
                {vars.column({"c", {s, k}}), -st.efficiency * dt},
                {vars.column({"d", {s, k}}), dt}};
            double rhs = 0.0;
            if (k > 0)
                soc.emplace_back(vars.column({"soc", {s, k - 1}}), -1.0);
            else
                rhs = soc0;
            m.add_constraint(rname("soc", {s, k}), RowSense::Equal, rhs, std::move(soc));
            if (opt.soc_floor && (k + 1) % spH == 0)
                m.add_constraint(rname("socfloor", {s, k}), RowSense::GreaterEqual,
                                 sol.phi[w][s][h], {{vars.column({"soc", {s, k}}), 1.0}});
        }
    }

    SolveOptions so;
    so.gap = 1e-9;
    SolveResult res = solve(m, so);
    if (res.status != SolveStatus::OptimalWithinGap)
        throw PipelineError("stage-2 dispatch LP did not solve: " + to_string(res.status));

    DispatchResult out;
    out.scenario = w;
    out.thermal_mw.assign(G, std::vector<double>(N, 0.0));
    out.discharge_mw.assign(S, std::vector<double>(N, 0.0));
    out.charge_mw.assign(S, std::vector<double>(N, 0.0));
    out.soc_mwh.assign(S, std::vector<double>(N, 0.0));
    out.renewable_mw.assign(V, std::vector<double>(N, 0.0));
    out.nse_mw.assign(N, 0.0);
    out.spill_mw.assign(N, 0.0);
    const std::vector<double>& x = res.values;
    for (int k = 0; k < N; ++k) {
        for (int g = 0; g < G; ++g)
            out.thermal_mw[g][k] = base[g][k] + x[vars.column({"a", {g, k}})] +
                                   x[vars.column({"pre", {g, k}})];
        for (int s = 0; s < S; ++s) {
            out.discharge_mw[s][k] = x[vars.column({"d", {s, k}})];
            out.charge_mw[s][k] = x[vars.column({"c", {s, k}})];
            out.soc_mwh[s][k] = x[vars.column({"soc", {s, k}})];
        }
        for (int v = 0; v < V; ++v) out.renewable_mw[v][k] = x[vars.column({"pv", {v, k}})];
        for (int b = 0; b < nslack; ++b) {
            out.nse_mw[k] += x[vars.column({"nse", {b, k}})];
            out.spill_mw[k] += x[vars.column({"spill", {b, k}})];
        }
        out.nse_mwh += out.nse_mw[k] * dt;
        out.spill_mwh += out.spill_mw[k] * dt;
        for (int g = 0; g < G; ++g)
            out.reserve_shortfall_mw =
                std::max({out.reserve_shortfall_mw, x[vars.column({"sup", {g, k}})],
                          x[vars.column({"sdn", {g, k}})]});
        for (int s = 0; s < S; ++s)
            out.reserve_shortfall_mw =
                std::max({out.reserve_shortfall_mw, x[vars.column({"supS", {s, k}})],
                          x[vars.column({"sdnS", {s, k}})]});
    }

    // Costs recomputed from the extracted series.
    for (int k = 0; k < N; ++k) {
        for (int g = 0; g < G; ++g)
            out.variable_cost += (spec.thermal[g].var_cost + spec.thermal[g].emission_cost()) *
                                 out.thermal_mw[g][k] * dt;
        for (int s = 0; s < S; ++s)
            out.variable_cost += spec.storage[s].var_cost * out.discharge_mw[s][k] * dt;
        for (int v = 0; v < V; ++v)
            out.variable_cost += spec.renewable[v].var_cost * out.renewable_mw[v][k] * dt;
        out.penalty_cost += pen_e * (out.nse_mw[k] + out.spill_mw[k]);
    }
    for (int g = 0; g < G; ++g)
        for (int k = 0; k < N; ++k)
            out.penalty_cost += pen_r * (x[vars.column({"sup", {g, k}})] +
                                         x[vars.column({"sdn", {g, k}})]);
    for (int s = 0; s < S; ++s)
        for (int k = 0; k < N; ++k)
            out.penalty_cost += pen_r * (x[vars.column({"supS", {s, k}})] +
                                         x[vars.column({"sdnS", {s, k}})]);

    // Balance and SoC residuals from the raw series.
    for (int k = 0; k < N; ++k) {
        double lhs = 0.0;
        for (int g = 0; g < G; ++g) lhs += out.thermal_mw[g][k];
        for (int v = 0; v < V; ++v) lhs += out.renewable_mw[v][k];
        for (int s = 0; s < S; ++s) lhs += out.discharge_mw[s][k] - out.charge_mw[s][k];
        lhs += out.nse_mw[k] - out.spill_mw[k];
        double demand = 0.0;
        for (int b = 0; b < spec.num_buses(); ++b)
            if (!spec.scenarios[w].demand[b].empty()) demand += spec.scenarios[w].demand[b][k];
        out.max_balance_residual = std::max(out.max_balance_residual, std::abs(lhs - demand));
    }
    for (int s = 0; s < S; ++s) {
        const StorageTech& st = spec.storage[s];
        double cap = st.initial_mw + sol.investments[spec.tech_index_storage(s)];
        double prev = st.initial_soc_fraction * st.energy_to_power * cap;
        for (int k = 0; k < N; ++k) {
            double expect =
                prev + (st.efficiency * out.charge_mw[s][k] - out.discharge_mw[s][k]) * dt;
            out.max_soc_residual =
                std::max(out.max_soc_residual, std::abs(out.soc_mwh[s][k] - expect));
            prev = out.soc_mwh[s][k];
        }
    }
    compute_deviations(spec, sol, out);
    return out;
}

void compute_deviations(const SystemSpec& spec, const Stage1Solution& sol,
                        DispatchResult& out) {
    const int spH = spec.grid.steps_per_hour();
    const int N = spec.grid.num_steps();
    const int T = spec.grid.hours;
    const int w = out.scenario;
    const double dt = spec.grid.sub_step_minutes / 60.0;
    const bool power = sol.kind == ModelKind::PB || sol.kind == ModelKind::SRPB;

    out.deviation_mwh.assign(T + 1, 0.0);
    out.deviation_pct.assign(T + 1, 0.0);
    out.deviation_step_mw.assign(N, 0.0);
    for (int t = 1; t <= T; ++t) {
        double scheduled = 0.0;
        for (int g = 0; g < spec.num_thermal(); ++g)
            scheduled += sol.ehat[w][spec.tech_index_thermal(g)][t];
        double dispatched = 0.0;
        for (int g = 0; g < spec.num_thermal(); ++g)
            for (int k = (t - 1) * spH; k < t * spH; ++k)
                dispatched += out.thermal_mw[g][k] * dt;
        out.deviation_mwh[t] = dispatched - scheduled;
        out.deviation_pct[t] =
            std::abs(scheduled) > 1e-9 ? 100.0 * out.deviation_mwh[t] / scheduled : 0.0;
    }
    for (int k = 0; k < N; ++k) {
        const int t = hour_of_step(k, spH);
        double sched_power = 0.0;
        for (int g = 0; g < spec.num_thermal(); ++g) {
            const int j = spec.tech_index_thermal(g);
            if (power) {
                double a = t > 1 ? sol.phat[w][j][t - 1] : 0.0;
                double b = sol.phat[w][j][t];
                sched_power += a + (b - a) * static_cast<double>(k % spH + 1) / spH;
            } else {
                sched_power += sol.ehat[w][j][t];
            }
        }
        double dispatched = 0.0;
        for (int g = 0; g < spec.num_thermal(); ++g) dispatched += out.thermal_mw[g][k];
        out.deviation_step_mw[k] = dispatched - sched_power;
    }
}

StageTwoResult run_dispatch(const SystemSpec& spec, const Stage1Solution& sol,
                            const DispatchOptions& opt) {
    double t0 = now_seconds();
    StageTwoResult out;
    out.scenarios.resize(spec.num_scenarios());
    int threads = std::max(1, std::min<int>(opt.max_threads, spec.num_scenarios()));
    if (threads <= 1) {
        for (int w = 0; w < spec.num_scenarios(); ++w)
            out.scenarios[w] = run_dispatch_scenario(spec, sol, w, opt);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> errors(threads);
        for (int i = 0; i < threads; ++i)
            pool.emplace_back([&, i] {
                try {
                    for (int w = next.fetch_add(1); w < spec.num_scenarios();
                         w = next.fetch_add(1))
                        out.scenarios[w] = run_dispatch_scenario(spec, sol, w, opt);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (int w = 0; w < spec.num_scenarios(); ++w) {
        const double pi = spec.scenarios[w].probability;
        out.dispatch_cost +=
            pi * (out.scenarios[w].variable_cost + out.scenarios[w].penalty_cost);
        out.nse_mwh += pi * out.scenarios[w].nse_mwh;
    }
    // Commitment-linked stage-1 costs are constants in stage 2; re-add them
    // so operating cost stays comparable across stages.
    for (int w = 0; w < spec.num_scenarios(); ++w) {
        const double pi = spec.scenarios[w].probability;
        double fixed = 0.0;
        for (int t = 1; t <= spec.grid.hours; ++t) {
            for (int g = 0; g < spec.num_thermal(); ++g) {
                const ThermalTech& th = spec.thermal[g];
                const int j = spec.tech_index_thermal(g);
                fixed += th.no_load_cost * sol.u[w][g][t] + th.sd_cost * sol.z[w][g][t];
                for (int k = 0; k < th.num_segments(); ++k)
                    fixed += th.startup_segments[k].cost * sol.delta[w][g][k][t];
                fixed += th.reserve_cost_up * sol.rup[w][j][t] +
                         th.reserve_cost_down * sol.rdn[w][j][t];
            }
            for (int s = 0; s < spec.num_storage(); ++s) {
                const int j = spec.tech_index_storage(s);
                fixed += spec.storage[s].reserve_cost_up * sol.rup[w][j][t] +
                         spec.storage[s].reserve_cost_down * sol.rdn[w][j][t];
            }
        }
        out.commitment_cost += pi * fixed;
    }
    out.operating_cost = out.dispatch_cost + out.commitment_cost;
    out.wall_seconds = now_seconds() - t0;
    return out;
}

}  // namespace flexplan
