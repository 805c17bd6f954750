#include "flexplan/planning_pipeline.hpp"

#include <cmath>
#include <sstream>

namespace flexplan {

namespace {

constexpr double kIntRound = 1e-4;

double rounded_int(double v) { return std::round(v); }

void check(bool ok, const std::string& what) {
    if (!ok) throw PipelineError("stage-1 extraction check failed: " + what);
}

}  // namespace

double Stage1Solution::installed_mw(const SystemSpec& spec, int j) const {
    if (j < spec.num_thermal()) return 0.0;  // thermal investments are unit counts
    int s = j - spec.num_thermal();
    if (s < spec.num_storage()) return spec.storage[s].initial_mw + investments[j];
    int v = j - spec.num_thermal() - spec.num_storage();
    return spec.renewable[v].initial_mw + investments[j];
}

BuiltModel build_stage1_model(const SystemSpec& spec, ModelKind kind, const BuildOptions& opt) {
    switch (kind) {
        case ModelKind::EB:
        case ModelKind::EBs: {
            EnergyFormulationConfig cfg;
            cfg.variant = kind;
            cfg.options = opt;
            return build_energy_model(spec, cfg);
        }
        case ModelKind::PB:
        case ModelKind::SRPB: {
            PowerFormulationConfig cfg;
            cfg.options = opt;
            return build_power_model(spec, cfg);
        }
    }
    throw std::logic_error("build_stage1_model: bad kind");
}

namespace {

Series3 empty3(int w, int a, int t) {
    return Series3(w, std::vector<std::vector<double>>(a, std::vector<double>(t + 1, 0.0)));
}

Stage1Solution extract_solution(const SystemSpec& spec, ModelKind kind, const BuiltModel& built,
                                const SolveResult& res, const BuildOptions& bopt) {
    const int W = spec.num_scenarios(), G = spec.num_thermal(), S = spec.num_storage();
    const int J = spec.num_tech(), T = spec.grid.hours;
    const bool power = kind == ModelKind::PB || kind == ModelKind::SRPB;
    const std::vector<double>& x = res.values;
    auto at = [&](const char* sym, std::vector<int> idx) {
        return x[built.vars.column({sym, std::move(idx)})];
    };

    Stage1Solution sol;
    sol.kind = kind;
    sol.build = bopt;
    sol.stats = res;
    sol.stats.values.clear();  // bundle carries structured series instead

    sol.investments.resize(J);
    for (int j = 0; j < J; ++j) {
        double v = at("x", {j});
        sol.investments[j] = j < G || bopt.integer_storage_investment ? rounded_int(v) : v;
        if (j < G) check(std::abs(v - sol.investments[j]) <= kIntRound, "integral investment");
    }
    sol.u = empty3(W, G, T);
    sol.y = empty3(W, G, T);
    sol.z = empty3(W, G, T);
    sol.gamma = empty3(W, S, T);
    sol.rup = empty3(W, J, T);
    sol.rdn = empty3(W, J, T);
    sol.ehat = empty3(W, J, T);
    sol.chat = empty3(W, S, T);
    sol.phi = empty3(W, S, T);
    if (power) {
        sol.phat = empty3(W, J, T);
        sol.charge_power = empty3(W, S, T);
    }
    sol.delta.assign(W, {});
    for (int w = 0; w < W; ++w) {
        sol.delta[w].resize(G);
        for (int g = 0; g < G; ++g) {
            const int j = spec.tech_index_thermal(g);
            sol.delta[w][g].assign(spec.thermal[g].num_segments(),
                                   std::vector<double>(T + 1, 0.0));
            for (int t = 1; t <= T; ++t) {
                sol.u[w][g][t] = rounded_int(at("u", {w, j, t}));
                sol.y[w][g][t] = rounded_int(at("y", {w, j, t}));
                sol.z[w][g][t] = rounded_int(at("z", {w, j, t}));
                check(std::abs(sol.u[w][g][t] - at("u", {w, j, t})) <= kIntRound,
                      "integral commitment");
                for (int k = 0; k < spec.thermal[g].num_segments(); ++k)
                    sol.delta[w][g][k][t] = rounded_int(at("delta", {w, j, k, t}));
            }
        }
        for (int s = 0; s < S; ++s) {
            const int j = spec.tech_index_storage(s);
            for (int t = 1; t <= T; ++t) {
                sol.gamma[w][s][t] = rounded_int(at("gamma", {w, j, t}));
                sol.chat[w][s][t] = at("chat", {w, j, t});
                sol.phi[w][s][t] = at("phi", {w, j, t});
                if (power) sol.charge_power[w][s][t] = at("c", {w, j, t});
            }
        }
        for (int j = 0; j < J; ++j)
            for (int t = 1; t <= T; ++t) {
                sol.ehat[w][j][t] = at("ehat", {w, j, t});
                if (power) sol.phat[w][j][t] = at("phat", {w, j, t});
                if (j < G + S) {
                    sol.rup[w][j][t] = at("rup", {w, j, t});
                    sol.rdn[w][j][t] = at("rdn", {w, j, t});
                }
            }
    }

    // Commitment logic must hold exactly on the extracted integers.
    for (int w = 0; w < W; ++w)
        for (int g = 0; g < G; ++g)
            for (int t = 1; t <= T; ++t) {
                double prev = t > 1 ? sol.u[w][g][t - 1] : 0.0;
                check(std::abs((sol.u[w][g][t] - prev) - (sol.y[w][g][t] - sol.z[w][g][t])) <
                          0.5,
                      "commitment step equation");
                double dsum = 0.0;
                for (int k = 0; k < spec.thermal[g].num_segments(); ++k)
                    dsum += sol.delta[w][g][k][t];
                check(std::abs(dsum - sol.y[w][g][t]) < 0.5, "startup-type total");
            }

    // Objective decomposition, recomputed from the solution vector.
    for (int g = 0; g < G; ++g)
        sol.breakdown.invest_thermal +=
            spec.thermal[g].invest_cost * sol.investments[spec.tech_index_thermal(g)];
    for (int s = 0; s < S; ++s)
        sol.breakdown.invest_ess +=
            spec.storage[s].invest_cost * sol.investments[spec.tech_index_storage(s)];
    for (int v = 0; v < spec.num_renewable(); ++v)
        sol.breakdown.invest_vres +=
            spec.renewable[v].invest_cost * sol.investments[spec.tech_index_renewable(v)];
    for (int w = 0; w < W; ++w) {
        const double pi = spec.scenarios[w].probability;
        double op = 0.0;
        for (int t = 1; t <= T; ++t) {
            for (int g = 0; g < G; ++g) {
                const ThermalTech& th = spec.thermal[g];
                const int j = spec.tech_index_thermal(g);
                op += (th.var_cost + th.emission_cost()) * sol.ehat[w][j][t];
                op += th.no_load_cost * sol.u[w][g][t] + th.sd_cost * sol.z[w][g][t];
                for (int k = 0; k < th.num_segments(); ++k)
                    op += th.startup_segments[k].cost * sol.delta[w][g][k][t];
                op += th.reserve_cost_up * sol.rup[w][j][t] +
                      th.reserve_cost_down * sol.rdn[w][j][t];
            }
            for (int s = 0; s < S; ++s) {
                const StorageTech& st = spec.storage[s];
                const int j = spec.tech_index_storage(s);
                op += st.var_cost * sol.ehat[w][j][t];
                op += st.reserve_cost_up * sol.rup[w][j][t] +
                      st.reserve_cost_down * sol.rdn[w][j][t];
            }
            for (int v = 0; v < spec.num_renewable(); ++v)
                op += spec.renewable[v].var_cost * sol.ehat[w][spec.tech_index_renewable(v)][t];
        }
        sol.breakdown.operating += pi * op;
    }
    double rel = std::abs(sol.breakdown.total() - res.objective) /
                 std::max(1.0, std::abs(res.objective));
    check(rel < 1e-6, "objective decomposition mismatch (" + std::to_string(rel) + ")");
    return sol;
}

std::string infeasible_message(const SolveResult& res) {
    std::ostringstream os;
    os << "stage-1 model " << to_string(res.status);
    if (!res.infeasibility_hint.empty()) os << ": " << res.infeasibility_hint;
    return os.str();
}

}  // namespace

std::vector<FixAssignment> extract_fixing_plan(const Stage1Solution& sol,
                                               const SystemSpec& spec) {
    std::vector<FixAssignment> plan;
    const int W = spec.num_scenarios(), G = spec.num_thermal(), S = spec.num_storage();
    for (int j = 0; j < spec.num_tech(); ++j)
        plan.push_back({{"x", {j}}, sol.investments[j]});
    for (int w = 0; w < W; ++w) {
        for (int g = 0; g < G; ++g) {
            const int j = spec.tech_index_thermal(g);
            for (int t = 1; t <= spec.grid.hours; ++t) {
                plan.push_back({{"u", {w, j, t}}, sol.u[w][g][t]});
                plan.push_back({{"y", {w, j, t}}, sol.y[w][g][t]});
                plan.push_back({{"z", {w, j, t}}, sol.z[w][g][t]});
                for (int k = 0; k < spec.thermal[g].num_segments(); ++k)
                    plan.push_back({{"delta", {w, j, k, t}}, sol.delta[w][g][k][t]});
                plan.push_back({{"rup", {w, j, t}}, sol.rup[w][j][t]});
                plan.push_back({{"rdn", {w, j, t}}, sol.rdn[w][j][t]});
            }
        }
        for (int s = 0; s < S; ++s) {
            const int j = spec.tech_index_storage(s);
            for (int t = 1; t <= spec.grid.hours; ++t) {
                plan.push_back({{"gamma", {w, j, t}}, sol.gamma[w][s][t]});
                plan.push_back({{"rup", {w, j, t}}, sol.rup[w][j][t]});
                plan.push_back({{"rdn", {w, j, t}}, sol.rdn[w][j][t]});
            }
        }
    }
    return plan;
}

namespace {

// The fixing plan applied back to the stage-1 model must reproduce the
// stage-1 objective; with every discrete decision pinned this is a single LP.
void assert_fixing_round_trip(const SystemSpec& spec, const BuiltModel& built,
                              const Stage1Solution& sol, const PipelineOptions& opt) {
    MilpModel pinned = fix_variables(built.model, built.vars, extract_fixing_plan(sol, spec));
    SolveOptions so;
    so.gap = 1e-9;
    so.time_limit_s = opt.time_limit_s;
    SolveResult res = solve(pinned, so);
    if (res.status != SolveStatus::OptimalWithinGap)
        throw PipelineError("fixing-plan round-trip did not re-solve: " +
                            infeasible_message(res));
    double tol = (opt.gap + 1e-6) * std::max(1.0, std::abs(sol.stats.objective));
    if (!(res.objective <= sol.stats.objective + tol))
        throw PipelineError("fixing-plan round-trip exceeded the stage-1 objective");
}

}  // namespace

Stage1Solution run_stage1(const SystemSpec& spec, ModelKind kind, const PipelineOptions& opt) {
    if (kind == ModelKind::SRPB) return run_stage1_semirelaxed(spec, opt);
    BuiltModel built = build_stage1_model(spec, kind, opt.build);
    SolveOptions so;
    so.gap = opt.gap;
    so.time_limit_s = opt.time_limit_s;
    so.seed = opt.seed;
    so.branch_priority = branch_priorities(built.model, built.vars);
    SolveResult res = solve(built.model, so);
    if (res.status != SolveStatus::OptimalWithinGap) throw PipelineError(infeasible_message(res));
    Stage1Solution sol = extract_solution(spec, kind, built, res, opt.build);
    assert_fixing_round_trip(spec, built, sol, opt);
    return sol;
}

Stage1Solution run_stage1_semirelaxed(const SystemSpec& spec, const PipelineOptions& opt) {
    BuiltModel built = build_stage1_model(spec, ModelKind::SRPB, opt.build);
    SolveOptions so;
    so.gap = opt.gap;
    so.time_limit_s = opt.time_limit_s;
    so.seed = opt.seed;
    so.branch_priority = branch_priorities(built.model, built.vars);

    // Stage 1a: continuous UC, integer investments.
    MilpModel relaxed =
        relax_integrality(built.model, built.vars, {"u", "y", "z", "delta", "gamma"});
    SolveResult res_a = solve(relaxed, so);
    if (res_a.status != SolveStatus::OptimalWithinGap)
        throw PipelineError("stage 1a: " + infeasible_message(res_a));

    // Stage 1b: investments fixed, integer UC.
    std::vector<FixAssignment> fix_x;
    for (int j = 0; j < spec.num_tech(); ++j) {
        double v = res_a.values[built.vars.column({"x", {j}})];
        if (j < spec.num_thermal() || opt.build.integer_storage_investment) v = std::round(v);
        fix_x.push_back({{"x", {j}}, v});
    }
    MilpModel stage_b = fix_variables(built.model, built.vars, fix_x);
    SolveResult res_b = solve(stage_b, so);
    if (res_b.status != SolveStatus::OptimalWithinGap)
        throw PipelineError(
            "stage 1b infeasible under the fixed investments (not re-expanding): " +
            infeasible_message(res_b));

    Stage1Solution sol = extract_solution(spec, ModelKind::SRPB, built, res_b, opt.build);
    sol.stage1a_objective = res_a.objective;
    sol.has_stage1a = true;
    double tol = (opt.gap + 1e-9) * std::max(1.0, std::abs(res_b.objective));
    if (!(res_a.objective <= res_b.objective + tol))
        throw PipelineError("relaxation bound violated: stage 1a above stage 1b");
    assert_fixing_round_trip(spec, built, sol, opt);
    return sol;
}

}  // namespace flexplan
