#pragma once

// Exhaustive stage-1 oracle for tiny instances: enumerates every integer
// commitment/mode/investment sequence and solves the inner LP for each,
// independent of the branch-and-bound search it validates. Supports one
// thermal cluster (single startup segment), at most one storage, and one
// scenario.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "flexplan/planning_pipeline.hpp"
#include "flexplan/solver.hpp"

namespace oracles {

using namespace flexplan;

struct BruteForceOutcome {
    bool feasible = false;
    double objective = 0.0;
    int best_x = -1;
    long combinations = 0;
};

inline BruteForceOutcome brute_force_stage1(const SystemSpec& spec, ModelKind kind,
                                            const BuildOptions& bopt) {
    if (spec.num_thermal() != 1 || spec.num_scenarios() != 1 || spec.num_storage() > 1 ||
        spec.thermal[0].num_segments() != 1)
        throw std::invalid_argument("brute_force_stage1: unsupported shape");
    const int T = spec.grid.hours;
    const ThermalTech& th = spec.thermal[0];
    BuiltModel built = build_stage1_model(spec, kind, bopt);

    BruteForceOutcome out;
    std::vector<int> upath(T + 1, 0);
    std::vector<int> gpath(T + 1, 0);

    std::function<void(int, int)> enum_gamma;
    auto evaluate = [&](int x) {
        std::vector<FixAssignment> fixes;
        fixes.push_back({{"x", {0}}, static_cast<double>(x)});
        for (int t = 1; t <= T; ++t) {
            int prev = t > 1 ? upath[t - 1] : 0;
            int dy = std::max(upath[t] - prev, 0);
            int dz = std::max(prev - upath[t], 0);
            fixes.push_back({{"u", {0, 0, t}}, static_cast<double>(upath[t])});
            fixes.push_back({{"y", {0, 0, t}}, static_cast<double>(dy)});
            fixes.push_back({{"z", {0, 0, t}}, static_cast<double>(dz)});
            fixes.push_back({{"delta", {0, 0, 0, t}}, static_cast<double>(dy)});
        }
        if (spec.num_storage() == 1) {
            const int j = spec.tech_index_storage(0);
            for (int t = 1; t <= T; ++t)
                fixes.push_back({{"gamma", {0, j, t}}, static_cast<double>(gpath[t])});
        }
        MilpModel pinned = fix_variables(built.model, built.vars, fixes);
        SolveOptions so;
        so.gap = 1e-9;
        SolveResult res = solve(pinned, so);
        ++out.combinations;
        if (res.status != SolveStatus::OptimalWithinGap) return;
        if (!out.feasible || res.objective < out.objective) {
            out.feasible = true;
            out.objective = res.objective;
            out.best_x = x;
        }
    };
    enum_gamma = [&](int t, int x) {
        if (spec.num_storage() == 0 || t > T) {
            evaluate(x);
            return;
        }
        for (int g = 0; g <= 1; ++g) {
            gpath[t] = g;
            enum_gamma(t + 1, x);
        }
    };
    std::function<void(int, int)> enum_u = [&](int t, int x) {
        if (t > T) {
            if (spec.num_storage() == 1)
                enum_gamma(1, x);
            else
                evaluate(x);
            return;
        }
        for (int u = 0; u <= th.initial_units + x; ++u) {
            upath[t] = u;
            enum_u(t + 1, x);
        }
    };
    for (int x = 0; x <= th.max_new_units; ++x) enum_u(1, x);
    return out;
}

}  // namespace oracles
