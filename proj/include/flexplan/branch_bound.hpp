#pragma once

// Branch-and-bound MILP search over the bounded simplex. Best-bound node
// selection, most-fractional branching within priority classes, and a
// fix-and-dive rounding heuristic for early incumbents.

#include <string>
#include <vector>

#include "flexplan/simplex.hpp"

namespace flexplan {

struct MipProblem {
    LpProblem lp;
    std::vector<uint8_t> is_integer;  // per column
    std::vector<int> branch_priority; // optional, lower = branch earlier
};

enum class MipStatus { Optimal, Infeasible, Unbounded, Limit };

struct MipResult {
    MipStatus status = MipStatus::Infeasible;
    double objective = 0.0;
    double best_bound = 0.0;
    double gap = 0.0;
    std::vector<double> x;
    long nodes = 0;
    long lp_iterations = 0;
    std::string infeasibility_hint;
};

struct MipOptions {
    double rel_gap = 1e-3;
    double int_tol = 1e-6;
    double time_limit_s = 1e18;
    long node_limit = 2000000;
    bool enable_dive = true;
};

MipResult solve_mip(const MipProblem& problem, const MipOptions& options = {});

}  // namespace flexplan
