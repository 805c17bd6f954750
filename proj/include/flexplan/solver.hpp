#pragma once

// Narrow solver adapter contract: load a model, set gap/time/seed, retrieve
// the solution. Any MILP engine with a C-callable API can implement it; the
// built-in "reference" adapter runs the project's simplex + branch-and-bound.

#include <memory>
#include <string>
#include <vector>

#include "flexplan/milp_core.hpp"
#include "flexplan/simplex.hpp"

namespace flexplan {

enum class SolveStatus { OptimalWithinGap, Infeasible, Unbounded, Limit };

std::string to_string(SolveStatus s);

struct SolveOptions {
    double gap = 1e-3;            // relative optimality tolerance
    double time_limit_s = 1e18;
    uint64_t seed = 0;
    std::vector<int> branch_priority;  // optional, per column, lower first
};

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    double objective = 0.0;
    double best_bound = 0.0;
    double gap = 0.0;
    std::vector<double> values;
    double wall_seconds = 0.0;
    long nodes = 0;
    long lp_iterations = 0;
    std::string infeasibility_hint;
};

class SolverAdapter {
public:
    virtual ~SolverAdapter() = default;
    virtual std::string name() const = 0;
    virtual SolveResult solve(const MilpModel& model, const SolveOptions& options) = 0;
};

/// Registered adapter by name; empty name resolves via FLEXPLAN_SOLVER,
/// falling back to "reference". Throws on unknown names, listing choices.
SolverAdapter& solver_by_name(const std::string& name = "");
std::vector<std::string> available_solvers();

/// Solves with the configured adapter. Integer values in the result are
/// integral within 1e-6.
SolveResult solve(const MilpModel& model, const SolveOptions& options = {});

/// MilpModel -> computational-form LP; integrality mask emitted separately.
LpProblem to_lp_problem(const MilpModel& model, std::vector<uint8_t>* is_integer = nullptr);

}  // namespace flexplan
