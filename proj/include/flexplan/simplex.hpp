#pragma once

// Bounded-variable primal simplex over a sparse column store, with an
// LU-factorized basis and product-form updates. Sized for the test- and
// toy-scale instances this project solves; not a production LP code.

#include <cstdint>
#include <string>
#include <vector>

namespace flexplan {

/// LP in computational form: minimize obj'x subject to
/// row_lb <= A x <= row_ub and col_lb <= x <= col_ub.
struct LpProblem {
    int num_cols = 0;
    int num_rows = 0;
    std::vector<double> obj;
    std::vector<double> col_lb, col_ub;
    std::vector<double> row_lb, row_ub;
    // Column-wise sparse A.
    std::vector<int> col_start;  // size num_cols + 1
    std::vector<int> row_index;
    std::vector<double> value;

    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, TimeLimit };

enum class VarStatus : uint8_t { Basic, AtLower, AtUpper, FreeZero };

struct SimplexBasis {
    // Status per structural column, then per logical (row) column.
    std::vector<VarStatus> status;
    bool empty() const { return status.empty(); }
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> col_value;
    std::vector<double> row_value;
    std::vector<double> dual_value;   // one per row
    SimplexBasis basis;
    long iterations = 0;
    double max_primal_residual = 0.0;
    std::vector<int> infeasible_rows;  // diagnostic, populated when infeasible
};

struct SimplexOptions {
    double feas_tol = 1e-7;
    double dual_tol = 1e-7;
    double pivot_tol = 5e-8;
    long iteration_limit = 200000;
    double time_limit_s = 1e18;
    int refactor_interval = 96;
};

class SimplexSolver {
public:
    explicit SimplexSolver(SimplexOptions options = {}) : opt_(options) {}

    /// Solve from scratch or from a warm basis (ignored when inconsistent).
    /// The problem reference only needs to stay valid for the call.
    LpSolution solve(const LpProblem& problem, const SimplexBasis* warm = nullptr);

private:
    struct Impl;
    SimplexOptions opt_;
};

}  // namespace flexplan
