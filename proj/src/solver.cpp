#include "flexplan/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "flexplan/branch_bound.hpp"

namespace flexplan {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::OptimalWithinGap: return "optimal-within-gap";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::Limit: return "limit";
    }
    return "unknown";
}

LpProblem to_lp_problem(const MilpModel& model, std::vector<uint8_t>* is_integer) {
    LpProblem lp;
    lp.num_cols = model.num_variables();
    lp.num_rows = model.num_constraints();
    lp.obj.reserve(lp.num_cols);
    lp.col_lb.reserve(lp.num_cols);
    lp.col_ub.reserve(lp.num_cols);
    if (is_integer) is_integer->assign(lp.num_cols, 0);
    for (int j = 0; j < lp.num_cols; ++j) {
        const MilpVariable& v = model.variable(j);
        lp.obj.push_back(v.obj);
        lp.col_lb.push_back(v.lb);
        lp.col_ub.push_back(v.ub);
        if (is_integer && model.is_integral_kind(j)) (*is_integer)[j] = 1;
    }
    for (int i = 0; i < lp.num_rows; ++i) {
        const MilpConstraint& c = model.constraint(i);
        switch (c.sense) {
            case RowSense::LessEqual:
                lp.row_lb.push_back(-kInf);
                lp.row_ub.push_back(c.rhs);
                break;
            case RowSense::GreaterEqual:
                lp.row_lb.push_back(c.rhs);
                lp.row_ub.push_back(kInf);
                break;
            case RowSense::Equal:
                lp.row_lb.push_back(c.rhs);
                lp.row_ub.push_back(c.rhs);
                break;
        }
    }
    // Row-major terms into a column-wise store.
    std::vector<int> count(lp.num_cols, 0);
    for (int i = 0; i < lp.num_rows; ++i)
        for (const auto& [col, coef] : model.constraint(i).terms) (void)coef, ++count[col];
    lp.col_start.assign(lp.num_cols + 1, 0);
    for (int j = 0; j < lp.num_cols; ++j) lp.col_start[j + 1] = lp.col_start[j] + count[j];
    lp.row_index.assign(lp.col_start.back(), 0);
    lp.value.assign(lp.col_start.back(), 0.0);
    std::vector<int> fill(lp.col_start.begin(), lp.col_start.end() - 1);
    for (int i = 0; i < lp.num_rows; ++i)
        for (const auto& [col, coef] : model.constraint(i).terms) {
            lp.row_index[fill[col]] = i;
            lp.value[fill[col]] = coef;
            ++fill[col];
        }
    return lp;
}

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

class ReferenceSolver final : public SolverAdapter {
public:
    std::string name() const override { return "reference"; }

    SolveResult solve(const MilpModel& model, const SolveOptions& options) override {
        double t0 = now_seconds();
        MipProblem mp;
        mp.lp = to_lp_problem(model, &mp.is_integer);
        mp.branch_priority = options.branch_priority;
        MipOptions mo;
        mo.rel_gap = options.gap;
        mo.time_limit_s = options.time_limit_s;
        MipResult mr = solve_mip(mp, mo);

        SolveResult out;
        out.wall_seconds = now_seconds() - t0;
        out.nodes = mr.nodes;
        out.lp_iterations = mr.lp_iterations;
        out.best_bound = mr.best_bound;
        out.gap = mr.gap;
        out.infeasibility_hint = decorate_hint(model, mr.infeasibility_hint);
        switch (mr.status) {
            case MipStatus::Optimal: out.status = SolveStatus::OptimalWithinGap; break;
            case MipStatus::Infeasible: out.status = SolveStatus::Infeasible; break;
            case MipStatus::Unbounded: out.status = SolveStatus::Unbounded; break;
            case MipStatus::Limit: out.status = SolveStatus::Limit; break;
        }
        if (!mr.x.empty()) {
            out.values = std::move(mr.x);
            out.objective = mr.objective;
        } else if (model.num_variables() == 0 && mr.status == MipStatus::Optimal) {
            out.objective = 0.0;
        }
        return out;
    }

private:
    // Replace raw row/column indices in the hint with model names.
    static std::string decorate_hint(const MilpModel& model, const std::string& hint) {
        if (hint.empty()) return hint;
        std::istringstream in(hint);
        std::ostringstream out;
        std::string tok;
        bool first = true;
        std::string pending;
        while (in >> tok) {
            if (!first) out << ' ';
            first = false;
            if (pending == "row") {
                int i = std::atoi(tok.c_str());
                out << (i >= 0 && i < model.num_constraints() ? model.constraint(i).name : tok);
            } else if (pending == "col") {
                int j = std::atoi(tok.c_str());
                out << (j >= 0 && j < model.num_variables() ? model.variable(j).name : tok);
            } else {
                out << tok;
            }
            pending = tok;
        }
        return out.str();
    }
};

}  // namespace

SolverAdapter& solver_by_name(const std::string& name) {
    static ReferenceSolver reference;
    std::string want = name;
    if (want.empty()) {
        const char* env = std::getenv("FLEXPLAN_SOLVER");
        want = env && *env ? env : "reference";
    }
    if (want == "reference") return reference;
    std::string known;
    for (const auto& s : available_solvers()) known += (known.empty() ? "" : ", ") + s;
    throw std::runtime_error("unknown solver '" + want + "'; available: " + known);
}

std::vector<std::string> available_solvers() { return {"reference"}; }

SolveResult solve(const MilpModel& model, const SolveOptions& options) {
    return solver_by_name().solve(model, options);
}

}  // namespace flexplan
