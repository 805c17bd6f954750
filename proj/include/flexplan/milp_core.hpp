#pragma once

// Solver-agnostic sparse MILP representation plus the model-surgery
// operations (variable fixing, integrality relaxation) used by the
// planning pipeline.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace flexplan {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Integer, Binary };
enum class RowSense { LessEqual, Equal, GreaterEqual };

struct MilpVariable {
    std::string name;
    double lb = 0.0;
    double ub = kInf;
    VarKind kind = VarKind::Continuous;
    double obj = 0.0;
};

struct MilpConstraint {
    std::string name;
    RowSense sense = RowSense::LessEqual;
    double rhs = 0.0;
    std::vector<std::pair<int, double>> terms;  // (column, coefficient)
};

/// Sparse minimization MILP. Variable and constraint order is the
/// creation order, which builders keep deterministic.
class MilpModel {
public:
    int add_variable(std::string name, double lb, double ub, VarKind kind, double obj = 0.0);
    /// Zero coefficients are dropped; duplicate columns within one
    /// constraint are merged. Throws on unknown columns or duplicate names.
    int add_constraint(std::string name, RowSense sense, double rhs,
                       std::vector<std::pair<int, double>> terms);

    int num_variables() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(rows_.size()); }

    const MilpVariable& variable(int col) const { return vars_.at(col); }
    const MilpConstraint& constraint(int row) const { return rows_.at(row); }
    const std::vector<MilpVariable>& variables() const { return vars_; }
    const std::vector<MilpConstraint>& constraints() const { return rows_; }

    void set_bounds(int col, double lb, double ub);
    void set_kind(int col, VarKind kind) { vars_.at(col).kind = kind; }
    void set_objective_coeff(int col, double obj) { vars_.at(col).obj = obj; }
    void add_objective_coeff(int col, double obj) { vars_.at(col).obj += obj; }

    std::optional<int> find_variable(const std::string& name) const;

    bool is_integral_kind(int col) const {
        VarKind k = vars_[col].kind;
        return k == VarKind::Integer || k == VarKind::Binary;
    }

    /// Objective value of a full assignment (no feasibility check).
    double objective_value(const std::vector<double>& x) const;

private:
    std::vector<MilpVariable> vars_;
    std::vector<MilpConstraint> rows_;
    std::unordered_map<std::string, int> var_names_;
    std::unordered_map<std::string, int> row_names_;
};

/// Address of a model variable as (symbol, index tuple), e.g. ("u", w,g,t).
struct VarKey {
    std::string symbol;
    std::vector<int> indices;

    bool operator<(const VarKey& o) const {
        if (symbol != o.symbol) return symbol < o.symbol;
        return indices < o.indices;
    }
    bool operator==(const VarKey& o) const {
        return symbol == o.symbol && indices == o.indices;
    }
    std::string to_string() const;
};

/// Bidirectional map between formulation symbols and model columns.
class VariableMap {
public:
    void bind(VarKey key, int col);
    int column(const VarKey& key) const;            // throws if missing
    std::optional<int> find(const VarKey& key) const;
    const VarKey& key_of(int col) const;            // throws if unmapped
    bool has_symbol(const std::string& symbol) const;
    /// Columns of every variable of one symbol family, in binding order.
    std::vector<int> columns_of(const std::string& symbol) const;
    int size() const { return static_cast<int>(by_key_.size()); }

    /// Convenience name used for model columns: sym_i1_i2_..._iN.
    static std::string variable_name(const VarKey& key);

private:
    std::map<VarKey, int> by_key_;
    std::unordered_map<int, VarKey> by_col_;
    std::set<std::string> symbols_;
};

struct FixAssignment {
    VarKey key;
    double value = 0.0;
};

/// Sets lb = ub = value for every assigned variable. Integer variables are
/// rounded to the nearest integer first; a residual above 1e-4 or a value
/// outside the original bounds by more than 1e-4 is an error.
MilpModel fix_variables(const MilpModel& model, const VariableMap& vmap,
                        const std::vector<FixAssignment>& assignments);

/// Turns every variable of the named symbol families continuous, keeping
/// bounds. Unknown families are skipped and reported in the returned
/// warning list.
MilpModel relax_integrality(const MilpModel& model, const VariableMap& vmap,
                            const std::set<std::string>& symbols,
                            std::vector<std::string>* warnings = nullptr);

}  // namespace flexplan
