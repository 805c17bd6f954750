#include "flexplan/milp_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flexplan {

int MilpModel::add_variable(std::string name, double lb, double ub, VarKind kind, double obj) {
    if (!(lb <= ub))
        throw std::invalid_argument("variable '" + name + "': lower bound exceeds upper bound");
    if (!var_names_.emplace(name, static_cast<int>(vars_.size())).second)
        throw std::invalid_argument("duplicate variable name '" + name + "'");
    vars_.push_back(MilpVariable{std::move(name), lb, ub, kind, obj});
    return static_cast<int>(vars_.size()) - 1;
}

int MilpModel::add_constraint(std::string name, RowSense sense, double rhs,
                              std::vector<std::pair<int, double>> terms) {
    if (!row_names_.emplace(name, static_cast<int>(rows_.size())).second)
        throw std::invalid_argument("duplicate constraint name '" + name + "'");
    // Merge duplicate columns, drop zeros, keep first-occurrence order.
    std::vector<std::pair<int, double>> merged;
    merged.reserve(terms.size());
    for (const auto& [col, coeff] : terms) {
        if (col < 0 || col >= num_variables())
            throw std::invalid_argument("constraint '" + name + "': unknown column " +
                                        std::to_string(col));
        if (coeff == 0.0) continue;
        auto it = std::find_if(merged.begin(), merged.end(),
                               [col](const auto& p) { return p.first == col; });
        if (it == merged.end())
            merged.emplace_back(col, coeff);
        else {
            it->second += coeff;
            if (it->second == 0.0) merged.erase(it);
        }
    }
    rows_.push_back(MilpConstraint{std::move(name), sense, rhs, std::move(merged)});
    return static_cast<int>(rows_.size()) - 1;
}

void MilpModel::set_bounds(int col, double lb, double ub) {
    if (!(lb <= ub))
        throw std::invalid_argument("variable '" + vars_.at(col).name +
                                    "': lower bound exceeds upper bound");
    vars_.at(col).lb = lb;
    vars_.at(col).ub = ub;
}

std::optional<int> MilpModel::find_variable(const std::string& name) const {
    auto it = var_names_.find(name);
    if (it == var_names_.end()) return std::nullopt;
    return it->second;
}

double MilpModel::objective_value(const std::vector<double>& x) const {
    double v = 0.0;
    for (int j = 0; j < num_variables(); ++j) v += vars_[j].obj * x[j];
    return v;
}

std::string VarKey::to_string() const {
    std::ostringstream os;
    os << symbol << '[';
    for (size_t i = 0; i < indices.size(); ++i) {
        if (i) os << ',';
        os << indices[i];
    }
    os << ']';
    return os.str();
}

std::string VariableMap::variable_name(const VarKey& key) {
    std::string s = key.symbol;
    for (int i : key.indices) {
        s += '_';
        s += std::to_string(i);
    }
    return s;
}

void VariableMap::bind(VarKey key, int col) {
    if (by_col_.count(col))
        throw std::invalid_argument("column " + std::to_string(col) + " already mapped");
    auto [it, fresh] = by_key_.emplace(key, col);
    if (!fresh) throw std::invalid_argument("variable key " + key.to_string() + " already mapped");
    symbols_.insert(key.symbol);
    by_col_.emplace(col, std::move(key));
}

int VariableMap::column(const VarKey& key) const {
    auto it = by_key_.find(key);
    if (it == by_key_.end())
        throw std::out_of_range("unknown variable " + key.to_string());
    return it->second;
}

std::optional<int> VariableMap::find(const VarKey& key) const {
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
}

const VarKey& VariableMap::key_of(int col) const {
    auto it = by_col_.find(col);
    if (it == by_col_.end())
        throw std::out_of_range("column " + std::to_string(col) + " is not mapped");
    return it->second;
}

bool VariableMap::has_symbol(const std::string& symbol) const {
    return symbols_.count(symbol) > 0;
}

std::vector<int> VariableMap::columns_of(const std::string& symbol) const {
    std::vector<int> cols;
    for (const auto& [key, col] : by_key_)
        if (key.symbol == symbol) cols.push_back(col);
    return cols;
}

MilpModel fix_variables(const MilpModel& model, const VariableMap& vmap,
                        const std::vector<FixAssignment>& assignments) {
    constexpr double tol = 1e-4;
    MilpModel out = model;
    for (const auto& a : assignments) {
        int col = vmap.column(a.key);  // throws on unknown symbol/index
        const MilpVariable& v = model.variable(col);
        double value = a.value;
        if (model.is_integral_kind(col)) {
            double rounded = std::round(value);
            if (std::abs(value - rounded) > tol)
                throw std::invalid_argument("non-integral fix for " + a.key.to_string() + ": " +
                                            std::to_string(value));
            value = rounded;
        }
        if (value < v.lb - tol || value > v.ub + tol)
            throw std::invalid_argument("fix for " + a.key.to_string() + " = " +
                                        std::to_string(value) + " outside bounds [" +
                                        std::to_string(v.lb) + ", " + std::to_string(v.ub) + "]");
        value = std::min(std::max(value, v.lb), v.ub);
        out.set_bounds(col, value, value);
    }
    return out;
}

MilpModel relax_integrality(const MilpModel& model, const VariableMap& vmap,
                            const std::set<std::string>& symbols,
                            std::vector<std::string>* warnings) {
    MilpModel out = model;
    for (const std::string& sym : symbols) {
        if (!vmap.has_symbol(sym)) {
            if (warnings) warnings->push_back("relax_integrality: unknown symbol family '" + sym + "'");
            continue;
        }
        for (int col : vmap.columns_of(sym))
            if (out.is_integral_kind(col)) out.set_kind(col, VarKind::Continuous);
    }
    return out;
}

}  // namespace flexplan
