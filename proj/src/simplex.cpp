#include "flexplan/simplex.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace flexplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Power-of-two scale factor nearest to 1/v. Exact in binary arithmetic, so
// scaling never perturbs the solution beyond pivot-order effects.
double pow2_scale(double v) {
    if (v <= 0.0 || !std::isfinite(v)) return 1.0;
    int e = 0;
    std::frexp(v, &e);
    return std::ldexp(1.0, -e + 1);
}

}  // namespace

void LpProblem::validate() const {
    if (static_cast<int>(obj.size()) != num_cols || static_cast<int>(col_lb.size()) != num_cols ||
        static_cast<int>(col_ub.size()) != num_cols)
        throw std::invalid_argument("LpProblem: column array size mismatch");
    if (static_cast<int>(row_lb.size()) != num_rows || static_cast<int>(row_ub.size()) != num_rows)
        throw std::invalid_argument("LpProblem: row array size mismatch");
    if (static_cast<int>(col_start.size()) != num_cols + 1)
        throw std::invalid_argument("LpProblem: col_start size mismatch");
    for (int j = 0; j < num_cols; ++j) {
        if (!(col_lb[j] <= col_ub[j]))
            throw std::invalid_argument("LpProblem: crossing column bounds at " + std::to_string(j));
        for (int p = col_start[j]; p < col_start[j + 1]; ++p)
            if (row_index[p] < 0 || row_index[p] >= num_rows)
                throw std::invalid_argument("LpProblem: row index out of range");
    }
}

// ---------------------------------------------------------------------------
// LU factorization of the basis with product-form updates.
// ---------------------------------------------------------------------------

namespace {

struct Eta {
    int slot = 0;
    double pivot = 0.0;                       // w[slot]
    std::vector<std::pair<int, double>> rest; // (slot, w) for slot != pivot slot
};

class BasisFactor {
public:
    BasisFactor(int m) : m_(m) {}

    // Factorizes the basis given by fetch_col(slot, rows, vals). Returns the
    // slots whose columns were numerically dependent; the caller must replace
    // them (with logical columns) and call factorize again.
    template <typename FetchCol>
    std::vector<int> factorize(FetchCol&& fetch_col) {
        lcol_rows_.assign(m_, {});
        lcol_vals_.assign(m_, {});
        ucol_.assign(m_, {});
        udiag_.assign(m_, 0.0);
        pivrow_.assign(m_, -1);
        slot_of_step_.assign(m_, -1);
        step_of_slot_.assign(m_, -1);
        pinv_.assign(m_, -1);
        etas_.clear();
        eta_nnz_ = 0;

        // Cheap columns first keeps fill modest on these banded models.
        std::vector<int> order(m_);
        std::vector<int> nnz(m_, 0);
        std::vector<int> rows;
        std::vector<double> vals;
        for (int s = 0; s < m_; ++s) {
            rows.clear();
            vals.clear();
            fetch_col(s, rows, vals);
            nnz[s] = static_cast<int>(rows.size());
            order[s] = s;
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return nnz[a] < nnz[b]; });

        std::vector<double> x(m_, 0.0);
        std::vector<int> touched;
        std::vector<int> deferred;
        int step = 0;
        for (int oi = 0; oi < m_; ++oi) {
            int slot = order[oi];
            if (!process_column(slot, step, fetch_col, x, touched)) deferred.push_back(slot);
        }
        std::sort(deferred.begin(), deferred.end());
        if (deferred.empty() && step != m_)
            throw std::logic_error("BasisFactor: incomplete factorization");
        return deferred;
    }

    // Appends trivial logical columns for repaired slots. `row` must be an
    // unpivoted row; the column is -e_row.
    void append_logical(int slot, int row) {
        int step = 0;
        for (int p = 0; p < m_; ++p)
            if (slot_of_step_[p] == -1) { step = p; break; }
        pivrow_[step] = row;
        pinv_[row] = step;
        udiag_[step] = -1.0;
        slot_of_step_[step] = slot;
        step_of_slot_[slot] = step;
    }

    std::vector<int> unpivoted_rows() const {
        std::vector<int> rows;
        for (int r = 0; r < m_; ++r)
            if (pinv_[r] < 0) rows.push_back(r);
        return rows;
    }

    // Solves B x = b. Input b indexed by row, output indexed by basis slot.
    void ftran(std::vector<double>& work_row, std::vector<double>& out_slot) const {
        lower_solve(work_row);
        upper_solve(work_row, out_slot);
        for (const Eta& e : etas_) {
            double t = out_slot[e.slot];
            if (t == 0.0) continue;
            double f = t / e.pivot;
            out_slot[e.slot] = f;
            for (const auto& [s, w] : e.rest) out_slot[s] -= w * f;
        }
    }

    // Solves B^T y = c. Input c indexed by slot, output indexed by row.
    void btran(std::vector<double>& work_slot, std::vector<double>& out_row) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double acc = work_slot[it->slot];
            for (const auto& [s, w] : it->rest) acc -= w * work_slot[s];
            work_slot[it->slot] = acc / it->pivot;
        }
        // U^T forward solve in step order.
        std::vector<double>& w = ut_work_;
        w.assign(m_, 0.0);
        for (int p = 0; p < m_; ++p) {
            double acc = work_slot[slot_of_step_[p]];
            for (const auto& [q, val] : ucol_[p]) acc -= val * w[q];
            w[p] = acc / udiag_[p];
        }
        // L^T backward solve; result lands on pivot rows.
        std::fill(out_row.begin(), out_row.end(), 0.0);
        for (int p = m_ - 1; p >= 0; --p) {
            double acc = w[p];
            const auto& rows = lcol_rows_[p];
            const auto& vals = lcol_vals_[p];
            for (size_t k = 0; k < rows.size(); ++k) acc -= vals[k] * out_row[rows[k]];
            out_row[pivrow_[p]] = acc;
        }
    }

    void push_eta(const std::vector<double>& w_slot, int slot, double pivot_value) {
        Eta e;
        e.slot = slot;
        e.pivot = pivot_value;
        for (int s = 0; s < m_; ++s)
            if (s != slot && w_slot[s] != 0.0) e.rest.emplace_back(s, w_slot[s]);
        eta_nnz_ += static_cast<long>(e.rest.size()) + 1;
        etas_.push_back(std::move(e));
    }

    int eta_count() const { return static_cast<int>(etas_.size()); }
    long eta_nnz() const { return eta_nnz_; }

private:
    // Gilbert-Peierls step: the sparse reach of the column through the
    // current L gives both the update order and the touched set.
    template <typename FetchCol>
    bool process_column(int slot, int& step, FetchCol&& fetch_col, std::vector<double>& x,
                        std::vector<int>& touched) {
        std::vector<int>& rows = fetch_rows_;
        std::vector<double>& vals = fetch_vals_;
        rows.clear();
        vals.clear();
        fetch_col(slot, rows, vals);
        touched.clear();
        if (mark_.size() != x.size()) mark_.assign(x.size(), 0);
        // DFS over the L pattern from each input row; emits reverse
        // topological order so the numeric pass can run front to back.
        reach_.clear();
        for (int r0 : rows) {
            if (mark_[r0]) continue;
            dfs_stack_.clear();
            dfs_pos_.clear();
            dfs_stack_.push_back(r0);
            dfs_pos_.push_back(0);
            mark_[r0] = 1;
            while (!dfs_stack_.empty()) {
                int r = dfs_stack_.back();
                int p = pinv_[r];
                size_t& k = dfs_pos_.back();
                bool descended = false;
                if (p >= 0) {
                    const auto& lr = lcol_rows_[p];
                    while (k < lr.size()) {
                        int child = lr[k++];
                        if (!mark_[child]) {
                            mark_[child] = 1;
                            dfs_stack_.push_back(child);
                            dfs_pos_.push_back(0);
                            descended = true;
                            break;
                        }
                    }
                }
                if (!descended && (p < 0 || dfs_pos_.back() >= lcol_rows_[p].size())) {
                    reach_.push_back(r);
                    dfs_stack_.pop_back();
                    dfs_pos_.pop_back();
                }
            }
        }
        for (auto it = reach_.rbegin(); it != reach_.rend(); ++it) mark_[*it] = 0;
        for (size_t k = 0; k < rows.size(); ++k) x[rows[k]] = vals[k];
        // Numeric pass in topological order (reach_ holds reverse topo).
        for (auto it = reach_.rbegin(); it != reach_.rend(); ++it) {
            int r = *it;
            int p = pinv_[r];
            double t = x[r];
            if (p < 0 || t == 0.0) continue;
            const auto& lr = lcol_rows_[p];
            const auto& lv = lcol_vals_[p];
            for (size_t k = 0; k < lr.size(); ++k) x[lr[k]] -= lv[k] * t;
        }
        touched.assign(reach_.rbegin(), reach_.rend());
        // Partial pivoting over rows that are not yet pivotal.
        int prow = -1;
        double pmax = 0.0;
        for (int r : touched) {
            if (pinv_[r] >= 0 || x[r] == 0.0) continue;
            double a = std::abs(x[r]);
            if (a > pmax || (a == pmax && prow >= 0 && r < prow)) {
                pmax = a;
                prow = r;
            }
        }
        if (prow < 0 || pmax < 1e-11) {
            for (int r : touched) x[r] = 0.0;
            return false;
        }
        double piv = x[prow];
        udiag_[step] = piv;
        pivrow_[step] = prow;
        pinv_[prow] = step;
        slot_of_step_[step] = slot;
        step_of_slot_[slot] = step;
        for (int r : touched) {
            double v = x[r];
            x[r] = 0.0;
            if (v == 0.0 || r == prow) continue;
            if (pinv_[r] >= 0 && pinv_[r] < step)
                ucol_[step].emplace_back(pinv_[r], v);
            else if (pinv_[r] < 0) {
                lcol_rows_[step].push_back(r);
                lcol_vals_[step].push_back(v / piv);
            }
        }
        ++step;
        return true;
    }

    void lower_solve(std::vector<double>& x) const {
        for (int p = 0; p < m_; ++p) {
            double t = x[pivrow_[p]];
            if (t == 0.0) continue;
            const auto& lr = lcol_rows_[p];
            const auto& lv = lcol_vals_[p];
            for (size_t k = 0; k < lr.size(); ++k) x[lr[k]] -= lv[k] * t;
        }
    }

    void upper_solve(std::vector<double>& x, std::vector<double>& out_slot) const {
        for (int p = m_ - 1; p >= 0; --p) {
            double t = x[pivrow_[p]] / udiag_[p];
            x[pivrow_[p]] = 0.0;
            out_slot[slot_of_step_[p]] = t;
            if (t == 0.0) continue;
            for (const auto& [q, val] : ucol_[p]) x[pivrow_[q]] -= val * t;
        }
    }

    int m_;
    std::vector<std::vector<int>> lcol_rows_;
    std::vector<std::vector<double>> lcol_vals_;
    std::vector<std::vector<std::pair<int, double>>> ucol_;  // (earlier step, value)
    std::vector<double> udiag_;
    std::vector<int> pivrow_;
    std::vector<int> slot_of_step_, step_of_slot_;
    std::vector<int> pinv_;
    std::vector<Eta> etas_;
    long eta_nnz_ = 0;
    mutable std::vector<double> ut_work_;
    std::vector<int> fetch_rows_;
    std::vector<double> fetch_vals_;
    std::vector<char> mark_;
    std::vector<int> reach_, dfs_stack_;
    std::vector<size_t> dfs_pos_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Primal simplex.
// ---------------------------------------------------------------------------

struct SimplexSolver::Impl {
    const LpProblem& lp;
    const SimplexOptions& opt;
    int n = 0, m = 0, total = 0;

    // Scaled copy of the problem. Scale factors are powers of two.
    std::vector<double> obj, lb, ub;
    std::vector<int> col_start, row_index;
    std::vector<double> value;
    std::vector<double> row_scale, col_scale;

    std::vector<VarStatus> stat;   // size total (structural then logical)
    std::vector<int> basic;        // slot -> variable
    std::vector<double> xval;      // size total
    BasisFactor factor;

    std::vector<double> work_row, work_slot, w_slot, y_row, cost;
    std::vector<double> devex_;  // reference weights per variable
    long iterations = 0;
    bool bland = false;
    int degenerate_run = 0;
    double t_start = 0.0;
    bool perturbed = false;
    std::vector<double> lb_true, ub_true;
    std::vector<double> scratch_d_, alpha_row_;

    Impl(const LpProblem& p, const SimplexOptions& o) : lp(p), opt(o), factor(p.num_rows) {
        n = lp.num_cols;
        m = lp.num_rows;
        total = n + m;
        scale_problem();
        work_row.assign(m, 0.0);
        work_slot.assign(m, 0.0);
        w_slot.assign(m, 0.0);
        y_row.assign(m, 0.0);
        cost.assign(total, 0.0);
        devex_.assign(total, 1.0);
    }

    void scale_problem() {
        row_scale.assign(m, 1.0);
        col_scale.assign(n, 1.0);
        std::vector<double> rmax(m, 0.0);
        for (size_t p = 0; p < lp.value.size(); ++p)
            rmax[lp.row_index[p]] = std::max(rmax[lp.row_index[p]], std::abs(lp.value[p]));
        for (int i = 0; i < m; ++i) row_scale[i] = pow2_scale(rmax[i]);
        std::vector<double> cmax(n, 0.0);
        for (int j = 0; j < n; ++j)
            for (int p = lp.col_start[j]; p < lp.col_start[j + 1]; ++p)
                cmax[j] = std::max(cmax[j], std::abs(lp.value[p]) * row_scale[lp.row_index[p]]);
        for (int j = 0; j < n; ++j) col_scale[j] = pow2_scale(cmax[j]);

        obj.resize(total);
        lb.resize(total);
        ub.resize(total);
        col_start = lp.col_start;
        row_index = lp.row_index;
        value = lp.value;
        for (int j = 0; j < n; ++j) {
            for (int p = col_start[j]; p < col_start[j + 1]; ++p)
                value[p] = lp.value[p] * row_scale[row_index[p]] * col_scale[j];
            obj[j] = lp.obj[j] * col_scale[j];
            lb[j] = lp.col_lb[j] / col_scale[j];
            ub[j] = lp.col_ub[j] / col_scale[j];
        }
        for (int i = 0; i < m; ++i) {
            obj[n + i] = 0.0;
            lb[n + i] = lp.row_lb[i] * row_scale[i];
            ub[n + i] = lp.row_ub[i] * row_scale[i];
        }
    }

    template <typename F>
    void for_col(int var, F&& f) const {
        if (var < n) {
            for (int p = col_start[var]; p < col_start[var + 1]; ++p) f(row_index[p], value[p]);
        } else {
            f(var - n, -1.0);
        }
    }

    double nonbasic_start_value(int var) const {
        if (std::isfinite(lb[var]) && std::isfinite(ub[var]))
            return std::abs(lb[var]) <= std::abs(ub[var]) ? lb[var] : ub[var];
        if (std::isfinite(lb[var])) return lb[var];
        if (std::isfinite(ub[var])) return ub[var];
        return 0.0;
    }

    VarStatus nonbasic_status_for(int var, double v) const {
        if (std::isfinite(lb[var]) && v == lb[var]) return VarStatus::AtLower;
        if (std::isfinite(ub[var]) && v == ub[var]) return VarStatus::AtUpper;
        if (!std::isfinite(lb[var]) && !std::isfinite(ub[var])) return VarStatus::FreeZero;
        return std::isfinite(lb[var]) ? VarStatus::AtLower : VarStatus::AtUpper;
    }

    void install_basis(const SimplexBasis* warm) {
        stat.assign(total, VarStatus::AtLower);
        basic.clear();
        bool used_warm = false;
        if (warm && static_cast<int>(warm->status.size()) == total) {
            int nb = 0;
            for (int v = 0; v < total; ++v)
                if (warm->status[v] == VarStatus::Basic) ++nb;
            if (nb == m) {
                stat = warm->status;
                used_warm = true;
            }
        }
        if (!used_warm) {
            for (int v = 0; v < n; ++v) stat[v] = VarStatus::AtLower;  // adjusted below
            for (int i = 0; i < m; ++i) stat[n + i] = VarStatus::Basic;
        }
        for (int v = 0; v < total; ++v) {
            if (stat[v] == VarStatus::Basic) {
                basic.push_back(v);
                xval_resize_guard(v);
                continue;
            }
            double x0 = nonbasic_start_value(v);
            VarStatus s = nonbasic_status_for(v, x0);
            // Honor a warm nonbasic side when it is consistent with bounds.
            if (used_warm) {
                if (stat[v] == VarStatus::AtUpper && std::isfinite(ub[v])) {
                    x0 = ub[v];
                    s = VarStatus::AtUpper;
                } else if (stat[v] == VarStatus::AtLower && std::isfinite(lb[v])) {
                    x0 = lb[v];
                    s = VarStatus::AtLower;
                } else if (stat[v] == VarStatus::FreeZero) {
                    x0 = std::isfinite(lb[v]) && lb[v] > 0 ? lb[v]
                         : std::isfinite(ub[v]) && ub[v] < 0 ? ub[v]
                                                             : 0.0;
                    s = nonbasic_status_for(v, x0);
                }
            }
            stat[v] = s;
            xval_resize_guard(v);
            xval[v] = x0;
        }
        refactorize();
        recompute_basic_values(true);
    }

    void xval_resize_guard(int) {
        if (static_cast<int>(xval.size()) != total) xval.assign(total, 0.0);
    }

    void refactorize() {
        auto fetch = [&](int slot, std::vector<int>& rows, std::vector<double>& vals) {
            for_col(basic[slot], [&](int r, double v) {
                rows.push_back(r);
                vals.push_back(v);
            });
        };
        std::vector<int> bad = factor.factorize(fetch);
        if (!bad.empty()) {
            std::vector<int> rows = factor.unpivoted_rows();
            for (size_t k = 0; k < bad.size(); ++k) {
                int slot = bad[k];
                int row = rows[k];
                int displaced = basic[slot];
                double x0 = nonbasic_start_value(displaced);
                stat[displaced] = nonbasic_status_for(displaced, x0);
                xval[displaced] = x0;
                int logical = n + row;
                if (stat[logical] == VarStatus::Basic)
                    throw std::logic_error("simplex: basis repair conflict");
                stat[logical] = VarStatus::Basic;
                basic[slot] = logical;
                factor.append_logical(slot, row);
            }
        }
    }

    // x_B = B^{-1} (-N x_N), optionally with one round of refinement.
    void recompute_basic_values(bool refine) {
        std::fill(work_row.begin(), work_row.end(), 0.0);
        for (int v = 0; v < total; ++v) {
            if (stat[v] == VarStatus::Basic || xval[v] == 0.0) continue;
            double xv = xval[v];
            for_col(v, [&](int r, double a) { work_row[r] -= a * xv; });
        }
        std::vector<double> rhs;
        if (refine) rhs = work_row;
        factor.ftran(work_row, work_slot);
        for (int s = 0; s < m; ++s) xval[basic[s]] = work_slot[s];
        if (!refine) return;
        // One refinement pass against the original right-hand side.
        std::fill(work_row.begin(), work_row.end(), 0.0);
        for (int s = 0; s < m; ++s) {
            double xv = work_slot[s];
            if (xv == 0.0) continue;
            for_col(basic[s], [&](int r, double a) { work_row[r] += a * xv; });
        }
        for (int r = 0; r < m; ++r) work_row[r] = rhs[r] - work_row[r];
        std::vector<double> dx(m, 0.0);
        factor.ftran(work_row, dx);
        for (int s = 0; s < m; ++s) xval[basic[s]] += dx[s];
    }

    double infeasibility() const {
        double sum = 0.0;
        for (int s = 0; s < m; ++s) {
            int v = basic[s];
            if (xval[v] < lb[v]) sum += lb[v] - xval[v];
            if (xval[v] > ub[v]) sum += xval[v] - ub[v];
        }
        return sum;
    }

    // Worst single bound violation among basics, scaled by bound magnitude.
    double max_violation() const {
        double worst = 0.0;
        for (int s = 0; s < m; ++s) {
            int v = basic[s];
            double scale = 1.0;
            if (std::isfinite(lb[v])) scale = std::max(scale, std::abs(lb[v]));
            if (std::isfinite(ub[v])) scale = std::max(scale, std::abs(ub[v]));
            if (xval[v] < lb[v]) worst = std::max(worst, (lb[v] - xval[v]) / scale);
            if (xval[v] > ub[v]) worst = std::max(worst, (xval[v] - ub[v]) / scale);
        }
        return worst;
    }

    void build_phase_costs(bool phase1) {
        std::fill(cost.begin(), cost.end(), 0.0);
        if (phase1) {
            for (int s = 0; s < m; ++s) {
                int v = basic[s];
                if (xval[v] < lb[v] - opt.feas_tol)
                    cost[v] = -1.0;
                else if (xval[v] > ub[v] + opt.feas_tol)
                    cost[v] = 1.0;
            }
        } else {
            for (int v = 0; v < n; ++v) cost[v] = obj[v];
        }
    }

    void compute_duals() {
        for (int s = 0; s < m; ++s) work_slot[s] = cost[basic[s]];
        factor.btran(work_slot, y_row);
    }

    double reduced_cost(int v) const {
        double d = cost[v];
        if (v < n) {
            for (int p = col_start[v]; p < col_start[v + 1]; ++p)
                d -= y_row[row_index[p]] * value[p];
        } else {
            d += y_row[v - n];
        }
        return d;
    }

    // Returns entering variable and direction (+1 increase, -1 decrease),
    // or -1 when no improving candidate exists. Candidates are ranked by
    // the devex criterion d^2 / weight, which keeps degenerate models moving.
    std::pair<int, int> price() {
        compute_duals();
        int best = -1, bdir = 0;
        double bscore = 0.0;
        for (int v = 0; v < total; ++v) {
            VarStatus s = stat[v];
            if (s == VarStatus::Basic) continue;
            if (lb[v] == ub[v]) continue;  // fixed, cannot move
            double d = reduced_cost(v);
            int dir = 0;
            if (s == VarStatus::AtLower && d < -opt.dual_tol) {
                dir = +1;
            } else if (s == VarStatus::AtUpper && d > opt.dual_tol) {
                dir = -1;
            } else if (s == VarStatus::FreeZero && std::abs(d) > opt.dual_tol) {
                dir = d < 0 ? +1 : -1;
            } else {
                continue;
            }
            if (bland) return {v, dir};  // first eligible by index
            double score = d * d / devex_[v];
            if (score > bscore) {
                bscore = score;
                best = v;
                bdir = dir;
            }
        }
        return {best, bdir};
    }

    // Forrest-Goldfarb devex update over the pivotal row.
    void update_devex(int q, int leave_slot, int leave_var) {
        double alpha_q = w_slot[leave_slot];
        if (alpha_q == 0.0) return;
        double gq = devex_[q];
        // pivotal row of B^-1 A: rho = B^-T e_r, alpha_j = rho . a_j
        std::fill(work_slot.begin(), work_slot.end(), 0.0);
        work_slot[leave_slot] = 1.0;
        factor.btran(work_slot, y_row);
        double ratio = gq / (alpha_q * alpha_q);
        for (int v = 0; v < total; ++v) {
            if (stat[v] == VarStatus::Basic || v == q || lb[v] == ub[v]) continue;
            double alpha;
            if (v < n) {
                alpha = 0.0;
                for (int p = col_start[v]; p < col_start[v + 1]; ++p)
                    alpha += y_row[row_index[p]] * value[p];
            } else {
                alpha = -y_row[v - n];
            }
            if (alpha == 0.0) continue;
            double cand = alpha * alpha * ratio;
            if (cand > devex_[v]) devex_[v] = cand;
        }
        devex_[leave_var] = std::max(ratio, 1.0);
        double worst = 0.0;
        for (int v = 0; v < total; ++v) worst = std::max(worst, devex_[v]);
        if (worst > 1e8) devex_.assign(total, 1.0);
    }

    struct RatioOutcome {
        bool unbounded = false;
        bool flip = false;
        int leave_slot = -1;
        double step = 0.0;
        double leave_target = 0.0;
        VarStatus leave_status = VarStatus::AtLower;
    };

    RatioOutcome ratio_test(int q, int dir, bool phase1) {
        // w = B^{-1} a_q
        std::fill(work_row.begin(), work_row.end(), 0.0);
        for_col(q, [&](int r, double a) { work_row[r] = a; });
        factor.ftran(work_row, w_slot);

        RatioOutcome out;
        double dmin = kInf;
        // Entering variable's own bound flip.
        if (std::isfinite(lb[q]) && std::isfinite(ub[q])) dmin = ub[q] - lb[q];

        struct Cand {
            int slot;
            double step;
            double target;
            VarStatus st;
            double wmag;
        };
        std::vector<Cand> cands;
        for (int s = 0; s < m; ++s) {
            double w = w_slot[s];
            if (std::abs(w) < 1e-10) continue;
            int v = basic[s];
            double g = -dir * w;  // d x_B[s] / d step
            double target, gap;
            VarStatus st;
            if (phase1) {
                // A violated basic moving toward its bound blocks there; one
                // moving deeper into violation has no breakpoint (the phase-1
                // costs account for it).
                if (g > 0) {
                    if (xval[v] < lb[v] - opt.feas_tol) {
                        target = lb[v];
                        st = VarStatus::AtLower;
                    } else if (xval[v] > ub[v] + opt.feas_tol) {
                        continue;
                    } else {
                        target = ub[v];
                        st = VarStatus::AtUpper;
                    }
                } else {
                    if (xval[v] > ub[v] + opt.feas_tol) {
                        target = ub[v];
                        st = VarStatus::AtUpper;
                    } else if (xval[v] < lb[v] - opt.feas_tol) {
                        continue;
                    } else {
                        target = lb[v];
                        st = VarStatus::AtLower;
                    }
                }
            } else {
                // Plain bound targets keep phase 2 feasibility-preserving:
                // anything at or past the bound blocks degenerately.
                if (g > 0) {
                    target = ub[v];
                    st = VarStatus::AtUpper;
                } else {
                    target = lb[v];
                    st = VarStatus::AtLower;
                }
            }
            if (!std::isfinite(target)) continue;
            gap = (target - xval[v]) / g;
            if (gap < 0) gap = 0;  // tolerate slight bound drift
            cands.push_back(Cand{s, gap, target, st, std::abs(w)});
            dmin = std::min(dmin, gap);
        }
        if (!std::isfinite(dmin)) {
            out.unbounded = true;
            return out;
        }
        // Among near-ties pick the biggest pivot for stability (or the lowest
        // variable index under Bland's rule).
        double window = dmin + 1e-9 * (1.0 + std::abs(dmin));
        int pick = -1;
        double best_mag = 0.0;
        int best_var = total;
        for (size_t k = 0; k < cands.size(); ++k) {
            if (cands[k].step > window) continue;
            if (bland) {
                if (basic[cands[k].slot] < best_var) {
                    best_var = basic[cands[k].slot];
                    pick = static_cast<int>(k);
                }
            } else if (cands[k].wmag > best_mag) {
                best_mag = cands[k].wmag;
                pick = static_cast<int>(k);
            }
        }
        bool flip_possible = std::isfinite(lb[q]) && std::isfinite(ub[q]);
        double flip_step = flip_possible ? ub[q] - lb[q] : kInf;
        if (pick < 0) {
            if (!flip_possible) {
                out.unbounded = true;
                return out;
            }
            out.flip = true;
            out.step = flip_step;
            return out;
        }
        if (flip_possible && flip_step <= cands[pick].step) {
            out.flip = true;
            out.step = flip_step;
            return out;
        }
        out.leave_slot = cands[pick].slot;
        out.step = cands[pick].step;
        out.leave_target = cands[pick].target;
        out.leave_status = cands[pick].st;
        return out;
    }

    void apply_step(int q, int dir, const RatioOutcome& r) {
        double step = r.step;
        if (step != 0.0) {
            for (int s = 0; s < m; ++s)
                if (w_slot[s] != 0.0) xval[basic[s]] -= dir * step * w_slot[s];
        }
        xval[q] += dir * step;
        if (r.flip) {
            stat[q] = (stat[q] == VarStatus::AtLower) ? VarStatus::AtUpper : VarStatus::AtLower;
            xval[q] = (stat[q] == VarStatus::AtLower) ? lb[q] : ub[q];
            return;
        }
        int leave = basic[r.leave_slot];
        update_devex(q, r.leave_slot, leave);
        xval[leave] = r.leave_target;
        stat[leave] = r.leave_status;
        stat[q] = VarStatus::Basic;
        basic[r.leave_slot] = q;
        factor.push_eta(w_slot, r.leave_slot, w_slot[r.leave_slot]);
        if (step <= 1e-12)
            ++degenerate_run;
        else {
            degenerate_run = 0;
            bland = false;
        }
        if (degenerate_run == 220 && !perturbed) perturb_bounds();
        if (degenerate_run > 800) bland = true;
    }

    // Ties in the ratio test stall long degenerate runs; widening every
    // finite bound by a deterministic hair breaks them. The true bounds are
    // restored before the solution is reported.
    void perturb_bounds() {
        perturbed = true;
        lb_true = lb;
        ub_true = ub;
        for (int v = 0; v < total; ++v) {
            if (lb[v] == ub[v]) continue;  // keep hard fixings exact
            uint64_t h = 1469598103934665603ull ^ (uint64_t)(v * 1099511628211ull);
            h ^= h >> 33;
            double jitter = 1e-9 * (1.0 + (double)(h % 997) / 997.0);
            if (std::isfinite(lb[v])) lb[v] -= jitter * (1.0 + std::abs(lb[v]));
            if (std::isfinite(ub[v])) ub[v] += jitter * (1.0 + std::abs(ub[v]));
        }
    }

    void restore_bounds() {
        if (!perturbed) return;
        lb = std::move(lb_true);
        ub = std::move(ub_true);
        perturbed = false;
        for (int v = 0; v < total; ++v) {
            if (stat[v] == VarStatus::AtLower)
                xval[v] = lb[v];
            else if (stat[v] == VarStatus::AtUpper)
                xval[v] = ub[v];
        }
    }

    void maybe_refactor() {
        if (factor.eta_count() >= opt.refactor_interval ||
            factor.eta_nnz() > 50L * m + 20000L) {
            refactorize();
            recompute_basic_values(false);
        }
    }

    // Nonbasic reduced costs satisfy the bound-side sign conditions.
    bool dual_feasible(double tol) {
        build_phase_costs(false);
        compute_duals();
        for (int v = 0; v < total; ++v) {
            if (stat[v] == VarStatus::Basic || lb[v] == ub[v]) continue;
            double d = reduced_cost(v);
            if (stat[v] == VarStatus::AtLower && d < -tol) return false;
            if (stat[v] == VarStatus::AtUpper && d > tol) return false;
            if (stat[v] == VarStatus::FreeZero && std::abs(d) > tol) return false;
        }
        return true;
    }

    // Bounded dual simplex: restores primal feasibility from a dual-feasible
    // basis, the natural warm restart after branching tightens bounds.
    // Reduced costs are maintained incrementally from the pivotal row.
    // Returns 0 when primal feasible, 1 on a primal-infeasibility claim,
    // 2 when it gives up (caller falls back to the primal phases).
    int run_dual() {
        const long cap = 1500 + m;
        build_phase_costs(false);
        compute_duals_into_scratch();
        long since_refresh = 0;
        for (long it = 0; it < cap; ++it) {
            if (iterations >= opt.iteration_limit) return 2;
            if ((iterations & 63) == 0 && now_seconds() - t_start > opt.time_limit_s) return 2;
            // Leaving: worst bound violation among basics.
            int r = -1;
            bool below = false;
            double worst = opt.feas_tol;
            for (int s2 = 0; s2 < m; ++s2) {
                int v = basic[s2];
                double scale = 1.0 + std::max(std::isfinite(lb[v]) ? std::abs(lb[v]) : 0.0,
                                              std::isfinite(ub[v]) ? std::abs(ub[v]) : 0.0);
                if (xval[v] < lb[v] && (lb[v] - xval[v]) / scale > worst) {
                    worst = (lb[v] - xval[v]) / scale;
                    r = s2;
                    below = true;
                }
                if (xval[v] > ub[v] && (xval[v] - ub[v]) / scale > worst) {
                    worst = (xval[v] - ub[v]) / scale;
                    r = s2;
                    below = false;
                }
            }
            if (r < 0) return 0;
            // Pivotal row alphas for every nonbasic column.
            std::fill(work_slot.begin(), work_slot.end(), 0.0);
            work_slot[r] = 1.0;
            factor.btran(work_slot, y_row);
            if (static_cast<int>(alpha_row_.size()) != total) alpha_row_.assign(total, 0.0);
            int q = -1, qdir = 0;
            double best_ratio = 0.0, best_mag = 0.0;
            for (int v = 0; v < total; ++v) {
                if (stat[v] == VarStatus::Basic || lb[v] == ub[v]) {
                    alpha_row_[v] = 0.0;
                    continue;
                }
                double alpha;
                if (v < n) {
                    alpha = 0.0;
                    for (int p = col_start[v]; p < col_start[v + 1]; ++p)
                        alpha += y_row[row_index[p]] * value[p];
                } else {
                    alpha = -y_row[v - n];
                }
                alpha_row_[v] = alpha;
                if (std::abs(alpha) < 1e-9) continue;
                // x_r responds as -alpha per unit increase of x_v.
                int dir;
                if (below) {
                    dir = alpha < 0 ? +1 : -1;  // need x_r to rise
                } else {
                    dir = alpha > 0 ? +1 : -1;  // need x_r to fall
                }
                if (dir > 0 && stat[v] == VarStatus::AtUpper) continue;
                if (dir < 0 && stat[v] == VarStatus::AtLower) continue;
                double d = scratch_d_[v];
                double ratio = std::abs(d) / std::abs(alpha);
                if (q < 0 || ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && std::abs(alpha) > best_mag)) {
                    q = v;
                    qdir = dir;
                    best_ratio = ratio;
                    best_mag = std::abs(alpha);
                }
            }
            if (q < 0) return 1;  // no way to repair the violated basic
            // Entering column and step length.
            std::fill(work_row.begin(), work_row.end(), 0.0);
            for_col(q, [&](int rr, double a) { work_row[rr] = a; });
            factor.ftran(work_row, w_slot);
            double wr = w_slot[r];
            if (std::abs(wr) < opt.pivot_tol || std::abs(wr - alpha_row_[q]) >
                                                    1e-5 * (1.0 + std::abs(wr))) {
                refactorize();
                recompute_basic_values(false);
                compute_duals_into_scratch();
                continue;
            }
            int leave = basic[r];
            double target = below ? lb[leave] : ub[leave];
            double delta = (xval[leave] - target) / wr;  // signed entering move
            if (delta * qdir < 0) {
                // Sign disagreement (numerical); give the primal a turn.
                return 2;
            }
            update_devex_from_row(q, r, leave);
            for (int s2 = 0; s2 < m; ++s2)
                if (w_slot[s2] != 0.0) xval[basic[s2]] -= delta * w_slot[s2];
            xval[q] += delta;
            xval[leave] = target;
            stat[leave] = below ? VarStatus::AtLower : VarStatus::AtUpper;
            stat[q] = VarStatus::Basic;
            basic[r] = q;
            factor.push_eta(w_slot, r, wr);
            ++iterations;
            // Incremental dual update: d_j -= theta * alpha_j, with the
            // leaving variable picking up -theta.
            double theta = scratch_d_[q] / alpha_row_[q];
            for (int v = 0; v < total; ++v) {
                if (stat[v] == VarStatus::Basic || alpha_row_[v] == 0.0) continue;
                scratch_d_[v] -= theta * alpha_row_[v];
            }
            scratch_d_[leave] = -theta;
            if (factor.eta_count() >= opt.refactor_interval || ++since_refresh >= 120) {
                refactorize();
                recompute_basic_values(false);
                build_phase_costs(false);
                compute_duals_into_scratch();
                since_refresh = 0;
            }
        }
        return 2;
    }

    void compute_duals_into_scratch() {
        // Reduced costs for all nonbasic columns against phase-2 duals.
        for (int s2 = 0; s2 < m; ++s2) work_slot[s2] = cost[basic[s2]];
        std::vector<double> y2(m, 0.0);
        factor.btran(work_slot, y2);
        if (static_cast<int>(scratch_d_.size()) != total) scratch_d_.assign(total, 0.0);
        for (int v = 0; v < total; ++v) {
            if (stat[v] == VarStatus::Basic) continue;
            double d = cost[v];
            if (v < n) {
                for (int p = col_start[v]; p < col_start[v + 1]; ++p)
                    d -= y2[row_index[p]] * value[p];
            } else {
                d += y2[v - n];
            }
            scratch_d_[v] = d;
        }
    }

    // Devex update when the pivotal row alphas are already at hand.
    void update_devex_from_row(int q, int leave_slot, int leave_var) {
        double alpha_q = alpha_row_[q];
        if (alpha_q == 0.0) return;
        double ratio = devex_[q] / (alpha_q * alpha_q);
        for (int v = 0; v < total; ++v) {
            if (stat[v] == VarStatus::Basic || v == q || alpha_row_[v] == 0.0) continue;
            double cand = alpha_row_[v] * alpha_row_[v] * ratio;
            if (cand > devex_[v]) devex_[v] = cand;
        }
        devex_[leave_var] = std::max(ratio, 1.0);
        (void)leave_slot;
    }

    // Runs pricing loop for one phase. Returns:
    //  0 = phase objective cannot improve (phase-1: infeasible stall,
    //      phase-2: optimal), 1 = unbounded, 2 = iteration/time limit.
    int run_phase(bool phase1) {
        bool fresh = true;
        while (true) {
            if (iterations >= opt.iteration_limit) return 2;
            if ((iterations & 63) == 0 && now_seconds() - t_start > opt.time_limit_s) return 2;
            if (phase1 && max_violation() <= opt.feas_tol) return 0;
            build_phase_costs(phase1);
            auto [q, dir] = price();
            if (q < 0) {
                if (!fresh) {
                    refactorize();
                    recompute_basic_values(true);
                    fresh = true;
                    continue;
                }
                return 0;
            }
            RatioOutcome r = ratio_test(q, dir, phase1);
            if (r.unbounded) {
                if (phase1) {
                    if (!fresh) {
                        refactorize();
                        recompute_basic_values(true);
                        fresh = true;
                        continue;
                    }
                    throw std::runtime_error("simplex: unbounded phase-1 direction");
                }
                return 1;
            }
            apply_step(q, dir, r);
            ++iterations;
            fresh = false;
            maybe_refactor();
        }
    }

    LpSolution run(const SimplexBasis* warm) {
        t_start = now_seconds();
        xval.assign(total, 0.0);
        install_basis(warm);

        LpSolution sol;
        int rc;
        if (warm && max_violation() > opt.feas_tol && dual_feasible(opt.dual_tol * 10)) {
            int drc = run_dual();
            if (drc == 0) {
                refactorize();
                recompute_basic_values(true);
            }
            // Anything else falls through to the primal phases below.
        }
        if (max_violation() > opt.feas_tol) {
            rc = run_phase(true);
            if (rc == 2) {
                sol.status = LpStatus::IterationLimit;
                finalize(sol);
                return sol;
            }
            refactorize();
            recompute_basic_values(true);
            if (max_violation() > opt.feas_tol * 10) {
                sol.status = LpStatus::Infeasible;
                finalize(sol);
                collect_infeasible_rows(sol);
                return sol;
            }
        }
        for (int attempt = 0; attempt < 6; ++attempt) {
            rc = run_phase(false);
            if (rc == 1) {
                restore_bounds();
                sol.status = LpStatus::Unbounded;
                finalize(sol);
                return sol;
            }
            if (rc == 2) {
                restore_bounds();
                sol.status = LpStatus::IterationLimit;
                finalize(sol);
                return sol;
            }
            if (perturbed) {
                // Perturbation cleanup: back to the true bounds, then prove
                // optimality again from the (nearly optimal) basis.
                restore_bounds();
                refactorize();
                recompute_basic_values(true);
                if (max_violation() > opt.feas_tol) {
                    int prc = run_phase(true);
                    if (prc != 0) break;
                }
                continue;
            }
            refactorize();
            recompute_basic_values(true);
            if (max_violation() <= opt.feas_tol * 10) {
                sol.status = LpStatus::Optimal;
                finalize(sol);
                return sol;
            }
            // Numerical drift re-entered infeasibility; clean up and retry.
            int prc = run_phase(true);
            if (prc != 0) break;
            refactorize();
            recompute_basic_values(true);
            if (max_violation() > opt.feas_tol * 10) break;
        }
        restore_bounds();
        sol.status = LpStatus::Infeasible;
        finalize(sol);
        collect_infeasible_rows(sol);
        return sol;
    }

    void finalize(LpSolution& sol) {
        sol.iterations = iterations;
        sol.col_value.assign(n, 0.0);
        for (int j = 0; j < n; ++j) {
            double v = xval[j] * col_scale[j];
            // Snap nonbasic values exactly onto their bounds.
            if (stat[j] == VarStatus::AtLower)
                v = lp.col_lb[j];
            else if (stat[j] == VarStatus::AtUpper)
                v = lp.col_ub[j];
            sol.col_value[j] = v;
        }
        sol.row_value.assign(m, 0.0);
        for (int j = 0; j < n; ++j) {
            double xv = sol.col_value[j];
            if (xv == 0.0) continue;
            for (int p = lp.col_start[j]; p < lp.col_start[j + 1]; ++p)
                sol.row_value[lp.row_index[p]] += lp.value[p] * xv;
        }
        double objv = 0.0;
        for (int j = 0; j < n; ++j) objv += lp.obj[j] * sol.col_value[j];
        sol.objective = objv;
        build_phase_costs(false);
        compute_duals();
        sol.dual_value.assign(m, 0.0);
        for (int i = 0; i < m; ++i) sol.dual_value[i] = y_row[i] * row_scale[i];
        sol.basis.status = stat;
        double res = 0.0;
        for (int i = 0; i < m; ++i) {
            double a = sol.row_value[i];
            if (a < lp.row_lb[i]) res = std::max(res, lp.row_lb[i] - a);
            if (a > lp.row_ub[i]) res = std::max(res, a - lp.row_ub[i]);
        }
        sol.max_primal_residual = res;
    }

    void collect_infeasible_rows(LpSolution& sol) {
        for (int i = 0; i < m; ++i) {
            double a = sol.row_value[i];
            double scale = 1.0;
            if (std::isfinite(lp.row_lb[i])) scale += std::abs(lp.row_lb[i]);
            if (std::isfinite(lp.row_ub[i])) scale += std::abs(lp.row_ub[i]);
            double t = opt.feas_tol * scale;
            if (a < lp.row_lb[i] - t || a > lp.row_ub[i] + t) sol.infeasible_rows.push_back(i);
        }
        // Basic structural variables stuck outside their bounds also witness
        // the infeasibility even when every row balances.
        if (sol.infeasible_rows.empty()) {
            for (int j = 0; j < n; ++j) {
                double v = sol.col_value[j];
                double t = opt.feas_tol * (1.0 + std::abs(v));
                if (v < lp.col_lb[j] - t || v > lp.col_ub[j] + t) {
                    sol.infeasible_rows.push_back(-1 - j);  // negative marks a column
                }
            }
        }
    }
};

LpSolution SimplexSolver::solve(const LpProblem& problem, const SimplexBasis* warm) {
    problem.validate();
    Impl impl(problem, opt_);
    return impl.run(warm);
}

}  // namespace flexplan
