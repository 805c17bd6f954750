#include "flexplan/branch_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace flexplan {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Node {
    int parent = -1;
    int var = -1;  // bound change applied at this node
    double lb = 0.0;
    double ub = 0.0;
    int depth = 0;
};

struct QueueEntry {
    double bound;
    long seq;
    int node;
    bool operator>(const QueueEntry& o) const {
        if (bound != o.bound) return bound > o.bound;
        return seq > o.seq;
    }
};

class BranchAndBound {
public:
    BranchAndBound(const MipProblem& p, const MipOptions& o)
        : prob_(p), opt_(o), work_lp_(p.lp) {
        n_ = prob_.lp.num_cols;
        for (int j = 0; j < n_; ++j)
            if (prob_.is_integer[j]) int_cols_.push_back(j);
    }

    MipResult run() {
        t_start_ = now_seconds();
        MipResult res;
        nodes_.push_back(Node{});
        open_.push(QueueEntry{-kInfinity, seq_++, 0});

        // Depth-first plunging over a best-bound queue: the plunge keeps the
        // warm basis local and reaches incumbents fast; backtracking pops the
        // globally most promising node.
        int plunge_node = -1;
        double plunge_bound = -kInfinity;
        while (plunge_node >= 0 || !open_.empty()) {
            if (res_nodes_ >= opt_.node_limit || now_seconds() - t_start_ > opt_.time_limit_s) {
                if (plunge_node >= 0) note_abandoned_bound(plunge_bound);
                finish(res, /*exhausted=*/false);
                return res;
            }
            int node;
            double node_bound;
            if (plunge_node >= 0) {
                node = plunge_node;
                node_bound = plunge_bound;
                plunge_node = -1;
            } else {
                QueueEntry top = open_.top();
                open_.pop();
                node = top.node;
                node_bound = top.bound;
            }
            if (have_incumbent_ && node_bound >= prune_threshold()) {
                note_abandoned_bound(node_bound);
                continue;
            }

            load_bounds(node);
            LpSolution lp = solve_current();
            ++res_nodes_;
            lp_iters_ += lp.iterations;
            if (lp.status == LpStatus::Unbounded) {
                res.status = MipStatus::Unbounded;
                res.nodes = res_nodes_;
                res.lp_iterations = lp_iters_;
                return res;
            }
            if (lp.status != LpStatus::Optimal) {
                if (node == 0 && lp.status == LpStatus::Infeasible) root_hint_ = hint_from(lp);
                continue;
            }
            if (have_incumbent_ && lp.objective >= prune_threshold()) {
                note_abandoned_bound(lp.objective);
                continue;
            }

            int frac = pick_branch_var(lp.col_value);
            if (frac < 0) {
                offer_incumbent(lp);
                continue;
            }
            if (opt_.enable_dive && !have_incumbent_ && node == 0) dive(lp);

            double v = lp.col_value[frac];
            double fl = std::floor(v + opt_.int_tol);
            int down = add_child(node, frac, cur_lb_[frac], fl);
            int up = add_child(node, frac, fl + 1, cur_ub_[frac]);
            int near = (v - fl <= 0.5) ? down : up;
            int far = (near == down) ? up : down;
            plunge_node = near;
            plunge_bound = lp.objective;
            open_.push(QueueEntry{lp.objective, seq_++, far});
        }
        finish(res, /*exhausted=*/true);
        return res;
    }

private:
    // Nodes whose bound cannot improve the incumbent by more than the
    // requested relative gap are fathomed.
    double prune_threshold() const {
        return incumbent_obj_ - opt_.rel_gap * std::max(std::abs(incumbent_obj_), 1e-10);
    }

    void note_abandoned_bound(double b) { abandoned_bound_ = std::min(abandoned_bound_, b); }

    int add_child(int parent, int var, double lb, double ub) {
        Node c;
        c.parent = parent;
        c.var = var;
        c.lb = lb;
        c.ub = ub;
        c.depth = nodes_[parent].depth + 1;
        nodes_.push_back(c);
        return static_cast<int>(nodes_.size()) - 1;
    }

    void load_bounds(int node) {
        cur_lb_ = prob_.lp.col_lb;
        cur_ub_ = prob_.lp.col_ub;
        path_.clear();
        for (int k = node; k > 0; k = nodes_[k].parent) path_.push_back(k);
        for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
            const Node& nd = nodes_[*it];
            cur_lb_[nd.var] = std::max(cur_lb_[nd.var], nd.lb);
            cur_ub_[nd.var] = std::min(cur_ub_[nd.var], nd.ub);
        }
    }

    LpSolution solve_current() {
        for (int j = 0; j < n_; ++j)
            if (cur_lb_[j] > cur_ub_[j]) {
                LpSolution s;
                s.status = LpStatus::Infeasible;
                return s;
            }
        work_lp_.col_lb = cur_lb_;
        work_lp_.col_ub = cur_ub_;
        SimplexOptions so;
        so.time_limit_s = opt_.time_limit_s - (now_seconds() - t_start_);
        SimplexSolver solver(so);
        LpSolution sol = solver.solve(work_lp_, warm_.empty() ? nullptr : &warm_);
        // Infeasible/unbounded claims out of a warm basis get re-verified
        // from scratch before a subtree is pruned on their word.
        if (!warm_.empty() &&
            (sol.status == LpStatus::Infeasible || sol.status == LpStatus::Unbounded))
            sol = solver.solve(work_lp_, nullptr);
        if (sol.status == LpStatus::Optimal) warm_ = sol.basis;
        return sol;
    }

    int pick_branch_var(const std::vector<double>& x) const {
        int best = -1;
        int best_prio = std::numeric_limits<int>::max();
        double best_score = -1.0;
        for (int j : int_cols_) {
            // Clamp onto the node bounds first: a solver-tolerance overhang
            // past an integral bound is not a branching candidate.
            double v = std::min(std::max(x[j], cur_lb_[j]), cur_ub_[j]);
            double dist = std::abs(v - std::round(v));
            if (dist <= opt_.int_tol) continue;
            int prio = prob_.branch_priority.empty() ? 0 : prob_.branch_priority[j];
            double score = std::min(v - std::floor(v), std::ceil(v) - v);
            if (prio < best_prio || (prio == best_prio && score > best_score)) {
                best_prio = prio;
                best_score = score;
                best = j;
            }
        }
        return best;
    }

    // Fixes integers at their rounded values and re-solves once, so stored
    // incumbents carry exactly integral values with a consistent continuous
    // completion.
    void offer_incumbent(const LpSolution& node_lp) {
        if (have_incumbent_ && node_lp.objective >= incumbent_obj_) return;
        std::vector<double> save_lb = cur_lb_, save_ub = cur_ub_;
        for (int j : int_cols_) {
            double v = std::round(node_lp.col_value[j]);
            v = std::min(std::max(v, cur_lb_[j]), cur_ub_[j]);
            cur_lb_[j] = v;
            cur_ub_[j] = v;
        }
        LpSolution polished = solve_current();
        lp_iters_ += polished.iterations;
        cur_lb_ = std::move(save_lb);
        cur_ub_ = std::move(save_ub);

        const LpSolution& use = (polished.status == LpStatus::Optimal) ? polished : node_lp;
        double obj = use.objective;
        if (have_incumbent_ && obj >= incumbent_obj_) return;
        incumbent_ = use.col_value;
        for (int j : int_cols_) incumbent_[j] = std::round(incumbent_[j]);
        incumbent_obj_ = obj;
        have_incumbent_ = true;
    }

    // Fix-and-dive rounding heuristic for early incumbents.
    void dive(const LpSolution& start) {
        std::vector<double> save_lb = cur_lb_, save_ub = cur_ub_;
        LpSolution cur = start;
        int budget = static_cast<int>(int_cols_.size()) + 32;
        while (budget-- > 0) {
            if (now_seconds() - t_start_ > opt_.time_limit_s) break;
            int pick = -1;
            double best = 2.0;
            for (int j : int_cols_) {
                double v = cur.col_value[j];
                double dist = std::abs(v - std::round(v));
                if (dist <= opt_.int_tol) continue;
                if (dist < best) {
                    best = dist;
                    pick = j;
                }
            }
            if (pick < 0) {
                offer_incumbent(cur);
                break;
            }
            double v = std::round(cur.col_value[pick]);
            v = std::min(std::max(v, cur_lb_[pick]), cur_ub_[pick]);
            cur_lb_[pick] = v;
            cur_ub_[pick] = v;
            LpSolution next = solve_current();
            lp_iters_ += next.iterations;
            if (next.status != LpStatus::Optimal) break;
            if (have_incumbent_ && next.objective >= prune_threshold()) break;
            cur = std::move(next);
        }
        cur_lb_ = std::move(save_lb);
        cur_ub_ = std::move(save_ub);
    }

    std::string hint_from(const LpSolution& lp) const {
        if (lp.infeasible_rows.empty()) return "LP relaxation infeasible";
        std::ostringstream os;
        os << "LP relaxation infeasible; witness rows/columns:";
        int shown = 0;
        for (int r : lp.infeasible_rows) {
            if (shown++ == 6) {
                os << " ...";
                break;
            }
            if (r >= 0)
                os << " row " << r;
            else
                os << " col " << (-1 - r);
        }
        return os.str();
    }

    void finish(MipResult& res, bool exhausted) {
        res.nodes = res_nodes_;
        res.lp_iterations = lp_iters_;
        double best_open = open_.empty() ? kInfinity : open_.top().bound;
        if (have_incumbent_) {
            res.objective = incumbent_obj_;
            res.x = incumbent_;
            res.best_bound = std::min({incumbent_obj_, best_open, abandoned_bound_});
            double denom = std::max(std::abs(incumbent_obj_), 1e-10);
            res.gap = std::max(0.0, (incumbent_obj_ - res.best_bound) / denom);
            res.status = (exhausted || res.gap <= opt_.rel_gap) ? MipStatus::Optimal
                                                                : MipStatus::Limit;
        } else {
            res.status = exhausted ? MipStatus::Infeasible : MipStatus::Limit;
            res.best_bound = std::min(best_open, abandoned_bound_);
            res.infeasibility_hint = root_hint_;
        }
    }

    const MipProblem& prob_;
    const MipOptions& opt_;
    LpProblem work_lp_;
    int n_ = 0;
    std::vector<int> int_cols_;
    std::vector<Node> nodes_;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open_;
    long seq_ = 0;
    std::vector<double> cur_lb_, cur_ub_;
    std::vector<int> path_;
    SimplexBasis warm_;
    bool have_incumbent_ = false;
    double incumbent_obj_ = kInfinity;
    double abandoned_bound_ = kInfinity;
    std::vector<double> incumbent_;
    long res_nodes_ = 0;
    long lp_iters_ = 0;
    std::string root_hint_;
    double t_start_ = 0.0;
};

}  // namespace

MipResult solve_mip(const MipProblem& problem, const MipOptions& options) {
    problem.lp.validate();
    if (problem.lp.num_cols == 0) {
        MipResult r;
        r.status = MipStatus::Optimal;
        r.objective = 0.0;
        r.best_bound = 0.0;
        return r;
    }
    BranchAndBound bb(problem, options);
    return bb.run();
}

}  // namespace flexplan
