#include <l0group/bnb.hpp>
#include <l0group/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace l0group {

std::string to_string(BnbStatus status)
{
    switch (status) {
    case BnbStatus::optimal: return "optimal";
    case BnbStatus::gap_reached: return "gap-reached";
    case BnbStatus::node_limit: return "node-limit";
    case BnbStatus::time_limit: return "time-limit";
    }
    return "unknown";
}

double relative_gap(double upper, double lower)
{
    if (upper == 0.0) return 0.0;
    if (!std::isfinite(upper) || !std::isfinite(lower)) return kInfinity;
    return std::max(0.0, (upper - lower) / std::abs(upper));
}

std::string BnbResult::to_json() const
{
    nlohmann::json j;
    j["objective"] = incumbent.objective;
    j["gap"] = gap;
    j["lb"] = lower_bound;
    j["ub"] = upper_bound;
    j["nodes"] = nodes_processed;
    j["status"] = to_string(status);
    j["support"] = incumbent.support;
    j["theta"] = std::vector<double>(incumbent.theta.data(), incumbent.theta.data() + incumbent.theta.size());
    return j.dump();
}

std::pair<NodeState, NodeState> branch(const RelaxSolution& relax, const NodeState& node)
{
    if (relax.fractional.empty()) throw PreconditionError("branch called on a node with an integral relaxation");
    int chosen = relax.fractional.front();
    double best = std::abs(relax.z[chosen] - 0.5);
    for (int g : relax.fractional) {
        const double d = std::abs(relax.z[g] - 0.5);
        if (d < best || (d == best && g < chosen)) {
            best = d;
            chosen = g;
        }
    }
    auto make_child = [&](bool one) {
        NodeState child;
        child.constraints = node.constraints;
        auto& set = one ? child.constraints.fixed_one : child.constraints.fixed_zero;
        set.insert(std::upper_bound(set.begin(), set.end(), chosen), chosen);
        child.lower_bound = node.lower_bound;
        child.depth = node.depth + 1;
        child.warm_active_set = relax.active_set;
        child.warm_theta = node.warm_theta;
        return child;
    };
    return {make_child(false), make_child(true)};
}

Solution restricted_refit(const std::vector<int>& support, const Problem& problem, const Penalty& penalty,
                          const Vector* warm, double tol)
{
    const int q = problem.num_groups();
    NodeConstraints node;
    std::vector<char> in(q, 0);
    for (int g : support) in[g] = 1;
    for (int g = 0; g < q; ++g) (in[g] ? node.fixed_one : node.fixed_zero).push_back(g);
    RelaxOptions opts;
    opts.tol = tol;
    const auto res = solve_restricted(problem, penalty, node, node.fixed_one, opts, warm);
    return make_solution(problem, penalty, res.theta,
                         SolveMeta{"restricted-refit", res.converged ? "converged" : "max-iterations", res.cycles, 0.0});
}

std::optional<Solution> node_upper_bound(const RelaxSolution& relax, const Problem& problem, const Penalty& penalty,
                                         double incumbent)
{
    const auto support = problem.partition().support(relax.theta);
    Solution cand = support.empty()
                        ? make_solution(problem, penalty, Vector::Zero(problem.num_features()), SolveMeta{"zero"})
                        : restricted_refit(support, problem, penalty, &relax.theta);
    if (cand.objective < incumbent) return cand;
    return std::nullopt;
}

double estimate_big_m(const Problem& problem, const Penalty& penalty, const Solution& warm)
{
    Penalty free_pen = penalty;
    free_pen.big_m = kInfinity;
    double top = 0.0;
    if (!warm.support.empty()) {
        const Solution fit = restricted_refit(warm.support, problem, free_pen, &warm.theta);
        top = fit.group_norms.maxCoeff();
    } else {
        for (int g = 0; g < problem.num_groups(); ++g) {
            const Solution fit = restricted_refit({g}, problem, free_pen);
            top = std::max(top, fit.group_norms[g]);
        }
    }
    if (!(top > 0.0)) top = 1.0;
    return 1.5 * top;
}

namespace {

/// Makes a candidate respect ||theta_g|| <= big_m by refitting on its support with the cap.
Solution make_feasible(Solution sol, const Problem& problem, const Penalty& penalty)
{
    if (sol.group_norms.size() == 0 || sol.group_norms.maxCoeff() <= penalty.big_m * (1.0 + 1e-9)) return sol;
    return restricted_refit(sol.support, problem, penalty, &sol.theta);
}

std::string progress_line(long nodes, int depth, double lb, double ub, double gap)
{
    std::ostringstream out;
    out << std::setprecision(10) << "node=" << nodes << " depth=" << depth << " lb=" << lb << " ub=" << ub
        << " gap=" << gap;
    return out.str();
}

} // namespace

BnbResult solve_exact(const Problem& problem, const Penalty& penalty, const std::optional<Solution>& warm_start,
                      const BnbOptions& opts)
{
    penalty.validate(problem.num_groups());
    PsiParams{penalty.lambda0, 0.0, penalty.lambda2, penalty.big_m}.validate();
    if (!(opts.gap_tol >= 0.0)) throw PreconditionError("gap tolerance must be non-negative");
    Stopwatch clock;
    const int p = problem.num_features();

    // Root incumbent: warm start or local search, and the zero model.
    Solution incumbent =
        warm_start ? make_solution(problem, penalty, warm_start->theta, warm_start->meta)
                   : local_search_fit(problem, penalty, opts.swap, opts.bcd);
    incumbent = make_feasible(std::move(incumbent), problem, penalty);
    {
        Solution zero = make_solution(problem, penalty, Vector::Zero(p), SolveMeta{"zero"});
        if (zero.objective < incumbent.objective) incumbent = std::move(zero);
    }
    double ub = incumbent.objective;

    auto prune_level = [&] { return ub - 1e-12 * std::abs(ub); };
    auto log = [&](const std::string& line) {
        if (opts.log) opts.log(line);
    };

    SearchQueue<NodeState> queue(opts.memory_threshold);
    std::multiset<double> open_bounds;
    NodeState root;
    root.warm_active_set = incumbent.support;
    root.warm_theta = std::make_shared<const Vector>(incumbent.theta);
    open_bounds.insert(root.lower_bound);
    queue.push(std::move(root));

    BnbResult result;
    double closed_min = kInfinity;
    double lb = -kInfinity;
    bool depth_first = queue.depth_first();
    long nodes = 0;

    while (true) {
        const double open_min = open_bounds.empty() ? kInfinity : *open_bounds.begin();
        lb = std::max(lb, std::min({open_min, closed_min, ub}));
        const double gap = relative_gap(ub, lb);
        if (queue.empty()) {
            result.status = gap <= opts.gap_tol ? BnbStatus::optimal : BnbStatus::gap_reached;
            break;
        }
        if (gap <= opts.gap_tol) {
            result.status = BnbStatus::gap_reached;
            break;
        }
        if (nodes >= opts.node_limit) {
            result.status = BnbStatus::node_limit;
            break;
        }
        if (clock.seconds() >= opts.time_limit) {
            result.status = BnbStatus::time_limit;
            break;
        }
        if (queue.depth_first() != depth_first) {
            depth_first = queue.depth_first();
            std::ostringstream msg;
            msg << "search=" << (depth_first ? "depth-first" : "breadth-first") << " open=" << queue.size();
            log(msg.str());
        }

        NodeState node = queue.pop();
        open_bounds.erase(open_bounds.find(node.lower_bound));
        if (node.lower_bound >= prune_level()) {
            closed_min = std::min(closed_min, node.lower_bound);
            continue;
        }
        if (opts.visit) opts.visit(nodes, node);
        ++nodes;

        const RelaxSolution relax = solve_relaxation(problem, penalty, node.constraints, node.warm_active_set,
                                                     opts.relax, node.warm_theta.get());
        const double node_lb = std::max(relax.dual_bound, node.lower_bound);
        if (node.depth == 0) result.root_lower_bound = node_lb;

        if (auto cand = node_upper_bound(relax, problem, penalty, ub)) {
            incumbent = std::move(*cand);
            ub = incumbent.objective;
        }
        if (relax.fractional.empty()) {
            // The relaxed point is feasible for the mixed-integer problem at this node.
            Solution direct = make_solution(problem, penalty, relax.theta, SolveMeta{"relaxation"});
            if (direct.objective < ub) {
                incumbent = std::move(direct);
                ub = incumbent.objective;
            }
            closed_min = std::min(closed_min, node_lb);
        } else if (node_lb >= prune_level()) {
            closed_min = std::min(closed_min, node_lb);
        } else {
            NodeState parent = node;
            parent.lower_bound = node_lb;
            parent.warm_theta = std::make_shared<const Vector>(relax.theta);
            auto [zero_child, one_child] = branch(relax, parent);
            open_bounds.insert(zero_child.lower_bound);
            open_bounds.insert(one_child.lower_bound);
            queue.push(std::move(zero_child));
            queue.push(std::move(one_child));
        }

        if (opts.log_interval > 0 && nodes % opts.log_interval == 0) {
            const double om = open_bounds.empty() ? kInfinity : *open_bounds.begin();
            const double cur = std::max(lb, std::min({om, closed_min, ub}));
            log(progress_line(nodes, node.depth, cur, ub, relative_gap(ub, cur)));
        }
    }

    result.incumbent = incumbent;
    result.incumbent.meta.solver = "bnb";
    result.incumbent.meta.iterations = nodes;
    result.incumbent.meta.status = to_string(result.status);
    result.upper_bound = ub;
    result.lower_bound = lb;
    result.gap = relative_gap(ub, lb);
    result.nodes_processed = nodes;
    result.wall_seconds = clock.seconds();
    result.incumbent.meta.wall_seconds = result.wall_seconds;
    if (opts.log_interval > 0) log(progress_line(nodes, 0, lb, ub, result.gap));
    return result;
}

} // namespace l0group
