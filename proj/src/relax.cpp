#include <l0group/relax.hpp>
#include <l0group/error.hpp>

#include <algorithm>
#include <cmath>

namespace l0group {

namespace {

enum class GroupKind : char { free_group, zero, one };

std::vector<GroupKind> classify(const NodeConstraints& node, int q)
{
    std::vector<GroupKind> kind(q, GroupKind::free_group);
    for (int g : node.fixed_zero) kind[g] = GroupKind::zero;
    for (int g : node.fixed_one) kind[g] = GroupKind::one;
    return kind;
}

RadialPenalty penalty_for(GroupKind kind, int g, const Problem& problem, const Penalty& penalty,
                          Formulation formulation)
{
    const double w = penalty.lambda1 * penalty.weight(g);
    const double ridge = problem.objective().ridge();
    const double m = penalty.big_m;
    if (kind == GroupKind::one) return RadialPenalty::linear_quadratic(w, penalty.lambda2 + ridge, m);
    if (formulation == Formulation::big_m) {
        if (!std::isfinite(m)) throw PreconditionError("the Big-M relaxation needs a finite big_m");
        return RadialPenalty::linear_quadratic(penalty.lambda0 / m + w, penalty.lambda2 + ridge, m);
    }
    return RadialPenalty::psi(PsiParams{penalty.lambda0, w, penalty.lambda2, m}).plus_quadratic(ridge);
}

/// Penalties for every group of a node (entries for fixed-zero groups are unused).
std::vector<RadialPenalty> node_penalties(const Problem& problem, const Penalty& penalty,
                                          const std::vector<GroupKind>& kind, Formulation formulation)
{
    std::vector<RadialPenalty> out(kind.size());
    for (std::size_t g = 0; g < kind.size(); ++g) {
        if (kind[g] != GroupKind::zero) out[g] = penalty_for(kind[g], static_cast<int>(g), problem, penalty, formulation);
    }
    return out;
}

double fixed_one_constant(const Penalty& penalty, const NodeConstraints& node)
{
    return penalty.lambda0 * static_cast<double>(node.fixed_one.size());
}

/**
 * Fenchel dual value at nu = t * 2r, maximized over t. For each group,
 * u_g = ||A_g' (2r)|| and the contribution is -phi_g^*(t u_g).
 */
double scaled_dual(const Vector& residual, const Problem& problem, const std::vector<int>& groups,
                   const std::vector<RadialPenalty>& pens, double constant)
{
    const Vector& z = problem.ls_response();
    const double rr = residual.squaredNorm();
    const double rz = residual.dot(z);
    std::vector<double> u(groups.size());
    double t_hi = 2.0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const int g = groups[i];
        u[i] = 2.0 * problem.group_design_t_times(g, residual).norm();
        const auto& last = pens[g].pieces().back();
        if (!std::isfinite(last.hi) && last.a2 == 0.0 && u[i] > 0.0) t_hi = std::min(t_hi, last.a1 / u[i]);
    }
    auto value = [&](double t) {
        double d = -t * t * rr + 2.0 * t * rz + constant;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            const double c = pens[groups[i]].conjugate(t * u[i]);
            if (!std::isfinite(c)) return -kInfinity;
            d -= c;
        }
        return d;
    };
    double best = value(0.0);
    best = std::max(best, value(t_hi));
    if (t_hi >= 1.0) best = std::max(best, value(1.0));
    // Golden-section search on the concave function of t.
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = t_hi;
    double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = value(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = value(x1);
        }
    }
    return std::max({best, f1, f2});
}

Vector residual_of(const Problem& problem, const Vector& theta)
{
    return problem.ls_response() - problem.ls_design() * theta;
}

double primal_value(const Vector& residual, const Vector& theta, const Problem& problem,
                    const std::vector<int>& groups, const std::vector<RadialPenalty>& pens, double constant)
{
    const auto& part = problem.partition();
    double out = residual.squaredNorm() + problem.ls_offset() + constant;
    for (int g : groups) out += pens[g].value(part.group_norm(theta, g));
    return out;
}

/// Distance of zero from the subdifferential of the node objective in block g.
double block_kkt_residual(const Problem& problem, const RadialPenalty& phi, const Vector& residual,
                          const Vector& theta, int g)
{
    const Vector grad = -2.0 * problem.group_design_t_times(g, residual);
    const Vector tg = problem.partition().gather(theta, g);
    const double s = tg.norm();
    if (s == 0.0) return std::max(0.0, grad.norm() - phi.origin_slope());
    const Vector u = tg / s;
    const double radial = grad.dot(u);
    const double perp = (grad - radial * u).norm();
    const double lo = phi.derivative_left(s);
    const double hi = s >= phi.cap() * (1.0 - 1e-12) ? kInfinity : phi.derivative_right(s);
    const double target = -radial;
    const double miss = target < lo ? lo - target : (target > hi ? target - hi : 0.0);
    return std::hypot(perp, miss);
}

struct RestrictedCore
{
    Vector theta;
    Vector residual;
    double primal;
    double dual;
    long cycles;
    bool converged;
};

RestrictedCore restricted_core(const Problem& problem, const std::vector<RadialPenalty>& pens, double constant,
                               const std::vector<int>& active, const RelaxOptions& opts, const Vector& start)
{
    const auto& part = problem.partition();
    RestrictedCore out{start, residual_of(problem, start), 0.0, -kInfinity, 0, false};
    const double base = problem.ls_offset() + constant;
    double kkt = kInfinity;
    auto refresh_bounds = [&] {
        out.primal = primal_value(out.residual, out.theta, problem, active, pens, constant);
        out.dual = scaled_dual(out.residual, problem, active, pens, base);
        kkt = 0.0;
        for (int g : active) kkt = std::max(kkt, block_kkt_residual(problem, pens[g], out.residual, out.theta, g));
    };
    refresh_bounds();
    if (active.empty()) {
        out.converged = true;
        return out;
    }
    for (long cycle = 0; cycle < opts.max_cycles; ++cycle) {
        for (int g : active) {
            const Vector old = part.gather(out.theta, g);
            const auto& gram = problem.group_gram(g);
            Vector a = -2.0 * problem.group_design_t_times(g, out.residual);
            if ((old.array() != 0.0).any()) {
                a -= 2.0 * (gram.eigenvectors * (gram.eigenvalues.asDiagonal() * (gram.eigenvectors.transpose() * old)));
            }
            const Vector next = minimize_radial_quadratic(gram, 0.0, a, pens[g]);
            const Vector delta = next - old;
            if ((delta.array() != 0.0).any()) {
                out.residual.noalias() -= problem.group_design(g) * delta;
                part.scatter(out.theta, g, next);
            }
        }
        out.cycles = cycle + 1;
        if (out.cycles % 16 == 0) {
            // theta vanishes off the active set, so only active columns contribute.
            out.residual = problem.ls_response();
            for (int g : active) out.residual.noalias() -= problem.group_design(g) * part.gather(out.theta, g);
        }
        refresh_bounds();
        // The dual gap is the primary test; the KKT residual covers penalties whose
        // conjugate is unbounded (no shrinkage and no cap), where the scaled dual is loose.
        if (out.primal - out.dual <= opts.tol * std::max(1.0, std::abs(out.primal)) ||
            kkt <= opts.tol * std::max(1.0, std::sqrt(std::abs(out.primal)))) {
            out.converged = true;
            break;
        }
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

void NodeConstraints::validate(int num_groups) const
{
    std::vector<char> seen(num_groups, 0);
    for (int g : fixed_zero) {
        if (g < 0 || g >= num_groups) throw PreconditionError("fixed-zero group index out of range");
        seen[g] = 1;
    }
    for (int g : fixed_one) {
        if (g < 0 || g >= num_groups) throw PreconditionError("fixed-one group index out of range");
        if (seen[g]) throw PreconditionError("a group cannot be fixed to both zero and one");
    }
}

RadialPenalty node_penalty(int g, const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                           Formulation formulation)
{
    const auto kind = classify(node, problem.num_groups());
    if (kind[g] == GroupKind::zero) return RadialPenalty::linear_quadratic(0.0, 0.0, penalty.big_m);
    return penalty_for(kind[g], g, problem, penalty, formulation);
}

double node_objective(const Vector& theta, const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                      Formulation formulation)
{
    node.validate(problem.num_groups());
    const auto kind = classify(node, problem.num_groups());
    const auto pens = node_penalties(problem, penalty, kind, formulation);
    std::vector<int> groups;
    for (int g = 0; g < problem.num_groups(); ++g) {
        if (kind[g] != GroupKind::zero) groups.push_back(g);
    }
    return primal_value(residual_of(problem, theta), theta, problem, groups, pens,
                        fixed_one_constant(penalty, node));
}

double check_violation(const Vector& theta, int g, const Problem& problem, const Penalty& penalty,
                       const NodeConstraints& node, Formulation formulation)
{
    const auto kind = classify(node, problem.num_groups());
    if (kind[g] == GroupKind::zero) return -kInfinity;
    const auto& part = problem.partition();
    Vector r = residual_of(problem, theta);
    const Vector tg = part.gather(theta, g);
    if ((tg.array() != 0.0).any()) r += problem.group_design(g) * tg;
    const double slope = penalty_for(kind[g], g, problem, penalty, formulation).origin_slope();
    return 2.0 * problem.group_design_t_times(g, r).norm() - slope;
}

double dual_bound_restricted(const Vector& theta, const Problem& problem, const Penalty& penalty,
                             const NodeConstraints& node, const std::vector<int>& groups, Formulation formulation)
{
    const auto kind = classify(node, problem.num_groups());
    const auto pens = node_penalties(problem, penalty, kind, formulation);
    std::vector<int> keep;
    for (int g : groups) {
        if (kind[g] != GroupKind::zero) keep.push_back(g);
    }
    return scaled_dual(residual_of(problem, theta), problem, keep, pens,
                       problem.ls_offset() + fixed_one_constant(penalty, node));
}

double dual_bound(const Vector& theta, const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                  Formulation formulation)
{
    node.validate(problem.num_groups());
    std::vector<int> all(problem.num_groups());
    for (int g = 0; g < problem.num_groups(); ++g) all[g] = g;
    return dual_bound_restricted(theta, problem, penalty, node, all, formulation);
}

Vector recover_z(const Vector& theta, const GroupPartition& partition, const Penalty& penalty,
                 const NodeConstraints& node, Formulation formulation)
{
    const int q = partition.num_groups();
    const auto kind = classify(node, q);
    Vector z(q);
    const bool huber = formulation == Formulation::perspective &&
                       PsiParams{penalty.lambda0, 0.0, penalty.lambda2, penalty.big_m}.huber_regime();
    for (int g = 0; g < q; ++g) {
        if (kind[g] == GroupKind::zero) {
            z[g] = 0.0;
        } else if (kind[g] == GroupKind::one) {
            z[g] = 1.0;
        } else {
            const double nrm = partition.group_norm(theta, g);
            if (nrm == 0.0) {
                z[g] = 0.0;
            } else if (huber) {
                z[g] = penalty.lambda0 > 0.0 ? std::min(1.0, std::sqrt(penalty.lambda2 / penalty.lambda0) * nrm) : 1.0;
            } else {
                z[g] = std::min(1.0, nrm / penalty.big_m);
            }
        }
    }
    return z;
}

RestrictedResult solve_restricted(const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                                  const std::vector<int>& active, const RelaxOptions& opts, const Vector* warm)
{
    penalty.validate(problem.num_groups());
    node.validate(problem.num_groups());
    const auto kind = classify(node, problem.num_groups());
    for (int g : active) {
        if (g < 0 || g >= problem.num_groups()) throw PreconditionError("active group index out of range");
        if (kind[g] == GroupKind::zero) throw PreconditionError("active set intersects the fixed-zero set");
    }
    const auto pens = node_penalties(problem, penalty, kind, opts.formulation);
    const auto& part = problem.partition();
    Vector start = Vector::Zero(problem.num_features());
    if (warm) {
        for (int g : active) {
            Vector tg = part.gather(*warm, g);
            const double nrm = tg.norm();
            if (nrm > penalty.big_m) tg *= penalty.big_m / nrm;
            part.scatter(start, g, tg);
        }
    }
    auto core = restricted_core(problem, pens, fixed_one_constant(penalty, node), active, opts, start);
    return RestrictedResult{std::move(core.theta), core.primal, core.dual, core.cycles, core.converged};
}

RelaxSolution solve_relaxation(const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                               const std::vector<int>& init_active_set, const RelaxOptions& opts, const Vector* warm)
{
    penalty.validate(problem.num_groups());
    node.validate(problem.num_groups());
    const int q = problem.num_groups();
    const auto kind = classify(node, q);
    const auto pens = node_penalties(problem, penalty, kind, opts.formulation);
    const double constant = fixed_one_constant(penalty, node);
    const auto& part = problem.partition();

    std::vector<char> in_active(q, 0);
    for (int g : init_active_set) {
        if (g >= 0 && g < q && kind[g] != GroupKind::zero) in_active[g] = 1;
    }
    auto active_list = [&] {
        std::vector<int> out;
        for (int g = 0; g < q; ++g) {
            if (in_active[g]) out.push_back(g);
        }
        return out;
    };

    Vector start = Vector::Zero(problem.num_features());
    if (warm) {
        for (int g = 0; g < q; ++g) {
            if (!in_active[g]) continue;
            Vector tg = part.gather(*warm, g);
            const double nrm = tg.norm();
            if (nrm > penalty.big_m) tg *= penalty.big_m / nrm;
            part.scatter(start, g, tg);
        }
    }

    RelaxSolution sol;
    RestrictedCore core{};
    bool converged = false;
    long cycles = 0;
    int round = 0;
    for (; round < opts.max_rounds; ++round) {
        core = restricted_core(problem, pens, constant, active_list(), opts, start);
        cycles += core.cycles;
        start = core.theta;
        // Violation sweep over inactive groups.
        std::vector<std::pair<double, int>> violators;
        for (int g = 0; g < q; ++g) {
            if (in_active[g] || kind[g] == GroupKind::zero) continue;
            const double slope = pens[g].origin_slope();
            const double v = 2.0 * problem.group_design_t_times(g, core.residual).norm() - slope;
            if (v > opts.violation_tol * std::max(1.0, slope)) violators.emplace_back(v, g);
        }
        if (violators.empty()) {
            converged = core.converged;
            break;
        }
        std::stable_sort(violators.begin(), violators.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        const std::size_t take = std::min<std::size_t>(violators.size(), std::max(1, opts.batch));
        for (std::size_t i = 0; i < take; ++i) in_active[violators[i].second] = 1;
    }

    sol.theta = core.theta;
    sol.active_set = active_list();
    std::vector<int> all_groups;
    for (int g = 0; g < q; ++g) {
        if (kind[g] != GroupKind::zero) all_groups.push_back(g);
    }
    sol.primal = primal_value(core.residual, core.theta, problem, all_groups, pens, constant);
    sol.dual_bound = scaled_dual(core.residual, problem, all_groups, pens, problem.ls_offset() + constant);
    sol.z = recover_z(sol.theta, part, penalty, node, opts.formulation);
    for (int g = 0; g < q; ++g) {
        if (kind[g] == GroupKind::free_group && sol.z[g] > opts.integrality_tol && sol.z[g] < 1.0 - opts.integrality_tol) {
            sol.fractional.push_back(g);
        }
    }
    sol.converged = converged;
    sol.cycles = cycles;
    sol.rounds = round + 1;
    return sol;
}

} // namespace l0group
