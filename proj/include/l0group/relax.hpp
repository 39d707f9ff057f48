#pragma once
#include <l0group/model.hpp>
#include <l0group/prox.hpp>

#include <vector>

namespace l0group {

/// How lambda2 and the l0 term enter the continuous relaxation of a free group.
enum class Formulation {
    perspective, ///< Psi (reverse-Huber / linear regime)
    big_m,       ///< (lambda0/M + lambda1 w) t + lambda2 t^2
};

struct NodeConstraints
{
    std::vector<int> fixed_zero; ///< z_g = 0, sorted
    std::vector<int> fixed_one;  ///< z_g = 1, sorted

    /// Throws PreconditionError if the sets intersect or hold invalid indices.
    void validate(int num_groups) const;
};

struct RelaxOptions
{
    Formulation formulation = Formulation::perspective;
    /// Relative duality gap targeted by the restricted solves.
    double tol = 1e-9;
    /// Violation tolerance on the group optimality condition.
    double violation_tol = 1e-9;
    int batch = 10;
    long max_cycles = 20000;
    int max_rounds = 1000;
    double integrality_tol = 1e-6;
};

struct RelaxSolution
{
    Vector theta;
    Vector z;
    double primal = 0.0;
    double dual_bound = -kInfinity;
    std::vector<int> fractional;
    std::vector<int> active_set;
    bool converged = true;
    long cycles = 0;
    int rounds = 0;
};

/// Per-group relaxed penalty for a node (includes the objective's folded ridge).
RadialPenalty node_penalty(int g, const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                           Formulation formulation = Formulation::perspective);

/// Node objective: l~(theta) + sum of node penalties + lambda0 |fixed_one|.
double node_objective(const Vector& theta, const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                      Formulation formulation = Formulation::perspective);

/// Active-set solve of the node relaxation.
RelaxSolution solve_relaxation(const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                               const std::vector<int>& init_active_set, const RelaxOptions& opts = {},
                               const Vector* warm = nullptr);

/// ||grad_g l~(theta with theta_g = 0)|| - c_g, c_g the penalty slope at the origin.
double check_violation(const Vector& theta, int g, const Problem& problem, const Penalty& penalty,
                       const NodeConstraints& node, Formulation formulation = Formulation::perspective);

struct RestrictedResult
{
    Vector theta;
    double primal = 0.0;
    double dual_bound = -kInfinity; ///< bound on the restricted problem
    long cycles = 0;
    bool converged = true;
};

/// Minimize the node objective with theta off `active` fixed at zero.
RestrictedResult solve_restricted(const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                                  const std::vector<int>& active, const RelaxOptions& opts = {},
                                  const Vector* warm = nullptr);

/// Certified lower bound on the node relaxation optimum from the residual at theta.
double dual_bound(const Vector& theta, const Problem& problem, const Penalty& penalty, const NodeConstraints& node,
                  Formulation formulation = Formulation::perspective);

/// Dual bound of the problem restricted to `groups` (others held at zero).
double dual_bound_restricted(const Vector& theta, const Problem& problem, const Penalty& penalty,
                             const NodeConstraints& node, const std::vector<int>& groups,
                             Formulation formulation = Formulation::perspective);

/// Relaxed z_g recovered from theta.
Vector recover_z(const Vector& theta, const GroupPartition& partition, const Penalty& penalty,
                 const NodeConstraints& node, Formulation formulation = Formulation::perspective);

} // namespace l0group
