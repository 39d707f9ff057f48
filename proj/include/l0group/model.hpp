#pragma once
#include <Eigen/Dense>
#include <chrono>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace l0group {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/**
 * Disjoint partition of the feature indices {0, ..., p-1} into q non-empty
 * groups. Group and feature indices are zero-based.
 */
class GroupPartition
{
public:
    GroupPartition() = default;
    explicit GroupPartition(std::vector<std::vector<int>> groups);

    /// q consecutive groups of `group_size` features each.
    static GroupPartition contiguous(int num_groups, int group_size);
    /// Consecutive groups with the given sizes.
    static GroupPartition from_sizes(const std::vector<int>& sizes);

    int num_features() const noexcept { return num_features_; }
    int num_groups() const noexcept { return static_cast<int>(groups_.size()); }
    const std::vector<int>& group(int g) const { return groups_[g]; }
    int group_size(int g) const { return static_cast<int>(groups_[g].size()); }
    int max_group_size() const noexcept { return max_group_size_; }
    int group_of(int feature) const { return owner_[feature]; }
    const std::vector<std::vector<int>>& groups() const noexcept { return groups_; }

    Vector gather(const Vector& theta, int g) const;
    void scatter(Vector& theta, int g, const Vector& values) const;
    double group_norm(const Vector& theta, int g) const;
    Vector group_norms(const Vector& theta) const;
    /// Groups with a nonzero coefficient, ascending.
    std::vector<int> support(const Vector& theta) const;

private:
    std::vector<std::vector<int>> groups_;
    std::vector<int> owner_;
    int num_features_ = 0;
    int max_group_size_ = 0;
};

/// Regularization parameters of the group-l0 objective.
struct Penalty
{
    double lambda0 = 0.0;       ///< weight on the number of nonzero groups
    double lambda1 = 0.0;       ///< weight on sum_g w_g ||theta_g||
    double lambda2 = 0.0;       ///< ridge weight
    std::vector<double> weights; ///< per-group w_g; empty means all ones
    double big_m = kInfinity;   ///< bound on ||theta_g|| used by the MIP machinery

    double weight(int g) const { return weights.empty() ? 1.0 : weights[g]; }

    /// Throws PreconditionError on invalid values. `require_l0` demands lambda0 > 0.
    void validate(int num_groups, bool require_l0 = false) const;

    /// lambda0 * G(theta) + lambda1 * sum_g w_g ||theta_g||.
    double omega(const Vector& theta, const GroupPartition& partition) const;
};

/**
 * Smooth part of the objective, either Implicit ||y - X theta||^2 or
 * Explicit theta' W theta + <b, theta> + const. A folded ridge term
 * `ridge * ||theta||^2` can be attached with `with_ridge`; it is part of
 * `loss()` and `gradient()`.
 */
class QuadObjective
{
public:
    enum class Form { implicit, explicit_form };

    static QuadObjective implicit(Matrix X, Vector y);
    static QuadObjective explicit_form(Matrix W, Vector b, double constant);

    /// Copy with `extra` added to the folded ridge weight.
    QuadObjective with_ridge(double extra) const;
    /// Explicit copy with W = X'X, b = -2X'y, const = ||y||^2 (same folded ridge).
    QuadObjective to_explicit() const;

    Form form() const noexcept;
    bool is_implicit() const noexcept { return form() == Form::implicit; }
    int num_features() const noexcept;
    int num_samples() const noexcept; ///< rows of X; 0 for the explicit form
    const Matrix& design() const;     ///< X (implicit only)
    const Vector& response() const;   ///< y (implicit only)
    const Matrix& quadratic() const;  ///< W (explicit only)
    const Vector& linear() const;     ///< b (both forms)
    double constant() const noexcept;
    double ridge() const noexcept { return ridge_; }

    double loss(const Vector& theta) const;
    Vector gradient(const Vector& theta) const;
    /// W v without the folded ridge.
    Vector gram_times(const Vector& v) const;
    /// Rows/cols sub-block of W without the folded ridge.
    Matrix gram_block(const std::vector<int>& rows, const std::vector<int>& cols) const;

private:
    struct Data;
    std::shared_ptr<const Data> data_;
    double ridge_ = 0.0;
};

/// Eigendecomposition of a group's Gram block W_gg (ridge excluded).
struct GroupGram
{
    Vector eigenvalues; ///< ascending, clamped at 0
    Matrix eigenvectors;
};

/**
 * A QuadObjective bound to a GroupPartition, with the per-group data the
 * solvers reuse. Every form is also expressed as an equivalent least-squares
 * view  ||z - A theta||^2 + offset + ridge ||theta||^2 ; for the implicit form
 * A = X and z = y, for the explicit form A = Lambda^{1/2} V' from W = V Lambda V'.
 */
class Problem
{
public:
    /// Empty placeholder; assign a constructed Problem before use.
    Problem() = default;
    Problem(QuadObjective objective, GroupPartition partition);

    const QuadObjective& objective() const noexcept { return objective_; }
    const GroupPartition& partition() const noexcept { return partition_; }
    int num_groups() const noexcept { return partition_.num_groups(); }
    int num_features() const noexcept { return partition_.num_features(); }

    const Matrix& ls_design() const noexcept
    {
        return objective_.is_implicit() ? objective_.design() : design_;
    }
    const Vector& ls_response() const noexcept
    {
        return objective_.is_implicit() ? objective_.response() : response_;
    }
    double ls_offset() const noexcept { return offset_; }

    /// Columns of the least-squares design belonging to group g.
    const Matrix& group_design(int g) const { return group_design_[g]; }
    const GroupGram& group_gram(int g) const { return group_gram_[g]; }
    /// 2 sigma_max(W_gg) + 2 ridge.
    double group_lipschitz(int g) const { return group_lipschitz_[g]; }
    /// 2 sigma_max(W) + 2 ridge (power iteration, cached on first use).
    double global_lipschitz() const;

    /// A_g' v for a vector in the least-squares sample space.
    Vector group_design_t_times(int g, const Vector& v) const { return group_design_[g].transpose() * v; }

private:
    QuadObjective objective_;
    GroupPartition partition_;
    Matrix design_;   // explicit form only
    Vector response_; // explicit form only
    double offset_ = 0.0;
    std::vector<Matrix> group_design_;
    std::vector<GroupGram> group_gram_;
    std::vector<double> group_lipschitz_;
    struct LazyLipschitz
    {
        std::once_flag once;
        double value = 0.0;
    };
    std::shared_ptr<LazyLipschitz> global_lipschitz_ = std::make_shared<LazyLipschitz>();
};

/**
 * Working state of an iterate: coefficients plus the least-squares residual
 * r = z - A theta, kept in sync on every group update. The loss is
 * l(theta) = l~(theta) + extra_ridge ||theta||^2.
 */
class LossState
{
public:
    LossState(const Problem& problem, double extra_ridge, Vector theta);
    LossState(const Problem& problem, double extra_ridge);

    const Vector& theta() const noexcept { return theta_; }
    const Vector& residual() const noexcept { return residual_; }
    double total_ridge() const noexcept { return ridge_; }
    const Problem& problem() const noexcept { return *problem_; }

    Vector group_theta(int g) const { return problem_->partition().gather(theta_, g); }
    /// Gradient of l restricted to group g.
    Vector group_gradient(int g) const;
    Vector full_gradient() const;
    void set_group(int g, const Vector& value);
    void set_theta(const Vector& theta);
    /// Recompute the residual from scratch.
    void refresh();
    double loss() const;

private:
    const Problem* problem_;
    double ridge_;
    Vector theta_;
    Vector residual_;
};

/// Meta information attached to a solver result.
struct SolveMeta
{
    std::string solver;
    std::string status = "converged"; ///< "converged" | "max-iterations"
    long iterations = 0;
    double wall_seconds = 0.0;
};

struct Solution
{
    Vector theta;
    std::vector<int> support;
    double objective = 0.0;
    Vector group_norms;
    SolveMeta meta;
};

/// h(theta) = l~(theta) + lambda2 ||theta||^2 + lambda0 G(theta) + lambda1 sum w_g ||theta_g||.
double evaluate_objective(const Vector& theta, const QuadObjective& objective, const Penalty& penalty,
                          const GroupPartition& partition);
double evaluate_objective(const Vector& theta, const Problem& problem, const Penalty& penalty);

/// Sub-vector of grad l(theta) on group g, where l includes lambda2 ||theta||^2.
Vector group_gradient(const Vector& theta, int g, const QuadObjective& objective,
                      const GroupPartition& partition, double lambda2 = 0.0);

/// 2 sigma_max(W_gg) (+ 2 ridge when folded). Dense eigensolve for groups of
/// at most 32 features, power iteration otherwise.
double group_lipschitz(int g, const QuadObjective& objective, const GroupPartition& partition);

/// Largest eigenvalue of a symmetric PSD operator given as matrix, via power iteration.
double power_iteration_max_eigenvalue(const Matrix& gram, double tol = 1e-9, int max_iters = 1000);

Solution make_solution(const Problem& problem, const Penalty& penalty, Vector theta, SolveMeta meta);

/// Scale every column to unit l2 norm; returns the scale factors (zero columns left alone).
Vector standardize_columns(Matrix& X);

class Stopwatch
{
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace l0group
