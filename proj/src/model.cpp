#include <l0group/model.hpp>
#include <l0group/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace l0group {

// ---------------------------------------------------------------------------
// GroupPartition

GroupPartition::GroupPartition(std::vector<std::vector<int>> groups)
    : groups_(std::move(groups))
{
    if (groups_.empty()) {
        throw PreconditionError("group partition must contain at least one group");
    }
    int p = 0;
    for (const auto& grp : groups_) {
        if (grp.empty()) throw PreconditionError("group partition contains an empty group");
        p += static_cast<int>(grp.size());
        max_group_size_ = std::max(max_group_size_, static_cast<int>(grp.size()));
    }
    num_features_ = p;
    owner_.assign(p, -1);
    for (int g = 0; g < num_groups(); ++g) {
        for (int j : groups_[g]) {
            if (j < 0 || j >= p) {
                std::ostringstream msg;
                msg << "feature index " << j << " in group " << g << " is outside [0, " << p << ")";
                throw PreconditionError(msg.str());
            }
            if (owner_[j] != -1) {
                std::ostringstream msg;
                msg << "feature " << j << " appears in groups " << owner_[j] << " and " << g;
                throw PreconditionError(msg.str());
            }
            owner_[j] = g;
        }
    }
}

GroupPartition GroupPartition::contiguous(int num_groups, int group_size)
{
    if (num_groups < 1 || group_size < 1) {
        throw PreconditionError("contiguous partition needs num_groups >= 1 and group_size >= 1");
    }
    return from_sizes(std::vector<int>(num_groups, group_size));
}

GroupPartition GroupPartition::from_sizes(const std::vector<int>& sizes)
{
    std::vector<std::vector<int>> groups;
    int next = 0;
    for (int s : sizes) {
        if (s < 1) throw PreconditionError("group sizes must be positive");
        std::vector<int> grp(s);
        std::iota(grp.begin(), grp.end(), next);
        next += s;
        groups.push_back(std::move(grp));
    }
    return GroupPartition(std::move(groups));
}

Vector GroupPartition::gather(const Vector& theta, int g) const
{
    const auto& idx = groups_[g];
    Vector out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = theta[idx[i]];
    return out;
}

void GroupPartition::scatter(Vector& theta, int g, const Vector& values) const
{
    const auto& idx = groups_[g];
    for (std::size_t i = 0; i < idx.size(); ++i) theta[idx[i]] = values[i];
}

double GroupPartition::group_norm(const Vector& theta, int g) const
{
    double s = 0.0;
    for (int j : groups_[g]) s += theta[j] * theta[j];
    return std::sqrt(s);
}

Vector GroupPartition::group_norms(const Vector& theta) const
{
    Vector out(num_groups());
    for (int g = 0; g < num_groups(); ++g) out[g] = group_norm(theta, g);
    return out;
}

std::vector<int> GroupPartition::support(const Vector& theta) const
{
    std::vector<int> out;
    for (int g = 0; g < num_groups(); ++g) {
        for (int j : groups_[g]) {
            if (theta[j] != 0.0) {
                out.push_back(g);
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Penalty

void Penalty::validate(int num_groups, bool require_l0) const
{
    auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
    if (bad(lambda0) || bad(lambda1) || bad(lambda2)) {
        throw PreconditionError("lambda0, lambda1 and lambda2 must be finite and non-negative");
    }
    if (require_l0 && !(lambda0 > 0.0)) {
        throw PreconditionError("lambda0 must be positive for a penalized fit");
    }
    if (!(big_m > 0.0)) throw PreconditionError("big_m must be positive (or +infinity)");
    if (!weights.empty()) {
        if (static_cast<int>(weights.size()) != num_groups) {
            throw DimensionError("weights", "penalty weights must have one entry per group");
        }
        for (double w : weights) {
            if (!std::isfinite(w) || !(w > 0.0)) {
                throw PreconditionError("group weights must be finite and positive");
            }
        }
    }
}

double Penalty::omega(const Vector& theta, const GroupPartition& partition) const
{
    double out = 0.0;
    for (int g = 0; g < partition.num_groups(); ++g) {
        const double nrm = partition.group_norm(theta, g);
        if (nrm > 0.0) out += lambda0 + lambda1 * weight(g) * nrm;
    }
    return out;
}

// ---------------------------------------------------------------------------
// QuadObjective

struct QuadObjective::Data
{
    Form form;
    Matrix X; // implicit
    Vector y; // implicit
    Matrix W; // explicit
    Vector b;
    double constant = 0.0;
};

QuadObjective QuadObjective::implicit(Matrix X, Vector y)
{
    if (X.rows() != y.size()) {
        std::ostringstream msg;
        msg << "design has " << X.rows() << " rows but response has " << y.size() << " entries";
        throw DimensionError("n", msg.str());
    }
    if (X.cols() < 1) throw DimensionError("p", "design must have at least one column");
    if (!X.allFinite() || !y.allFinite()) throw InputError("design and response must be finite");
    auto data = std::make_shared<Data>();
    data->form = Form::implicit;
    data->b = -2.0 * (X.transpose() * y);
    data->constant = y.squaredNorm();
    data->X = std::move(X);
    data->y = std::move(y);
    QuadObjective out;
    out.data_ = std::move(data);
    return out;
}

QuadObjective QuadObjective::explicit_form(Matrix W, Vector b, double constant)
{
    if (W.rows() != W.cols()) throw DimensionError("W", "quadratic term W must be square");
    if (W.rows() != b.size()) {
        std::ostringstream msg;
        msg << "W is " << W.rows() << "x" << W.cols() << " but b has " << b.size() << " entries";
        throw DimensionError("p", msg.str());
    }
    if (W.rows() < 1) throw DimensionError("p", "quadratic term must have at least one feature");
    if (!W.allFinite() || !b.allFinite() || !std::isfinite(constant)) {
        throw InputError("explicit objective must be finite");
    }
    if (!W.isApprox(W.transpose(), 1e-12)) throw PreconditionError("quadratic term W must be symmetric");
    auto data = std::make_shared<Data>();
    data->form = Form::explicit_form;
    data->W = std::move(W);
    data->b = std::move(b);
    data->constant = constant;
    QuadObjective out;
    out.data_ = std::move(data);
    return out;
}

QuadObjective QuadObjective::with_ridge(double extra) const
{
    if (!std::isfinite(extra) || extra < 0.0) throw PreconditionError("ridge must be non-negative");
    QuadObjective out = *this;
    out.ridge_ += extra;
    return out;
}

QuadObjective QuadObjective::to_explicit() const
{
    if (!is_implicit()) return *this;
    QuadObjective out = explicit_form(data_->X.transpose() * data_->X, data_->b, data_->constant);
    out.ridge_ = ridge_;
    return out;
}

QuadObjective::Form QuadObjective::form() const noexcept { return data_->form; }

int QuadObjective::num_features() const noexcept
{
    return static_cast<int>(is_implicit() ? data_->X.cols() : data_->W.cols());
}

int QuadObjective::num_samples() const noexcept
{
    return is_implicit() ? static_cast<int>(data_->X.rows()) : 0;
}

const Matrix& QuadObjective::design() const { return data_->X; }
const Vector& QuadObjective::response() const { return data_->y; }
const Matrix& QuadObjective::quadratic() const { return data_->W; }
const Vector& QuadObjective::linear() const { return data_->b; }
double QuadObjective::constant() const noexcept { return data_->constant; }

double QuadObjective::loss(const Vector& theta) const
{
    if (theta.size() != num_features()) {
        throw DimensionError("p", "coefficient vector length does not match the objective");
    }
    double base;
    if (is_implicit()) {
        base = (data_->y - data_->X * theta).squaredNorm();
    } else {
        base = theta.dot(data_->W * theta) + data_->b.dot(theta) + data_->constant;
    }
    return base + ridge_ * theta.squaredNorm();
}

Vector QuadObjective::gradient(const Vector& theta) const
{
    if (theta.size() != num_features()) {
        throw DimensionError("p", "coefficient vector length does not match the objective");
    }
    return 2.0 * gram_times(theta) + data_->b + 2.0 * ridge_ * theta;
}

Vector QuadObjective::gram_times(const Vector& v) const
{
    if (is_implicit()) return data_->X.transpose() * (data_->X * v);
    return data_->W * v;
}

Matrix QuadObjective::gram_block(const std::vector<int>& rows, const std::vector<int>& cols) const
{
    Matrix out(rows.size(), cols.size());
    if (is_implicit()) {
        Matrix Xr(data_->X.rows(), rows.size());
        Matrix Xc(data_->X.rows(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i) Xr.col(i) = data_->X.col(rows[i]);
        for (std::size_t j = 0; j < cols.size(); ++j) Xc.col(j) = data_->X.col(cols[j]);
        out.noalias() = Xr.transpose() * Xc;
    } else {
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = data_->W(rows[i], cols[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lipschitz helpers

double power_iteration_max_eigenvalue(const Matrix& gram, double tol, int max_iters)
{
    const auto p = gram.rows();
    if (p == 0) return 0.0;
    // Deterministic start with all components present.
    Vector v = Vector::LinSpaced(p, 1.0, 2.0).normalized();
    double estimate = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector w = gram * v;
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / nrm;
        if (std::abs(next - estimate) <= tol * std::max(1.0, std::abs(next))) {
            estimate = next;
            break;
        }
        estimate = next;
    }
    return std::max(estimate, 0.0);
}

double group_lipschitz(int g, const QuadObjective& objective, const GroupPartition& partition)
{
    if (g < 0 || g >= partition.num_groups()) throw PreconditionError("group index out of range");
    if (partition.num_features() != objective.num_features()) {
        throw DimensionError("p", "partition and objective disagree on the number of features");
    }
    const auto& idx = partition.group(g);
    const Matrix block = objective.gram_block(idx, idx);
    double sigma;
    if (idx.size() <= 32) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(block, Eigen::EigenvaluesOnly);
        sigma = std::max(0.0, eig.eigenvalues().maxCoeff());
    } else {
        sigma = power_iteration_max_eigenvalue(block, 1e-9, 1000);
    }
    return 2.0 * sigma + 2.0 * objective.ridge();
}

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(QuadObjective objective, GroupPartition partition)
    : objective_(std::move(objective)), partition_(std::move(partition))
{
    const int p = objective_.num_features();
    if (partition_.num_features() != p) {
        std::ostringstream msg;
        msg << "partition covers " << partition_.num_features() << " features but the objective has " << p;
        throw DimensionError("p", msg.str());
    }
    if (!objective_.is_implicit()) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(objective_.quadratic());
        Vector lam = eig.eigenvalues();
        const double top = std::max(lam.maxCoeff(), 0.0);
        const double floor = 1e-12 * std::max(top, 1.0);
        if (lam.minCoeff() < -1e-9 * std::max(top, 1.0)) {
            throw PreconditionError("quadratic term W must be positive semidefinite");
        }
        const Matrix& V = eig.eigenvectors();
        const Vector vb = V.transpose() * objective_.linear();
        design_ = Matrix::Zero(p, p);
        response_ = Vector::Zero(p);
        double outside = 0.0;
        for (int i = 0; i < p; ++i) {
            if (lam[i] > floor) {
                const double s = std::sqrt(lam[i]);
                design_.row(i) = s * V.col(i).transpose();
                response_[i] = -0.5 * vb[i] / s;
            } else {
                outside += vb[i] * vb[i];
            }
        }
        if (std::sqrt(outside) > 1e-8 * (1.0 + objective_.linear().norm())) {
            throw PreconditionError("linear term b must lie in the range of W");
        }
        offset_ = objective_.constant() - response_.squaredNorm();
    }

    const Matrix& A = ls_design();
    const int q = partition_.num_groups();
    group_design_.resize(q);
    group_gram_.resize(q);
    group_lipschitz_.resize(q);
    for (int g = 0; g < q; ++g) {
        const auto& idx = partition_.group(g);
        Matrix Ag(A.rows(), idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) Ag.col(j) = A.col(idx[j]);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(Ag.transpose() * Ag);
        group_gram_[g].eigenvalues = eig.eigenvalues().cwiseMax(0.0);
        group_gram_[g].eigenvectors = eig.eigenvectors();
        group_lipschitz_[g] = 2.0 * group_gram_[g].eigenvalues.maxCoeff() + 2.0 * objective_.ridge();
        group_design_[g] = std::move(Ag);
    }
}

double Problem::global_lipschitz() const
{
    std::call_once(global_lipschitz_->once, [this] {
        const Matrix& A = ls_design();
        double sigma;
        if (A.cols() <= 32) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(A.transpose() * A, Eigen::EigenvaluesOnly);
            sigma = std::max(0.0, eig.eigenvalues().maxCoeff());
        } else {
            // Power iteration on A'A without forming it.
            const auto p = A.cols();
            Vector v = Vector::LinSpaced(p, 1.0, 2.0).normalized();
            sigma = 0.0;
            for (int it = 0; it < 1000; ++it) {
                Vector w = A.transpose() * (A * v);
                const double nrm = w.norm();
                if (nrm == 0.0) break;
                const double next = v.dot(w);
                v = w / nrm;
                const bool done = std::abs(next - sigma) <= 1e-9 * std::max(1.0, std::abs(next));
                sigma = next;
                if (done) break;
            }
            // The Rayleigh estimate approaches from below; the max block bound is also valid.
            for (int g = 0; g < num_groups(); ++g) sigma = std::max(sigma, group_gram_[g].eigenvalues.maxCoeff());
        }
        global_lipschitz_->value = 2.0 * sigma + 2.0 * objective_.ridge();
    });
    return global_lipschitz_->value;
}

// ---------------------------------------------------------------------------
// LossState

LossState::LossState(const Problem& problem, double extra_ridge, Vector theta)
    : problem_(&problem), ridge_(problem.objective().ridge() + extra_ridge), theta_(std::move(theta))
{
    if (theta_.size() != problem.num_features()) {
        throw DimensionError("p", "initial coefficient vector has the wrong length");
    }
    refresh();
}

LossState::LossState(const Problem& problem, double extra_ridge)
    : LossState(problem, extra_ridge, Vector::Zero(problem.num_features()))
{}

void LossState::refresh()
{
    residual_ = problem_->ls_response() - problem_->ls_design() * theta_;
}

Vector LossState::group_gradient(int g) const
{
    Vector grad = -2.0 * problem_->group_design_t_times(g, residual_);
    if (ridge_ != 0.0) grad += 2.0 * ridge_ * group_theta(g);
    return grad;
}

Vector LossState::full_gradient() const
{
    return -2.0 * (problem_->ls_design().transpose() * residual_) + 2.0 * ridge_ * theta_;
}

void LossState::set_group(int g, const Vector& value)
{
    const Vector old = group_theta(g);
    const Vector delta = value - old;
    if (delta.squaredNorm() == 0.0) return;
    residual_.noalias() -= problem_->group_design(g) * delta;
    problem_->partition().scatter(theta_, g, value);
}

void LossState::set_theta(const Vector& theta)
{
    if (theta.size() != problem_->num_features()) {
        throw DimensionError("p", "coefficient vector has the wrong length");
    }
    theta_ = theta;
    refresh();
}

double LossState::loss() const
{
    return residual_.squaredNorm() + problem_->ls_offset() + ridge_ * theta_.squaredNorm();
}

// ---------------------------------------------------------------------------
// Free functions

double evaluate_objective(const Vector& theta, const QuadObjective& objective, const Penalty& penalty,
                          const GroupPartition& partition)
{
    if (theta.size() != partition.num_features()) {
        std::ostringstream msg;
        msg << "theta has length " << theta.size() << " but the partition covers " << partition.num_features()
            << " features";
        throw DimensionError("p", msg.str());
    }
    if (objective.num_features() != partition.num_features()) {
        throw DimensionError("p", "partition and objective disagree on the number of features");
    }
    if (!penalty.weights.empty() && static_cast<int>(penalty.weights.size()) != partition.num_groups()) {
        throw DimensionError("q", "penalty weights must have one entry per group");
    }
    return objective.loss(theta) + penalty.lambda2 * theta.squaredNorm() + penalty.omega(theta, partition);
}

double evaluate_objective(const Vector& theta, const Problem& problem, const Penalty& penalty)
{
    return evaluate_objective(theta, problem.objective(), penalty, problem.partition());
}

Vector group_gradient(const Vector& theta, int g, const QuadObjective& objective, const GroupPartition& partition,
                      double lambda2)
{
    if (g < 0 || g >= partition.num_groups()) throw PreconditionError("group index out of range");
    if (theta.size() != partition.num_features() || objective.num_features() != partition.num_features()) {
        throw DimensionError("p", "theta, objective and partition must agree on the number of features");
    }
    const Vector full = objective.gradient(theta) + 2.0 * lambda2 * theta;
    return partition.gather(full, g);
}

Solution make_solution(const Problem& problem, const Penalty& penalty, Vector theta, SolveMeta meta)
{
    Solution sol;
    sol.objective = evaluate_objective(theta, problem, penalty);
    sol.support = problem.partition().support(theta);
    sol.group_norms = problem.partition().group_norms(theta);
    sol.theta = std::move(theta);
    sol.meta = std::move(meta);
    return sol;
}

Vector standardize_columns(Matrix& X)
{
    Vector scale(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double nrm = X.col(j).norm();
        scale[j] = nrm;
        if (nrm > 0.0) X.col(j) /= nrm;
    }
    return scale;
}

} // namespace l0group
