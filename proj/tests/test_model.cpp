#include <doctest.h>

#include "instances.hpp"
#include "oracles.hpp"

#include <l0group/error.hpp>
#include <l0group/model.hpp>

#include <algorithm>
#include <numeric>

using namespace l0group;

TEST_CASE("partition validation")
{
    CHECK_NOTHROW(GroupPartition({{0, 2}, {1}}));
    CHECK_THROWS_AS(GroupPartition({{0, 1}, {1}}), PreconditionError);
    CHECK_THROWS_AS(GroupPartition({{0}, {}}), PreconditionError);
    CHECK_THROWS_AS(GroupPartition({{0}, {2}}), PreconditionError);
    CHECK_THROWS_AS(GroupPartition(std::vector<std::vector<int>>{}), PreconditionError);
    auto part = GroupPartition::contiguous(3, 2);
    CHECK(part.num_features() == 6);
    CHECK(part.group_of(3) == 1);
    Vector theta = Vector::Zero(6);
    theta[4] = 1.0;
    CHECK(part.support(theta) == std::vector<int>{2});
}

TEST_CASE("evaluate_objective examples")
{
    // Zero coefficients leave ||y||^2.
    {
        Matrix X = Matrix::Random(2, 3);
        Vector y(2);
        y << 1, 2;
        auto part = GroupPartition::contiguous(3, 1);
        CHECK(evaluate_objective(Vector::Zero(3), QuadObjective::implicit(X, y), Penalty{}, part) ==
              doctest::Approx(5.0));
    }
    // Direct evaluation: one group theta = (3, 4), lambda0 = 1, lambda1 = 2.
    {
        Matrix X = Matrix::Zero(2, 2);
        Vector y = Vector::Zero(2);
        Vector theta(2);
        theta << 3, 4;
        Penalty pen;
        pen.lambda0 = 1.0;
        pen.lambda1 = 2.0;
        CHECK(evaluate_objective(theta, QuadObjective::implicit(X, y), pen, GroupPartition::contiguous(1, 2)) ==
              doctest::Approx(11.0));
    }
}

TEST_CASE("implicit and explicit forms agree")
{
    oracle::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix X = rng.normal_matrix(5, 8);
        Vector y = rng.normal_vector(5);
        auto part = GroupPartition::from_sizes({3, 1, 2, 2});
        auto imp = QuadObjective::implicit(X, y);
        auto exp = QuadObjective::explicit_form(X.transpose() * X, -2.0 * X.transpose() * y, y.squaredNorm());
        Penalty pen{0.3, 0.2, 0.1, {}, kInfinity};
        Vector theta = rng.normal_vector(8);
        const double a = evaluate_objective(theta, imp, pen, part);
        const double b = evaluate_objective(theta, exp, pen, part);
        CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));

        // The least-squares view of the explicit form reproduces the loss.
        Problem pe(exp, part);
        LossState st(pe, 0.0, theta);
        CHECK(std::abs(st.loss() - imp.loss(theta)) <= 1e-9 * std::max(1.0, imp.loss(theta)));
        Problem pi(imp, part);
        for (int g = 0; g < 4; ++g) CHECK(std::abs(pe.group_lipschitz(g) - pi.group_lipschitz(g)) <= 1e-9);
    }
}

TEST_CASE("dimension errors name the dimension")
{
    Matrix X = Matrix::Random(4, 3);
    Vector y = Vector::Random(4);
    auto obj = QuadObjective::implicit(X, y);
    auto part = GroupPartition::contiguous(3, 1);
    try {
        evaluate_objective(Vector::Zero(5), obj, Penalty{}, part);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(e.dimension() == "p");
    }
    try {
        QuadObjective::implicit(X, Vector::Zero(5));
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(e.dimension() == "n");
    }
    CHECK_THROWS_AS(Problem(obj, GroupPartition::contiguous(2, 1)), DimensionError);
}

TEST_CASE("group gradient")
{
    // Gradient at the origin is b_g = (-2X'y)_g.
    oracle::Rng rng(3);
    Matrix X = rng.normal_matrix(6, 5);
    Vector y = rng.normal_vector(6);
    auto obj = QuadObjective::implicit(X, y);
    auto part = GroupPartition::from_sizes({2, 3});
    const Vector b = -2.0 * X.transpose() * y;
    CHECK((group_gradient(Vector::Zero(5), 1, obj, part) - b.segment(2, 3)).norm() < 1e-12);

    // One-dimensional least-squares optimum has zero gradient.
    Matrix X1(1, 1);
    X1 << 1.0;
    Vector y1(1);
    y1 << 1.0;
    Vector t1(1);
    t1 << 1.0;
    CHECK(group_gradient(t1, 0, QuadObjective::implicit(X1, y1), GroupPartition::contiguous(1, 1))[0] ==
          doctest::Approx(0.0));

    // Central finite differences, ridge included.
    for (int trial = 0; trial < 10; ++trial) {
        Vector theta = rng.normal_vector(5);
        const double lam2 = 0.7;
        auto f = [&](const Vector& t) { return obj.loss(t) + lam2 * t.squaredNorm(); };
        for (int g = 0; g < 2; ++g) {
            const Vector grad = group_gradient(theta, g, obj, part, lam2);
            const auto& idx = part.group(g);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                Vector tp = theta, tm = theta;
                tp[idx[i]] += 1e-6;
                tm[idx[i]] -= 1e-6;
                const double fd = (f(tp) - f(tm)) / 2e-6;
                CHECK(std::abs(fd - grad[i]) <= 1e-5);
            }
        }
    }
}

TEST_CASE("group Lipschitz constants")
{
    // Unit-norm single column: 2.
    Matrix X = Matrix::Zero(3, 1);
    X(0, 0) = 1.0;
    CHECK(group_lipschitz(0, QuadObjective::implicit(X, Vector::Zero(3)), GroupPartition::contiguous(1, 1)) ==
          doctest::Approx(2.0));
    // Identity W block: 2.
    auto W = QuadObjective::explicit_form(Matrix::Identity(3, 3), Vector::Zero(3), 0.0);
    CHECK(group_lipschitz(0, W, GroupPartition::contiguous(1, 3)) == doctest::Approx(2.0));

    // Dense eigensolve oracle, and the power-iteration branch for a large group.
    oracle::Rng rng(5);
    for (int size : {4, 40}) {
        Matrix Xr = rng.normal_matrix(60, size);
        auto obj = QuadObjective::implicit(Xr, rng.normal_vector(60));
        auto part = GroupPartition::contiguous(1, size);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(Xr.transpose() * Xr);
        const double expect = 2.0 * eig.eigenvalues().maxCoeff();
        CHECK(std::abs(group_lipschitz(0, obj, part) - expect) <= 1e-6 * expect);
    }
}

TEST_CASE("block Lipschitz inequality and global bound")
{
    oracle::Rng rng(8);
    auto inst = testdata::random_instance(rng, 15, 6, 3, 2);
    Problem pr = inst.problem();
    double max_block = 0.0;
    for (int g = 0; g < pr.num_groups(); ++g) max_block = std::max(max_block, pr.group_lipschitz(g));
    CHECK(pr.global_lipschitz() >= max_block - 1e-12);
    for (int trial = 0; trial < 50; ++trial) {
        const int g = rng.integer(0, pr.num_groups() - 1);
        Vector a = rng.normal_vector(pr.num_features());
        Vector b = a;
        const auto& idx = pr.partition().group(g);
        for (int j : idx) b[j] += rng.normal();
        const Vector ga = group_gradient(a, g, pr.objective(), pr.partition());
        const Vector gb = group_gradient(b, g, pr.objective(), pr.partition());
        const double lhs = (ga - gb).norm();
        const double rhs = pr.group_lipschitz(g) * (pr.partition().gather(a, g) - pr.partition().gather(b, g)).norm();
        CHECK(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("objective invariant under consistent group relabelling")
{
    oracle::Rng rng(21);
    auto inst = testdata::random_instance(rng, 10, 5, 3, 2);
    Vector theta = rng.normal_vector(inst.part.num_features());
    Penalty pen{0.5, 0.3, 0.2, {1.0, 2.0, 0.5, 1.5, 1.0}, kInfinity};
    const double base = evaluate_objective(theta, QuadObjective::implicit(inst.X, inst.y), pen, inst.part);
    std::vector<int> perm{3, 0, 4, 1, 2};
    std::vector<std::vector<int>> groups;
    std::vector<double> weights;
    for (int g : perm) {
        groups.push_back(inst.groups[g]);
        weights.push_back(pen.weights[g]);
    }
    Penalty pen2 = pen;
    pen2.weights = weights;
    const double permuted =
        evaluate_objective(theta, QuadObjective::implicit(inst.X, inst.y), pen2, GroupPartition(groups));
    CHECK(std::abs(base - permuted) <= 1e-12 * std::max(1.0, base));
}

TEST_CASE("solution objective matches evaluation")
{
    oracle::Rng rng(2);
    auto inst = testdata::random_instance(rng, 12, 4, 2, 2);
    Problem pr = inst.problem();
    Penalty pen{0.1, 0.05, 0.01, {}, kInfinity};
    Vector theta = rng.normal_vector(pr.num_features());
    auto sol = make_solution(pr, pen, theta, SolveMeta{"test"});
    CHECK(std::abs(sol.objective - evaluate_objective(theta, pr, pen)) <= 1e-10 * std::abs(sol.objective));
    CHECK(sol.support.size() == 4);
}

TEST_CASE("column standardization")
{
    Matrix X(3, 2);
    X << 3, 0, 4, 0, 0, 0;
    Vector s = standardize_columns(X);
    CHECK(s[0] == doctest::Approx(5.0));
    CHECK(X.col(0).norm() == doctest::Approx(1.0));
    CHECK(s[1] == 0.0);
}
