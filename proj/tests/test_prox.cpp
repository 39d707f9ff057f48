#include <doctest.h>

#include "oracles.hpp"

#include <l0group/error.hpp>
#include <l0group/prox.hpp>

#include <cmath>

using namespace l0group;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(v.size());
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Subproblem value of the hard-threshold map along the ray through z.
double threshold_objective(const Vector& theta, const Vector& z, const ThresholdParams& p)
{
    const double nrm = theta.norm();
    return 0.5 * p.lhat * (theta - z).squaredNorm() + (nrm > 0.0 ? p.lambda0 + p.lambda1 * nrm : 0.0);
}

} // namespace

TEST_CASE("group_hard_threshold examples")
{
    CHECK(group_hard_threshold(Vector::Zero(3), {1.0, 1.0, 1.0}).norm() == 0.0);
    CHECK((group_hard_threshold(vec({3, 4}), {2.0, 0.0, 1.0}) - vec({3, 4})).norm() < 1e-15);
    CHECK((group_hard_threshold(vec({6, 8}), {2.0, 5.0, 1.0}) - vec({3, 4})).norm() < 1e-14);
    CHECK(group_hard_threshold(vec({3, 4}), {2.0, 5.0, 1.0}).norm() == 0.0);
    // Exact tie returns zero: sqrt(2 * 12.5 / 1) = 5.
    CHECK(group_hard_threshold(vec({3, 4}), {12.5, 0.0, 1.0}).norm() == 0.0);
    CHECK_THROWS_AS(group_hard_threshold(vec({1}), {1.0, 0.0, 0.0}), PreconditionError);
}

TEST_CASE("group_hard_threshold matches radial grid")
{
    oracle::Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int dim = rng.integer(1, 4);
        Vector z = rng.normal_vector(dim) * rng.uniform(0.1, 4.0);
        ThresholdParams p{rng.uniform(0.0, 3.0), rng.uniform(0.0, 2.0), rng.uniform(0.5, 5.0)};
        const Vector out = group_hard_threshold(z, p);
        const double nz = z.norm();
        auto profile = [&](double r) { return threshold_objective(z * (r / nz), z, p); };
        auto [r_best, v_best] = oracle::grid_min(profile, 0.0, 2.0 * nz, 100000);
        v_best = std::min(v_best, threshold_objective(Vector::Zero(dim), z, p));
        CHECK(threshold_objective(out, z, p) <= v_best + 1e-8);
        // Output norm is zero or at least sqrt(2 lambda0 / lhat).
        const double on = out.norm();
        CHECK((on == 0.0 || on >= std::sqrt(2.0 * p.lambda0 / p.lhat) - 1e-12));
    }
}

TEST_CASE("reverse_huber")
{
    CHECK(reverse_huber(0.0) == 0.0);
    CHECK(reverse_huber(1.0) == 1.0);
    CHECK(reverse_huber(3.0) == 5.0);
    CHECK(reverse_huber(-3.0) == 5.0);
    CHECK(reverse_huber(1.0 + 1e-12) == doctest::Approx(1.0));
}

TEST_CASE("psi examples")
{
    PsiParams huber{1.0, 0.0, 1.0, 10.0};
    CHECK(huber.huber_regime());
    CHECK(psi(0.0, huber) == 0.0);
    CHECK(psi(0.5, huber) == doctest::Approx(1.0));
    CHECK(psi(2.0, huber) == doctest::Approx(5.0));
    PsiParams linear{100.0, 0.0, 0.0, 2.0};
    CHECK_FALSE(linear.huber_regime());
    CHECK(psi(1.0, linear) == doctest::Approx(50.0));
    CHECK_THROWS_AS(psi(2.1, linear), PreconditionError);
    CHECK_NOTHROW(psi(2.0 + 1e-10, linear));
    CHECK_THROWS_AS(psi(1.0, PsiParams{1.0, 0.0, 0.0, kInfinity}), PreconditionError);
}

TEST_CASE("psi matches its defining program")
{
    oracle::Rng rng(23);
    for (int trial = 0; trial < 500; ++trial) {
        PsiParams p{rng.uniform(0.01, 5.0), rng.uniform(0.0, 1.0) * (trial % 2), rng.uniform(0.0, 3.0) * (trial % 3 != 0),
                    rng.uniform(0.2, 5.0)};
        const double t = rng.uniform(0.0, p.big_m);
        const double expect = oracle::psi_program(t, p.lambda0, p.lambda1_w, p.lambda2, p.big_m);
        CHECK(std::abs(psi(t, p) - expect) <= 1e-4);
    }
}

TEST_CASE("psi shape: continuity, monotonicity, convexity, regime boundary")
{
    oracle::Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        PsiParams p{rng.uniform(0.01, 5.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 3.0), rng.uniform(0.5, 5.0)};
        const int pts = 401;
        const double h = p.big_m / (pts - 1);
        double prev = psi(0.0, p);
        double prev_diff = 0.0;
        for (int i = 1; i < pts; ++i) {
            const double v = psi(i * h, p);
            const double d = v - prev;
            CHECK(d >= -1e-12);
            if (i > 1) CHECK(d - prev_diff >= -1e-10);
            prev = v;
            prev_diff = d;
        }
    }
    // At sqrt(lambda0/lambda2) = M both branches agree at M.
    for (int trial = 0; trial < 20; ++trial) {
        const double l0 = rng.uniform(0.1, 4.0), l2 = rng.uniform(0.1, 4.0), w = rng.uniform(0.0, 1.0);
        const double m = std::sqrt(l0 / l2);
        const double huber_branch = 2.0 * l0 * reverse_huber(std::sqrt(l2 / l0) * m) + w * m;
        const double linear_branch = (l0 / m + w + l2 * m) * m;
        CHECK(std::abs(huber_branch - linear_branch) <= 1e-12 * std::max(1.0, linear_branch));
        CHECK(std::abs(psi(m, PsiParams{l0, w, l2, m}) - linear_branch) <= 1e-12 * std::max(1.0, linear_branch));
    }
}

TEST_CASE("psi_prox")
{
    PsiParams lin{2.0, 0.5, 0.0, 3.0};
    CHECK(psi_prox(Vector::Zero(2), 0.7, lin).norm() == 0.0);
    // Linear regime: soft threshold then projection.
    oracle::Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        PsiParams p{rng.uniform(0.0, 3.0), rng.uniform(0.0, 1.0), 0.0, rng.uniform(0.5, 3.0)};
        const double c = p.lambda0 / p.big_m + p.lambda1_w;
        const double step = rng.uniform(0.1, 2.0);
        Vector v = rng.normal_vector(3) * rng.uniform(0.0, 4.0);
        const double r = std::min(p.big_m, std::max(0.0, v.norm() - step * c));
        CHECK(std::abs(psi_prox(v, step, p).norm() - r) <= 1e-12);
    }
    // Grid oracle over the radius with 10^6 points.
    for (int trial = 0; trial < 20; ++trial) {
        PsiParams p{rng.uniform(0.01, 3.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 3.0), rng.uniform(0.5, 4.0)};
        const double step = rng.uniform(0.1, 2.0);
        Vector v = rng.normal_vector(2) * rng.uniform(0.0, 4.0);
        const double nv = v.norm();
        auto f = [&](double r) { return (r - nv) * (r - nv) / (2.0 * step) + psi(r, p); };
        const auto [r_grid, v_grid] = oracle::grid_min(f, 0.0, p.big_m, 1000000);
        const Vector out = psi_prox(v, step, p);
        CHECK(std::abs(out.norm() - r_grid) <= 1e-5);
        CHECK(f(out.norm()) <= v_grid + 1e-12);
        if (out.norm() > 0.0) CHECK((out / out.norm() - v / nv).norm() < 1e-12);
    }
}

TEST_CASE("psi_prox is non-expansive")
{
    oracle::Rng rng(37);
    for (int trial = 0; trial < 500; ++trial) {
        PsiParams p{rng.uniform(0.01, 3.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 3.0), rng.uniform(0.5, 4.0)};
        const double step = rng.uniform(0.1, 2.0);
        Vector a = rng.normal_vector(3) * 3.0, b = rng.normal_vector(3) * 3.0;
        CHECK((psi_prox(a, step, p) - psi_prox(b, step, p)).norm() <= (a - b).norm() + 1e-12);
    }
}

TEST_CASE("radial penalty conjugate")
{
    oracle::Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        PsiParams p{rng.uniform(0.01, 3.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 3.0), rng.uniform(0.5, 4.0)};
        const auto phi = RadialPenalty::psi(p).plus_quadratic(rng.uniform(0.0, 1.0) * (trial % 2));
        const double s = rng.uniform(0.0, 10.0);
        auto neg = [&](double t) { return -(s * t - phi.value(t)); };
        const double expect = -oracle::convex_min(neg, 0.0, phi.cap()).second;
        CHECK(std::abs(phi.conjugate(s) - expect) <= 1e-8 * std::max(1.0, std::abs(expect)));
    }
    CHECK(RadialPenalty::linear_quadratic(1.0, 0.0).conjugate(2.0) == kInfinity);
    CHECK(RadialPenalty::linear_quadratic(1.0, 0.0).conjugate(0.5) == 0.0);
}

TEST_CASE("minimize_radial_quadratic matches a polar oracle")
{
    oracle::Rng rng(43);
    for (int trial = 0; trial < 60; ++trial) {
        Matrix X = rng.normal_matrix(5, 2);
        GroupGram gram;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(X.transpose() * X);
        gram.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
        gram.eigenvectors = eig.eigenvectors();
        const Matrix Q = X.transpose() * X;
        const double extra = rng.uniform(0.0, 1.0) * (trial % 2);
        const Vector a = rng.normal_vector(2) * 4.0;
        PsiParams pp{rng.uniform(0.01, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 2.0), rng.uniform(0.3, 3.0)};
        const RadialPenalty phi = RadialPenalty::psi(pp);
        auto f = [&](const Vector& t) { return t.dot((Q + extra * Matrix::Identity(2, 2)) * t) + a.dot(t) + phi.value(t.norm()); };
        const Vector t = minimize_radial_quadratic(gram, extra, a, phi);
        CHECK(t.norm() <= phi.cap() + 1e-12);

        // Polar oracle: for each direction the profile is convex in the radius.
        auto along = [&](double ang) {
            Vector u(2);
            u << std::cos(ang), std::sin(ang);
            return oracle::convex_min([&](double r) { return f(r * u); }, 0.0, phi.cap(), 200).second;
        };
        auto [ang, best] = oracle::grid_min(along, 0.0, 2.0 * M_PI, 720);
        const double h = 2.0 * M_PI / 719;
        best = std::min(best, oracle::golden_min(along, ang - h, ang + h, 80).second);
        CHECK(f(t) <= best + 1e-9);
        CHECK(f(t) >= best - 1e-6);
    }
}
