#include <l0group/additive.hpp>
#include <l0group/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace l0group {

// ---------------------------------------------------------------------------
// SplineBasis

SplineBasis::SplineBasis(int degree, std::vector<double> interior_knots, double lower, double upper)
    : degree_(degree), interior_(std::move(interior_knots)), lower_(lower), upper_(upper)
{
    if (degree < 0) throw PreconditionError("spline degree must be non-negative");
    if (!(lower < upper)) throw PreconditionError("spline range must satisfy lower < upper");
    double prev = lower;
    for (double k : interior_) {
        if (!(k > prev)) throw PreconditionError("interior knots must be strictly increasing inside the range");
        prev = k;
    }
    if (!(upper > prev)) throw PreconditionError("interior knots must lie strictly inside the range");
    knots_.assign(degree + 1, lower);
    knots_.insert(knots_.end(), interior_.begin(), interior_.end());
    knots_.insert(knots_.end(), degree + 1, upper);
}

namespace {

int find_span(const std::vector<double>& U, int p, int n_basis, double u)
{
    if (u >= U[n_basis]) return n_basis - 1;
    int lo = p, hi = n_basis;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (u < U[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return lo;
}

} // namespace

Vector SplineBasis::derivatives(double u, int order) const
{
    const int p = degree_;
    const int d = size();
    Vector out = Vector::Zero(d);
    if (order < 0) throw PreconditionError("derivative order must be non-negative");
    if (order > p) return out;
    u = std::clamp(u, lower_, upper_);
    const auto& U = knots_;
    const int span = find_span(U, p, d, u);

    // Triangular table of basis values and knot differences.
    Matrix ndu(p + 1, p + 1);
    std::vector<double> left(p + 1), right(p + 1);
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - U[span + 1 - j];
        right[j] = U[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[r + 1] + left[j - r];
            const double temp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu(j, j) = saved;
    }
    if (order == 0) {
        for (int j = 0; j <= p; ++j) out[span - p + j] = ndu(j, p);
        return out;
    }

    Matrix a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a.setZero();
        a(0, 0) = 1.0;
        double d_val = 0.0;
        for (int k = 1; k <= order; ++k) {
            d_val = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d_val = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d_val += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                d_val += a(s2, k) * ndu(r, pk);
            }
            std::swap(s1, s2);
        }
        out[span - p + r] = d_val;
    }
    double factor = p;
    for (int k = 1; k < order; ++k) factor *= p - k;
    return out * factor;
}

Vector SplineBasis::values(double u) const { return derivatives(u, 0); }

Matrix SplineBasis::evaluate(const Vector& x) const
{
    Matrix out(x.size(), size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out.row(i) = values(x[i]).transpose();
    return out;
}

SplineBasis build_basis(const Vector& x, int degree, int num_knots, KnotPlacement placement, int covariate)
{
    auto fail = [&](const std::string& what) {
        std::ostringstream msg;
        msg << "covariate " << covariate << ": " << what;
        throw InputError(msg.str());
    };
    if (x.size() == 0) fail("no observations");
    if (!x.allFinite()) fail("non-finite values");
    if (num_knots < 0) fail("number of knots must be non-negative");
    const double lo = x.minCoeff();
    const double hi = x.maxCoeff();
    if (!(hi > lo)) fail("constant covariate cannot carry a spline basis");
    std::vector<double> knots(num_knots);
    if (placement == KnotPlacement::equispaced) {
        for (int i = 0; i < num_knots; ++i) knots[i] = lo + (hi - lo) * (i + 1) / (num_knots + 1);
    } else {
        std::vector<double> sorted(x.data(), x.data() + x.size());
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < num_knots; ++i) {
            const double pos = static_cast<double>(i + 1) / (num_knots + 1) * (sorted.size() - 1);
            const auto base = static_cast<std::size_t>(pos);
            const double frac = pos - base;
            knots[i] = base + 1 < sorted.size() ? sorted[base] * (1 - frac) + sorted[base + 1] * frac : sorted[base];
        }
        double prev = lo;
        for (double k : knots) {
            if (!(k > prev)) fail("quantile knots collapse onto duplicate values");
            prev = k;
        }
        if (!(hi > prev)) fail("quantile knots collapse onto duplicate values");
    }
    try {
        return SplineBasis(degree, std::move(knots), lo, hi);
    } catch (const PreconditionError& e) {
        fail(e.what());
    }
    return {};
}

// ---------------------------------------------------------------------------
// Roughness penalty

void gauss_legendre(int n, Vector& nodes, Vector& weights)
{
    if (n < 1) throw PreconditionError("quadrature needs at least one node");
    // Golub-Welsch: eigenvalues of the symmetric Jacobi matrix.
    Matrix J = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(J);
    nodes = eig.eigenvalues();
    weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
}

RoughnessPenalty build_penalty(const SplineBasis& basis)
{
    if (basis.degree() < 2) throw PreconditionError("roughness penalty needs spline degree >= 2");
    const int d = basis.size();
    // The integrand has degree 2 (degree - 2); degree + 1 nodes integrate it exactly.
    Vector nodes, weights;
    gauss_legendre(basis.degree() + 1, nodes, weights);
    RoughnessPenalty out;
    out.omega = Matrix::Zero(d, d);
    const auto& U = basis.knots();
    for (std::size_t i = 0; i + 1 < U.size(); ++i) {
        const double a = U[i], b = U[i + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (Eigen::Index k = 0; k < nodes.size(); ++k) {
            const Vector d2 = basis.derivatives(mid + half * nodes[k], 2);
            out.omega.noalias() += (half * weights[k]) * d2 * d2.transpose();
        }
    }
    out.omega = 0.5 * (out.omega + out.omega.transpose()).eval();
    out.jitter = 1e-8 * out.omega.trace() / d;
    return out;
}

// ---------------------------------------------------------------------------
// Assembly

Vector AdditiveProblem::theta_from_gamma(const Vector& gamma) const
{
    if (form == AdditiveForm::squared) return gamma;
    const auto& part = problem.partition();
    Vector theta(gamma.size());
    for (int g = 0; g < part.num_groups(); ++g) part.scatter(theta, g, factors[g] * part.gather(gamma, g));
    return theta;
}

Vector AdditiveProblem::gamma_from_theta(const Vector& theta) const
{
    if (form == AdditiveForm::squared) return theta;
    const auto& part = problem.partition();
    Vector gamma(theta.size());
    for (int g = 0; g < part.num_groups(); ++g) {
        part.scatter(gamma, g,
                     factors[g].triangularView<Eigen::Upper>().solve(part.gather(theta, g)));
    }
    return gamma;
}

AdditiveProblem assemble_additive(std::vector<SplineBasis> bases, std::vector<RoughnessPenalty> penalties,
                                  const std::vector<Matrix>& blocks, const Vector& y, double lambda0,
                                  double lambda_smooth, AdditiveForm form)
{
    const std::size_t q = bases.size();
    if (q == 0) throw PreconditionError("additive model needs at least one covariate");
    if (penalties.size() != q || blocks.size() != q) {
        throw DimensionError("q", "bases, penalties and blocks must have one entry per covariate");
    }
    if (!std::isfinite(lambda_smooth) || lambda_smooth < 0.0) {
        throw PreconditionError("lambda_smooth must be finite and non-negative");
    }
    const auto n = y.size();
    std::vector<int> sizes;
    for (std::size_t j = 0; j < q; ++j) {
        if (blocks[j].rows() != n) {
            std::ostringstream msg;
            msg << "basis block " << j << " has " << blocks[j].rows() << " rows but y has " << n;
            throw DimensionError("n", msg.str());
        }
        sizes.push_back(static_cast<int>(blocks[j].cols()));
    }

    AdditiveProblem out;
    out.form = form;
    out.lambda_smooth = lambda_smooth;
    out.intercept = y.mean();
    const Vector yc = y.array() - out.intercept;
    const int p = std::accumulate(sizes.begin(), sizes.end(), 0);
    Matrix B(n, p);
    int col = 0;
    for (std::size_t j = 0; j < q; ++j) {
        const Vector means = blocks[j].colwise().mean().transpose();
        B.middleCols(col, sizes[j]) = blocks[j].rowwise() - means.transpose();
        out.column_means.push_back(means);
        col += sizes[j];
    }
    auto partition = GroupPartition::from_sizes(sizes);

    out.penalty.lambda0 = lambda0;
    if (form == AdditiveForm::squared) {
        Matrix W = B.transpose() * B;
        col = 0;
        for (std::size_t j = 0; j < q; ++j) {
            W.block(col, col, sizes[j], sizes[j]) += lambda_smooth * penalties[j].regularized();
            col += sizes[j];
        }
        const Vector b = -2.0 * (B.transpose() * yc);
        out.problem = Problem(QuadObjective::explicit_form(std::move(W), b, yc.squaredNorm()), std::move(partition));
    } else {
        Matrix Xt(n, p);
        col = 0;
        for (std::size_t j = 0; j < q; ++j) {
            Eigen::LLT<Matrix> llt(penalties[j].regularized());
            if (llt.info() != Eigen::Success) {
                std::ostringstream msg;
                msg << "covariate " << j << ": Cholesky of the roughness penalty failed after jitter";
                throw PreconditionError(msg.str());
            }
            Matrix R = llt.matrixU();
            // B_g R^{-1}: solve R' Z' = B_g'.
            Xt.middleCols(col, sizes[j]) =
                R.transpose().triangularView<Eigen::Lower>().solve(B.middleCols(col, sizes[j]).transpose()).transpose();
            out.factors.push_back(std::move(R));
            col += sizes[j];
        }
        out.penalty.lambda1 = lambda_smooth;
        out.problem = Problem(QuadObjective::implicit(std::move(Xt), yc), std::move(partition));
    }
    out.bases = std::move(bases);
    out.penalties = std::move(penalties);
    return out;
}

AdditiveProblem assemble_additive(const Matrix& x, const Vector& y, double lambda0, double lambda_smooth,
                                  AdditiveForm form, int degree, int num_knots, KnotPlacement placement)
{
    if (x.rows() != y.size()) {
        std::ostringstream msg;
        msg << "covariates have " << x.rows() << " rows but y has " << y.size();
        throw DimensionError("n", msg.str());
    }
    std::vector<SplineBasis> bases;
    std::vector<RoughnessPenalty> pens;
    std::vector<Matrix> blocks;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        bases.push_back(build_basis(x.col(j), degree, num_knots, placement, static_cast<int>(j)));
        pens.push_back(build_penalty(bases.back()));
        blocks.push_back(bases.back().evaluate(x.col(j)));
    }
    return assemble_additive(std::move(bases), std::move(pens), blocks, y, lambda0, lambda_smooth, form);
}

AdditivePrediction predict_additive(const AdditiveProblem& model, const Vector& gamma, const Matrix& x_new)
{
    const auto& part = model.problem.partition();
    const auto q = static_cast<Eigen::Index>(model.bases.size());
    if (x_new.cols() != q) throw DimensionError("q", "x_new must have one column per covariate");
    if (gamma.size() != part.num_features()) throw DimensionError("p", "coefficient vector has the wrong length");
    AdditivePrediction out;
    out.components = Matrix::Zero(x_new.rows(), q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const auto& basis = model.bases[j];
        for (Eigen::Index i = 0; i < x_new.rows(); ++i) {
            if (x_new(i, j) < basis.lower() || x_new(i, j) > basis.upper()) ++out.extrapolated;
        }
        const Vector gj = part.gather(gamma, static_cast<int>(j));
        if ((gj.array() == 0.0).all()) continue;
        Matrix Bj = basis.evaluate(x_new.col(j));
        Bj.rowwise() -= model.column_means[j].transpose();
        out.components.col(j) = Bj * gj;
    }
    out.fitted = out.components.rowwise().sum().array() + model.intercept;
    return out;
}

} // namespace l0group
