#pragma once
#include <l0group/model.hpp>

#include <vector>

namespace l0group {

enum class KnotPlacement { equispaced, quantile };

/**
 * Clamped B-spline basis of one covariate. The basis has
 * d = num_knots + degree + 1 functions over [lower, upper].
 */
class SplineBasis
{
public:
    SplineBasis() = default;
    SplineBasis(int degree, std::vector<double> interior_knots, double lower, double upper);

    int degree() const noexcept { return degree_; }
    int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    const std::vector<double>& interior_knots() const noexcept { return interior_; }
    /// Full clamped knot vector (degree + 1 copies of each boundary).
    const std::vector<double>& knots() const noexcept { return knots_; }

    /// Values of all basis functions at u (u is clamped to [lower, upper]).
    Vector values(double u) const;
    /// `order`-th derivatives of all basis functions at u.
    Vector derivatives(double u, int order) const;
    /// Rows of basis values for every entry of x.
    Matrix evaluate(const Vector& x) const;

private:
    int degree_ = 3;
    std::vector<double> interior_;
    std::vector<double> knots_;
    double lower_ = 0.0;
    double upper_ = 1.0;
};

/// Basis for one covariate, knots inside its observed range.
SplineBasis build_basis(const Vector& x, int degree = 3, int num_knots = 10,
                        KnotPlacement placement = KnotPlacement::equispaced, int covariate = 0);

struct RoughnessPenalty
{
    Matrix omega;        ///< integral of N_i'' N_k''
    double jitter = 0.0; ///< 1e-8 tr(omega)/d

    Matrix regularized() const { return omega + jitter * Matrix::Identity(omega.rows(), omega.cols()); }
};

/// Exact second-derivative Gram matrix by per-interval Gauss-Legendre quadrature.
RoughnessPenalty build_penalty(const SplineBasis& basis);

/// n-point Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, Vector& nodes, Vector& weights);

enum class AdditiveForm { squared, norm };

struct AdditiveProblem
{
    AdditiveForm form = AdditiveForm::squared;
    std::vector<SplineBasis> bases;
    std::vector<RoughnessPenalty> penalties;
    std::vector<Vector> column_means; ///< centering of each raw basis block
    std::vector<Matrix> factors;      ///< R_g with theta_g = R_g gamma_g (norm form)
    double intercept = 0.0;
    double lambda_smooth = 0.0;
    Problem problem;
    Penalty penalty;

    Vector theta_from_gamma(const Vector& gamma) const;
    Vector gamma_from_theta(const Vector& theta) const;
};

/**
 * Stack centered basis blocks. Squared form: explicit objective with
 * W = B'B + lambda_smooth blockdiag(Omega_j + jitter), b = -2B'(y - mean y).
 * Norm form: theta_g = R_g gamma_g with R_g'R_g = Omega_g + jitter, design
 * B_g R_g^{-1} and lambda1 = lambda_smooth.
 */
AdditiveProblem assemble_additive(const Matrix& x, const Vector& y, double lambda0, double lambda_smooth,
                                  AdditiveForm form = AdditiveForm::squared, int degree = 3, int num_knots = 10,
                                  KnotPlacement placement = KnotPlacement::equispaced);

/// Assemble from prebuilt bases and penalties; `blocks` are the raw basis matrices.
AdditiveProblem assemble_additive(std::vector<SplineBasis> bases, std::vector<RoughnessPenalty> penalties,
                                  const std::vector<Matrix>& blocks, const Vector& y, double lambda0,
                                  double lambda_smooth, AdditiveForm form);

struct AdditivePrediction
{
    Vector fitted;     ///< intercept + sum of components
    Matrix components; ///< n_new x q per-covariate contributions
    long extrapolated = 0; ///< entries of x_new outside the training range
};

/// Evaluate the fitted additive model at new covariates (columns = covariates).
AdditivePrediction predict_additive(const AdditiveProblem& model, const Vector& gamma, const Matrix& x_new);

} // namespace l0group
