#pragma once
#include <l0group/model.hpp>

#include <vector>

namespace l0group {

/// Parameters of the group hard-thresholding map H(z; lambda; lhat).
struct ThresholdParams
{
    double lambda0 = 0.0;
    double lambda1 = 0.0; ///< already multiplied by the group weight
    double lhat = 1.0;
};

/**
 * Group hard threshold: (z/||z||)(||z|| - lambda1/lhat) when
 * ||z|| > sqrt(2 lambda0/lhat) + lambda1/lhat, zero otherwise (ties give zero).
 */
Vector group_hard_threshold(const Vector& z, const ThresholdParams& params);

/// Threshold on ||z|| above which group_hard_threshold is nonzero.
double hard_threshold_level(const ThresholdParams& params);

/// |t| for |t| <= 1, (t^2 + 1)/2 otherwise.
double reverse_huber(double t);

/// Parameters of the relaxed per-group penalty Psi.
struct PsiParams
{
    double lambda0 = 0.0;
    double lambda1_w = 0.0; ///< lambda1 * w_g
    double lambda2 = 0.0;
    double big_m = kInfinity;

    /// True when sqrt(lambda0/lambda2) <= big_m (lambda2 = 0 is always linear).
    bool huber_regime() const;
    /// Throws PreconditionError for lambda2 = 0 with an infinite big_m.
    void validate() const;
};

/**
 * Convex, continuous, non-decreasing penalty of a group's norm t in [0, cap],
 * stored as quadratic pieces c0 + a1 t + a2 t^2 on consecutive intervals.
 * All the per-group penalties of the relaxations (Psi, the fixed-one variant,
 * the Big-M variant) and of the restricted heuristic solves are of this kind.
 */
class RadialPenalty
{
public:
    struct Piece
    {
        double lo, hi;
        double c0, a1, a2;
    };

    RadialPenalty() = default;
    RadialPenalty(std::vector<Piece> pieces, double cap);

    /// a1 t + a2 t^2 on [0, cap].
    static RadialPenalty linear_quadratic(double a1, double a2, double cap = kInfinity);
    /// Psi for the given parameters.
    static RadialPenalty psi(const PsiParams& params);

    /// Copy with `a2` added to every quadratic coefficient.
    RadialPenalty plus_quadratic(double a2) const;

    double cap() const noexcept { return cap_; }
    const std::vector<Piece>& pieces() const noexcept { return pieces_; }

    double value(double t) const;
    /// Right derivative at 0.
    double origin_slope() const;
    double derivative_left(double t) const;
    double derivative_right(double t) const;
    /// argmin over t in [0, cap] of (t - r)^2/(2 step) + phi(t).
    double prox_radius(double r, double step) const;
    /// sup over t in [0, cap] of s t - phi(t), for s >= 0 (may be +infinity).
    double conjugate(double s) const;

private:
    std::vector<Piece> pieces_;
    double cap_ = kInfinity;
};

/// Psi(norm); throws PreconditionError when norm exceeds big_m by more than 1e-9.
double psi(double norm, const PsiParams& params);

/// argmin over ||theta|| <= big_m of ||theta - v||^2/(2 step) + Psi(||theta||).
Vector psi_prox(const Vector& v, double step, const PsiParams& params);

/// Radial prox for an arbitrary RadialPenalty.
Vector radial_prox(const Vector& v, double step, const RadialPenalty& penalty);

/**
 * Exact minimizer of  t'(Q + extra I)t + <a, t> + phi(||t||)  over ||t|| <= phi.cap(),
 * with Q = V diag(eigenvalues) V' positive semidefinite. The stationarity
 * condition makes t = -(2Q + 2 extra I + mu I)^{-1} a for a scalar mu >= 0
 * located by bisection, with a separate solve when the optimum sits on the cap.
 */
Vector minimize_radial_quadratic(const GroupGram& gram, double extra, const Vector& a, const RadialPenalty& phi);

} // namespace l0group
