#include <l0group/prox.hpp>
#include <l0group/error.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace l0group {

double hard_threshold_level(const ThresholdParams& params)
{
    return std::sqrt(2.0 * params.lambda0 / params.lhat) + params.lambda1 / params.lhat;
}

Vector group_hard_threshold(const Vector& z, const ThresholdParams& params)
{
    if (!(params.lhat > 0.0)) throw PreconditionError("lhat must be positive");
    const double nrm = z.norm();
    if (nrm > hard_threshold_level(params)) {
        return z * ((nrm - params.lambda1 / params.lhat) / nrm);
    }
    return Vector::Zero(z.size());
}

double reverse_huber(double t)
{
    const double a = std::abs(t);
    return a <= 1.0 ? a : 0.5 * (t * t + 1.0);
}

// ---------------------------------------------------------------------------
// PsiParams

bool PsiParams::huber_regime() const
{
    if (!(lambda2 > 0.0)) return false;
    return std::sqrt(lambda0 / lambda2) <= big_m;
}

void PsiParams::validate() const
{
    auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
    if (bad(lambda0) || bad(lambda1_w) || bad(lambda2)) {
        throw PreconditionError("Psi parameters must be finite and non-negative");
    }
    if (!(big_m > 0.0)) throw PreconditionError("big_m must be positive");
    if (lambda2 == 0.0 && !std::isfinite(big_m)) {
        throw PreconditionError("lambda2 = 0 with an infinite big_m leaves the relaxation without an l0 term; "
                                "set a finite big_m");
    }
}

// ---------------------------------------------------------------------------
// RadialPenalty

RadialPenalty::RadialPenalty(std::vector<Piece> pieces, double cap) : cap_(cap)
{
    if (!(cap > 0.0)) throw PreconditionError("radial penalty cap must be positive");
    double expect = 0.0;
    for (const auto& pc : pieces) {
        if (pc.lo != expect || pc.hi < pc.lo) throw PreconditionError("radial penalty pieces must be contiguous");
        expect = pc.hi;
        if (pc.hi > pc.lo) pieces_.push_back(pc);
    }
    if (pieces_.empty() || expect != cap) throw PreconditionError("radial penalty pieces must cover [0, cap]");
}

RadialPenalty RadialPenalty::linear_quadratic(double a1, double a2, double cap)
{
    return RadialPenalty({Piece{0.0, cap, 0.0, a1, a2}}, cap);
}

RadialPenalty RadialPenalty::psi(const PsiParams& params)
{
    params.validate();
    const double m = params.big_m;
    if (params.huber_regime()) {
        const double t0 = std::sqrt(params.lambda0 / params.lambda2);
        const double slope = 2.0 * std::sqrt(params.lambda0 * params.lambda2) + params.lambda1_w;
        if (t0 >= m) return linear_quadratic(slope, 0.0, m);
        return RadialPenalty({Piece{0.0, t0, 0.0, slope, 0.0},
                              Piece{t0, m, params.lambda0, params.lambda1_w, params.lambda2}},
                             m);
    }
    const double slope = params.lambda0 / m + params.lambda1_w + params.lambda2 * m;
    return linear_quadratic(slope, 0.0, m);
}

RadialPenalty RadialPenalty::plus_quadratic(double a2) const
{
    RadialPenalty out = *this;
    for (auto& pc : out.pieces_) pc.a2 += a2;
    return out;
}

namespace {

double piece_value(const RadialPenalty::Piece& pc, double t) { return pc.c0 + t * (pc.a1 + pc.a2 * t); }
double piece_slope(const RadialPenalty::Piece& pc, double t) { return pc.a1 + 2.0 * pc.a2 * t; }

} // namespace

double RadialPenalty::value(double t) const
{
    for (const auto& pc : pieces_) {
        if (t <= pc.hi) return piece_value(pc, t);
    }
    return piece_value(pieces_.back(), t);
}

double RadialPenalty::origin_slope() const { return pieces_.front().a1; }

double RadialPenalty::derivative_right(double t) const
{
    for (const auto& pc : pieces_) {
        if (t < pc.hi) return piece_slope(pc, t);
    }
    return piece_slope(pieces_.back(), t);
}

double RadialPenalty::derivative_left(double t) const
{
    if (t <= 0.0) return derivative_right(0.0);
    for (const auto& pc : pieces_) {
        if (t <= pc.hi) return piece_slope(pc, t);
    }
    return piece_slope(pieces_.back(), t);
}

double RadialPenalty::prox_radius(double r, double step) const
{
    // The 1-D objective is convex, so the best of the per-piece minimizers is global.
    double best_t = 0.0;
    double best = 0.5 * r * r / step;
    for (const auto& pc : pieces_) {
        const double hi = std::min(pc.hi, cap_);
        double t = (r - step * pc.a1) / (1.0 + 2.0 * step * pc.a2);
        t = std::clamp(t, pc.lo, hi);
        const double val = 0.5 * (t - r) * (t - r) / step + piece_value(pc, t);
        if (val < best) {
            best = val;
            best_t = t;
        }
    }
    return best_t;
}

double RadialPenalty::conjugate(double s) const
{
    double out = -kInfinity;
    for (const auto& pc : pieces_) {
        double t;
        if (pc.a2 > 0.0) {
            t = std::clamp((s - pc.a1) / (2.0 * pc.a2), pc.lo, pc.hi);
        } else if (s > pc.a1) {
            if (!std::isfinite(pc.hi)) return kInfinity;
            t = pc.hi;
        } else {
            t = pc.lo;
        }
        out = std::max(out, s * t - piece_value(pc, t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Psi and proxes

double psi(double norm, const PsiParams& params)
{
    params.validate();
    if (norm < 0.0) throw PreconditionError("psi expects a non-negative norm");
    if (norm > params.big_m + 1e-9) {
        std::ostringstream msg;
        msg << "norm " << norm << " exceeds big_m " << params.big_m;
        throw PreconditionError(msg.str());
    }
    if (params.huber_regime()) {
        if (params.lambda0 == 0.0) return params.lambda2 * norm * norm + params.lambda1_w * norm;
        return 2.0 * params.lambda0 * reverse_huber(std::sqrt(params.lambda2 / params.lambda0) * norm) +
               params.lambda1_w * norm;
    }
    return (params.lambda0 / params.big_m + params.lambda1_w + params.lambda2 * params.big_m) * norm;
}

Vector radial_prox(const Vector& v, double step, const RadialPenalty& penalty)
{
    if (!(step > 0.0)) throw PreconditionError("prox step must be positive");
    const double r = v.norm();
    if (r == 0.0) return Vector::Zero(v.size());
    const double t = penalty.prox_radius(r, step);
    return v * (t / r);
}

Vector psi_prox(const Vector& v, double step, const PsiParams& params)
{
    return radial_prox(v, step, RadialPenalty::psi(params));
}

// ---------------------------------------------------------------------------
// Exact group block minimizer

namespace {

struct SecularSystem
{
    Vector denom; // 2 (lambda_i + extra)
    Vector coef;  // V' a
    double null_tol;

    double radius(double mu) const
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < coef.size(); ++i) {
            const double d = denom[i] + mu;
            if (d <= null_tol) {
                if (std::abs(coef[i]) > 0.0) return kInfinity;
                continue;
            }
            const double x = coef[i] / d;
            s += x * x;
        }
        return std::sqrt(s);
    }

    Vector point(double mu) const
    {
        Vector w(coef.size());
        for (Eigen::Index i = 0; i < coef.size(); ++i) {
            const double d = denom[i] + mu;
            w[i] = d <= null_tol ? 0.0 : -coef[i] / d;
        }
        return w;
    }
};

} // namespace

Vector minimize_radial_quadratic(const GroupGram& gram, double extra, const Vector& a, const RadialPenalty& phi)
{
    const auto T = a.size();
    if (gram.eigenvalues.size() != T) throw DimensionError("T_g", "group Gram and linear term sizes differ");
    const double anorm = a.norm();
    if (anorm <= phi.origin_slope() || anorm == 0.0) return Vector::Zero(T);

    SecularSystem sys;
    sys.denom = 2.0 * (gram.eigenvalues.array() + extra).matrix();
    sys.coef = gram.eigenvectors.transpose() * a;
    const double dmax = std::max(sys.denom.maxCoeff(), 0.0);
    sys.null_tol = 1e-13 * std::max(dmax, 1.0);
    // Components of a in the numerical null space would make the quadratic
    // unbounded; they only arise from rounding, so drop them.
    for (Eigen::Index i = 0; i < T; ++i) {
        if (sys.denom[i] <= sys.null_tol && std::abs(sys.coef[i]) <= 1e-10 * anorm) sys.coef[i] = 0.0;
    }

    // g(mu) = mu s(mu) - phi'(s(mu)) is increasing in mu; its root gives the
    // unconstrained optimum (phi extended past the cap by its last piece).
    auto g = [&](double mu) {
        const double s = sys.radius(mu);
        if (!std::isfinite(s)) return -kInfinity;
        return mu * s - phi.derivative_right(s);
    };

    double mu;
    const double s0 = sys.radius(0.0);
    if (std::isfinite(s0) && g(0.0) >= 0.0) {
        mu = 0.0;
    } else {
        double lo = 0.0;
        double hi = std::max({1.0, dmax, anorm});
        while (g(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) < 0.0 ? lo : hi) = mid;
        }
        mu = hi;
    }

    const double cap = phi.cap();
    if (sys.radius(mu) > cap) {
        // The optimum sits on the boundary: find mu with s(mu) = cap.
        double lo = mu;
        double hi = std::max({2.0 * mu, 1.0, dmax});
        while (sys.radius(hi) > cap) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (sys.radius(mid) > cap ? lo : hi) = mid;
        }
        mu = hi;
    }
    return gram.eigenvectors * sys.point(mu);
}

} // namespace l0group
