#pragma once
#include <l0group/model.hpp>
#include <l0group/prox.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace l0group {

/// One group update of cyclic BCD, reported to BcdConfig::monitor.
struct UpdateEvent
{
    long cycle;
    int group;
    double objective_before;
    double objective_after;
    double step_sq;   ///< ||theta_g^{new} - theta_g^{old}||^2
    double lipschitz; ///< L_g (lambda2 included)
    double lhat;      ///< step constant used
    bool support_changed;
};

struct BcdConfig
{
    long max_cycles = 20000;
    double tol = 1e-9;             ///< relative objective change per full cycle
    double kkt_tol = 1e-9;         ///< max lhat_g ||delta theta_g|| over a cycle
    double lhat_inflation = 1.05;  ///< delta > 1, lhat_g = delta L_g + 1e-12
    std::optional<Vector> init;    ///< starting point, zero when absent
    /// Use this constant for every group instead of delta L_g (uniform constants).
    std::optional<double> lhat_override;
    /// Once the support is stable, jump to the restricted minimizer and keep it
    /// if it is a fixed point of the cycle map (the limit the cycles would reach).
    bool polish = true;
    std::function<void(const UpdateEvent&)> monitor;
};

enum class SwapStrategy { best_improving, first_improving };

struct SwapConfig
{
    int m = 1;
    int max_rounds = 1000;
    /// Defaults to best-improving for m = 1 and first-improving for m >= 2.
    std::optional<SwapStrategy> strategy;
    double min_improvement = 1e-9;
};

struct PgdConfig
{
    long max_iters = 20000;
    double tol = 1e-9;
    double kkt_tol = 1e-9;
    double lhat_inflation = 1.05;
    std::optional<double> lhat_override;
};

/// Residuals of the fixed-point conditions; each is <= 0 (or ~0) when satisfied.
struct FixedPointReport
{
    /// max over the support of ||grad_g l + lambda1 w_g theta_g/||theta_g|| ||.
    double stationarity = 0.0;
    /// max over the support of sqrt(2 lambda0/lhat_g) - ||theta_g||.
    double norm_slack = -kInfinity;
    /// max off the support of ||grad_g l|| - (sqrt(2 lambda0 lhat_g) + lambda1 w_g).
    double gradient_excess = -kInfinity;

    double worst() const { return std::max({stationarity, norm_slack, gradient_excess}); }
    bool satisfied(double tol) const { return worst() <= tol; }
};

/// delta L_g + 1e-12 with L_g including 2 lambda2.
std::vector<double> inflated_lipschitz(const Problem& problem, const Penalty& penalty, double inflation = 1.05);

/// Cyclic block coordinate descent with group hard thresholding.
Solution bcd_fit(const Problem& problem, const Penalty& penalty, const BcdConfig& cfg = {});

/**
 * One scan of the swap neighbourhood of theta (support S): subsets S1 of S and
 * S2 of the complement with |S1|, |S2| <= m, the entering groups re-optimized
 * exactly with everything else fixed. Returns the chosen improving point.
 */
std::optional<Vector> swap_search_step(const Vector& theta, int m, const Problem& problem, const Penalty& penalty,
                                       SwapStrategy strategy = SwapStrategy::best_improving,
                                       double min_improvement = 1e-9);

/// BCD followed by rounds of swap search and BCD until no swap improves.
Solution local_search_fit(const Problem& problem, const Penalty& penalty, const SwapConfig& cfg = {},
                          const BcdConfig& bcd_cfg = {});

/// Proximal gradient on the penalized objective with a single constant lhat = delta L.
Solution pgd_penalized(const Problem& problem, const Penalty& penalty, const Vector& init, const PgdConfig& cfg = {});

/// Proximal gradient under G(theta) <= k (no l0 penalty; lambda1 and lambda2 from `penalty`).
Solution pgd_constrained(const Problem& problem, const Penalty& penalty, int k, const Vector& init,
                         const PgdConfig& cfg = {});

/// Groups kept by the constrained prox of u: top-k by (lhat/2)(||u_g|| - lambda1 w_g/lhat)_+^2.
std::vector<int> constrained_keep_set(const Vector& u, const Problem& problem, const Penalty& penalty, int k,
                                      double lhat);

FixedPointReport verify_fixed_point(const Vector& theta, const Problem& problem, const Penalty& penalty,
                                    const std::vector<double>& lhat);

/// Smallest lambda0 making theta = 0 a BCD fixed point (times 1 + 1e-10).
double lambda0_max(const Problem& problem, const Penalty& penalty, double inflation = 1.05);

/// `count` log-spaced values from lambda0_max down to lambda0_max * ratio.
std::vector<double> lambda0_grid(const Problem& problem, const Penalty& penalty, int count = 100,
                                 double ratio = 1e-4, double inflation = 1.05);

/**
 * Minimize the objective over the groups in `groups` with every other group held
 * at its current value, by cyclic exact block minimization. `state` carries the
 * iterate and is updated in place. Returns the number of cycles.
 */
long solve_groups_exact(LossState& state, const std::vector<int>& groups, const Penalty& penalty,
                        double tol = 1e-12, long max_cycles = 10000);

} // namespace l0group
