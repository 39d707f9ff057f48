#include <l0group/heuristics.hpp>
#include <l0group/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace l0group {

namespace {

void check_inputs(const Problem& problem, const Penalty& penalty)
{
    penalty.validate(problem.num_groups());
}

/// Tracks h = loss + omega incrementally along group updates.
class ObjectiveTracker
{
public:
    ObjectiveTracker(const LossState& state, const Penalty& penalty) : state_(state), penalty_(penalty) { reset(); }

    void reset()
    {
        const auto& part = state_.problem().partition();
        sq_ = state_.theta().squaredNorm();
        pen_ = penalty_.omega(state_.theta(), part);
    }

    double value() const
    {
        return state_.residual().squaredNorm() + state_.problem().ls_offset() + state_.total_ridge() * sq_ + pen_;
    }

    void on_update(int g, const Vector& old_value, const Vector& new_value)
    {
        const double on = old_value.norm();
        const double nn = new_value.norm();
        sq_ += nn * nn - on * on;
        const double w = penalty_.lambda1 * penalty_.weight(g);
        if (on > 0.0) pen_ -= penalty_.lambda0 + w * on;
        if (nn > 0.0) pen_ += penalty_.lambda0 + w * nn;
    }

private:
    const LossState& state_;
    const Penalty& penalty_;
    double sq_ = 0.0;
    double pen_ = 0.0;
};

bool nonzero(const Vector& v) { return (v.array() != 0.0).any(); }

/// Per-group ``a`` of the exact block subproblem: -2 A_g' (r + A_g theta_g).
Vector block_linear_term(const LossState& state, int g)
{
    const Problem& pr = state.problem();
    const Vector theta_g = state.group_theta(g);
    Vector a = -2.0 * pr.group_design_t_times(g, state.residual());
    if (nonzero(theta_g)) {
        const auto& gram = pr.group_gram(g);
        a -= 2.0 * (gram.eigenvectors * (gram.eigenvalues.asDiagonal() * (gram.eigenvectors.transpose() * theta_g)));
    }
    return a;
}

} // namespace

std::vector<double> inflated_lipschitz(const Problem& problem, const Penalty& penalty, double inflation)
{
    if (!(inflation > 1.0)) throw PreconditionError("lhat inflation must be strictly greater than 1");
    std::vector<double> out(problem.num_groups());
    for (int g = 0; g < problem.num_groups(); ++g) {
        out[g] = inflation * (problem.group_lipschitz(g) + 2.0 * penalty.lambda2) + 1e-12;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cyclic BCD

Solution bcd_fit(const Problem& problem, const Penalty& penalty, const BcdConfig& cfg)
{
    check_inputs(problem, penalty);
    if (cfg.max_cycles < 1) throw PreconditionError("max_cycles must be at least 1");
    Stopwatch clock;
    const int q = problem.num_groups();
    std::vector<double> lip(q);
    for (int g = 0; g < q; ++g) lip[g] = problem.group_lipschitz(g) + 2.0 * penalty.lambda2;
    std::vector<double> lhat;
    if (cfg.lhat_override) {
        lhat.assign(q, *cfg.lhat_override);
        for (int g = 0; g < q; ++g) {
            if (!(lhat[g] > lip[g])) throw PreconditionError("lhat_override must exceed every group Lipschitz constant");
        }
    } else {
        lhat = inflated_lipschitz(problem, penalty, cfg.lhat_inflation);
    }

    LossState state(problem, penalty.lambda2, cfg.init ? *cfg.init : Vector::Zero(problem.num_features()));
    ObjectiveTracker tracker(state, penalty);
    double h = tracker.value();

    // Largest lhat_g ||T_g(theta) - theta_g|| of one block map applied at a fixed point.
    auto map_residual = [&](const LossState& st) {
        double worst = 0.0;
        for (int g = 0; g < q; ++g) {
            const Vector old = st.group_theta(g);
            const Vector z = old - st.group_gradient(g) / lhat[g];
            const Vector next =
                group_hard_threshold(z, ThresholdParams{penalty.lambda0, penalty.lambda1 * penalty.weight(g), lhat[g]});
            worst = std::max(worst, lhat[g] * (next - old).norm());
        }
        return worst;
    };

    SolveMeta meta{"bcd", "max-iterations", 0, 0.0};
    int stable_cycles = 0;
    bool polished = false;
    for (long cycle = 0; cycle < cfg.max_cycles; ++cycle) {
        const double h_start = h;
        double max_kkt = 0.0;
        bool support_changed = false;
        for (int g = 0; g < q; ++g) {
            const Vector old = state.group_theta(g);
            const Vector z = old - state.group_gradient(g) / lhat[g];
            const Vector next =
                group_hard_threshold(z, ThresholdParams{penalty.lambda0, penalty.lambda1 * penalty.weight(g), lhat[g]});
            const double step_sq = (next - old).squaredNorm();
            if (step_sq == 0.0) continue;
            const bool flipped = nonzero(old) != nonzero(next);
            support_changed = support_changed || flipped;
            state.set_group(g, next);
            tracker.on_update(g, old, next);
            const double h_next = tracker.value();
            if (cfg.monitor) cfg.monitor(UpdateEvent{cycle, g, h, h_next, step_sq, lip[g], lhat[g], flipped});
            h = h_next;
            max_kkt = std::max(max_kkt, lhat[g] * std::sqrt(step_sq));
        }
        // Resynchronize to avoid drift in the incremental bookkeeping.
        state.refresh();
        tracker.reset();
        h = tracker.value();
        meta.iterations = cycle + 1;
        stable_cycles = support_changed ? 0 : stable_cycles + 1;
        if (support_changed) polished = false;
        const bool small_change = std::abs(h_start - h) <= cfg.tol * std::max(1.0, std::abs(h));
        if (small_change && stable_cycles >= 2 && max_kkt <= cfg.kkt_tol) {
            meta.status = "converged";
            break;
        }
        if (cfg.polish && !polished && stable_cycles >= 2) {
            polished = true;
            const auto support = problem.partition().support(state.theta());
            LossState trial = state;
            solve_groups_exact(trial, support, penalty, 1e-13, 10000);
            const double h_trial = ObjectiveTracker(trial, penalty).value();
            if (problem.partition().support(trial.theta()) == support && h_trial <= h) {
                state = trial;
                tracker.reset();
                h = tracker.value();
                if (map_residual(state) <= cfg.kkt_tol) {
                    meta.status = "converged";
                    break;
                }
            }
        }
    }
    meta.wall_seconds = clock.seconds();
    return make_solution(problem, penalty, state.theta(), meta);
}

// ---------------------------------------------------------------------------
// Exact restricted block solves

long solve_groups_exact(LossState& state, const std::vector<int>& groups, const Penalty& penalty, double tol,
                        long max_cycles)
{
    const Problem& pr = state.problem();
    long cycle = 0;
    for (; cycle < max_cycles; ++cycle) {
        double max_step = 0.0;
        double max_norm = 0.0;
        for (int g : groups) {
            const Vector a = block_linear_term(state, g);
            const RadialPenalty phi = RadialPenalty::linear_quadratic(penalty.lambda1 * penalty.weight(g), 0.0);
            const Vector next = minimize_radial_quadratic(pr.group_gram(g), state.total_ridge(), a, phi);
            max_step = std::max(max_step, (next - state.group_theta(g)).norm());
            max_norm = std::max(max_norm, next.norm());
            state.set_group(g, next);
        }
        if (max_step <= tol * std::max(1.0, max_norm)) {
            ++cycle;
            break;
        }
    }
    state.refresh();
    return cycle;
}

// ---------------------------------------------------------------------------
// Swap search

namespace {

/// Calls fn on every subset of `items` with size in [lo, hi], in lexicographic order.
/// fn returns false to stop the enumeration; the function then returns false.
template <class Fn>
bool for_each_subset(const std::vector<int>& items, int lo, int hi, Fn&& fn)
{
    std::vector<int> pick;
    const int n = static_cast<int>(items.size());
    for (int size = lo; size <= std::min(hi, n); ++size) {
        std::vector<int> idx(size);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            pick.clear();
            for (int i : idx) pick.push_back(items[i]);
            if (!fn(pick)) return false;
            int pos = size - 1;
            while (pos >= 0 && idx[pos] == n - size + pos) --pos;
            if (pos < 0) break;
            ++idx[pos];
            for (int j = pos + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return true;
}

} // namespace

std::optional<Vector> swap_search_step(const Vector& theta, int m, const Problem& problem, const Penalty& penalty,
                                       SwapStrategy strategy, double min_improvement)
{
    check_inputs(problem, penalty);
    const int q = problem.num_groups();
    if (m < 1 || m > q) throw PreconditionError("swap size m must satisfy 1 <= m <= q");
    const auto& part = problem.partition();
    LossState state(problem, penalty.lambda2, theta);
    const double h0 = state.loss() + penalty.omega(theta, part);

    std::vector<int> inside = part.support(theta);
    std::vector<int> outside;
    for (int g = 0, s = 0; g < q; ++g) {
        if (s < static_cast<int>(inside.size()) && inside[s] == g) {
            ++s;
        } else {
            outside.push_back(g);
        }
    }

    double best = h0 - min_improvement;
    std::optional<Vector> best_theta;
    const double ridge = state.total_ridge();

    for_each_subset(inside, 0, m, [&](const std::vector<int>& s1) {
        // Remove S1.
        Vector theta1 = theta;
        Vector r1 = state.residual();
        for (int g : s1) {
            r1 += problem.group_design(g) * part.gather(theta, g);
            part.scatter(theta1, g, Vector::Zero(part.group_size(g)));
        }
        const double h1 = r1.squaredNorm() + problem.ls_offset() + ridge * theta1.squaredNorm() +
                          penalty.omega(theta1, part);

        return for_each_subset(outside, s1.empty() ? 1 : 0, m, [&](const std::vector<int>& s2) {
            double cand;
            Vector cand_theta;
            if (s2.empty()) {
                cand = h1;
                if (cand < best) cand_theta = theta1;
            } else if (s2.size() == 1) {
                const int g = s2.front();
                const Vector a = -2.0 * problem.group_design_t_times(g, r1);
                const double w = penalty.lambda1 * penalty.weight(g);
                const Vector t = minimize_radial_quadratic(problem.group_gram(g), ridge, a,
                                                           RadialPenalty::linear_quadratic(w, 0.0));
                if (!nonzero(t)) return true;
                const Vector At = problem.group_design(g) * t;
                cand = h1 + At.squaredNorm() + ridge * t.squaredNorm() + a.dot(t) + w * t.norm() + penalty.lambda0;
                if (cand < best) {
                    cand_theta = theta1;
                    part.scatter(cand_theta, g, t);
                }
            } else {
                LossState trial(problem, penalty.lambda2, theta1);
                solve_groups_exact(trial, s2, penalty);
                cand = trial.loss() + penalty.omega(trial.theta(), part);
                if (cand < best) cand_theta = trial.theta();
            }
            if (cand < best) {
                best = cand;
                best_theta = std::move(cand_theta);
                if (strategy == SwapStrategy::first_improving) return false;
            }
            return true;
        });
    });
    return best_theta;
}

Solution local_search_fit(const Problem& problem, const Penalty& penalty, const SwapConfig& cfg,
                          const BcdConfig& bcd_cfg)
{
    check_inputs(problem, penalty);
    if (cfg.m < 1 || cfg.m > problem.num_groups()) throw PreconditionError("swap size m must satisfy 1 <= m <= q");
    Stopwatch clock;
    const SwapStrategy strategy =
        cfg.strategy.value_or(cfg.m == 1 ? SwapStrategy::best_improving : SwapStrategy::first_improving);

    Solution current = bcd_fit(problem, penalty, bcd_cfg);
    std::string status = current.meta.status;
    long rounds = 0;
    for (; rounds < cfg.max_rounds; ++rounds) {
        auto cand = swap_search_step(current.theta, cfg.m, problem, penalty, strategy, cfg.min_improvement);
        if (!cand) break;
        BcdConfig next_cfg = bcd_cfg;
        next_cfg.init = std::move(*cand);
        Solution next = bcd_fit(problem, penalty, next_cfg);
        if (!(next.objective < current.objective - cfg.min_improvement)) break;
        status = next.meta.status;
        current = std::move(next);
    }
    if (rounds == cfg.max_rounds) status = "max-iterations";
    return make_solution(problem, penalty, current.theta,
                         SolveMeta{"local-search", status, rounds, clock.seconds()});
}

// ---------------------------------------------------------------------------
// Proximal gradient

namespace {

double pgd_lhat(const Problem& problem, const Penalty& penalty, const PgdConfig& cfg)
{
    const double lip = problem.global_lipschitz() + 2.0 * penalty.lambda2;
    if (cfg.lhat_override) {
        if (!(*cfg.lhat_override > lip)) throw PreconditionError("lhat_override must exceed the global Lipschitz constant");
        return *cfg.lhat_override;
    }
    if (!(cfg.lhat_inflation > 1.0)) throw PreconditionError("lhat inflation must be strictly greater than 1");
    return cfg.lhat_inflation * lip + 1e-12;
}

} // namespace

Solution pgd_penalized(const Problem& problem, const Penalty& penalty, const Vector& init, const PgdConfig& cfg)
{
    check_inputs(problem, penalty);
    if (init.size() != problem.num_features()) throw DimensionError("p", "initial point has the wrong length");
    Stopwatch clock;
    const double lhat = pgd_lhat(problem, penalty, cfg);
    const auto& part = problem.partition();
    LossState state(problem, penalty.lambda2, init);
    double h = state.loss() + penalty.omega(state.theta(), part);
    std::vector<int> support = part.support(state.theta());

    SolveMeta meta{"pgd", "max-iterations", 0, 0.0};
    int stable = 0;
    for (long it = 0; it < cfg.max_iters; ++it) {
        const Vector u = state.theta() - state.full_gradient() / lhat;
        Vector next(u.size());
        for (int g = 0; g < problem.num_groups(); ++g) {
            part.scatter(next, g,
                         group_hard_threshold(part.gather(u, g),
                                              ThresholdParams{penalty.lambda0, penalty.lambda1 * penalty.weight(g), lhat}));
        }
        const double step = lhat * (next - state.theta()).norm();
        state.set_theta(next);
        const double h_next = state.loss() + penalty.omega(next, part);
        auto next_support = part.support(next);
        stable = next_support == support ? stable + 1 : 0;
        support = std::move(next_support);
        meta.iterations = it + 1;
        const bool small_change = std::abs(h - h_next) <= cfg.tol * std::max(1.0, std::abs(h_next));
        h = h_next;
        if (small_change && stable >= 2 && step <= cfg.kkt_tol) {
            meta.status = "converged";
            break;
        }
    }
    meta.wall_seconds = clock.seconds();
    return make_solution(problem, penalty, state.theta(), meta);
}

std::vector<int> constrained_keep_set(const Vector& u, const Problem& problem, const Penalty& penalty, int k,
                                      double lhat)
{
    const auto& part = problem.partition();
    std::vector<std::pair<double, int>> scored;
    for (int g = 0; g < problem.num_groups(); ++g) {
        const double excess = part.group_norm(u, g) - penalty.lambda1 * penalty.weight(g) / lhat;
        if (excess > 0.0) scored.emplace_back(0.5 * lhat * excess * excess, g);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<int> keep;
    for (std::size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i) keep.push_back(scored[i].second);
    std::sort(keep.begin(), keep.end());
    return keep;
}

Solution pgd_constrained(const Problem& problem, const Penalty& penalty, int k, const Vector& init,
                         const PgdConfig& cfg)
{
    Penalty pen = penalty;
    pen.lambda0 = 0.0;
    check_inputs(problem, pen);
    const int q = problem.num_groups();
    if (k < 1 || k > q) throw PreconditionError("cardinality k must satisfy 1 <= k <= q");
    if (init.size() != problem.num_features()) throw DimensionError("p", "initial point has the wrong length");
    Stopwatch clock;
    const double lhat = pgd_lhat(problem, pen, cfg);
    const auto& part = problem.partition();

    // Make the starting point feasible by keeping its k largest groups.
    Vector start = Vector::Zero(init.size());
    {
        std::vector<int> order(q);
        std::iota(order.begin(), order.end(), 0);
        const Vector norms = part.group_norms(init);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return norms[a] > norms[b]; });
        for (int i = 0; i < k; ++i) part.scatter(start, order[i], part.gather(init, order[i]));
    }

    LossState state(problem, pen.lambda2, start);
    double h = state.loss() + pen.omega(start, part);
    std::vector<int> support = part.support(start);
    SolveMeta meta{"pgd-constrained", "max-iterations", 0, 0.0};
    int stable = 0;
    for (long it = 0; it < cfg.max_iters; ++it) {
        const Vector u = state.theta() - state.full_gradient() / lhat;
        Vector next = Vector::Zero(u.size());
        for (int g : constrained_keep_set(u, problem, pen, k, lhat)) {
            const Vector ug = part.gather(u, g);
            const double nrm = ug.norm();
            part.scatter(next, g, ug * ((nrm - pen.lambda1 * pen.weight(g) / lhat) / nrm));
        }
        const double step = lhat * (next - state.theta()).norm();
        state.set_theta(next);
        const double h_next = state.loss() + pen.omega(next, part);
        auto next_support = part.support(next);
        stable = next_support == support ? stable + 1 : 0;
        support = std::move(next_support);
        meta.iterations = it + 1;
        const bool small_change = std::abs(h - h_next) <= cfg.tol * std::max(1.0, std::abs(h_next));
        h = h_next;
        if (small_change && stable >= 2 && step <= cfg.kkt_tol) {
            meta.status = "converged";
            break;
        }
    }
    meta.wall_seconds = clock.seconds();
    return make_solution(problem, pen, state.theta(), meta);
}

// ---------------------------------------------------------------------------
// Diagnostics and grids

FixedPointReport verify_fixed_point(const Vector& theta, const Problem& problem, const Penalty& penalty,
                                    const std::vector<double>& lhat)
{
    check_inputs(problem, penalty);
    if (static_cast<int>(lhat.size()) != problem.num_groups()) {
        throw DimensionError("q", "one step constant per group is required");
    }
    const auto& part = problem.partition();
    LossState state(problem, penalty.lambda2, theta);
    const Vector grad = state.full_gradient();
    FixedPointReport rep;
    for (int g = 0; g < problem.num_groups(); ++g) {
        const Vector tg = part.gather(theta, g);
        const Vector gg = part.gather(grad, g);
        const double w = penalty.lambda1 * penalty.weight(g);
        const double nrm = tg.norm();
        if (nrm > 0.0) {
            rep.stationarity = std::max(rep.stationarity, (gg + w * tg / nrm).norm());
            rep.norm_slack = std::max(rep.norm_slack, std::sqrt(2.0 * penalty.lambda0 / lhat[g]) - nrm);
        } else {
            rep.gradient_excess =
                std::max(rep.gradient_excess, gg.norm() - (std::sqrt(2.0 * penalty.lambda0 * lhat[g]) + w));
        }
    }
    return rep;
}

double lambda0_max(const Problem& problem, const Penalty& penalty, double inflation)
{
    const auto lhat = inflated_lipschitz(problem, penalty, inflation);
    const auto& part = problem.partition();
    const Vector& b = problem.objective().linear();
    double out = 0.0;
    for (int g = 0; g < problem.num_groups(); ++g) {
        const double excess = std::max(0.0, part.group_norm(b, g) - penalty.lambda1 * penalty.weight(g));
        out = std::max(out, excess * excess / (2.0 * lhat[g]));
    }
    return out * (1.0 + 1e-10);
}

std::vector<double> lambda0_grid(const Problem& problem, const Penalty& penalty, int count, double ratio,
                                 double inflation)
{
    if (count < 1) throw PreconditionError("grid needs at least one point");
    if (!(ratio > 0.0 && ratio < 1.0)) throw PreconditionError("grid ratio must lie in (0, 1)");
    const double top = lambda0_max(problem, penalty, inflation);
    if (!(top > 0.0)) throw PreconditionError("lambda0_max is zero: the zero model is optimal for every lambda0");
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid[i] = top * std::pow(ratio, frac);
    }
    return grid;
}

} // namespace l0group
