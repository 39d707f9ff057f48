#include <l0group/bench.hpp>
#include <l0group/error.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace l0group {

// ---------------------------------------------------------------------------
// Random streams

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : engine_(splitmix64(seed ^ splitmix64(stream_id)))
{}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RandomStream::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthSpec::validate() const
{
    if (example != 1 && example != 2) throw InputError("example must be 1 or 2");
    if (n < 1 || q < 1 || group_size < 1) throw InputError("n, q and group_size must be positive");
    if (k_star < 1 || k_star > q) throw InputError("k_star must satisfy 1 <= k_star <= q");
    if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
    if (!(snr > 0.0) || !std::isfinite(snr)) throw InputError("snr must be positive and finite");
    if (!(within_group_corr >= 0.0 && within_group_corr <= 1.0)) {
        throw InputError("within_group_corr must lie in [0, 1]");
    }
}

namespace {

Matrix draw_design(const SynthSpec& spec, int n, std::uint64_t offset)
{
    const int q = spec.q;
    const int T = spec.group_size;
    const int p = spec.p();
    RandomStream design(spec.seed, kStreamDesign + offset);
    RandomStream noise(spec.seed, kStreamColumnNoise + offset);
    Matrix X(n, p);
    if (spec.example == 1) {
        // AR(1) group representatives, standardized, then mixed with column noise.
        Matrix rep(n, q);
        const double innov = std::sqrt(1.0 - spec.rho * spec.rho);
        for (int i = 0; i < n; ++i) {
            rep(i, 0) = design.normal();
            for (int g = 1; g < q; ++g) rep(i, g) = spec.rho * rep(i, g - 1) + innov * design.normal();
        }
        for (int g = 0; g < q; ++g) {
            auto col = rep.col(g);
            col.array() -= col.mean();
            const double sd = std::sqrt(col.squaredNorm() / n);
            if (sd > 0.0) col /= sd;
        }
        const double a = std::sqrt(spec.within_group_corr);
        const double b = std::sqrt(1.0 - spec.within_group_corr);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) X(i, j) = a * rep(i, j / T) + b * noise.normal();
        }
    } else {
        const double a = std::sqrt(spec.rho);
        const double b = std::sqrt(1.0 - spec.rho);
        for (int i = 0; i < n; ++i) {
            const double u = design.normal();
            for (int j = 0; j < p; ++j) X(i, j) = a * u + b * noise.normal();
        }
    }
    return X;
}

void scale_columns(Matrix& X, double target)
{
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double nrm = X.col(j).norm();
        if (nrm > 0.0) X.col(j) *= target / nrm;
    }
}

} // namespace

SynthData generate(const SynthSpec& spec)
{
    spec.validate();
    SynthData out;
    out.X = draw_design(spec, spec.n, 0);
    scale_columns(out.X, 1.0);
    out.groups = GroupPartition::contiguous(spec.q, spec.group_size);

    out.beta_star = Vector::Zero(spec.p());
    RandomStream beta(spec.seed, kStreamBeta);
    for (int i = 0; i < spec.k_star; ++i) {
        const int g = static_cast<int>((static_cast<long long>(i) * spec.q) / spec.k_star);
        out.true_groups.push_back(g);
        for (int j : out.groups.group(g)) out.beta_star[j] = beta.normal();
    }
    const Vector signal = out.X * out.beta_star;
    const double var = (signal.array() - signal.mean()).square().sum() / spec.n;
    out.sigma2 = var / spec.snr;
    RandomStream err(spec.seed, kStreamError);
    out.y = signal;
    const double sigma = std::sqrt(out.sigma2);
    for (int i = 0; i < spec.n; ++i) out.y[i] += sigma * err.normal();
    return out;
}

SynthData generate_with_offset(const SynthSpec& spec, const SynthData& train, int n, std::uint64_t offset)
{
    spec.validate();
    if (n < 1) throw InputError("sample size must be positive");
    SynthData out;
    out.X = draw_design(spec, n, offset);
    // Keep the per-row scale of the training design.
    scale_columns(out.X, std::sqrt(static_cast<double>(n) / spec.n));
    out.groups = train.groups;
    out.beta_star = train.beta_star;
    out.true_groups = train.true_groups;
    out.sigma2 = train.sigma2;
    RandomStream err(spec.seed, kStreamError + offset);
    out.y = out.X * out.beta_star;
    const double sigma = std::sqrt(out.sigma2);
    for (int i = 0; i < n; ++i) out.y[i] += sigma * err.normal();
    return out;
}

SynthData generate_validation(const SynthSpec& spec, const SynthData& train)
{
    return generate_with_offset(spec, train, spec.n, kValidationOffset);
}

// ---------------------------------------------------------------------------
// Metrics

Metrics compute_metrics(const Vector& beta_hat, const Vector& beta_star, const Matrix& X,
                        const GroupPartition& groups)
{
    if (beta_hat.size() != beta_star.size() || beta_hat.size() != groups.num_features() ||
        X.cols() != beta_hat.size()) {
        throw DimensionError("p", "beta_hat, beta_star, X and the partition must agree on p");
    }
    const auto est = groups.support(beta_hat);
    const auto truth = groups.support(beta_star);
    Metrics m;
    m.support_size = static_cast<int>(est.size());
    for (int g : est) {
        if (std::binary_search(truth.begin(), truth.end(), g)) {
            ++m.tp;
        } else {
            ++m.fp;
        }
    }
    if (m.tp > 0) {
        const double precision = static_cast<double>(m.tp) / (m.tp + m.fp);
        const double recall = static_cast<double>(m.tp) / truth.size();
        m.f1 = 2.0 * precision * recall / (precision + recall);
    }
    const Vector diff = beta_hat - beta_star;
    m.test_mse = X.rows() > 0 ? (X * diff).squaredNorm() / X.rows() : 0.0;
    m.est_sup_norm = diff.size() > 0 ? diff.cwiseAbs().maxCoeff() : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Paths and tuning

PathResult fit_path(const Problem& problem, const Penalty& pen_template, const std::vector<double>& grid,
                    const PathOptions& opts)
{
    if (grid.empty()) throw PreconditionError("lambda0 grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] < grid[i - 1])) throw PreconditionError("lambda0 grid must be strictly decreasing");
    }
    PathResult out;
    std::optional<Vector> warm;
    for (double lam : grid) {
        Penalty pen = pen_template;
        pen.lambda0 = lam;
        BcdConfig bcd = opts.bcd;
        if (opts.cross_warm && warm) bcd.init = *warm;
        PathPoint pt{lam, {}, {}};
        try {
            pt.solution = opts.solver == PathSolver::bcd ? bcd_fit(problem, pen, bcd)
                                                         : local_search_fit(problem, pen, opts.swap, bcd);
            warm = pt.solution.theta;
        } catch (const std::exception& e) {
            pt.error = e.what();
            pt.solution = make_solution(problem, pen, Vector::Zero(problem.num_features()), SolveMeta{"none", "error"});
        }
        out.points.push_back(std::move(pt));
    }
    return out;
}

namespace {

/// Unpenalized least-squares refit on the support of theta; returns (rss, theta).
std::pair<double, Vector> ls_refit(const Problem& problem, const Vector& theta)
{
    LossState state(problem, 0.0, theta);
    const auto support = problem.partition().support(theta);
    solve_groups_exact(state, support, Penalty{}, 1e-12, 5000);
    return {state.loss(), state.theta()};
}

} // namespace

CardinalityPath cardinality_path(const Problem& problem, int k_max, const std::vector<Solution>& extra)
{
    const int q = problem.num_groups();
    if (k_max < 1 || k_max > q) throw PreconditionError("k_max must satisfy 1 <= k_max <= q");
    CardinalityPath out;
    const Penalty none;
    Vector prev = Vector::Zero(problem.num_features());
    PgdConfig pgd;
    pgd.max_iters = 5000;
    for (int k = 1; k <= k_max; ++k) {
        std::vector<Vector> starts{prev, Vector::Zero(problem.num_features())};
        double best_rss = kInfinity;
        Vector best;
        auto consider = [&](const Vector& theta) {
            auto [rss, refit] = ls_refit(problem, theta);
            if (rss < best_rss) {
                best_rss = rss;
                best = std::move(refit);
            }
        };
        for (const auto& s : starts) consider(pgd_constrained(problem, none, k, s, pgd).theta);
        for (const auto& sol : extra) {
            if (static_cast<int>(sol.support.size()) == k) consider(sol.theta);
        }
        if (k > 1 && out.rss.back() < best_rss) {
            best_rss = out.rss.back();
            best = out.theta.back();
        }
        out.rss.push_back(best_rss);
        out.theta.push_back(best);
        prev = best;
    }
    return out;
}

int select_k_bic(const std::vector<double>& rss, double a_coeff, double t_check, int q)
{
    if (rss.empty()) throw PreconditionError("BIC selection needs a non-empty path");
    if (static_cast<int>(rss.size()) > q) throw PreconditionError("path is longer than the number of groups");
    int best_k = 1;
    double best = kInfinity;
    for (std::size_t i = 0; i < rss.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        const double val = rss[i] + a_coeff * k * (t_check + std::log(q / k));
        if (val < best) {
            best = val;
            best_k = static_cast<int>(i + 1);
        }
    }
    return best_k;
}

double default_bic_coefficient(const std::vector<double>& rss, int n)
{
    if (rss.empty() || n < 1) throw PreconditionError("BIC coefficient needs a non-empty path and n >= 1");
    return 2.0 * rss.back() / n;
}

TuneResult tune_validation(const Problem& train, const Matrix& X_val, const Vector& y_val, const Penalty& pen_template,
                           const std::vector<double>& grid, const PathOptions& opts)
{
    if (X_val.rows() != y_val.size()) throw DimensionError("n", "validation design and response sizes differ");
    if (X_val.cols() != train.num_features()) throw DimensionError("p", "validation design has the wrong width");
    TuneResult out;
    out.path = fit_path(train, pen_template, grid, opts);
    const double n = std::max<Eigen::Index>(1, y_val.size());
    for (const auto& pt : out.path.points) {
        out.validation_mse.push_back(pt.error.empty() ? (y_val - X_val * pt.solution.theta).squaredNorm() / n
                                                      : kInfinity);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.path.points.size(); ++i) {
        const double a = out.validation_mse[i];
        const double b = out.validation_mse[best];
        const bool tie = std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
        const auto sa = out.path.points[i].solution.support.size();
        const auto sb = out.path.points[best].solution.support.size();
        if ((!tie && a < b) || (tie && sa < sb)) best = i;
    }
    out.best_index = best;
    out.best = out.path.points[best].solution;
    const double zero_mse = y_val.squaredNorm() / n;
    const double best_mse = out.validation_mse[best];
    if (!out.best.support.empty() && zero_mse <= best_mse * (1.0 + 1e-12)) {
        Penalty pen = pen_template;
        pen.lambda0 = grid.front();
        out.best_is_zero = true;
        out.best = make_solution(train, pen, Vector::Zero(train.num_features()), SolveMeta{"zero", "converged"});
    }
    return out;
}

} // namespace l0group
