#pragma once
#include <l0group/heuristics.hpp>
#include <l0group/model.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace l0group {

/**
 * Pinned pseudo-random stream: mt19937_64 seeded through splitmix64 from
 * (seed, stream id), with a Marsaglia polar normal sampler. Output is
 * identical across platforms and standard libraries.
 */
class RandomStream
{
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Named stream ids; validation draws add kValidationOffset.
enum StreamId : std::uint64_t {
    kStreamDesign = 1,
    kStreamColumnNoise = 2,
    kStreamBeta = 3,
    kStreamError = 4,
    kValidationOffset = 100,
};

struct SynthSpec
{
    int example = 1;
    int n = 100;
    int q = 10;
    int group_size = 4;
    int k_star = 2;
    double rho = 0.0;
    double snr = 10.0;
    std::uint64_t seed = 0;
    double within_group_corr = 0.9;

    int p() const { return q * group_size; }
    void validate() const;
};

struct SynthData
{
    Matrix X;
    Vector y;
    Vector beta_star;
    GroupPartition groups;
    std::vector<int> true_groups;
    double sigma2 = 0.0;
};

/// Draw a synthetic dataset.
SynthData generate(const SynthSpec& spec);

/// Independent design and noise from the same spec, sharing beta* and sigma^2 with `train`.
SynthData generate_validation(const SynthSpec& spec, const SynthData& train);

/// Same generative design but with n rows and a stream offset (used for test sets).
SynthData generate_with_offset(const SynthSpec& spec, const SynthData& train, int n, std::uint64_t offset);

struct Metrics
{
    int tp = 0;
    int fp = 0;
    double f1 = 0.0;
    double test_mse = 0.0;
    int support_size = 0;
    double est_sup_norm = 0.0;
};

Metrics compute_metrics(const Vector& beta_hat, const Vector& beta_star, const Matrix& X,
                        const GroupPartition& groups);

enum class PathSolver { bcd, local_search };

struct PathPoint
{
    double lambda0;
    Solution solution;
    std::string error; ///< non-empty when the solver failed at this point
};

struct PathResult
{
    std::vector<PathPoint> points;
};

struct PathOptions
{
    PathSolver solver = PathSolver::local_search;
    bool cross_warm = true;
    SwapConfig swap;
    BcdConfig bcd;
};

/// Fit every lambda0 of a strictly decreasing grid; lambda1, lambda2, weights from `pen_template`.
PathResult fit_path(const Problem& problem, const Penalty& pen_template, const std::vector<double>& grid,
                    const PathOptions& opts = {});

/// Best residual sum of squares found for each support size k = 1..k_max.
struct CardinalityPath
{
    std::vector<double> rss; ///< rss[k - 1]
    std::vector<Vector> theta;
};

/**
 * Least-squares fits with G(theta) <= k for k = 1..k_max, from constrained
 * proximal gradient (warm-started along k, then refit on the support) and
 * any penalized-path solutions supplied in `extra`.
 */
CardinalityPath cardinality_path(const Problem& problem, int k_max, const std::vector<Solution>& extra = {});

/// argmin_k rss_k + a k (T_check + log(q/k)); ties go to the smaller k. Returns k (1-based).
int select_k_bic(const std::vector<double>& rss, double a_coeff, double t_check, int q);

/// Default a = 2 sigma^2 with sigma^2 = rss_{k_max}/n.
double default_bic_coefficient(const std::vector<double>& rss, int n);

struct TuneResult
{
    std::size_t best_index = 0; ///< best path point (ignoring the empty model)
    bool best_is_zero = false;  ///< the empty model beat every path point on validation
    Solution best;
    std::vector<double> validation_mse;
    PathResult path;
};

/// Path on the training problem, scored by (1/n)||y_val - X_val theta||^2, ties to sparser.
/// The empty model is always a candidate.
TuneResult tune_validation(const Problem& train, const Matrix& X_val, const Vector& y_val, const Penalty& pen_template,
                           const std::vector<double>& grid, const PathOptions& opts = {});

} // namespace l0group
