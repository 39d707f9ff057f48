#include <l0group/additive.hpp>
#include <l0group/bench.hpp>
#include <l0group/bnb.hpp>
#include <l0group/error.hpp>
#include <l0group/heuristics.hpp>
#include <l0group/io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace l0group;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitLimit = 3;

/// Raised when a solver stopped on an iteration, node or time limit; the result is still printed.
struct LimitReached
{};

struct DataArgs
{
    std::string x_path;
    std::string y_path;
    std::string groups_path;
    bool header = false;
};

void add_data_options(CLI::App* cmd, DataArgs& d, bool need_groups = true)
{
    cmd->add_option("--X", d.x_path, "design matrix CSV")->required();
    cmd->add_option("--y", d.y_path, "response CSV")->required();
    auto* g = cmd->add_option("--groups", d.groups_path, "group file (one group per line)");
    if (need_groups) g->required();
    cmd->add_flag("--header", d.header, "CSV files carry a header line");
}

Problem load_problem(const DataArgs& d)
{
    const Matrix X = read_csv_matrix(d.x_path, d.header);
    const Vector y = read_csv_vector(d.y_path, d.header);
    return Problem(QuadObjective::implicit(X, y), read_groups(d.groups_path));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json solution_json(const Solution& s)
{
    return json{{"objective", s.objective},
                {"support", s.support},
                {"nnz_groups", s.support.size()},
                {"solver", s.meta.solver},
                {"status", s.meta.status},
                {"iterations", s.meta.iterations},
                {"seconds", s.meta.wall_seconds},
                {"theta", to_std(s.theta)}};
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw InputError("cannot parse lambda0 grid entry '" + tok + "'");
        }
    }
    if (out.empty()) throw InputError("empty lambda0 grid");
    return out;
}

struct PathArgs
{
    DataArgs data;
    std::optional<double> lambda0;
    std::string grid_text;
    int n_lambda = 100;
    double ratio = 1e-4;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::string solver = "local-search";
    int m = 1;
    std::uint64_t seed = 0;
    std::string init = "zero";
};

void add_path_options(CLI::App* cmd, PathArgs& a)
{
    add_data_options(cmd, a.data);
    auto* single = cmd->add_option("--lambda0", a.lambda0, "single lambda0 value");
    cmd->add_option("--lambda0-grid", a.grid_text, "comma-separated, strictly decreasing lambda0 values")
        ->excludes(single);
    cmd->add_option("--n-lambda", a.n_lambda, "number of grid points below lambda0_max")->check(CLI::PositiveNumber);
    cmd->add_option("--ratio", a.ratio, "smallest grid value as a fraction of lambda0_max");
    cmd->add_option("--lambda1", a.lambda1, "group-lasso weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lambda2", a.lambda2, "ridge weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--solver", a.solver, "bcd | local-search | pgd")
        ->check(CLI::IsMember({"bcd", "local-search", "pgd"}));
    cmd->add_option("--m", a.m, "swap subset size for local search")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", a.seed, "seed of the random initial point (with --init random)");
    cmd->add_option("--init", a.init, "zero | random")->check(CLI::IsMember({"zero", "random"}));
}

Penalty path_penalty(const PathArgs& a)
{
    Penalty pen;
    pen.lambda1 = a.lambda1;
    pen.lambda2 = a.lambda2;
    return pen;
}

std::vector<double> path_grid(const PathArgs& a, const Problem& pr, const Penalty& pen)
{
    if (a.lambda0) return {*a.lambda0};
    if (!a.grid_text.empty()) return parse_grid(a.grid_text);
    return lambda0_grid(pr, pen, a.n_lambda, a.ratio);
}

Vector initial_point(const PathArgs& a, const Problem& pr)
{
    Vector init = Vector::Zero(pr.num_features());
    if (a.init == "random") {
        RandomStream rs(a.seed, 0);
        for (Eigen::Index j = 0; j < init.size(); ++j) init[j] = rs.normal();
    }
    return init;
}

/// Fits every grid point; pgd is run independently per point, the others through fit_path.
std::vector<PathPoint> run_path(const PathArgs& a, const Problem& pr, const Penalty& pen,
                                const std::vector<double>& grid)
{
    const Vector init = initial_point(a, pr);
    if (a.solver == "pgd") {
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] < grid[i - 1])) throw InputError("lambda0 grid must be strictly decreasing");
        std::vector<PathPoint> out;
        Vector warm = init;
        for (double lam : grid) {
            Penalty p = pen;
            p.lambda0 = lam;
            Solution s = pgd_penalized(pr, p, warm);
            warm = s.theta;
            out.push_back({lam, std::move(s), {}});
        }
        return out;
    }
    PathOptions opts;
    opts.solver = a.solver == "bcd" ? PathSolver::bcd : PathSolver::local_search;
    opts.swap.m = a.m;
    if (a.init == "random") opts.bcd.init = init;
    return fit_path(pr, pen, grid, opts).points;
}

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& config_path, const std::string& out_dir, const std::optional<std::uint64_t>& seed)
{
    SynthSpec spec;
    std::optional<int> p_given;
    for (const auto& [key, value] : read_config(config_path)) {
        try {
            if (key == "example") spec.example = std::stoi(value);
            else if (key == "n") spec.n = std::stoi(value);
            else if (key == "q") spec.q = std::stoi(value);
            else if (key == "group_size") spec.group_size = std::stoi(value);
            else if (key == "p") p_given = std::stoi(value);
            else if (key == "k_star") spec.k_star = std::stoi(value);
            else if (key == "rho") spec.rho = std::stod(value);
            else if (key == "snr") spec.snr = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "within_group_corr") spec.within_group_corr = std::stod(value);
            else throw InputError(config_path + ": unknown key '" + key + "'");
        } catch (const std::logic_error&) {
            throw InputError(config_path + ": bad value for '" + key + "': " + value);
        }
    }
    if (p_given && *p_given != spec.p()) throw InputError(config_path + ": p must equal q * group_size");
    if (seed) spec.seed = *seed;
    const SynthData d = generate(spec);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_csv_matrix((dir / "X.csv").string(), d.X);
    write_csv_vector((dir / "y.csv").string(), d.y);
    write_groups((dir / "groups.txt").string(), d.groups);
    write_csv_vector((dir / "beta_star.csv").string(), d.beta_star);
    std::cout << json{{"n", spec.n},
                      {"p", spec.p()},
                      {"q", spec.q},
                      {"sigma2", d.sigma2},
                      {"true_groups", d.true_groups},
                      {"seed", spec.seed},
                      {"out", out_dir}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_fit(const PathArgs& a, const std::string& x_val, const std::string& y_val, const std::string& theta_out)
{
    const Problem pr = load_problem(a.data);
    const Penalty pen = path_penalty(a);
    const auto grid = path_grid(a, pr, pen);
    const auto points = run_path(a, pr, pen, grid);

    std::size_t best = points.size() - 1;
    json out;
    if (!x_val.empty() || !y_val.empty()) {
        if (x_val.empty() || y_val.empty()) throw InputError("--X-val and --y-val must be given together");
        const Matrix Xv = read_csv_matrix(x_val, a.data.header);
        const Vector yv = read_csv_vector(y_val, a.data.header);
        if (Xv.cols() != pr.num_features()) throw DimensionError("p", "validation design has the wrong width");
        if (Xv.rows() != yv.size()) throw DimensionError("n", "validation design and response sizes differ");
        std::vector<double> mse;
        for (std::size_t i = 0; i < points.size(); ++i) {
            mse.push_back((yv - Xv * points[i].solution.theta).squaredNorm() / yv.size());
            const bool tie = std::abs(mse[i] - mse[best]) <= 1e-12 * std::max(mse[i], mse[best]);
            if (i == 0 || (!tie && mse[i] < mse[best]) ||
                (tie && points[i].solution.support.size() < points[best].solution.support.size()))
                best = i;
        }
        out["validation_mse"] = mse;
    } else if (points.size() > 1) {
        json all = json::array();
        for (const auto& pt : points) {
            json j = solution_json(pt.solution);
            j["lambda0"] = pt.lambda0;
            if (!pt.error.empty()) j["error"] = pt.error;
            all.push_back(j);
        }
        out["path"] = all;
    }
    const auto& chosen = points[best];
    if (!chosen.error.empty()) throw PreconditionError(chosen.error);
    out["best"] = solution_json(chosen.solution);
    out["best"]["lambda0"] = chosen.lambda0;
    if (!theta_out.empty()) write_csv_vector(theta_out, chosen.solution.theta);
    std::cout << out.dump() << "\n";
    if (chosen.solution.meta.status == "max-iterations") throw LimitReached{};
    return 0;
}

int cmd_path(const PathArgs& a, const std::string& out_dir, const std::string& jsonl_path)
{
    const Problem pr = load_problem(a.data);
    const Penalty pen = path_penalty(a);
    const auto points = run_path(a, pr, pen, path_grid(a, pr, pen));
    fs::create_directories(out_dir);
    std::ofstream file;
    if (!jsonl_path.empty()) {
        file.open(jsonl_path);
        if (!file) throw InputError("cannot write " + jsonl_path);
    }
    std::ostream& sink = jsonl_path.empty() ? std::cout : file;
    bool limit = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& pt = points[i];
        const std::string theta_file = (fs::path(out_dir) / ("theta_" + std::to_string(i) + ".csv")).string();
        write_csv_vector(theta_file, pt.solution.theta);
        json j{{"lambda0", pt.lambda0},
               {"objective", pt.solution.objective},
               {"support", pt.solution.support},
               {"nnz_groups", pt.solution.support.size()},
               {"theta_file", theta_file}};
        if (!pt.error.empty()) j["error"] = pt.error;
        sink << j.dump() << "\n";
        limit = limit || pt.solution.meta.status == "max-iterations";
    }
    if (limit) throw LimitReached{};
    return 0;
}

struct ExactArgs
{
    DataArgs data;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double gap = 0.01;
    std::string big_m = "auto";
    long node_limit = 1000000;
    double time_limit = 0.0;
    std::string warm_start = "local-search";
    long log_interval = 0;
    std::string theta_out;
};

int cmd_fit_exact(const ExactArgs& a)
{
    const Problem pr = load_problem(a.data);
    Penalty pen;
    pen.lambda0 = a.lambda0;
    pen.lambda1 = a.lambda1;
    pen.lambda2 = a.lambda2;

    std::optional<Solution> warm;
    if (a.warm_start == "local-search") {
        warm = local_search_fit(pr, pen);
    } else if (a.warm_start != "none") {
        const Vector theta = read_csv_vector(a.warm_start);
        if (theta.size() != pr.num_features()) throw DimensionError("p", "warm start has the wrong length");
        warm = make_solution(pr, pen, theta, SolveMeta{"file"});
    }
    if (a.big_m == "auto") {
        if (!warm) warm = local_search_fit(pr, pen);
        pen.big_m = estimate_big_m(pr, pen, *warm);
    } else if (a.big_m == "inf") {
        pen.big_m = kInfinity;
    } else {
        try {
            pen.big_m = std::stod(a.big_m);
        } catch (const std::exception&) {
            throw InputError("--big-m must be a number, 'auto' or 'inf'");
        }
    }
    if (warm) *warm = make_solution(pr, pen, warm->theta, warm->meta);

    BnbOptions opts;
    opts.gap_tol = a.gap;
    opts.node_limit = a.node_limit;
    if (a.time_limit > 0.0) opts.time_limit = a.time_limit;
    opts.log_interval = a.log_interval;
    opts.log = [](const std::string& line) { std::cerr << line << "\n"; };
    const BnbResult res = solve_exact(pr, pen, warm, opts);
    if (!a.theta_out.empty()) write_csv_vector(a.theta_out, res.incumbent.theta);
    json j = json::parse(res.to_json());
    j["big_m"] = std::isfinite(pen.big_m) ? json(pen.big_m) : json("inf");
    j["root_lb"] = res.root_lower_bound;
    j["seconds"] = res.wall_seconds;
    std::cout << j.dump() << "\n";
    if (res.status == BnbStatus::node_limit || res.status == BnbStatus::time_limit) throw LimitReached{};
    return 0;
}

struct AdditiveArgs
{
    std::string x_path;
    std::string y_path;
    bool header = false;
    double lambda0 = 0.0;
    double lambda_smooth = 1e-3;
    int degree = 3;
    int knots = 10;
    std::string form = "squared";
    std::string placement = "equispaced";
    std::string solver = "local-search";
    std::string predict;
    std::string predict_out;
};

int cmd_additive(const AdditiveArgs& a)
{
    const Matrix x = read_csv_matrix(a.x_path, a.header);
    const Vector y = read_csv_vector(a.y_path, a.header);
    const AdditiveForm form = a.form == "norm" ? AdditiveForm::norm : AdditiveForm::squared;
    const KnotPlacement placement = a.placement == "quantile" ? KnotPlacement::quantile : KnotPlacement::equispaced;
    const AdditiveProblem ap = assemble_additive(x, y, a.lambda0, a.lambda_smooth, form, a.degree, a.knots, placement);
    const Solution sol = a.solver == "bcd" ? bcd_fit(ap.problem, ap.penalty) : local_search_fit(ap.problem, ap.penalty);
    const Vector gamma = ap.gamma_from_theta(sol.theta);
    json out{{"objective", sol.objective},
             {"support", sol.support},
             {"nnz_groups", sol.support.size()},
             {"intercept", ap.intercept},
             {"status", sol.meta.status},
             {"gamma", to_std(gamma)}};
    if (!a.predict.empty()) {
        const Matrix xn = read_csv_matrix(a.predict, a.header);
        const AdditivePrediction pred = predict_additive(ap, gamma, xn);
        out["extrapolated"] = pred.extrapolated;
        if (!a.predict_out.empty()) {
            write_csv_vector(a.predict_out, pred.fitted);
        } else {
            out["fitted"] = to_std(pred.fitted);
        }
    }
    std::cout << out.dump() << "\n";
    if (sol.meta.status == "max-iterations") throw LimitReached{};
    return 0;
}

int cmd_eval(const std::string& theta_path, const std::string& truth_path, const std::string& x_path,
             const std::string& groups_path, bool header)
{
    const Vector theta = read_csv_vector(theta_path);
    const Vector truth = read_csv_vector(truth_path);
    const Matrix X = read_csv_matrix(x_path, header);
    const Metrics m = compute_metrics(theta, truth, X, read_groups(groups_path));
    std::cout << json{{"tp", m.tp},
                      {"fp", m.fp},
                      {"f1", m.f1},
                      {"test_mse", m.test_mse},
                      {"support_size", m.support_size},
                      {"est_sup_norm", m.est_sup_norm}}
                     .dump()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse regression with group l0 penalties"};
    app.require_subcommand(1);

    std::string gen_config, gen_out = ".";
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--config", gen_config, "key=value synthetic data specification")->required();
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--seed", gen_seed, "override the seed of the configuration");

    PathArgs fit_args;
    std::string fit_x_val, fit_y_val, fit_theta_out;
    auto* fit = app.add_subcommand("fit", "heuristic fit over a lambda0 grid");
    add_path_options(fit, fit_args);
    fit->add_option("--X-val", fit_x_val, "validation design for tuning");
    fit->add_option("--y-val", fit_y_val, "validation response for tuning");
    fit->add_option("--theta-out", fit_theta_out, "write the selected coefficients to this CSV");

    ExactArgs exact_args;
    auto* exact = app.add_subcommand("fit-exact", "branch-and-bound solve with an optimality certificate");
    add_data_options(exact, exact_args.data);
    exact->add_option("--lambda0", exact_args.lambda0)->required()->check(CLI::NonNegativeNumber);
    exact->add_option("--lambda1", exact_args.lambda1)->check(CLI::NonNegativeNumber);
    exact->add_option("--lambda2", exact_args.lambda2)->check(CLI::NonNegativeNumber);
    exact->add_option("--gap", exact_args.gap, "relative optimality gap")->check(CLI::NonNegativeNumber);
    exact->add_option("--big-m", exact_args.big_m, "group norm bound: number, auto or inf");
    exact->add_option("--node-limit", exact_args.node_limit)->check(CLI::PositiveNumber);
    exact->add_option("--time-limit", exact_args.time_limit, "seconds (0 for none)")->check(CLI::NonNegativeNumber);
    exact->add_option("--warm-start", exact_args.warm_start, "local-search, none, or a coefficient CSV");
    exact->add_option("--log-interval", exact_args.log_interval, "progress line every this many nodes");
    exact->add_option("--theta-out", exact_args.theta_out, "write the incumbent to this CSV");

    AdditiveArgs add_args;
    auto* add = app.add_subcommand("additive-fit", "sparse additive spline model");
    add->add_option("--X", add_args.x_path, "covariates CSV (one column per covariate)")->required();
    add->add_option("--y", add_args.y_path, "response CSV")->required();
    add->add_flag("--header", add_args.header);
    add->add_option("--lambda0", add_args.lambda0)->required()->check(CLI::NonNegativeNumber);
    add->add_option("--lambda-smooth", add_args.lambda_smooth)->check(CLI::NonNegativeNumber);
    add->add_option("--degree", add_args.degree)->check(CLI::Range(2, 10));
    add->add_option("--knots", add_args.knots)->check(CLI::NonNegativeNumber);
    add->add_option("--form", add_args.form)->check(CLI::IsMember({"squared", "norm"}));
    add->add_option("--placement", add_args.placement)->check(CLI::IsMember({"equispaced", "quantile"}));
    add->add_option("--solver", add_args.solver)->check(CLI::IsMember({"bcd", "local-search"}));
    add->add_option("--predict", add_args.predict, "covariates CSV to predict at");
    add->add_option("--predict-out", add_args.predict_out, "write predictions to this CSV");

    std::string eval_theta, eval_truth, eval_x, eval_groups;
    bool eval_header = false;
    auto* eval = app.add_subcommand("eval", "support and prediction metrics against the truth");
    eval->add_option("--theta", eval_theta, "estimated coefficients CSV")->required();
    eval->add_option("--truth", eval_truth, "true coefficients CSV")->required();
    eval->add_option("--X", eval_x, "test design CSV")->required();
    eval->add_option("--groups", eval_groups, "group file")->required();
    eval->add_flag("--header", eval_header);

    PathArgs path_args;
    std::string path_out = "path_out", path_jsonl;
    auto* path = app.add_subcommand("path", "regularization path as JSON lines");
    add_path_options(path, path_args);
    path->add_option("--out-dir", path_out, "directory for per-point coefficient files");
    path->add_option("--jsonl", path_jsonl, "write JSON lines here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*gen) return cmd_gen(gen_config, gen_out, gen_seed);
        if (*fit) return cmd_fit(fit_args, fit_x_val, fit_y_val, fit_theta_out);
        if (*exact) return cmd_fit_exact(exact_args);
        if (*add) return cmd_additive(add_args);
        if (*eval) return cmd_eval(eval_theta, eval_truth, eval_x, eval_groups, eval_header);
        if (*path) return cmd_path(path_args, path_out, path_jsonl);
    } catch (const LimitReached&) {
        return kExitLimit;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
