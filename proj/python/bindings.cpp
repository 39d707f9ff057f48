#include <l0group/additive.hpp>
#include <l0group/bench.hpp>
#include <l0group/bnb.hpp>
#include <l0group/error.hpp>
#include <l0group/heuristics.hpp>
#include <l0group/prox.hpp>
#include <l0group/relax.hpp>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace l0group;

namespace {

Problem make_problem(const Matrix& X, const Vector& y, const std::vector<std::vector<int>>& groups)
{
    return Problem(QuadObjective::implicit(X, y), GroupPartition(groups));
}

Penalty make_penalty(double lambda0, double lambda1, double lambda2, std::vector<double> weights, double big_m)
{
    Penalty p;
    p.lambda0 = lambda0;
    p.lambda1 = lambda1;
    p.lambda2 = lambda2;
    p.weights = std::move(weights);
    p.big_m = big_m;
    return p;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Group l0-regularized regression: heuristics, relaxations and branch-and-bound";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());

    py::class_<Penalty>(m, "Penalty")
        .def(py::init(&make_penalty), py::arg("lambda0") = 0.0, py::arg("lambda1") = 0.0, py::arg("lambda2") = 0.0,
             py::arg("weights") = std::vector<double>{}, py::arg("big_m") = kInfinity)
        .def_readwrite("lambda0", &Penalty::lambda0)
        .def_readwrite("lambda1", &Penalty::lambda1)
        .def_readwrite("lambda2", &Penalty::lambda2)
        .def_readwrite("weights", &Penalty::weights)
        .def_readwrite("big_m", &Penalty::big_m)
        .def("__repr__", [](const Penalty& p) {
            return "Penalty(lambda0=" + std::to_string(p.lambda0) + ", lambda1=" + std::to_string(p.lambda1) +
                   ", lambda2=" + std::to_string(p.lambda2) + ", big_m=" + std::to_string(p.big_m) + ")";
        });

    py::class_<Problem>(m, "Problem")
        .def(py::init(&make_problem), py::arg("X"), py::arg("y"), py::arg("groups"))
        .def_property_readonly("num_features", &Problem::num_features)
        .def_property_readonly("num_groups", &Problem::num_groups)
        .def_property_readonly("groups", [](const Problem& p) { return p.partition().groups(); })
        .def("objective", [](const Problem& p, const Vector& theta, const Penalty& pen) {
            return evaluate_objective(theta, p, pen);
        });

    py::class_<Solution>(m, "Solution")
        .def_readonly("theta", &Solution::theta)
        .def_readonly("support", &Solution::support)
        .def_readonly("objective", &Solution::objective)
        .def_readonly("group_norms", &Solution::group_norms)
        .def_property_readonly("solver", [](const Solution& s) { return s.meta.solver; })
        .def_property_readonly("status", [](const Solution& s) { return s.meta.status; })
        .def_property_readonly("iterations", [](const Solution& s) { return s.meta.iterations; });

    // Operators.
    m.def("group_hard_threshold",
          [](const Vector& z, double lambda0, double lambda1, double lhat) {
              return group_hard_threshold(z, ThresholdParams{lambda0, lambda1, lhat});
          },
          py::arg("z"), py::arg("lambda0"), py::arg("lambda1"), py::arg("lhat"));
    m.def("psi",
          [](double t, double lambda0, double lambda1_w, double lambda2, double big_m) {
              return psi(t, PsiParams{lambda0, lambda1_w, lambda2, big_m});
          },
          py::arg("t"), py::arg("lambda0"), py::arg("lambda1_w") = 0.0, py::arg("lambda2") = 0.0,
          py::arg("big_m") = kInfinity);
    m.def("psi_prox",
          [](const Vector& v, double step, double lambda0, double lambda1_w, double lambda2, double big_m) {
              return psi_prox(v, step, PsiParams{lambda0, lambda1_w, lambda2, big_m});
          },
          py::arg("v"), py::arg("step"), py::arg("lambda0"), py::arg("lambda1_w") = 0.0, py::arg("lambda2") = 0.0,
          py::arg("big_m") = kInfinity);

    // Heuristics.
    m.def("lambda0_max", [](const Problem& p, const Penalty& pen) { return lambda0_max(p, pen); });
    m.def("lambda0_grid", [](const Problem& p, const Penalty& pen, int count, double ratio) {
        return lambda0_grid(p, pen, count, ratio);
    }, py::arg("problem"), py::arg("penalty"), py::arg("count") = 100, py::arg("ratio") = 1e-4);
    m.def("bcd_fit",
          [](const Problem& p, const Penalty& pen, std::optional<Vector> init, double tol, long max_cycles) {
              BcdConfig cfg;
              cfg.init = std::move(init);
              cfg.tol = tol;
              cfg.max_cycles = max_cycles;
              return bcd_fit(p, pen, cfg);
          },
          py::arg("problem"), py::arg("penalty"), py::arg("init") = std::nullopt, py::arg("tol") = 1e-9,
          py::arg("max_cycles") = 20000);
    m.def("local_search_fit",
          [](const Problem& p, const Penalty& pen, int swap_m, std::optional<Vector> init) {
              BcdConfig cfg;
              cfg.init = std::move(init);
              SwapConfig sc;
              sc.m = swap_m;
              return local_search_fit(p, pen, sc, cfg);
          },
          py::arg("problem"), py::arg("penalty"), py::arg("m") = 1, py::arg("init") = std::nullopt);
    m.def("pgd_penalized",
          [](const Problem& p, const Penalty& pen, std::optional<Vector> init) {
              return pgd_penalized(p, pen, init.value_or(Vector::Zero(p.num_features())));
          },
          py::arg("problem"), py::arg("penalty"), py::arg("init") = std::nullopt);
    m.def("pgd_constrained",
          [](const Problem& p, const Penalty& pen, int k, std::optional<Vector> init) {
              return pgd_constrained(p, pen, k, init.value_or(Vector::Zero(p.num_features())));
          },
          py::arg("problem"), py::arg("penalty"), py::arg("k"), py::arg("init") = std::nullopt);

    // Relaxation and branch-and-bound.
    m.def("root_relaxation",
          [](const Problem& p, const Penalty& pen, const std::string& formulation) {
              RelaxOptions opts;
              if (formulation == "big-m") opts.formulation = Formulation::big_m;
              else if (formulation != "perspective") throw InputError("formulation must be 'perspective' or 'big-m'");
              const auto r = solve_relaxation(p, pen, {}, {}, opts);
              py::dict out;
              out["theta"] = r.theta;
              out["z"] = r.z;
              out["primal"] = r.primal;
              out["dual_bound"] = r.dual_bound;
              out["fractional"] = r.fractional;
              return out;
          },
          py::arg("problem"), py::arg("penalty"), py::arg("formulation") = "perspective");

    py::class_<BnbResult>(m, "BnbResult")
        .def_readonly("incumbent", &BnbResult::incumbent)
        .def_readonly("upper_bound", &BnbResult::upper_bound)
        .def_readonly("lower_bound", &BnbResult::lower_bound)
        .def_readonly("gap", &BnbResult::gap)
        .def_readonly("nodes_processed", &BnbResult::nodes_processed)
        .def_readonly("root_lower_bound", &BnbResult::root_lower_bound)
        .def_readonly("wall_seconds", &BnbResult::wall_seconds)
        .def_property_readonly("status", [](const BnbResult& r) { return to_string(r.status); })
        .def("to_json", &BnbResult::to_json);
    m.def("solve_exact",
          [](const Problem& p, const Penalty& pen, std::optional<Vector> warm, double gap_tol, long node_limit,
             std::optional<double> time_limit) {
              BnbOptions opts;
              opts.gap_tol = gap_tol;
              opts.node_limit = node_limit;
              if (time_limit) opts.time_limit = *time_limit;
              std::optional<Solution> start;
              if (warm) start = make_solution(p, pen, *warm, SolveMeta{"user"});
              py::gil_scoped_release release;
              return solve_exact(p, pen, start, opts);
          },
          py::arg("problem"), py::arg("penalty"), py::arg("warm_start") = std::nullopt, py::arg("gap_tol") = 0.01,
          py::arg("node_limit") = 1000000, py::arg("time_limit") = std::nullopt);
    m.def("estimate_big_m", &estimate_big_m, py::arg("problem"), py::arg("penalty"), py::arg("warm"));

    // Paths, tuning and synthetic data.
    py::class_<PathPoint>(m, "PathPoint")
        .def_readonly("lambda0", &PathPoint::lambda0)
        .def_readonly("solution", &PathPoint::solution)
        .def_readonly("error", &PathPoint::error);
    m.def("fit_path",
          [](const Problem& p, const Penalty& pen, const std::vector<double>& grid, const std::string& solver,
             bool cross_warm) {
              PathOptions opts;
              opts.solver = solver == "bcd" ? PathSolver::bcd : PathSolver::local_search;
              opts.cross_warm = cross_warm;
              return fit_path(p, pen, grid, opts).points;
          },
          py::arg("problem"), py::arg("penalty"), py::arg("grid"), py::arg("solver") = "local-search",
          py::arg("cross_warm") = true);
    m.def("tune_validation",
          [](const Problem& p, const Matrix& X_val, const Vector& y_val, const Penalty& pen,
             const std::vector<double>& grid, const std::string& solver) {
              PathOptions opts;
              opts.solver = solver == "bcd" ? PathSolver::bcd : PathSolver::local_search;
              const auto r = tune_validation(p, X_val, y_val, pen, grid, opts);
              py::dict out;
              out["best"] = r.best;
              out["best_index"] = r.best_index;
              out["best_is_zero"] = r.best_is_zero;
              out["validation_mse"] = r.validation_mse;
              return out;
          },
          py::arg("problem"), py::arg("X_val"), py::arg("y_val"), py::arg("penalty"), py::arg("grid"),
          py::arg("solver") = "local-search");
    m.def("generate",
          [](int example, int n, int q, int group_size, int k_star, double rho, double snr, std::uint64_t seed,
             double within_group_corr) {
              SynthSpec spec{example, n, q, group_size, k_star, rho, snr, seed, within_group_corr};
              const SynthData d = generate(spec);
              py::dict out;
              out["X"] = d.X;
              out["y"] = d.y;
              out["beta_star"] = d.beta_star;
              out["groups"] = d.groups.groups();
              out["true_groups"] = d.true_groups;
              out["sigma2"] = d.sigma2;
              return out;
          },
          py::arg("example") = 1, py::arg("n") = 100, py::arg("q") = 10, py::arg("group_size") = 4,
          py::arg("k_star") = 2, py::arg("rho") = 0.0, py::arg("snr") = 10.0, py::arg("seed") = 0,
          py::arg("within_group_corr") = 0.9);
    m.def("compute_metrics",
          [](const Vector& beta_hat, const Vector& beta_star, const Matrix& X,
             const std::vector<std::vector<int>>& groups) {
              const Metrics mt = compute_metrics(beta_hat, beta_star, X, GroupPartition(groups));
              py::dict out;
              out["tp"] = mt.tp;
              out["fp"] = mt.fp;
              out["f1"] = mt.f1;
              out["test_mse"] = mt.test_mse;
              out["support_size"] = mt.support_size;
              out["est_sup_norm"] = mt.est_sup_norm;
              return out;
          },
          py::arg("beta_hat"), py::arg("beta_star"), py::arg("X"), py::arg("groups"));

    // Additive models.
    py::class_<AdditiveProblem>(m, "AdditiveProblem")
        .def_readonly("problem", &AdditiveProblem::problem)
        .def_readonly("penalty", &AdditiveProblem::penalty)
        .def_readonly("intercept", &AdditiveProblem::intercept)
        .def("theta_from_gamma", &AdditiveProblem::theta_from_gamma)
        .def("gamma_from_theta", &AdditiveProblem::gamma_from_theta)
        .def("predict", [](const AdditiveProblem& ap, const Vector& gamma, const Matrix& x_new) {
            const auto pr = predict_additive(ap, gamma, x_new);
            py::dict out;
            out["fitted"] = pr.fitted;
            out["components"] = pr.components;
            out["extrapolated"] = pr.extrapolated;
            return out;
        });
    m.def("assemble_additive",
          [](const Matrix& x, const Vector& y, double lambda0, double lambda_smooth, const std::string& form,
             int degree, int knots) {
              AdditiveForm f = AdditiveForm::squared;
              if (form == "norm") f = AdditiveForm::norm;
              else if (form != "squared") throw InputError("form must be 'squared' or 'norm'");
              return assemble_additive(x, y, lambda0, lambda_smooth, f, degree, knots);
          },
          py::arg("x"), py::arg("y"), py::arg("lambda0"), py::arg("lambda_smooth"), py::arg("form") = "squared",
          py::arg("degree") = 3, py::arg("knots") = 10);
}
