#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bhmds/case_control.hpp"
#include "bhmds/cli.hpp"
#include "bhmds/dissimilarity.hpp"
#include "bhmds/error.hpp"
#include "bhmds/evaluation.hpp"
#include "bhmds/initializer.hpp"
#include "bhmds/mcmc.hpp"
#include "bhmds/model.hpp"

namespace py = pybind11;
using namespace bhmds;

namespace {

py::dict init_dict(const InitEmbedding& e) {
  py::dict out;
  out["X"] = e.X;
  out["delta"] = e.delta;
  out["ssr"] = e.ssr;
  out["stress"] = e.stress;
  out["kappa"] = e.kappa;
  return out;
}

DeltaRecording recording(const std::string& name) {
  if (name == "auto") return DeltaRecording::Auto;
  if (name == "full") return DeltaRecording::Full;
  if (name == "streaming") return DeltaRecording::Streaming;
  if (name == "none") return DeltaRecording::None;
  throw InputError("record_delta must be auto, full, streaming or none");
}

py::dict embed(const Eigen::MatrixXd& values, int p, double kappa, int iters, int burnin, int thin,
               std::uint64_t seed, const std::string& record_delta, int refine_iters, bool case_control, double rate,
               const std::string& strata, int cases) {
  const DissimMatrix d(values);
  const Curvature k(kappa);
  RefineOptions ro;
  ro.max_iters = refine_iters;
  const InitEmbedding init = refine_stress(spectral_init(d, p, k), d, k, ro);
  const ModelConfig cfg = select_hyperparameters(init, log_origin_rows(init.X));
  McmcSettings st;
  st.iters = iters;
  st.burnin = burnin;
  st.thin = thin;
  st.seed = seed;
  st.record_delta = recording(record_delta);

  ChainResult res;
  {
    py::gil_scoped_release release;
    if (case_control) {
      const StrataPlan sp = build_strata(d, StrataSpec::parse(strata, cases));
      PilotSettings pilot;
      pilot.mcmc.seed = derive_seed(seed, "pilot-chain");
      Rng rng = make_rng(seed, "pilot");
      CaseControlPlan plan = run_pilot(d, cfg, sp, rate, pilot, init, rng);
      CaseControlLikelihood lik(plan);
      res = run_chain(d, cfg, st, init, lik);
    } else {
      ExactLikelihood lik;
      res = run_chain(d, cfg, st, init, lik);
    }
  }
  const auto& s = res.summary;
  py::dict out;
  out["delta_hat"] = s.delta_hat;
  out["X_hat"] = s.X_hat;
  out["stress_hat"] = s.stress_hat;
  out["sigma2_hat"] = s.sigma2_hat;
  out["best_iter"] = s.best_iter;
  out["acceptance_v"] = s.acceptance_v;
  out["acceptance_sigma2"] = s.acceptance_sigma2;
  out["seconds_per_100"] = s.seconds_per_100;
  if (s.ci_lower.size() > 0) {
    out["ci_lower"] = s.ci_lower;
    out["ci_upper"] = s.ci_upper;
  }
  out["trace_sigma2"] = res.trace.sigma2;
  out["trace_stress"] = res.trace.stress;
  out["init_stress"] = init.stress;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian hyperbolic multidimensional scaling";

  static py::exception<Error> error(m, "BhmdsError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def("exp_origin", &exp_origin_rows, py::arg("V"), "Tangent rows to hyperboloid rows");
  m.def("log_origin", &log_origin_rows, py::arg("X"), "Hyperboloid rows to tangent rows");
  m.def(
      "pairwise_distances", [](const PointMatrix& X, double kappa) { return pairwise_distances(X, Curvature(kappa)); },
      py::arg("X"), py::arg("kappa") = 1.0);
  m.def("poincare", &poincare_export, py::arg("X"));

  m.def(
      "shortest_paths",
      [](const std::vector<std::pair<std::size_t, std::size_t>>& edges, std::size_t n) {
        std::vector<Edge> e;
        for (auto [u, v] : edges) e.push_back({u, v, 1.0});
        return graph_shortest_paths(e, n).values();
      },
      py::arg("edges"), py::arg("n"), "All-pairs path lengths of an unweighted graph (0-based vertices)");
  m.def(
      "balanced_tree",
      [](std::size_t n, std::size_t branching) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& e : balanced_tree_edges(n, branching)) out.emplace_back(e.u, e.v);
        return out;
      },
      py::arg("n"), py::arg("branching"));
  m.def(
      "simulate",
      [](std::size_t n, int p, double sigma, double kappa, double prior_var, std::uint64_t seed) {
        Rng rng = make_rng(seed, "simulation");
        const auto ds = simulate_dataset(n, p, sigma, kappa, prior_var, rng);
        py::dict out;
        out["X"] = ds.truth.X;
        out["delta"] = ds.truth.delta;
        out["observed"] = ds.observed.values();
        return out;
      },
      py::arg("n"), py::arg("p") = 2, py::arg("sigma") = 1.0, py::arg("kappa") = 1.0, py::arg("prior_var") = 3.0,
      py::arg("seed") = 0);

  m.def(
      "initialize",
      [](const Eigen::MatrixXd& d, int p, double kappa, int refine_iters) {
        const DissimMatrix dm(d);
        RefineOptions ro;
        ro.max_iters = refine_iters;
        return init_dict(refine_stress(spectral_init(dm, p, Curvature(kappa)), dm, Curvature(kappa), ro));
      },
      py::arg("d"), py::arg("p") = 2, py::arg("kappa") = 1.0, py::arg("refine_iters") = 2000);
  m.def(
      "estimate_curvature",
      [](const Eigen::MatrixXd& d, int p, std::vector<double> grid) {
        if (grid.empty()) grid = default_curvature_grid();
        const auto prof = estimate_curvature(DissimMatrix(d), p, grid);
        return py::make_tuple(prof.kappa_hat, prof.grid, prof.stress);
      },
      py::arg("d"), py::arg("p") = 2, py::arg("grid") = std::vector<double>{});

  m.def("embed", &embed, py::arg("d"), py::arg("p") = 2, py::arg("kappa") = 1.0, py::arg("iters") = 20000,
        py::arg("burnin") = 3000, py::arg("thin") = 5, py::arg("seed") = 0, py::arg("record_delta") = "auto",
        py::arg("refine_iters") = 2000, py::arg("case_control") = false, py::arg("rate") = 5.0,
        py::arg("strata") = "integer", py::arg("cases") = 2);

  m.def(
      "stress", [](const Eigen::MatrixXd& d, const Eigen::MatrixXd& est) { return stress(d, est); }, py::arg("d"),
      py::arg("est"));
  m.def(
      "distortion", [](const Eigen::MatrixXd& d, const Eigen::MatrixXd& est) { return distortion(d, est); },
      py::arg("d"), py::arg("est"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args);
      },
      py::arg("args"), "Run the command-line tool in-process; returns its exit code");
}
