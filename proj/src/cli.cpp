#include "bhmds/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bhmds/calibration.hpp"
#include "bhmds/case_control.hpp"
#include "bhmds/dissimilarity.hpp"
#include "bhmds/error.hpp"
#include "bhmds/evaluation.hpp"
#include "bhmds/initializer.hpp"
#include "bhmds/io.hpp"
#include "bhmds/mcmc.hpp"
#include "bhmds/model.hpp"
#include "bhmds/parallel.hpp"

#ifndef BHMDS_VERSION
#define BHMDS_VERSION "dev"
#endif

namespace bhmds::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

struct InputOptions {
  std::string path;
  std::string kind = "matrix";
  std::string format = "auto";
  bool zero_indexed = false;
};

void add_input_options(CLI::App* app, InputOptions& in) {
  app->add_option("--input", in.path, "Dissimilarity matrix or edge list")->required();
  app->add_option("--input-kind", in.kind, "matrix or edges")->check(CLI::IsMember({"matrix", "edges"}));
  app->add_option("--format", in.format, "Matrix format: auto, csv or whitespace")
      ->check(CLI::IsMember({"auto", "csv", "whitespace"}));
  app->add_flag("--zero-indexed", in.zero_indexed, "Edge list vertices start at 0");
}

DissimMatrix load_input(const InputOptions& in) {
  if (!fs::exists(in.path)) throw IoError("input file not found: " + in.path);
  if (in.kind == "edges") {
    const EdgeList el = load_edge_list(in.path, !in.zero_indexed);
    return el.weighted ? weighted_shortest_paths(el.edges, el.n) : graph_shortest_paths(el.edges, el.n);
  }
  MatrixFormat fmt = MatrixFormat::Whitespace;
  if (in.format == "csv" || (in.format == "auto" && fs::path(in.path).extension() == ".csv")) fmt = MatrixFormat::Csv;
  return load_matrix(in.path, fmt);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_checksum(const std::string& path) { return hex64(fnv1a64(io::read_file(path))); }

/// Collects the resolved value of every option of a subcommand.
json resolved_flags(const CLI::App* app) {
  json flags = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) {
        flags[name] = true;
      } else if (res.size() == 1) {
        flags[name] = res.front();
      } else {
        flags[name] = res;
      }
    } else if (opt->get_type_size() == 0) {
      flags[name] = false;
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

struct Manifest {
  std::string command;
  json flags;
  std::uint64_t seed = 0;
  json checksums = json::object();
  json timings = json::object();
  json extra = json::object();

  void write(const fs::path& dir, double total_seconds) {
    json j;
    j["command"] = command;
    j["version"] = BHMDS_VERSION;
    j["seed"] = seed;
    j["flags"] = flags;
    j["input_checksums_fnv1a64"] = checksums;
    timings["total_seconds"] = total_seconds;
    j["timings"] = timings;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    io::write_atomic(dir / "manifest.json", j.dump(2) + "\n");
  }
};

std::vector<std::string> coordinate_header(int p, const char* prefix) {
  std::vector<std::string> h;
  for (int k = 0; k <= p; ++k) h.push_back(prefix + std::to_string(k));
  return h;
}

struct FitOptions {
  int dim = 2;
  std::string curvature = "1";
  int iters = 20000;
  int burnin = 3000;
  int thin = 5;
  std::uint64_t seed = 0;
  double a = 5.0;
  double alpha = 0.5;
  double c = 1.0;
  int refine_iters = 2000;
  std::string record_delta = "auto";
  bool origin_dist = false;
  bool exact_sigma2 = false;
  bool case_control = false;
  double rate = 5.0;
  std::string strata = "integer";
  int cases = 1;
  int pilot_iters = 3000;
  int pilot_burnin = 1000;
  bool resample = false;
};

void add_fit_options(CLI::App* app, FitOptions& f, bool with_case_control) {
  app->add_option("--dim", f.dim, "Hyperbolic dimension p")->check(CLI::PositiveNumber);
  app->add_option("--iters", f.iters, "Total MCMC iterations");
  app->add_option("--burnin", f.burnin, "Burn-in iterations");
  app->add_option("--thin", f.thin, "Thinning interval");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--a", f.a, "Shape of the sigma^2 prior");
  app->add_option("--alpha", f.alpha, "Shape of the lambda prior");
  app->add_option("--c", f.c, "Proposal scale constant");
  app->add_option("--refine-iters", f.refine_iters, "Stress refinement steps of the initializer");
  app->add_option("--record-delta", f.record_delta, "auto, full, streaming or none")
      ->check(CLI::IsMember({"auto", "full", "streaming", "none"}));
  app->add_flag("--origin-dist", f.origin_dist, "Record per-object origin distances in the trace");
  app->add_flag("--exact-sigma2", f.exact_sigma2, "Target the exact sigma^2 conditional");
  if (!with_case_control) return;
  app->add_flag("--case-control", f.case_control, "Use the stratified case-control likelihood");
  app->add_option("--rate", f.rate, "Control-to-case rate r");
  app->add_option("--strata", f.strata, "integer, quantile:M or edges:e0,e1,...");
  app->add_option("--cases", f.cases, "Number of case strata C");
  app->add_option("--pilot-iters", f.pilot_iters, "Pilot chain iterations");
  app->add_option("--pilot-burnin", f.pilot_burnin, "Pilot chain burn-in");
  app->add_flag("--resample", f.resample, "Redraw control subsamples every sweep");
}

DeltaRecording parse_recording(const std::string& s) {
  if (s == "full") return DeltaRecording::Full;
  if (s == "streaming") return DeltaRecording::Streaming;
  if (s == "none") return DeltaRecording::None;
  return DeltaRecording::Auto;
}

McmcSettings mcmc_settings(const FitOptions& f) {
  McmcSettings s;
  s.iters = f.iters;
  s.burnin = f.burnin;
  s.thin = f.thin;
  s.seed = f.seed;
  s.record_delta = parse_recording(f.record_delta);
  s.record_origin_dist = f.origin_dist;
  s.exact_sigma2 = f.exact_sigma2;
  s.validate();
  return s;
}

RefineOptions refine_options(int iters) {
  RefineOptions r;
  r.max_iters = iters;
  return r;
}

struct FitResult {
  InitEmbedding init;
  ModelConfig cfg;
  ChainResult chain;
  std::optional<CurvatureProfile> profile;
  std::optional<CaseControlPlan> plan;
  double pilot_seconds = 0.0;
  std::uint64_t pair_evaluations = 0;
};

FitResult fit(const DissimMatrix& d, const FitOptions& f, unsigned threads) {
  FitResult out;
  const RefineOptions refine = refine_options(f.refine_iters);
  if (f.curvature == "auto") {
    out.profile = estimate_curvature(d, f.dim, default_curvature_grid(), refine, threads);
    out.init = out.profile->embeddings[out.profile->best];
  } else {
    double k = 0.0;
    try {
      k = std::stod(f.curvature);
    } catch (const std::exception&) {
      throw InputError("--curvature must be a positive number or 'auto'");
    }
    const Curvature kappa(k);
    out.init = refine_stress(spectral_init(d, f.dim, kappa), d, kappa, refine);
  }
  out.cfg = select_hyperparameters(out.init, log_origin_rows(out.init.X), f.a, f.alpha, f.c);
  const McmcSettings settings = mcmc_settings(f);

  if (f.case_control) {
    const StrataPlan strata = build_strata(d, StrataSpec::parse(f.strata, f.cases));
    PilotSettings pilot;
    pilot.mcmc.iters = f.pilot_iters;
    pilot.mcmc.burnin = f.pilot_burnin;
    pilot.mcmc.thin = 1;
    pilot.mcmc.seed = derive_seed(f.seed, "pilot-chain");
    Rng rng = make_rng(f.seed, "pilot");
    const auto t0 = Clock::now();
    out.plan = run_pilot(d, out.cfg, strata, f.rate, pilot, out.init, rng);
    out.pilot_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    CaseControlLikelihood lik(*out.plan, f.resample);
    out.chain = run_chain(d, out.cfg, settings, out.init, lik);
    out.pair_evaluations = lik.pair_evaluations();
  } else {
    ExactLikelihood lik;
    out.chain = run_chain(d, out.cfg, settings, out.init, lik);
    out.pair_evaluations = static_cast<std::uint64_t>(settings.iters) * d.size() * (d.size() - 1);
  }
  return out;
}

std::string trace_csv(const Trace& t, int p) {
  std::ostringstream out;
  out << "iter,sigma2";
  for (int j = 1; j <= p; ++j) out << ",lambda_" << j;
  out << ",stress";
  const std::size_t n_origin = t.origin_dist.empty() ? 0 : static_cast<std::size_t>(t.origin_dist.front().size());
  for (std::size_t i = 1; i <= n_origin; ++i) out << ",origin_dist_" << i;
  out << "\n";
  for (std::size_t s = 0; s < t.size(); ++s) {
    out << t.iter[s] << "," << io::format_double(t.sigma2[s]);
    for (int j = 0; j < p; ++j) out << "," << io::format_double(t.lambda[s][j]);
    out << "," << io::format_double(t.stress[s]);
    for (std::size_t i = 0; i < n_origin; ++i) out << "," << io::format_double(t.origin_dist[s][static_cast<Eigen::Index>(i)]);
    out << "\n";
  }
  return out.str();
}

std::string curvature_csv(const CurvatureProfile& prof) {
  std::string out = "kappa,stress\n";
  for (std::size_t k = 0; k < prof.grid.size(); ++k) {
    out += io::format_double(prof.grid[k]) + "," + io::format_double(prof.stress[k]) + "\n";
  }
  return out;
}

int cmd_embed(CLI::App* app, const InputOptions& in, const FitOptions& f, const std::string& out_dir,
              unsigned threads_flag) {
  const auto t0 = Clock::now();
  const unsigned threads = resolve_threads(threads_flag);
  const DissimMatrix d = load_input(in);
  FitResult res = fit(d, f, threads);
  const auto& sum = res.chain.summary;
  const int p = res.cfg.p;
  const Curvature kappa(res.cfg.kappa);

  const fs::path dir(out_dir);
  io::ensure_directory(dir);
  io::write_atomic(dir / "coordinates.csv", io::matrix_csv(sum.X_hat, coordinate_header(p, "x")));
  std::vector<std::string> disk_header;
  for (int k = 1; k <= p; ++k) disk_header.push_back("u" + std::to_string(k));
  io::write_atomic(dir / "poincare.csv", io::matrix_csv(poincare_export(sum.X_hat), disk_header));
  io::write_atomic(dir / "delta_hat.csv", io::matrix_csv(sum.delta_hat));
  io::write_atomic(dir / "trace.csv", trace_csv(res.chain.trace, p));
  io::write_atomic(dir / "config.json", res.cfg.to_json() + "\n");
  if (sum.ci_lower.size() > 0) {
    io::write_atomic(dir / "ci_lower.csv", io::matrix_csv(sum.ci_lower));
    io::write_atomic(dir / "ci_upper.csv", io::matrix_csv(sum.ci_upper));
  }
  if (res.plan) io::write_atomic(dir / "plan.json", res.plan->to_json() + "\n");
  if (res.profile) io::write_atomic(dir / "curvature_profile.csv", curvature_csv(*res.profile));

  json s;
  s["n"] = d.size();
  s["p"] = p;
  s["kappa"] = res.cfg.kappa;
  s["sigma2_hat"] = sum.sigma2_hat;
  s["stress_hat"] = sum.stress_hat;
  s["stress"] = stress(d, sum.delta_hat);
  s["distortion"] = distortion(d, sum.delta_hat);
  s["init_stress"] = res.init.stress;
  s["best_iter"] = sum.best_iter;
  s["samples"] = res.chain.trace.size();
  s["acceptance_rates"] = {{"v", sum.acceptance_v}, {"sigma2", sum.acceptance_sigma2}};
  s["ci_level"] = sum.ci_level;
  s["case_control"] = f.case_control;
  s["pair_evaluations"] = res.pair_evaluations;
  s["runtime_seconds"] = sum.runtime_seconds;
  s["seconds_per_100_iterations"] = sum.seconds_per_100;
  io::write_atomic(dir / "summary.json", s.dump(2) + "\n");

  Manifest m;
  m.command = "embed";
  m.flags = resolved_flags(app);
  m.seed = f.seed;
  m.checksums[in.path] = file_checksum(in.path);
  m.timings["chain_seconds"] = sum.runtime_seconds;
  m.timings["seconds_per_100_iterations"] = sum.seconds_per_100;
  if (res.plan) m.timings["pilot_seconds"] = res.pilot_seconds;
  m.extra["kappa"] = res.cfg.kappa;
  if (res.profile) m.extra["kappa_hat"] = res.profile->kappa_hat;
  m.extra["threads"] = threads;
  m.write(dir, std::chrono::duration<double>(Clock::now() - t0).count());
  return 0;
}

struct SimulateOptions {
  std::size_t n = 50;
  double sigma = 1.0;
  double kappa = 1.0;
  double prior_var = 3.0;
  std::size_t replicates = 20;
};

int cmd_simulate(CLI::App* app, const SimulateOptions& so, const FitOptions& f, const std::string& out_dir,
                 unsigned threads_flag) {
  const auto t0 = Clock::now();
  if (so.replicates == 0) throw InputError("--replicates must be >= 1");
  if (so.n < 2) throw InputError("--n must be >= 2");
  const unsigned threads = resolve_threads(threads_flag);
  Rng rng = make_rng(f.seed, "simulation");
  const SyntheticDataset truth_set = simulate_dataset(so.n, f.dim, so.sigma, so.kappa, so.prior_var, rng);
  const SyntheticTruth& truth = truth_set.truth;

  struct Row {
    double sigma_hat, delta12_hat, coverage, stress_hat, acceptance_v, seconds_per_100;
  };
  std::vector<Row> rows(so.replicates);
  parallel_for(so.replicates, threads, [&](std::size_t r) {
    Rng rr = make_rng(f.seed, "simulation-replicate", r);
    const DissimMatrix d = observe_with_noise(truth.delta, so.sigma, rr);
    FitOptions fr = f;
    fr.curvature = io::format_double(so.kappa);
    fr.seed = derive_seed(f.seed, "simulation-chain", r);
    if (fr.record_delta == "auto" || fr.record_delta == "none") fr.record_delta = so.n <= 500 ? "full" : "streaming";
    FitResult res = fit(d, fr, 1);
    const auto& sum = res.chain.summary;
    rows[r] = {std::sqrt(sum.sigma2_hat), sum.delta_hat(0, 1), coverage_rate(sum.ci_lower, sum.ci_upper, truth.delta),
               sum.stress_hat, sum.acceptance_v, sum.seconds_per_100};
  });

  const fs::path dir(out_dir);
  io::ensure_directory(dir);
  write_truth(dir, truth, f.seed);
  const double d12 = truth.delta(0, 1);
  std::ostringstream csv;
  csv << "replicate,sigma_hat,delta12_hat,delta12_true,delta12_rel_error,coverage,stress_hat,acceptance_v\n";
  std::vector<double> sig, rel, cov;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double re = std::abs(rows[r].delta12_hat - d12) / d12;
    sig.push_back(rows[r].sigma_hat);
    rel.push_back(re);
    cov.push_back(rows[r].coverage);
    csv << r << "," << io::format_double(rows[r].sigma_hat) << "," << io::format_double(rows[r].delta12_hat) << ","
        << io::format_double(d12) << "," << io::format_double(re) << "," << io::format_double(rows[r].coverage) << ","
        << io::format_double(rows[r].stress_hat) << "," << io::format_double(rows[r].acceptance_v) << "\n";
  }
  io::write_atomic(dir / "replicates.csv", csv.str());

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  double var = 0.0;
  const double ms = mean(sig);
  for (double x : sig) var += (x - ms) * (x - ms);
  json s;
  s["n"] = so.n;
  s["p"] = f.dim;
  s["sigma"] = so.sigma;
  s["kappa"] = so.kappa;
  s["replicates"] = so.replicates;
  s["mean_sigma_hat"] = ms;
  s["sd_sigma_hat"] = sig.size() > 1 ? std::sqrt(var / static_cast<double>(sig.size() - 1)) : 0.0;
  s["median_delta12_rel_error"] = median(rel);
  s["mean_coverage"] = mean(cov);
  io::write_atomic(dir / "summary.json", s.dump(2) + "\n");

  Manifest m;
  m.command = "simulate";
  m.flags = resolved_flags(app);
  m.seed = f.seed;
  double per100 = 0.0;
  for (const auto& r : rows) per100 += r.seconds_per_100;
  m.timings["seconds_per_100_iterations"] = per100 / static_cast<double>(rows.size());
  m.extra["threads"] = threads;
  m.write(dir, std::chrono::duration<double>(Clock::now() - t0).count());
  return 0;
}

int cmd_calibrate(CLI::App* app, CalibrationSettings cs, int refine_iters, const std::string& out_dir,
                  unsigned threads_flag) {
  const auto t0 = Clock::now();
  cs.threads = resolve_threads(threads_flag);
  cs.refine = refine_options(refine_iters);
  const CalibrationStudy study = run_calibration_study(cs);

  const fs::path dir(out_dir);
  io::ensure_directory(dir);
  std::string curve = "threshold,diff,control_diff\n";
  for (std::size_t g = 0; g < study.grid.size(); ++g) {
    curve += io::format_double(study.grid[g]) + "," + io::format_double(study.curve.diff[g]) + "," +
             io::format_double(study.control_curve.diff[g]) + "\n";
  }
  io::write_atomic(dir / "calibration_curve.csv", curve);
  std::ostringstream inst;
  inst << "instance,p,kappa,truth";
  for (std::size_t r = 0; r < cs.replicates; ++r) inst << ",estimate_" << r + 1;
  inst << "\n";
  for (std::size_t s = 0; s < study.instances.size(); ++s) {
    inst << s << "," << study.params[s].p << "," << io::format_double(study.params[s].kappa) << ","
         << io::format_double(study.instances[s].truth);
    for (double x : study.instances[s].predictive) inst << "," << io::format_double(x);
    inst << "\n";
  }
  io::write_atomic(dir / "instances.csv", inst.str());

  json s;
  s["instances"] = cs.instances;
  s["replicates"] = cs.replicates;
  s["max_abs_diff"] = study.curve.max_abs_diff();
  s["control_max_abs_diff"] = study.control_curve.max_abs_diff();
  s["control_shift"] = cs.shift;
  io::write_atomic(dir / "summary.json", s.dump(2) + "\n");

  Manifest m;
  m.command = "calibrate";
  m.flags = resolved_flags(app);
  m.seed = cs.seed;
  m.extra["threads"] = cs.threads;
  m.write(dir, std::chrono::duration<double>(Clock::now() - t0).count());
  return 0;
}

int cmd_metrics(CLI::App* app, const InputOptions& in, const std::string& estimate, const std::string& out_dir) {
  const auto t0 = Clock::now();
  const DissimMatrix d = load_input(in);
  if (!fs::exists(estimate)) throw IoError("estimate file not found: " + estimate);
  const MatrixFormat fmt = fs::path(estimate).extension() == ".csv" ? MatrixFormat::Csv : MatrixFormat::Whitespace;
  const DissimMatrix est = load_matrix(estimate, fmt);
  const FitReport rep = fit_report(d, est.values());
  json s;
  s["n"] = rep.n;
  s["m"] = rep.m;
  s["stress"] = rep.stress;
  s["distortion"] = rep.distortion;
  const fs::path dir(out_dir);
  io::ensure_directory(dir);
  io::write_atomic(dir / "summary.json", s.dump(2) + "\n");
  std::cout << s.dump(2) << "\n";

  Manifest m;
  m.command = "metrics";
  m.flags = resolved_flags(app);
  m.checksums[in.path] = file_checksum(in.path);
  m.checksums[estimate] = file_checksum(estimate);
  m.write(dir, std::chrono::duration<double>(Clock::now() - t0).count());
  return 0;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) return default_curvature_grid();
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      grid.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("cannot parse curvature grid value '" + item + "'");
    }
  }
  return grid;
}

int cmd_curvature(CLI::App* app, const InputOptions& in, int dim, const std::string& grid_text, int refine_iters,
                  const std::string& out_dir, unsigned threads_flag) {
  const auto t0 = Clock::now();
  const unsigned threads = resolve_threads(threads_flag);
  const DissimMatrix d = load_input(in);
  const CurvatureProfile prof = estimate_curvature(d, dim, parse_grid(grid_text), refine_options(refine_iters), threads);
  const fs::path dir(out_dir);
  io::ensure_directory(dir);
  io::write_atomic(dir / "curvature_profile.csv", curvature_csv(prof));
  json s;
  s["kappa_hat"] = prof.kappa_hat;
  s["stress"] = prof.stress[prof.best];
  io::write_atomic(dir / "summary.json", s.dump(2) + "\n");

  Manifest m;
  m.command = "curvature";
  m.flags = resolved_flags(app);
  m.checksums[in.path] = file_checksum(in.path);
  m.extra["kappa_hat"] = prof.kappa_hat;
  m.extra["threads"] = threads;
  m.write(dir, std::chrono::duration<double>(Clock::now() - t0).count());
  return 0;
}

int cmd_compare_cc(CLI::App* app, const InputOptions& in, const FitOptions& f, std::size_t n_params,
                   std::size_t n_objects, const std::string& out_dir) {
  const auto t0 = Clock::now();
  const DissimMatrix d = load_input(in);
  double k = 0.0;
  try {
    k = std::stod(f.curvature);
  } catch (const std::exception&) {
    throw InputError("--curvature must be a positive number");
  }
  const Curvature kappa(k);
  const InitEmbedding init = refine_stress(spectral_init(d, f.dim, kappa), d, kappa, refine_options(f.refine_iters));
  const ModelConfig cfg = select_hyperparameters(init, log_origin_rows(init.X), f.a, f.alpha, f.c);
  const StrataPlan strata = build_strata(d, StrataSpec::parse(f.strata, f.cases));
  PilotSettings pilot;
  pilot.mcmc.iters = f.pilot_iters;
  pilot.mcmc.burnin = f.pilot_burnin;
  pilot.mcmc.thin = 1;
  pilot.mcmc.seed = derive_seed(f.seed, "pilot-chain");
  Rng rng = make_rng(f.seed, "pilot");
  CaseControlPlan plan = run_pilot(d, cfg, strata, f.rate, pilot, init, rng);

  McmcSettings settings = mcmc_settings(f);
  settings.record_delta = DeltaRecording::None;
  Rng crng = make_rng(f.seed, "compare");
  const LoglikComparison cmp = compare_loglik_changes(d, cfg, plan, settings, init, n_params, n_objects, crng);

  const fs::path dir(out_dir);
  io::ensure_directory(dir);
  io::write_atomic(dir / "scatter.csv", cmp.scatter_csv());
  io::write_atomic(dir / "plan.json", plan.to_json() + "\n");
  double explicit_pairs = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) explicit_pairs += static_cast<double>(plan.evaluated_pairs(i));
  json s;
  s["correlation"] = cmp.correlation;
  s["points"] = cmp.exact.size();
  s["explicit_fraction"] = explicit_pairs / (static_cast<double>(d.size()) * static_cast<double>(d.size() - 1));
  io::write_atomic(dir / "summary.json", s.dump(2) + "\n");

  Manifest m;
  m.command = "compare-cc";
  m.flags = resolved_flags(app);
  m.seed = f.seed;
  m.checksums[in.path] = file_checksum(in.path);
  m.write(dir, std::chrono::duration<double>(Clock::now() - t0).count());
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian hyperbolic multidimensional scaling"};
  app.set_version_flag("--version", BHMDS_VERSION);
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: BHMDS_THREADS or all cores)");

  std::function<int()> action;

  InputOptions embed_in;
  FitOptions embed_fit;
  std::string embed_out;
  auto* embed = app.add_subcommand("embed", "Fit an embedding to a dissimilarity matrix or graph");
  add_input_options(embed, embed_in);
  add_fit_options(embed, embed_fit, true);
  embed->add_option("--curvature", embed_fit.curvature, "Curvature kappa, or 'auto' for a grid search");
  embed->add_option("--threads", threads, "Worker threads");
  embed->add_option("--out", embed_out, "Output directory")->required();
  embed->callback([&] { action = [&] { return cmd_embed(embed, embed_in, embed_fit, embed_out, threads); }; });

  SimulateOptions sim;
  FitOptions sim_fit;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Simulate data, refit replicates and summarise recovery");
  simulate->add_option("--n", sim.n, "Number of objects");
  simulate->add_option("--sigma", sim.sigma, "Noise standard deviation");
  simulate->add_option("--kappa", sim.kappa, "Curvature");
  simulate->add_option("--prior-var", sim.prior_var, "Variance of the generating wrapped normal");
  simulate->add_option("--replicates", sim.replicates, "Noisy replicates of the same truth");
  add_fit_options(simulate, sim_fit, false);
  simulate->add_option("--threads", threads, "Worker threads");
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->callback([&] { action = [&] { return cmd_simulate(simulate, sim, sim_fit, sim_out, threads); }; });

  CalibrationSettings cal;
  int cal_refine = cal.refine.max_iters;
  std::string cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "Reduced-scale marginal calibration study");
  calibrate->add_option("--instances", cal.instances, "Number of instances S");
  calibrate->add_option("--replicates", cal.replicates, "Replicates per instance");
  calibrate->add_option("--n", cal.n, "Objects per replicate");
  calibrate->add_option("--iters", cal.mcmc.iters, "MCMC iterations per chain");
  calibrate->add_option("--burnin", cal.mcmc.burnin, "Burn-in per chain");
  calibrate->add_option("--thin", cal.mcmc.thin, "Thinning interval");
  calibrate->add_option("--refine-iters", cal_refine, "Stress refinement steps");
  calibrate->add_option("--shift", cal.shift, "Offset of the control forecaster");
  calibrate->add_option("--seed", cal.seed, "Random seed");
  calibrate->add_option("--threads", threads, "Worker threads");
  calibrate->add_option("--out", cal_out, "Output directory")->required();
  calibrate->callback([&] { action = [&] { return cmd_calibrate(calibrate, cal, cal_refine, cal_out, threads); }; });

  InputOptions met_in;
  std::string met_est, met_out;
  auto* metrics = app.add_subcommand("metrics", "Stress and distortion of an estimate against observations");
  add_input_options(metrics, met_in);
  metrics->add_option("--estimate", met_est, "Estimated distance matrix")->required();
  metrics->add_option("--out", met_out, "Output directory")->required();
  metrics->callback([&] { action = [&] { return cmd_metrics(metrics, met_in, met_est, met_out); }; });

  InputOptions cur_in;
  int cur_dim = 2, cur_refine = 2000;
  std::string cur_grid, cur_out;
  auto* curvature = app.add_subcommand("curvature", "Grid search for the stress-minimising curvature");
  add_input_options(curvature, cur_in);
  curvature->add_option("--dim", cur_dim, "Hyperbolic dimension p")->check(CLI::PositiveNumber);
  curvature->add_option("--grid", cur_grid, "Comma-separated curvature values (default: 16 log-spaced in [0.1, 10])");
  curvature->add_option("--refine-iters", cur_refine, "Stress refinement steps");
  curvature->add_option("--threads", threads, "Worker threads");
  curvature->add_option("--out", cur_out, "Output directory")->required();
  curvature->callback(
      [&] { action = [&] { return cmd_curvature(curvature, cur_in, cur_dim, cur_grid, cur_refine, cur_out, threads); }; });

  InputOptions cc_in;
  FitOptions cc_fit;
  cc_fit.iters = 2000;
  cc_fit.burnin = 1000;
  cc_fit.cases = 2;
  std::size_t cc_params = 100, cc_objects = 100;
  std::string cc_out;
  auto* compare = app.add_subcommand("compare-cc", "Exact vs case-control log-likelihood changes");
  add_input_options(compare, cc_in);
  add_fit_options(compare, cc_fit, true);
  compare->add_option("--curvature", cc_fit.curvature, "Curvature kappa");
  compare->add_option("--n-params", cc_params, "Checkpoint states of the exact chain");
  compare->add_option("--n-objects", cc_objects, "Objects per checkpoint");
  compare->add_option("--out", cc_out, "Output directory")->required();
  compare->callback(
      [&] { action = [&] { return cmd_compare_cc(compare, cc_in, cc_fit, cc_params, cc_objects, cc_out); }; });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::InputValidation);
  }

  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "bhmds: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "bhmds: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Io);
  } catch (const std::exception& e) {
    std::cerr << "bhmds: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Numerical);
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args);
}

}  // namespace bhmds::cli
