#include "bhmds/case_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bhmds/error.hpp"
#include "bhmds/io.hpp"
#include "bhmds/stats.hpp"

namespace bhmds {

StrataSpec StrataSpec::parse(const std::string& text, int cases) {
  StrataSpec spec;
  spec.cases = cases;
  if (text == "integer") {
    spec.mode = StrataMode::Integer;
  } else if (text.rfind("quantile:", 0) == 0) {
    spec.mode = StrataMode::Quantile;
    try {
      spec.bands = std::stoi(text.substr(9));
    } catch (const std::exception&) {
      throw InputError("strata: cannot parse band count in '" + text + "'");
    }
  } else if (text.rfind("edges:", 0) == 0) {
    spec.mode = StrataMode::Explicit;
    std::stringstream ss(text.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        spec.lower.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw InputError("strata: cannot parse band edge '" + item + "'");
      }
    }
  } else {
    throw InputError("strata: expected 'integer', 'quantile:M' or 'edges:e0,e1,...', got '" + text + "'");
  }
  return spec;
}

std::size_t StrataPlan::case_size(std::size_t i) const {
  std::size_t total = 0;
  for (int k = 0; k < cases; ++k) total += stratum_size(i, k);
  return total;
}

std::size_t StrataPlan::control_size(std::size_t i) const { return n - 1 - case_size(i); }

StrataPlan build_strata(const DissimMatrix& d, const StrataSpec& spec) {
  const std::size_t n = d.size();
  StrataPlan plan;
  plan.n = n;
  switch (spec.mode) {
    case StrataMode::Integer: {
      if (!d.integer_valued()) throw InputError("strata: integer bands need integer-valued dissimilarities");
      const auto top = static_cast<int>(std::lround(d.values().maxCoeff()));
      for (int k = 1; k <= top; ++k) plan.lower.push_back(k);
      break;
    }
    case StrataMode::Quantile: {
      if (spec.bands < 1) throw InputError("strata: quantile mode needs at least one band");
      std::vector<double> values;
      values.reserve(d.pair_count());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) values.push_back(d(i, j));
      }
      std::sort(values.begin(), values.end());
      plan.lower.push_back(0.0);
      for (int k = 1; k < spec.bands; ++k) plan.lower.push_back(quantile_sorted(values, static_cast<double>(k) / spec.bands));
      break;
    }
    case StrataMode::Explicit:
      if (spec.lower.empty()) throw InputError("strata: no band edges given");
      for (std::size_t k = 1; k < spec.lower.size(); ++k) {
        if (!(spec.lower[k] > spec.lower[k - 1])) throw InputError("strata: band edges must be strictly increasing");
      }
      plan.lower = spec.lower;
      break;
  }
  plan.bands = static_cast<int>(plan.lower.size());
  if (spec.cases < 0 || spec.cases > plan.bands) {
    throw InputError("strata: case band count must lie in [0, " + std::to_string(plan.bands) + "]");
  }
  plan.cases = spec.cases;
  plan.members.assign(n, std::vector<std::vector<Index32>>(static_cast<std::size_t>(plan.bands)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto it = std::upper_bound(plan.lower.begin(), plan.lower.end(), d(i, j));
      const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - plan.lower.begin() - 1));
      plan.members[i][k].push_back(static_cast<Index32>(j));
    }
  }
  return plan;
}

std::vector<std::size_t> pilot_subsample_sizes(const StrataPlan& plan, double r) {
  if (!(r > 0.0)) throw InputError("case-control rate must be positive");
  double cases = 0.0;
  for (std::size_t i = 0; i < plan.n; ++i) cases += static_cast<double>(plan.case_size(i));
  const auto target = static_cast<std::size_t>(std::llround(r * cases / static_cast<double>(plan.n)));
  std::vector<std::size_t> out(plan.n);
  for (std::size_t i = 0; i < plan.n; ++i) out[i] = std::min(target, plan.control_size(i));
  return out;
}

namespace {

// Largest-remainder rounding of total * w / sum(w) over the entries of `idx`.
void largest_remainder(std::size_t total, const std::vector<double>& w, const std::vector<std::size_t>& idx,
                       std::vector<std::size_t>& alloc, std::vector<double>& target) {
  double wsum = 0.0;
  for (auto k : idx) wsum += w[k];
  if (idx.empty() || wsum <= 0.0) return;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t given = 0;
  for (auto k : idx) {
    const double t = static_cast<double>(total) * w[k] / wsum;
    target[k] += t;
    const auto base = static_cast<std::size_t>(std::floor(t));
    alloc[k] += base;
    given += base;
    rem.emplace_back(t - static_cast<double>(base), k);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; given < total && r < rem.size(); ++r, ++given) ++alloc[rem[r].second];
}

}  // namespace

std::vector<std::size_t> allocate_subsample(std::size_t total, const std::vector<double>& weights,
                                            const std::vector<std::size_t>& sizes) {
  if (weights.size() != sizes.size()) throw InputError("allocate_subsample: weights and sizes differ in length");
  const std::size_t K = sizes.size();
  const std::size_t capacity = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  total = std::min(total, capacity);
  std::vector<double> w(K);
  double wsum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (!(weights[k] >= 0.0) || !std::isfinite(weights[k])) throw InputError("allocate_subsample: weights must be finite and non-negative");
    w[k] = sizes[k] > 0 ? weights[k] : 0.0;
    wsum += w[k];
  }
  if (wsum <= 0.0) {
    for (std::size_t k = 0; k < K; ++k) w[k] = static_cast<double>(sizes[k]);
  }

  std::vector<std::size_t> alloc(K, 0);
  std::vector<double> target(K, 0.0);
  std::vector<std::size_t> open;
  for (std::size_t k = 0; k < K; ++k) {
    if (sizes[k] > 0) open.push_back(k);
  }
  std::size_t remaining = total;
  while (remaining > 0 && !open.empty()) {
    double open_w = 0.0;
    for (auto k : open) open_w += w[k];
    std::vector<double> ww = w;
    if (open_w <= 0.0) {
      for (auto k : open) ww[k] = static_cast<double>(sizes[k] - alloc[k]);
    }
    largest_remainder(remaining, ww, open, alloc, target);
    remaining = 0;
    std::vector<std::size_t> still_open;
    for (auto k : open) {
      if (alloc[k] > sizes[k]) {
        remaining += alloc[k] - sizes[k];
        alloc[k] = sizes[k];
      } else if (alloc[k] < sizes[k]) {
        still_open.push_back(k);
      }
    }
    open.swap(still_open);
  }

  std::size_t nonempty = 0;
  for (auto s : sizes) nonempty += s > 0;
  if (total >= nonempty) {
    for (std::size_t k = 0; k < K; ++k) {
      if (sizes[k] == 0 || alloc[k] > 0) continue;
      std::size_t donor = K;
      double surplus = -std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < K; ++g) {
        if (alloc[g] <= 1) continue;
        const double s = static_cast<double>(alloc[g]) - target[g];
        if (s > surplus) {
          surplus = s;
          donor = g;
        }
      }
      if (donor == K) break;
      --alloc[donor];
      alloc[k] = 1;
    }
  }
  return alloc;
}

namespace {

std::vector<Index32> draw_without_replacement(const std::vector<Index32>& from, std::size_t count, Rng& rng) {
  std::vector<Index32> pool = from;
  count = std::min(count, pool.size());
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double pair_change(std::size_t i, std::size_t j, std::span<const double> x_new, const ChainState& s,
                   const DissimMatrix& d) {
  const double nd = distance(x_new.data(), s.X.row(static_cast<Eigen::Index>(j)).data(),
                             static_cast<int>(s.X.cols()), s.curvature);
  const double dij = d(i, j);
  return pair_term(nd, dij, s.sigma2) -
         pair_term(s.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), dij, s.sigma2);
}

}  // namespace

void CaseControlPlan::resample(std::size_t i, Rng& rng) {
  const auto K = static_cast<std::size_t>(strata.bands);
  samples[i].assign(K, {});
  for (auto k = static_cast<std::size_t>(strata.cases); k < K; ++k) {
    samples[i][k] = draw_without_replacement(strata.members[i][k], n_ik[i][k], rng);
  }
}

void CaseControlPlan::resample_all(Rng& rng) {
  for (std::size_t i = 0; i < strata.n; ++i) resample(i, rng);
}

void CaseControlPlan::allocate(Rng& rng) {
  const std::size_t n = strata.n;
  const auto K = static_cast<std::size_t>(strata.bands);
  const auto C = static_cast<std::size_t>(strata.cases);
  if (n_i.size() != n) throw InputError("case-control plan: n_i must have one entry per object");
  if (weights.size() != n) weights.assign(n, std::vector<double>(K, 0.0));
  n_ik.assign(n, std::vector<std::size_t>(K, 0));
  samples.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> w(K - C);
    std::vector<std::size_t> sizes(K - C);
    for (std::size_t k = C; k < K; ++k) {
      w[k - C] = weights[i][k];
      sizes[k - C] = strata.stratum_size(i, static_cast<int>(k));
    }
    const auto alloc = allocate_subsample(n_i[i], w, sizes);
    for (std::size_t k = C; k < K; ++k) n_ik[i][k] = alloc[k - C];
    resample(i, rng);
  }
}

std::size_t CaseControlPlan::evaluated_pairs(std::size_t i) const {
  std::size_t total = strata.case_size(i);
  for (auto v : n_ik[i]) total += v;
  return total;
}

std::string CaseControlPlan::to_json() const {
  nlohmann::ordered_json j;
  j["bands"] = strata.bands;
  j["cases"] = strata.cases;
  j["band_lower"] = strata.lower;
  j["rate"] = rate;
  j["n_i"] = n_i;
  j["n_ik"] = n_ik;
  return j.dump(2);
}

CaseControlPlan exhaustive_plan(const StrataPlan& strata) {
  CaseControlPlan plan;
  plan.strata = strata;
  const auto K = static_cast<std::size_t>(strata.bands);
  const auto C = static_cast<std::size_t>(strata.cases);
  plan.n_i.resize(strata.n);
  plan.weights.assign(strata.n, std::vector<double>(K, 0.0));
  plan.n_ik.assign(strata.n, std::vector<std::size_t>(K, 0));
  plan.samples.assign(strata.n, std::vector<std::vector<Index32>>(K));
  for (std::size_t i = 0; i < strata.n; ++i) {
    plan.n_i[i] = strata.control_size(i);
    for (std::size_t k = C; k < K; ++k) {
      plan.n_ik[i][k] = strata.members[i][k].size();
      plan.weights[i][k] = static_cast<double>(plan.n_ik[i][k]);
      plan.samples[i][k] = strata.members[i][k];
    }
  }
  return plan;
}

PilotLikelihood::PilotLikelihood(const StrataPlan& strata, const std::vector<std::size_t>& n_i, Rng& rng)
    : strata_(&strata) {
  const std::size_t n = strata.n;
  if (n_i.size() != n) throw InputError("pilot: n_i must have one entry per object");
  const auto K = static_cast<std::size_t>(strata.bands);
  band_of_.assign(n * n, 0);
  pool_.resize(n);
  inflation_.assign(n, 0.0);
  share_sum_.assign(n, std::vector<double>(K, 0.0));
  share_count_.assign(n, 0);
  band_change_.assign(K, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Index32> controls;
    for (std::size_t k = 0; k < K; ++k) {
      for (auto j : strata.members[i][k]) {
        band_of_[i * n + j] = static_cast<Index32>(k);
        if (k >= static_cast<std::size_t>(strata.cases)) controls.push_back(j);
      }
    }
    std::sort(controls.begin(), controls.end());
    pool_[i] = draw_without_replacement(controls, n_i[i], rng);
    if (!pool_[i].empty()) inflation_[i] = static_cast<double>(controls.size()) / static_cast<double>(pool_[i].size());
  }
}

double PilotLikelihood::loglik_change(std::size_t i, std::span<const double> x_new, const ChainState& s,
                                      const DissimMatrix& d, ProposalScratch& /*scratch*/) {
  const StrataPlan& st = *strata_;
  const auto C = static_cast<std::size_t>(st.cases);
  const auto K = static_cast<std::size_t>(st.bands);
  double change = 0.0;
  for (std::size_t k = 0; k < C; ++k) {
    for (auto j : st.members[i][k]) change += pair_change(i, j, x_new, s, d);
  }
  std::fill(band_change_.begin(), band_change_.end(), 0.0);
  for (auto j : pool_[i]) band_change_[band_of_[i * st.n + j]] += inflation_[i] * pair_change(i, j, x_new, s, d);
  double control = 0.0;
  for (std::size_t k = C; k < K; ++k) control += band_change_[k];
  if (recording_ && control != 0.0) {
    for (std::size_t k = C; k < K; ++k) share_sum_[i][k] += std::abs(band_change_[k] / control);
    ++share_count_[i];
  }
  return change + control;
}

std::vector<std::vector<double>> PilotLikelihood::weights() const {
  std::vector<std::vector<double>> w = share_sum_;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (share_count_[i] == 0) continue;
    for (auto& v : w[i]) v /= static_cast<double>(share_count_[i]);
  }
  return w;
}

CaseControlLikelihood::CaseControlLikelihood(CaseControlPlan& plan, bool resample_each_sweep)
    : plan_(&plan), resample_(resample_each_sweep) {}

void CaseControlLikelihood::begin_sweep(Rng& rng) {
  if (resample_) plan_->resample_all(rng);
}

double CaseControlLikelihood::loglik_change(std::size_t i, std::span<const double> x_new, const ChainState& s,
                                            const DissimMatrix& d, ProposalScratch& /*scratch*/) {
  const StrataPlan& st = plan_->strata;
  const auto C = static_cast<std::size_t>(st.cases);
  const auto K = static_cast<std::size_t>(st.bands);
  double change = 0.0;
  for (std::size_t k = 0; k < C; ++k) {
    for (auto j : st.members[i][k]) change += pair_change(i, j, x_new, s, d);
    evaluations_ += st.members[i][k].size();
  }
  for (std::size_t k = C; k < K; ++k) {
    const auto& sample = plan_->samples[i][k];
    if (sample.empty()) continue;
    double band = 0.0;
    for (auto j : sample) band += pair_change(i, j, x_new, s, d);
    change += band * static_cast<double>(st.members[i][k].size()) / static_cast<double>(sample.size());
    evaluations_ += sample.size();
  }
  return change;
}

double exact_conditional(std::size_t i, const ChainState& s, const DissimMatrix& d) {
  double total = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j != i) total += loglik_pair_terms(i, j, s, d);
  }
  const auto row = s.V.row(static_cast<Eigen::Index>(i));
  return total + prior_quadratic({row.data(), static_cast<std::size_t>(row.size())}, s.lambda);
}

double approx_pair_loglik(std::size_t i, const ChainState& s, const DissimMatrix& d, const CaseControlPlan& plan) {
  const StrataPlan& st = plan.strata;
  const auto C = static_cast<std::size_t>(st.cases);
  const auto K = static_cast<std::size_t>(st.bands);
  double total = 0.0;
  for (std::size_t k = 0; k < C; ++k) {
    for (auto j : st.members[i][k]) total += loglik_pair_terms(i, j, s, d);
  }
  for (std::size_t k = C; k < K; ++k) {
    const auto& sample = plan.samples[i][k];
    if (sample.empty()) continue;
    double band = 0.0;
    for (auto j : sample) band += loglik_pair_terms(i, j, s, d);
    total += band * static_cast<double>(st.members[i][k].size()) / static_cast<double>(sample.size());
  }
  const auto row = s.V.row(static_cast<Eigen::Index>(i));
  return total + prior_quadratic({row.data(), static_cast<std::size_t>(row.size())}, s.lambda);
}

CaseControlPlan run_pilot(const DissimMatrix& d, const ModelConfig& cfg, const StrataPlan& strata, double r,
                          const PilotSettings& pilot, const InitEmbedding& init, Rng& rng) {
  if (strata.n != d.size()) throw InputError("run_pilot: strata and data differ in size");
  CaseControlPlan plan;
  plan.strata = strata;
  plan.rate = r;
  plan.n_i = pilot_subsample_sizes(strata, r);
  PilotLikelihood lik(strata, plan.n_i, rng);
  const int burnin = pilot.mcmc.burnin;
  lik.set_recording(burnin == 0);
  run_chain(d, cfg, pilot.mcmc, init, lik, [&](int t, const ChainState&) { lik.set_recording(t >= burnin); });
  plan.weights = lik.weights();
  plan.allocate(rng);
  return plan;
}

std::string LoglikComparison::scatter_csv() const {
  std::string out = "full_change,approx_change\n";
  for (std::size_t k = 0; k < exact.size(); ++k) {
    out += io::format_double(exact[k]) + "," + io::format_double(approx[k]) + "\n";
  }
  return out;
}

namespace {

void compare_at_state(const ChainState& s, const ModelConfig& cfg, const DissimMatrix& d, LikelihoodEvaluator& approx,
                      std::size_t n_objects, Rng& rng, LoglikComparison& out) {
  const std::size_t n = s.size();
  const int p = s.dim();
  const double sd = std::sqrt(cfg.c * s.sigma2 / static_cast<double>(n - 1));
  std::vector<std::size_t> objects(n);
  std::iota(objects.begin(), objects.end(), 0);
  if (n_objects <= n) {
    std::shuffle(objects.begin(), objects.end(), rng);
    objects.resize(n_objects);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    objects.resize(n_objects);
    for (auto& o : objects) o = pick(rng);
  }
  ExactLikelihood exact;
  ProposalScratch scratch;
  std::normal_distribution<double> normal(0.0, 1.0);
  TangentVector v_new(p);
  Eigen::VectorXd x_new(p + 1);
  for (auto i : objects) {
    for (int k = 0; k < p; ++k) v_new[k] = s.V(static_cast<Eigen::Index>(i), k) + sd * normal(rng);
    exp_origin({v_new.data(), static_cast<std::size_t>(p)}, {x_new.data(), static_cast<std::size_t>(p + 1)});
    const std::span<const double> xs(x_new.data(), static_cast<std::size_t>(p + 1));
    out.exact.push_back(log_accept_ratio_v(i, v_new, xs, s, d, exact, scratch));
    out.approx.push_back(log_accept_ratio_v(i, v_new, xs, s, d, approx, scratch));
  }
}

}  // namespace

LoglikComparison compare_loglik_changes(const DissimMatrix& d, const ModelConfig& cfg,
                                        const std::vector<ChainState>& checkpoints, LikelihoodEvaluator& approx,
                                        std::size_t n_objects, Rng& rng) {
  if (checkpoints.empty()) throw InputError("compare_loglik_changes: no checkpoint states");
  LoglikComparison out;
  for (const auto& s : checkpoints) compare_at_state(s, cfg, d, approx, n_objects, rng, out);
  out.correlation = pearson_correlation(out.exact, out.approx);
  return out;
}

LoglikComparison compare_loglik_changes(const DissimMatrix& d, const ModelConfig& cfg, CaseControlPlan& plan,
                                        const McmcSettings& settings, const InitEmbedding& init,
                                        std::size_t n_params, std::size_t n_objects, Rng& rng) {
  if (n_params == 0) throw InputError("compare_loglik_changes: need at least one parameter set");
  settings.validate();
  CaseControlLikelihood approx(plan);
  ExactLikelihood exact;
  LoglikComparison out;
  const int span = settings.iters - settings.burnin;
  const int step = std::max(1, span / static_cast<int>(n_params));
  std::size_t taken = 0;
  run_chain(d, cfg, settings, init, exact, [&](int t, const ChainState& s) {
    if (t <= settings.burnin || taken >= n_params || (t - settings.burnin) % step != 0) return;
    compare_at_state(s, cfg, d, approx, n_objects, rng, out);
    ++taken;
  });
  out.correlation = pearson_correlation(out.exact, out.approx);
  return out;
}

}  // namespace bhmds
