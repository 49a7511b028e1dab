#include "bhmds/dissimilarity.hpp"

#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "bhmds/error.hpp"
#include "bhmds/io.hpp"
#include "bhmds/stats.hpp"

namespace bhmds {

namespace {

constexpr double kAsymmetryTol = 1e-8;
constexpr double kDiagonalTol = 1e-12;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  const char* first = tok.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<std::string> split_row(const std::string& line, MatrixFormat format) {
  std::vector<std::string> tokens;
  if (format == MatrixFormat::Csv) {
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      tokens.push_back(trim(std::string_view(line).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
  }
  return tokens;
}

std::string pos(std::size_t i, std::size_t j) { return "(" + std::to_string(i) + "," + std::to_string(j) + ")"; }

}  // namespace

DissimMatrix::DissimMatrix(Eigen::MatrixXd values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
  if (values_.rows() != values_.cols()) {
    throw DataError(DataErrorCode::NonSquare, std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()));
  }
  const auto n = static_cast<std::size_t>(values_.rows());
  if (n < 2) throw DataError(DataErrorCode::NonSquare, "need at least 2 objects");
  if (!labels_.empty() && labels_.size() != n) {
    throw DataError(DataErrorCode::Parse, "label count does not match matrix size");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = values_(i, j);
      if (!std::isfinite(v)) throw DataError(DataErrorCode::NotFinite, "entry " + pos(i, j));
      if (v < 0.0) throw DataError(DataErrorCode::NegativeEntry, "entry " + pos(i, j) + " = " + io::format_double(v));
    }
    if (std::abs(values_(i, i)) > kDiagonalTol) throw DataError(DataErrorCode::NonzeroDiagonal, "entry " + pos(i, i));
    values_(i, i) = 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = values_(i, j), b = values_(j, i);
      if (std::abs(a - b) > kAsymmetryTol) throw DataError(DataErrorCode::Asymmetric, "entries " + pos(i, j));
      const double avg = 0.5 * (a + b);
      if (!(avg > 0.0)) throw DataError(DataErrorCode::ZeroOffDiagonal, "entry " + pos(i, j));
      values_(i, j) = avg;
      values_(j, i) = avg;
      sum_squares_ += avg * avg;
    }
  }
}

bool DissimMatrix::integer_valued() const {
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < values_.cols(); ++j) {
      if (values_(i, j) != std::round(values_(i, j))) return false;
    }
  }
  return true;
}

DissimMatrix parse_matrix(std::istream& in, MatrixFormat format) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto tokens = split_row(line, format);
    std::vector<double> row;
    row.reserve(tokens.size());
    bool numeric = true;
    for (const auto& t : tokens) {
      double v;
      if (!parse_double(t, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        labels = std::move(tokens);
        first = false;
        continue;
      }
      throw DataError(DataErrorCode::Parse, "non-numeric entry on data row " + std::to_string(rows.size() + 1));
    }
    first = false;
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  if (n == 0) throw DataError(DataErrorCode::Parse, "empty matrix");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw DataError(DataErrorCode::NonSquare,
                      "row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) + " entries, expected " +
                          std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return DissimMatrix(std::move(m), std::move(labels));
}

DissimMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dissimilarity file " + path.string());
  return parse_matrix(in, format);
}

EdgeList parse_edge_list(std::istream& in, bool one_indexed) {
  EdgeList out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    long long a, b;
    if (!(ss >> a)) continue;
    if (!(ss >> b)) throw DataError(DataErrorCode::Parse, "edge list line " + std::to_string(lineno));
    Edge e;
    double w;
    if (ss >> w) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw DataError(DataErrorCode::NegativeEntry, "edge weight on line " + std::to_string(lineno));
      }
      e.weight = w;
      out.weighted = true;
    }
    const long long base = one_indexed ? 1 : 0;
    if (a < base || b < base) throw DataError(DataErrorCode::BadIndex, "vertex index on line " + std::to_string(lineno));
    e.u = static_cast<std::size_t>(a - base);
    e.v = static_cast<std::size_t>(b - base);
    out.n = std::max({out.n, e.u + 1, e.v + 1});
    out.edges.push_back(e);
  }
  return out;
}

EdgeList load_edge_list(const std::filesystem::path& path, bool one_indexed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());
  return parse_edge_list(in, one_indexed);
}

namespace {

std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(const std::vector<Edge>& edges, std::size_t n) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) throw DataError(DataErrorCode::BadIndex, "edge endpoint outside 0..n-1");
    if (e.u == e.v) continue;
    adj[e.u].emplace_back(e.v, e.weight);
    adj[e.v].emplace_back(e.u, e.weight);
  }
  return adj;
}

}  // namespace

DissimMatrix graph_shortest_paths(const std::vector<Edge>& edges, std::size_t n) {
  const auto adj = adjacency(edges, n);
  Eigen::MatrixXd d(n, n);
  std::vector<long> dist(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (const auto& [v, w] : adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (dist[t] < 0) {
        throw DataError(DataErrorCode::Disconnected,
                        "vertices " + std::to_string(s) + " and " + std::to_string(t) + " are not connected");
      }
      d(s, t) = static_cast<double>(dist[t]);
    }
  }
  return DissimMatrix(std::move(d));
}

DissimMatrix weighted_shortest_paths(const std::vector<Edge>& edges, std::size_t n) {
  const auto adj = adjacency(edges, n);
  Eigen::MatrixXd d(n, n);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n);
  using Item = std::pair<double, std::size_t>;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), inf);
    dist[s] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        if (du + w < dist[v]) {
          dist[v] = du + w;
          heap.emplace(dist[v], v);
        }
      }
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (dist[t] == inf) {
        throw DataError(DataErrorCode::Disconnected,
                        "vertices " + std::to_string(s) + " and " + std::to_string(t) + " are not connected");
      }
      d(s, t) = dist[t];
    }
  }
  // Dijkstra sums in different orders from each end; average out the last ulp.
  Eigen::MatrixXd sym = 0.5 * (d + d.transpose());
  return DissimMatrix(std::move(sym));
}

std::vector<Edge> balanced_tree_edges(std::size_t n, std::size_t branching) {
  if (branching < 1) throw InputError("tree branching factor must be >= 1");
  std::vector<Edge> edges;
  edges.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) edges.push_back({(k - 1) / branching, k, 1.0});
  return edges;
}

DissimMatrix observe_with_noise(const Eigen::MatrixXd& delta, double sigma, Rng& rng) {
  const Eigen::Index n = delta.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double obs = sample_positive_truncated_normal(delta(i, j), sigma, rng);
      d(i, j) = obs;
      d(j, i) = obs;
    }
  }
  return DissimMatrix(std::move(d));
}

SyntheticDataset simulate_dataset(std::size_t n, int p, double sigma, double kappa, double prior_var, Rng& rng) {
  if (n < 2) throw InputError("simulate_dataset: need n >= 2");
  if (p < 1) throw InputError("simulate_dataset: need p >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("simulate_dataset: sigma must be positive");
  if (!(prior_var > 0.0) || !std::isfinite(prior_var)) throw InputError("simulate_dataset: prior_var must be positive");
  const Curvature k(kappa);
  const std::vector<double> cov(static_cast<std::size_t>(p), prior_var);
  PointMatrix X(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) X.row(i) = sample_wrapped_normal(cov, rng).coords().transpose();
  Eigen::MatrixXd delta = pairwise_distances(X, k);
  DissimMatrix observed = observe_with_noise(delta, sigma, rng);
  return {SyntheticTruth{std::move(X), std::move(delta), sigma, kappa, p}, std::move(observed)};
}

void write_truth(const std::filesystem::path& dir, const SyntheticTruth& truth, std::uint64_t seed) {
  io::ensure_directory(dir);
  std::vector<std::string> header;
  for (int k = 0; k <= truth.p; ++k) header.push_back("x" + std::to_string(k));
  io::write_atomic(dir / "truth_coordinates.csv", io::matrix_csv(truth.X, header));
  nlohmann::ordered_json j;
  j["n"] = truth.X.rows();
  j["p"] = truth.p;
  j["sigma"] = truth.sigma;
  j["kappa"] = truth.kappa;
  j["seed"] = seed;
  io::write_atomic(dir / "truth.json", j.dump(2) + "\n");
}

}  // namespace bhmds
