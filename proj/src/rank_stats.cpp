#include "mvrank/rank_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mvrank/errors.hpp"

namespace mvrank {

void ScoredPair::validate() const {
  if (scores_x.empty()) throw ParameterError("scored pair needs at least one normal score");
  if (scores_u.empty()) throw ParameterError("scored pair needs at least one reference score");
  auto finite = [](double s) { return std::isfinite(s); };
  if (!std::all_of(scores_x.begin(), scores_x.end(), finite) ||
      !std::all_of(scores_u.begin(), scores_u.end(), finite)) {
    throw DomainError("scores must be finite");
  }
}

namespace {

std::vector<double> sorted_pool(const ScoredPair& pair) {
  std::vector<double> pool;
  pool.reserve(pair.pooled_size());
  pool.insert(pool.end(), pair.scores_x.begin(), pair.scores_x.end());
  pool.insert(pool.end(), pair.scores_u.begin(), pair.scores_u.end());
  std::sort(pool.begin(), pool.end());
  return pool;
}

bool adjacent_equal(const std::vector<double>& sorted) {
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

void check_proxy_args(std::span<const double> scores, std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw ParameterError("proxy needs n >= 1 and m >= 1");
  if (scores.size() != n) throw ParameterError("proxy: score count must equal n");
  for (double s : scores) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("proxy: model scores must lie in (0,1)");
  }
}

}  // namespace

bool has_ties(const ScoredPair& pair) {
  pair.validate();
  return adjacent_equal(sorted_pool(pair));
}

std::vector<std::int64_t> ranks(const ScoredPair& pair) {
  pair.validate();
  const std::vector<double> pool = sorted_pool(pair);
  if (adjacent_equal(pool)) {
    warn("pooled scores contain ties; <=-counting ranks are inflated and the "
         "rank-sum/MV identity does not hold exactly");
  }
  std::vector<std::int64_t> out;
  out.reserve(pair.n());
  for (double s : pair.scores_x) {
    // Number of pooled scores <= s.
    out.push_back(std::upper_bound(pool.begin(), pool.end(), s) - pool.begin());
  }
  return out;
}

std::int64_t rank_sum(const ScoredPair& pair) {
  const auto r = ranks(pair);
  return std::accumulate(r.begin(), r.end(), std::int64_t{0});
}

double w_phi_stat(const ScoreGen& phi, const ScoredPair& pair) {
  const auto r = ranks(pair);
  const double denom = static_cast<double>(pair.pooled_size() + 1);
  double total = 0.0;
  for (std::int64_t rank : r) total += eval_phi(phi, static_cast<double>(rank) / denom);
  return total;
}

double w_phi_proxy(const ScoreGen& phi, std::span<const double> model_scores_x,
                   std::size_t n, std::size_t m) {
  check_proxy_args(model_scores_x, n, m);
  const double pooled = static_cast<double>(n + m);
  double total = 0.0;
  for (double s : model_scores_x) total += eval_phi(phi, (pooled * s + 1.0) / (pooled + 1.0));
  return total;
}

std::vector<double> w_phi_proxy_gradient(const ScoreGen& phi,
                                         std::span<const double> model_scores_x,
                                         std::size_t n, std::size_t m) {
  check_proxy_args(model_scores_x, n, m);
  const double pooled = static_cast<double>(n + m);
  const double slope = pooled / (pooled + 1.0);
  std::vector<double> grad;
  grad.reserve(n);
  for (double s : model_scores_x) {
    grad.push_back(slope * eval_phi_derivative(phi, (pooled * s + 1.0) / (pooled + 1.0)));
  }
  return grad;
}

}  // namespace mvrank
