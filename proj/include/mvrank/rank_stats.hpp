#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvrank/score_gen.hpp"

namespace mvrank {

// Scores of the normal sample (x) and of the reference sample (u).
// Both must be nonempty and NaN-free; validate() enforces this.
struct ScoredPair {
  std::vector<double> scores_x;
  std::vector<double> scores_u;

  std::size_t n() const noexcept { return scores_x.size(); }
  std::size_t m() const noexcept { return scores_u.size(); }
  std::size_t pooled_size() const noexcept { return n() + m(); }

  void validate() const;
};

// True when two pooled scores compare equal.
bool has_ties(const ScoredPair& pair);

// Rank of each normal score in the pooled sample, counting every pooled
// score that is <= it (the normal score itself included). Ranks lie in
// [1, N]. Ties inflate ranks under this rule; a warning is emitted when the
// pooled sample contains any.
std::vector<std::int64_t> ranks(const ScoredPair& pair);

// Sum of the normal ranks, in exact integer arithmetic.
std::int64_t rank_sum(const ScoredPair& pair);

// Two-sample linear rank statistic: sum_i phi(rank_i / (N + 1)).
double w_phi_stat(const ScoreGen& phi, const ScoredPair& pair);

// Training proxy of the rank statistic: each normal rank is replaced by the
// model score itself, sum_i phi((N * s_i + 1) / (N + 1)) with N = n + m.
// Scores must lie strictly inside (0,1).
double w_phi_proxy(const ScoreGen& phi, std::span<const double> model_scores_x,
                   std::size_t n, std::size_t m);

// Partial derivatives of w_phi_proxy with respect to each model score.
std::vector<double> w_phi_proxy_gradient(const ScoreGen& phi,
                                         std::span<const double> model_scores_x,
                                         std::size_t n, std::size_t m);

}  // namespace mvrank
