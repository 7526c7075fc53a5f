#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mvrank/mlp.hpp"
#include "mvrank/sample.hpp"

namespace mvrank {

// How stage 1 synthesizes the reference ("negative") sample.
enum class ReferenceMode {
  // Uniform on [0,1]^d, as in the theoretical procedure.
  UniformCube,
  // RadLaw(alpha, beta) dilated by (max normal norm + epsilon).
  DilatedRadLaw,
};

struct Stage1Config {
  TrainConfig train;  // lambda is overridden by each grid value
  std::vector<double> lambda_grid = {0.0, 0.01, 0.1, 1.0, 10.0};
  ReferenceMode reference = ReferenceMode::DilatedRadLaw;
  RadLawParams radlaw{3.0, 1.0};
  double epsilon = 0.01;

  void validate() const;
};

struct CandidateModel {
  double lambda = 0.0;
  MlpScorer model;
  std::vector<EpochTrace> traces;
  // Rank statistic of the normal scores against the synthetic scores on the
  // training pool; the selection criterion.
  double w_phi = 0.0;
};

struct Stage1Result {
  std::vector<CandidateModel> candidates;  // in lambda_grid order
  std::size_t selected = 0;
  Sample train_set;
  double rad = 0.0;  // 0 in UniformCube mode

  const CandidateModel& best() const { return candidates.at(selected); }
};

/// Stage 1: draws m reference points, trains one network per lambda and
/// selects the one with the highest empirical rank statistic (first one wins
/// ties). `hook` is forwarded to every training run.
Stage1Result stage1_fit(const Sample& normals, std::size_t m, const Stage1Config& cfg,
                        std::uint64_t seed, const EvalHook& hook = {});

// Same, with a caller-supplied reference sample.
Stage1Result stage1_fit_with_reference(const Sample& normals, const Sample& reference,
                                       const Stage1Config& cfg, const EvalHook& hook = {});

struct RankedTestSet {
  std::vector<std::size_t> indices;  // test indices by ascending score
  std::vector<double> scores;        // ascending
  std::vector<std::size_t> flagged;  // first n_lowest of indices
};

// Orders test scores ascending (ties by lower original index) and flags
// the n_lowest lowest.
RankedTestSet rank_scores(const std::vector<double>& scores, std::size_t n_lowest);

// Stage 2.
RankedTestSet stage2_rank(const MlpScorer& model, const Sample& test, std::size_t n_lowest);

// Fraction of true outliers (label 0) among the first n_lowest ranked points.
double accuracy_at(const RankedTestSet& ranked, const Sample& test, std::size_t n_lowest);

// `rank,test_index,score,is_flagged,true_label`; true_label empty when the
// test sample is unlabeled.
void write_ranked_csv(std::ostream& out, const RankedTestSet& ranked, const Sample& test);

}  // namespace mvrank
