#include "mvrank/procedure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "mvrank/csv.hpp"
#include "mvrank/errors.hpp"
#include "mvrank/random.hpp"
#include "mvrank/rank_stats.hpp"

namespace mvrank {

void Stage1Config::validate() const {
  train.validate();
  if (lambda_grid.empty()) throw ParameterError("lambda grid must not be empty");
  for (double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ParameterError("lambda values must be >= 0");
  }
  if (!(radlaw.alpha > 0.0) || !(radlaw.beta > 0.0)) {
    throw ParameterError("RadLaw parameters must be positive");
  }
  if (!(epsilon >= 0.0)) throw ParameterError("epsilon must be >= 0");
}

Stage1Result stage1_fit(const Sample& normals, std::size_t m, const Stage1Config& cfg,
                        std::uint64_t seed, const EvalHook& hook) {
  if (normals.empty()) throw ParameterError("stage 1 needs at least one normal point");
  if (m == 0) throw ParameterError("stage 1 needs m >= 1");
  cfg.validate();
  double rad = 0.0;
  Sample reference = [&] {
    if (cfg.reference == ReferenceMode::UniformCube) {
      return sample_uniform_cube(m, normals.dim(), seed);
    }
    rad = compute_rad(normals);
    return dilate(sample_radlaw(m, normals.dim(), cfg.radlaw, seed), rad + cfg.epsilon);
  }();
  Stage1Result result = stage1_fit_with_reference(normals, reference, cfg, hook);
  result.rad = rad;
  return result;
}

Stage1Result stage1_fit_with_reference(const Sample& normals, const Sample& reference,
                                       const Stage1Config& cfg, const EvalHook& hook) {
  cfg.validate();
  if (normals.empty() || reference.empty()) throw ParameterError("stage 1 samples must be nonempty");
  if (normals.has_labels() && normals.count_label(kNormalLabel) != normals.size()) {
    throw ParameterError("stage 1 normals must not contain outlier labels");
  }
  const Sample plain_normals(normals.dim(),
                             std::vector<double>(normals.coords().begin(), normals.coords().end()));
  const Sample plain_reference(
      reference.dim(), std::vector<double>(reference.coords().begin(), reference.coords().end()));

  Stage1Result result{{}, 0, make_train_set(plain_normals, plain_reference), 0.0};
  for (double lambda : cfg.lambda_grid) {
    TrainConfig tc = cfg.train;
    tc.lambda = lambda;
    auto trained = train(result.train_set, tc, hook);
    ScoredPair pair{score_all(trained.model, plain_normals),
                    score_all(trained.model, plain_reference)};
    const double w = w_phi_stat(tc.phi, pair);
    result.candidates.push_back({lambda, std::move(trained.model), std::move(trained.traces), w});
  }
  for (std::size_t k = 1; k < result.candidates.size(); ++k) {
    if (result.candidates[k].w_phi > result.candidates[result.selected].w_phi) result.selected = k;
  }
  return result;
}

RankedTestSet rank_scores(const std::vector<double>& scores, std::size_t n_lowest) {
  if (n_lowest > scores.size()) throw ParameterError("n_lowest exceeds the test size");
  for (double s : scores) {
    if (std::isnan(s)) throw DomainError("test scores must not be NaN");
  }
  RankedTestSet ranked;
  ranked.indices.resize(scores.size());
  std::iota(ranked.indices.begin(), ranked.indices.end(), std::size_t{0});
  std::stable_sort(ranked.indices.begin(), ranked.indices.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  ranked.scores.reserve(scores.size());
  for (std::size_t i : ranked.indices) ranked.scores.push_back(scores[i]);
  ranked.flagged.assign(ranked.indices.begin(),
                        ranked.indices.begin() + static_cast<std::ptrdiff_t>(n_lowest));
  return ranked;
}

RankedTestSet stage2_rank(const MlpScorer& model, const Sample& test, std::size_t n_lowest) {
  return rank_scores(score_all(model, test), n_lowest);
}

double accuracy_at(const RankedTestSet& ranked, const Sample& test, std::size_t n_lowest) {
  if (!test.has_labels()) throw ParameterError("accuracy requires a labeled test sample");
  if (n_lowest == 0 || n_lowest > ranked.indices.size()) {
    throw ParameterError("n_lowest out of range");
  }
  std::size_t outliers = 0;
  for (std::size_t r = 0; r < n_lowest; ++r) {
    outliers += test.label(ranked.indices[r]) == kOutlierLabel;
  }
  return static_cast<double>(outliers) / static_cast<double>(n_lowest);
}

void write_ranked_csv(std::ostream& out, const RankedTestSet& ranked, const Sample& test) {
  out << "rank,test_index,score,is_flagged,true_label\n";
  for (std::size_t r = 0; r < ranked.indices.size(); ++r) {
    const std::size_t idx = ranked.indices[r];
    out << r + 1 << ',' << idx << ',' << csv::format_double(ranked.scores[r]) << ','
        << (r < ranked.flagged.size() ? 1 : 0) << ',';
    if (test.has_labels()) out << test.label(idx);
    out << '\n';
  }
}

}  // namespace mvrank
