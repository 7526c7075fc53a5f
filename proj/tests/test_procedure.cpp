#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mvrank/errors.hpp"
#include "mvrank/procedure.hpp"
#include "mvrank/rank_stats.hpp"

using namespace mvrank;

namespace {

// sigmoid(-|x|) in one dimension: relu(x) + relu(-x) = |x|.
MlpScorer neg_abs_scorer() { return mlp_from_weights(1, 2, {1.0, -1.0}, {0.0, 0.0}, {-1.0, -1.0}, 0.0); }

MlpScorer constant_scorer(std::size_t d) {
  MlpScorer m = mlp_new(d, 1);
  m.assign(std::vector<double>(m.parameter_count(), 0.0));
  return m;
}

Sample labeled_line(const std::vector<double>& xs, const std::vector<int>& labels) {
  return Sample(1, xs, labels);
}

}  // namespace

TEST_CASE("rank_scores") {
  const auto r = rank_scores({0.3, 0.1, 0.3, 0.2}, 2);
  CHECK(r.indices == std::vector<std::size_t>{1, 3, 0, 2});
  CHECK(r.scores == std::vector<double>{0.1, 0.2, 0.3, 0.3});
  CHECK(r.flagged == std::vector<std::size_t>{1, 3});
  CHECK(rank_scores({0.5}, 0).flagged.empty());
  CHECK_THROWS_AS(rank_scores({0.5, 0.2}, 3), ParameterError);
  CHECK_THROWS_AS(rank_scores({0.5, NAN}, 1), DomainError);
}

TEST_CASE("stage2_rank") {
  SUBCASE("constant scorer flags the first indices") {
    const Sample test(2, std::vector<double>(20, 0.3));
    const auto r = stage2_rank(constant_scorer(2), test, 4);
    CHECK(r.flagged == std::vector<std::size_t>{0, 1, 2, 3});
  }
  SUBCASE("monotone-in-norm scorer flags the largest norms") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> xs(50);
    for (double& x : xs) x = g(gen);
    const Sample test(1, xs);
    const auto r = stage2_rank(neg_abs_scorer(), test, 10);
    std::vector<std::size_t> by_norm(50);
    std::iota(by_norm.begin(), by_norm.end(), 0);
    std::ranges::sort(by_norm, [&](auto a, auto b) { return std::abs(xs[a]) > std::abs(xs[b]); });
    auto flagged = r.flagged;
    std::ranges::sort(flagged);
    std::vector<std::size_t> expected(by_norm.begin(), by_norm.begin() + 10);
    std::ranges::sort(expected);
    CHECK(flagged == expected);
  }
  SUBCASE("n_lowest = test size flags everything") {
    const Sample test(1, {0.1, -2.0, 0.5});
    auto flagged = stage2_rank(neg_abs_scorer(), test, 3).flagged;
    std::ranges::sort(flagged);
    CHECK(flagged == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(stage2_rank(neg_abs_scorer(), test, 4), ParameterError);
  }
}

TEST_CASE("accuracy_at") {
  const Sample test = labeled_line({0.1, 3.0, -0.2, -4.0, 0.0, 5.0}, {1, 0, 1, 0, 1, 0});
  const auto r = stage2_rank(neg_abs_scorer(), test, 3);
  CHECK(accuracy_at(r, test, 3) == 1.0);
  CHECK(accuracy_at(r, test, 6) == 0.5);
  CHECK(accuracy_at(r, test, 4) == 0.75);
  CHECK_THROWS_AS(accuracy_at(r, Sample(1, {0.1, 3.0, -0.2, -4.0, 0.0, 5.0}), 3), ParameterError);
  CHECK_THROWS_AS(accuracy_at(r, test, 0), ParameterError);
  CHECK_THROWS_AS(accuracy_at(r, test, 7), ParameterError);
}

TEST_CASE("accuracy bounds and score-transform invariance") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t size = 5 + trial % 40;
    std::vector<double> xs(size);
    std::vector<int> labels(size);
    std::size_t outliers = 0;
    for (std::size_t i = 0; i < size; ++i) {
      xs[i] = unit(gen);
      labels[i] = unit(gen) < 0.3 ? 0 : 1;
      outliers += labels[i] == 0;
    }
    const Sample test(1, xs, labels);
    std::vector<double> scores(size);
    for (std::size_t i = 0; i < size; ++i) scores[i] = std::floor(unit(gen) * 10.0);  // ties on purpose
    std::vector<double> transformed(size);
    for (std::size_t i = 0; i < size; ++i) transformed[i] = std::exp(scores[i]) * 2.0 - 1.0;
    for (std::size_t n_lowest = 1; n_lowest <= size; ++n_lowest) {
      const auto r = rank_scores(scores, n_lowest);
      const auto t = rank_scores(transformed, n_lowest);
      CHECK(r.indices == t.indices);
      CHECK(r.flagged == t.flagged);
      const double acc = accuracy_at(r, test, n_lowest);
      CHECK(acc == accuracy_at(t, test, n_lowest));
      CHECK(acc >= 0.0);
      CHECK(acc * static_cast<double>(n_lowest) <= static_cast<double>(outliers) + 1e-9);
      CHECK(acc <= 1.0);
    }
  }
}

TEST_CASE("ranked CSV") {
  const Sample test = labeled_line({0.1, 3.0}, {1, 0});
  const auto r = stage2_rank(neg_abs_scorer(), test, 1);
  std::ostringstream out;
  write_ranked_csv(out, r, test);
  const std::string text = out.str();
  CHECK(text.starts_with("rank,test_index,score,is_flagged,true_label\n1,1,"));
  CHECK(text.find("\n2,0,") != std::string::npos);
  CHECK(text.ends_with(",0,1\n"));
}

TEST_CASE("stage1 selection") {
  const Sample normals = sample_gaussian(60, 2, 0.1, 1);
  Stage1Config cfg;
  cfg.train.epochs = 3;
  cfg.lambda_grid = {0.0, 1.0, 10.0};

  const auto a = stage1_fit(normals, 30, cfg, 7);
  REQUIRE(a.candidates.size() == 3);
  CHECK(a.train_set.size() == 90);
  CHECK(a.rad == doctest::Approx(compute_rad(normals)));
  for (const auto& c : a.candidates) CHECK(a.best().w_phi >= c.w_phi);
  // First maximizer wins.
  for (std::size_t k = 0; k < a.selected; ++k) CHECK(a.candidates[k].w_phi < a.best().w_phi);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a.candidates[k].lambda == cfg.lambda_grid[k]);
    CHECK(a.candidates[k].traces.size() == 3);
  }

  // The recorded criterion is the rank statistic on the training pool.
  const auto& best = a.best();
  const auto scores = score_all(best.model, a.train_set);
  ScoredPair pair{{scores.begin(), scores.begin() + 60}, {scores.begin() + 60, scores.end()}};
  CHECK(best.w_phi == w_phi_stat(cfg.train.phi, pair));

  const auto b = stage1_fit(normals, 30, cfg, 7);
  CHECK(b.selected == a.selected);
  for (std::size_t k = 0; k < 3; ++k) CHECK(b.candidates[k].model == a.candidates[k].model);

  // Reference points are dilated RadLaw draws: all within rad + epsilon.
  for (std::size_t i = 60; i < 90; ++i) {
    const auto p = a.train_set.point(i);
    CHECK(std::hypot(p[0], p[1]) <= a.rad + cfg.epsilon + 1e-12);
  }
}

TEST_CASE("stage1 degenerate and uniform-cube modes") {
  Stage1Config cfg;
  cfg.train.epochs = 1;
  cfg.lambda_grid = {0.0};
  const auto tiny = stage1_fit(sample_gaussian(5, 2, 0.1, 2), 1, cfg, 3);
  CHECK(tiny.train_set.size() == 6);
  tiny.best().model.validate();

  cfg.reference = ReferenceMode::UniformCube;
  const auto cube = stage1_fit(sample_uniform_cube(20, 3, 4), 10, cfg, 5);
  CHECK(cube.rad == 0.0);
  for (std::size_t i = 20; i < 30; ++i) {
    for (double c : cube.train_set.point(i)) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
  }

  CHECK_THROWS_AS(stage1_fit(Sample(2, {}), 5, cfg, 1), ParameterError);
  CHECK_THROWS_AS(stage1_fit(sample_gaussian(5, 2, 0.1, 2), 0, cfg, 1), ParameterError);
  cfg.lambda_grid = {};
  CHECK_THROWS_AS(stage1_fit(sample_gaussian(5, 2, 0.1, 2), 5, cfg, 1), ParameterError);
}

TEST_CASE("trained scorer ranks the periphery lowest") {
  // Scores near the Gaussian center should exceed scores at the edge of the
  // cloud once the scorer is trained against dilated RadLaw outliers.
  const Sample normals = sample_gaussian(1000, 2, 0.1, 11);
  Stage1Config cfg;
  cfg.lambda_grid = {0.0, 1.0};
  const auto fit = stage1_fit(normals, 500, cfg, 12);
  const auto& model = fit.best().model;
  const std::vector<double> center{0.0, 0.0};
  for (double angle = 0.0; angle < 6.28; angle += 0.5) {
    const std::vector<double> edge{0.9 * fit.rad * std::cos(angle), 0.9 * fit.rad * std::sin(angle)};
    CHECK(forward(model, center) > forward(model, edge));
  }
}
