#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvrank/errors.hpp"
#include "mvrank/experiment.hpp"
#include "mvrank/random.hpp"

using namespace mvrank;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mvrank_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 80;
  cfg.m = 40;
  cfg.n_t = 40;
  cfg.m_t = 10;
  cfg.epochs = 3;
  cfg.lambda_grid = {0.0, 1.0};
  cfg.n_lowest_grid = {5, 10};
  cfg.repetitions = 3;
  return cfg;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::ranges::count(text, '\n')); }

}  // namespace

TEST_CASE("config JSON round trip") {
  ExperimentConfig cfg = small_config();
  cfg.phi = ScoreGen::truncated(0.7);
  cfg.learning_rate = 0.0123456789012345;
  const std::string text = config_to_json(cfg);
  CHECK(config_from_json(text) == cfg);
  CHECK(config_to_json(config_from_json(text)) == text);
  CHECK(config_from_json("{}") == ExperimentConfig{});
  CHECK(config_from_json(R"({"n": 12})").n == 12);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config_from_json(R"({"n": 10, "bogus": 1})"), ParameterError);
  CHECK_THROWS_AS(config_from_json(R"({"n": 0})"), ParameterError);
  CHECK_THROWS_AS(config_from_json(R"({"n": "ten"})"), ParameterError);
  CHECK_THROWS_AS(config_from_json(R"({"lambda_grid": []})"), ParameterError);
  CHECK_THROWS_AS(config_from_json(R"({"n_lowest_grid": [1000]})"), ParameterError);
  CHECK_THROWS_AS(config_from_json(R"({"phi": "nope"})"), ParameterError);
  CHECK_THROWS_AS(config_from_json("[1, 2]"), ParameterError);
  CHECK_THROWS_AS(config_from_json("{"), ParseError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("seeds") {
  CHECK(repetition_seed(1, 0) != repetition_seed(1, 1));
  CHECK(repetition_seed(1, 0) != repetition_seed(2, 0));
  CHECK(repetition_seed(1, 5) == repetition_seed(1, 5));
}

TEST_CASE("generate_data") {
  const ExperimentConfig cfg;
  const auto data = generate_data(cfg, repetition_seed(cfg.seed, 0));
  CHECK(data.train.size() == 1500);
  CHECK(data.train.count_label(1) == 1000);
  CHECK(data.test.size() == 500);
  CHECK(data.test.count_label(0) == 100);
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    const auto p = data.train.point(i);
    if (data.train.label(i) == 1) CHECK(std::hypot(p[0], p[1]) <= data.rad + 1e-12);
    else CHECK(std::hypot(p[0], p[1]) <= data.rad + cfg.epsilon + 1e-12);
  }
  for (std::size_t i = 400; i < 500; ++i) {
    const auto p = data.test.point(i);
    CHECK(std::hypot(p[0], p[1]) <= data.rad + cfg.epsilon + 1e-12);
  }
}

TEST_CASE("a label-independent scorer flags outliers at the base rate") {
  // m_t / (n_t + m_t) = 0.2. A freshly initialized network does not qualify:
  // its output depends on |x|, and the outliers sit on the outer shell.
  const ExperimentConfig cfg;
  std::vector<double> acc;
  for (std::size_t rep = 0; rep < 50; ++rep) {
    const auto seed = repetition_seed(cfg.seed, rep);
    const auto data = generate_data(cfg, seed);
    Rng rng(split_seed(seed, 99));
    std::vector<double> scores(data.test.size());
    for (double& s : scores) s = rng.uniform();
    for (std::size_t n_lowest : cfg.n_lowest_grid) {
      acc.push_back(accuracy_at(rank_scores(scores, n_lowest), data.test, n_lowest));
    }
  }
  CHECK(std::abs(mean_std(acc).mean - 0.2) <= 0.1);
}

TEST_CASE("mean_std") {
  const auto one = mean_std({0.5});
  CHECK(one.mean == 0.5);
  CHECK_FALSE(one.std.has_value());
  CHECK(one.count == 1);
  const auto two = mean_std({1.0, 3.0});
  CHECK(two.mean == 2.0);
  CHECK(*two.std == doctest::Approx(std::sqrt(2.0)));
  CHECK(mean_std({}).count == 0);
}

TEST_CASE("reproduce is deterministic and independent of jobs") {
  const ExperimentConfig cfg = small_config();
  const auto a = reproduce(cfg, 1);
  const auto b = reproduce(cfg, 3);
  REQUIRE(a.repetitions.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(a.repetitions[r].ok);
    CHECK(a.repetitions[r].accuracy == b.repetitions[r].accuracy);
    CHECK(a.repetitions[r].w_phi == b.repetitions[r].w_phi);
    CHECK(a.repetitions[r].mv_selected == b.repetitions[r].mv_selected);
    CHECK(a.repetitions[r].selected == b.repetitions[r].selected);
    const auto& w = a.repetitions[r].w_phi;
    CHECK(w[a.repetitions[r].selected] == *std::ranges::max_element(w));
  }
  const auto rows = summarize_selected_accuracy(a);
  CHECK(rows.size() == 2);
  CHECK(rows[0].count == 3);
}

TEST_CASE("cmd_reproduce output files") {
  ExperimentConfig cfg = small_config();
  cfg.repetitions = 1;
  const fs::path dir = fresh_dir("reproduce");
  cmd_reproduce(cfg, dir, 1);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.starts_with("n_lowest,mean,std,count,complete\n"));
  CHECK(summary.find(",NA,1,") != std::string::npos);
  CHECK(count_lines(summary) == 3);
  CHECK(count_lines(slurp(dir / "mv_curve.csv")) == kMvGridSize + 1);
  CHECK(count_lines(slurp(dir / "heatmap.csv")) == kHeatmapSide * kHeatmapSide + 1);
  CHECK(count_lines(slurp(dir / "traces.csv")) == 2 * cfg.epochs + 1);
  CHECK(fs::exists(dir / "mv_auc.csv"));
  CHECK(fs::exists(dir / "run_info.json"));
  CHECK(config_from_json(slurp(dir / "config.json")) == cfg);

  const fs::path again = fresh_dir("reproduce_again");
  cmd_reproduce(cfg, again, 2);
  for (const char* f : {"summary.csv", "summary_by_lambda.csv", "repetitions.csv", "mv_curve.csv",
                        "mv_auc.csv", "traces.csv", "heatmap.csv"}) {
    CHECK_MESSAGE(slurp(dir / f) == slurp(again / f), f);
  }
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("generate, train, evaluate") {
  ExperimentConfig cfg = small_config();
  const fs::path dir = fresh_dir("pipeline");
  cmd_generate(cfg, dir / "data");
  const Sample train_set = read_sample_csv(dir / "data" / "train.csv");
  const Sample test_set = read_sample_csv(dir / "data" / "test.csv");
  CHECK(train_set.size() == 120);
  CHECK(test_set.size() == 50);
  const std::string train_text = slurp(dir / "data" / "train.csv");

  cmd_generate(cfg, dir / "data2");
  CHECK(slurp(dir / "data2" / "train.csv") == train_text);
  CHECK(slurp(dir / "data2" / "test.csv") == slurp(dir / "data" / "test.csv"));

  cmd_train(cfg, dir / "data" / "train.csv", dir / "data" / "test.csv", dir / "model");
  CHECK(count_lines(slurp(dir / "model" / "traces.csv")) == 2 * cfg.epochs + 1);
  CHECK(fs::exists(dir / "model" / "selected.json"));
  const std::string selected = slurp(dir / "model" / "selected.json");
  CHECK(selected.find("selected_file") != std::string::npos);

  fs::path model_file;
  for (const auto& e : fs::directory_iterator(dir / "model")) {
    if (e.path().filename().string().starts_with("model_lambda_")) model_file = e.path();
  }
  REQUIRE_FALSE(model_file.empty());
  cmd_evaluate(model_file, dir / "data" / "test.csv", {5, 10, 25}, dir / "eval");
  const std::string acc = slurp(dir / "eval" / "accuracy.csv");
  CHECK(acc.starts_with("n_lowest,acc\n5,"));
  CHECK(count_lines(acc) == 4);
  CHECK(count_lines(slurp(dir / "eval" / "ranked.csv")) == 51);

  write_sample_csv(dir / "unlabeled.csv", Sample(2, {0.1, 0.2, 0.3, 0.4}));
  CHECK_THROWS_AS(cmd_evaluate(model_file, dir / "unlabeled.csv", {1}, dir / "eval"), ParameterError);
  CHECK_THROWS_AS(cmd_evaluate(model_file, dir / "missing.csv", {1}, dir / "eval"), IoError);
  CHECK_THROWS_AS(cmd_train(cfg, dir / "missing.csv", std::nullopt, dir / "model"), IoError);

  cfg.lambda_grid = {0.0};
  cmd_train(cfg, dir / "data" / "train.csv", std::nullopt, dir / "single");
  CHECK(count_lines(slurp(dir / "single" / "traces.csv")) == cfg.epochs + 1);
  fs::remove_all(dir);
}
