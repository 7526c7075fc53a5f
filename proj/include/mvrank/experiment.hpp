#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvrank/procedure.hpp"
#include "mvrank/sample.hpp"
#include "mvrank/score_gen.hpp"

namespace mvrank {

/// Declarative description of the synthetic experiment. Defaults reproduce
/// the standard setup: 1000 Gaussian normals (variance 0.1) against 500
/// RadLaw(3,1) outliers, a 400/100 test set with RadLaw(2,1) outliers, and
/// 50 repetitions.
struct ExperimentConfig {
  std::size_t n = 1000;
  std::size_t m = 500;
  std::size_t d = 2;
  double variance_scale = 0.1;
  double alpha = 3.0;
  double beta = 1.0;
  double epsilon = 0.01;
  std::size_t n_t = 400;
  std::size_t m_t = 100;
  double alpha_t = 2.0;
  double beta_t = 1.0;
  std::vector<double> lambda_grid = {0.0, 0.01, 0.1, 1.0, 10.0};
  ScoreGen phi = ScoreGen::mww();
  std::size_t epochs = 30;
  std::vector<std::size_t> n_lowest_grid = {25, 50, 75, 100};
  std::size_t repetitions = 50;
  std::uint64_t seed = 1;
  // Per-sample SGD step.
  double learning_rate = 0.05;
  // End-of-epoch regularized step. The proxy is a sum over the n normal
  // points, so its gradient is ~n times the mean-BCE gradient; larger steps
  // saturate the sigmoid for lambda >= 1.
  double batch_learning_rate = 1e-4;

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// JSON with exactly the field names above; unknown fields are rejected.
ExperimentConfig config_from_json(std::string_view text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

// Reference-sample size for Monte-Carlo MV curves in the reproduction.
inline constexpr std::size_t kMvReferenceSize = 10000;
// Side of the score heatmap grid.
inline constexpr std::size_t kHeatmapSide = 200;
// Number of alphas in the aggregated MV-curve output.
inline constexpr std::size_t kMvGridSize = 200;

struct GeneratedData {
  Sample train;  // normals (label 1) then synthetic outliers (label 0)
  Sample test;   // n_t normals (label 1) then m_t outliers (label 0)
  double rad = 0.0;
};

// Seed of repetition `rep`; every sample and training run inside that
// repetition derives its own stream from it.
std::uint64_t repetition_seed(std::uint64_t seed, std::size_t rep);

// Training and test data of one repetition. Test outliers are dilated with
// the rad of the training normals.
GeneratedData generate_data(const ExperimentConfig& cfg, std::uint64_t rep_seed);

Stage1Config stage1_config(const ExperimentConfig& cfg, std::uint64_t train_seed);

struct RepetitionResult {
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t selected = 0;                     // index into lambda_grid
  std::vector<double> w_phi;                    // per lambda
  std::vector<std::vector<double>> accuracy;    // [lambda][n_lowest]
  std::vector<double> mv_selected;              // on mv_eval_grid(kMvGridSize)
  double mv_auc_selected = 0.0;
  double mv_auc_untrained = 0.0;
  std::vector<EpochTrace> traces_selected;
};

RepetitionResult run_repetition(const ExperimentConfig& cfg, std::size_t rep);

struct ReproduceResult {
  ExperimentConfig config;
  std::vector<RepetitionResult> repetitions;  // by repetition index
};

// Runs all repetitions on up to `jobs` threads. Results do not depend on
// `jobs`.
ReproduceResult reproduce(const ExperimentConfig& cfg, std::size_t jobs);

struct MeanStd {
  double mean = 0.0;
  std::optional<double> std;  // absent for fewer than two values
  std::size_t count = 0;
};
MeanStd mean_std(const std::vector<double>& values);

// Accuracy of the selected model per n_lowest, over repetitions.
std::vector<MeanStd> summarize_selected_accuracy(const ReproduceResult& result);
// Same for a fixed lambda index (paired comparisons across lambdas).
std::vector<MeanStd> summarize_lambda_accuracy(const ReproduceResult& result,
                                               std::size_t lambda_index);

// Subcommands. Each writes into out_dir (created if missing).
void cmd_generate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& train_path,
               const std::optional<std::filesystem::path>& test_path,
               const std::filesystem::path& out_dir);
void cmd_evaluate(const std::filesystem::path& model_path,
                  const std::filesystem::path& test_path,
                  const std::vector<std::size_t>& n_lowest_grid,
                  const std::filesystem::path& out_dir);
ReproduceResult cmd_reproduce(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                              std::size_t jobs);

// `epoch,lambda,bce,w_proxy,acc75`
void write_traces_csv(std::ostream& out, double lambda, const std::vector<EpochTrace>& traces,
                      bool header);

}  // namespace mvrank
