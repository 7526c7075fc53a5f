// Experiment runner: generate / train / evaluate / reproduce.
//
// Exit codes: 0 success, 1 validation or parse error, 2 I/O error.

#include <cstdint>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvrank/errors.hpp"
#include "mvrank/experiment.hpp"

namespace {

// Collapses repeated warnings (ties are common once a network saturates)
// into one line per distinct message.
class WarningLog {
 public:
  void add(std::string_view message) {
    std::lock_guard lock(mutex_);
    ++counts_[std::string(message)];
  }
  void flush(std::ostream& out) {
    std::lock_guard lock(mutex_);
    for (const auto& [message, count] : counts_) {
      out << "warning: " << message;
      if (count > 1) out << " (x" << count << ")";
      out << '\n';
    }
    counts_.clear();
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::size_t> counts_;
};

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Experiment config (JSON)");
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--jobs", opts.jobs, "Parallel repetitions")->check(CLI::PositiveNumber);
}

mvrank::ExperimentConfig resolve_config(const CommonOptions& opts) {
  mvrank::ExperimentConfig cfg;
  if (!opts.config.empty()) cfg = mvrank::load_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anomaly ranking by two-sample rank statistics"};
  app.require_subcommand(1);

  CommonOptions gen_opts;
  auto* gen = app.add_subcommand("generate", "Write train/test CSVs for one repetition");
  add_common(gen, gen_opts);

  CommonOptions train_opts;
  std::string train_path;
  std::string train_test_path;
  auto* train = app.add_subcommand("train", "Train one network per lambda and select the best");
  add_common(train, train_opts);
  train->add_option("--train", train_path, "Labeled training CSV")->required();
  train->add_option("--test", train_test_path, "Labeled test CSV for per-epoch accuracy");

  CommonOptions eval_opts;
  std::string model_path;
  std::string test_path;
  std::vector<std::size_t> n_lowest;
  auto* evaluate = app.add_subcommand("evaluate", "Rank a test set and report accuracy");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--model", model_path, "Model JSON")->required();
  evaluate->add_option("--test", test_path, "Labeled test CSV")->required();
  evaluate->add_option("--n-lowest", n_lowest, "n_lowest values (default: config grid)");

  CommonOptions repro_opts;
  auto* repro = app.add_subcommand("reproduce", "Run the full experiment B times");
  add_common(repro, repro_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  WarningLog warnings;
  mvrank::set_warning_handler([&](std::string_view msg) { warnings.add(msg); });

  int status = 0;
  try {
    if (*gen) {
      mvrank::cmd_generate(resolve_config(gen_opts), gen_opts.out);
    } else if (*train) {
      std::optional<std::filesystem::path> test;
      if (!train_test_path.empty()) test = train_test_path;
      mvrank::cmd_train(resolve_config(train_opts), train_path, test, train_opts.out);
    } else if (*evaluate) {
      const auto cfg = resolve_config(eval_opts);
      mvrank::cmd_evaluate(model_path, test_path, n_lowest.empty() ? cfg.n_lowest_grid : n_lowest,
                           eval_opts.out);
    } else if (*repro) {
      const auto result =
          mvrank::cmd_reproduce(resolve_config(repro_opts), repro_opts.out, repro_opts.jobs);
      const auto rows = mvrank::summarize_selected_accuracy(result);
      std::cout << "n_lowest  mean   std    count\n";
      for (std::size_t k = 0; k < rows.size(); ++k) {
        std::printf("%-9zu %.3f  %s  %zu\n", result.config.n_lowest_grid[k], rows[k].mean,
                    rows[k].std ? std::to_string(*rows[k].std).substr(0, 5).c_str() : "NA   ",
                    rows[k].count);
      }
    }
  } catch (const mvrank::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    status = 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    status = 1;
  }
  warnings.flush(std::cerr);
  return status;
}
