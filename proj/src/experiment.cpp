#include "mvrank/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mvrank/csv.hpp"
#include "mvrank/errors.hpp"
#include "mvrank/mv_curve.hpp"
#include "mvrank/random.hpp"
#include "mvrank/rank_stats.hpp"

namespace mvrank {

namespace {

using ordered_json = nlohmann::ordered_json;

// Seed streams inside one repetition.
enum SeedStream : std::uint64_t {
  kTrainNormals = 1,
  kTrainOutliers = 2,
  kTestNormals = 3,
  kTestOutliers = 4,
  kTraining = 5,
  kMvReference = 6,
  kUntrainedModel = 7,
};

constexpr std::size_t kTraceNLowest = 75;

void require(bool condition, const char* message) {
  if (!condition) throw ParameterError(message);
}

template <typename T>
T get_field(const nlohmann::json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParameterError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::string format_optional(const std::optional<double>& value) {
  return value ? csv::format_double(*value) : std::string("NA");
}

std::string lambda_label(double lambda) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, lambda);
  return std::string(buf, r.ptr);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  auto out = csv::open_for_write(path);
  writer(out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Sample rows_with_label(const Sample& sample, int label) {
  std::vector<double> coords;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.label(i) != label) continue;
    const auto p = sample.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  if (coords.empty()) {
    throw ParameterError(label == kNormalLabel ? "no normal (label 1) rows"
                                               : "no outlier (label 0) rows");
  }
  return Sample(sample.dim(), std::move(coords));
}

double acc_at_or_nan(const MlpScorer& model, const Sample& test, std::size_t n_lowest) {
  if (n_lowest > test.size()) return std::nan("");
  return accuracy_at(stage2_rank(model, test, n_lowest), test, n_lowest);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(n >= 1 && m >= 1 && d >= 1, "n, m and d must be at least 1");
  require(n_t >= 1 && m_t >= 1, "n_t and m_t must be at least 1");
  require(epochs >= 1, "epochs must be at least 1");
  require(repetitions >= 1, "repetitions must be at least 1");
  require(variance_scale > 0.0 && std::isfinite(variance_scale), "variance_scale must be > 0");
  require(alpha > 0.0 && beta > 0.0 && alpha_t > 0.0 && beta_t > 0.0,
          "RadLaw parameters must be > 0");
  require(epsilon >= 0.0 && std::isfinite(epsilon), "epsilon must be >= 0");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
  require(batch_learning_rate > 0.0 && std::isfinite(batch_learning_rate),
          "batch_learning_rate must be > 0");
  require(!lambda_grid.empty(), "lambda_grid must not be empty");
  for (double l : lambda_grid) require(l >= 0.0 && std::isfinite(l), "lambda values must be >= 0");
  require(!n_lowest_grid.empty(), "n_lowest_grid must not be empty");
  for (std::size_t k : n_lowest_grid) {
    require(k >= 1 && k <= n_t + m_t, "n_lowest values must lie in [1, n_t + m_t]");
  }
}

ExperimentConfig config_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParameterError("config must be a JSON object");

  ExperimentConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    const char* k = key.c_str();
    if (key == "n") cfg.n = get_field<std::size_t>(doc, k);
    else if (key == "m") cfg.m = get_field<std::size_t>(doc, k);
    else if (key == "d") cfg.d = get_field<std::size_t>(doc, k);
    else if (key == "variance_scale") cfg.variance_scale = get_field<double>(doc, k);
    else if (key == "alpha") cfg.alpha = get_field<double>(doc, k);
    else if (key == "beta") cfg.beta = get_field<double>(doc, k);
    else if (key == "epsilon") cfg.epsilon = get_field<double>(doc, k);
    else if (key == "n_t") cfg.n_t = get_field<std::size_t>(doc, k);
    else if (key == "m_t") cfg.m_t = get_field<std::size_t>(doc, k);
    else if (key == "alpha_t") cfg.alpha_t = get_field<double>(doc, k);
    else if (key == "beta_t") cfg.beta_t = get_field<double>(doc, k);
    else if (key == "lambda_grid") cfg.lambda_grid = get_field<std::vector<double>>(doc, k);
    else if (key == "phi") cfg.phi = parse_score_gen(get_field<std::string>(doc, k));
    else if (key == "epochs") cfg.epochs = get_field<std::size_t>(doc, k);
    else if (key == "n_lowest_grid") cfg.n_lowest_grid = get_field<std::vector<std::size_t>>(doc, k);
    else if (key == "repetitions") cfg.repetitions = get_field<std::size_t>(doc, k);
    else if (key == "seed") cfg.seed = get_field<std::uint64_t>(doc, k);
    else if (key == "learning_rate") cfg.learning_rate = get_field<double>(doc, k);
    else if (key == "batch_learning_rate") cfg.batch_learning_rate = get_field<double>(doc, k);
    else throw ParameterError("unknown config field '" + key + "'");
    (void)value;
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ordered_json doc;
  doc["n"] = cfg.n;
  doc["m"] = cfg.m;
  doc["d"] = cfg.d;
  doc["variance_scale"] = cfg.variance_scale;
  doc["alpha"] = cfg.alpha;
  doc["beta"] = cfg.beta;
  doc["epsilon"] = cfg.epsilon;
  doc["n_t"] = cfg.n_t;
  doc["m_t"] = cfg.m_t;
  doc["alpha_t"] = cfg.alpha_t;
  doc["beta_t"] = cfg.beta_t;
  doc["lambda_grid"] = cfg.lambda_grid;
  doc["phi"] = to_string(cfg.phi);
  doc["epochs"] = cfg.epochs;
  doc["n_lowest_grid"] = cfg.n_lowest_grid;
  doc["repetitions"] = cfg.repetitions;
  doc["seed"] = cfg.seed;
  doc["learning_rate"] = cfg.learning_rate;
  doc["batch_learning_rate"] = cfg.batch_learning_rate;
  return doc.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  auto in = csv::open_for_read(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

std::uint64_t repetition_seed(std::uint64_t seed, std::size_t rep) {
  return split_seed(seed, rep);
}

GeneratedData generate_data(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
  cfg.validate();
  const Sample normals =
      sample_gaussian(cfg.n, cfg.d, cfg.variance_scale, split_seed(rep_seed, kTrainNormals));
  const double rad = compute_rad(normals);
  const double factor = rad + cfg.epsilon;
  const Sample outliers = dilate(
      sample_radlaw(cfg.m, cfg.d, {cfg.alpha, cfg.beta}, split_seed(rep_seed, kTrainOutliers)),
      factor);
  const Sample test_normals =
      sample_gaussian(cfg.n_t, cfg.d, cfg.variance_scale, split_seed(rep_seed, kTestNormals));
  const Sample test_outliers = dilate(sample_radlaw(cfg.m_t, cfg.d, {cfg.alpha_t, cfg.beta_t},
                                                    split_seed(rep_seed, kTestOutliers)),
                                      factor);
  return {make_train_set(normals, outliers), make_train_set(test_normals, test_outliers), rad};
}

Stage1Config stage1_config(const ExperimentConfig& cfg, std::uint64_t train_seed) {
  Stage1Config s1;
  s1.train.epochs = cfg.epochs;
  s1.train.phi = cfg.phi;
  s1.train.learning_rate = cfg.learning_rate;
  s1.train.batch_learning_rate = cfg.batch_learning_rate;
  s1.train.seed = train_seed;
  s1.lambda_grid = cfg.lambda_grid;
  s1.reference = ReferenceMode::DilatedRadLaw;
  s1.radlaw = {cfg.alpha, cfg.beta};
  s1.epsilon = cfg.epsilon;
  return s1;
}

RepetitionResult run_repetition(const ExperimentConfig& cfg, std::size_t rep) {
  RepetitionResult out;
  out.rep = rep;
  out.seed = repetition_seed(cfg.seed, rep);
  try {
    const GeneratedData data = generate_data(cfg, out.seed);
    const Sample normals = rows_with_label(data.train, kNormalLabel);
    const Sample reference = rows_with_label(data.train, kOutlierLabel);

    const Stage1Config s1 = stage1_config(cfg, split_seed(out.seed, kTraining));
    EvalHook hook;
    if (data.test.size() >= kTraceNLowest) {
      hook = [&](const MlpScorer& model) { return acc_at_or_nan(model, data.test, kTraceNLowest); };
    }
    Stage1Result fit = stage1_fit_with_reference(normals, reference, s1, hook);
    out.selected = fit.selected;
    for (const auto& candidate : fit.candidates) {
      out.w_phi.push_back(candidate.w_phi);
      std::vector<double> row;
      for (std::size_t k : cfg.n_lowest_grid) row.push_back(acc_at_or_nan(candidate.model, data.test, k));
      out.accuracy.push_back(std::move(row));
    }
    out.traces_selected = fit.best().traces;

    // MV curves against uniform points in the cube that holds every generated point.
    const Box box = centered_cube(cfg.d, data.rad + cfg.epsilon);
    const Sample uniforms =
        sample_uniform_box(box, kMvReferenceSize, split_seed(out.seed, kMvReference));
    auto curve_for = [&](const MlpScorer& model) {
      return mv_curve_mc(ScoredPair{score_all(model, normals), score_all(model, uniforms)},
                         box.volume());
    };
    const MVCurve selected_curve = curve_for(fit.best().model);
    for (double a : mv_eval_grid(kMvGridSize)) out.mv_selected.push_back(selected_curve(a));
    out.mv_auc_selected = auc_mv(selected_curve);
    out.mv_auc_untrained =
        auc_mv(curve_for(mlp_new(cfg.d, split_seed(out.seed, kUntrainedModel))));
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

ReproduceResult reproduce(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.validate();
  ReproduceResult result{cfg, std::vector<RepetitionResult>(cfg.repetitions)};
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, cfg.repetitions);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t rep = next++; rep < cfg.repetitions; rep = next++) {
      result.repetitions[rep] = run_repetition(cfg, rep);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return result;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

std::vector<MeanStd> summarize(const ReproduceResult& result,
                               const std::function<std::size_t(const RepetitionResult&)>& pick) {
  std::vector<MeanStd> out;
  for (std::size_t k = 0; k < result.config.n_lowest_grid.size(); ++k) {
    std::vector<double> values;
    for (const auto& rep : result.repetitions) {
      if (!rep.ok) continue;
      const double v = rep.accuracy[pick(rep)][k];
      if (!std::isnan(v)) values.push_back(v);
    }
    out.push_back(mean_std(values));
  }
  return out;
}

}  // namespace

std::vector<MeanStd> summarize_selected_accuracy(const ReproduceResult& result) {
  return summarize(result, [](const RepetitionResult& r) { return r.selected; });
}

std::vector<MeanStd> summarize_lambda_accuracy(const ReproduceResult& result,
                                               std::size_t lambda_index) {
  if (lambda_index >= result.config.lambda_grid.size()) throw ParameterError("lambda index out of range");
  return summarize(result, [lambda_index](const RepetitionResult&) { return lambda_index; });
}

void write_traces_csv(std::ostream& out, double lambda, const std::vector<EpochTrace>& traces,
                      bool header) {
  if (header) out << "epoch,lambda,bce,w_proxy,acc75\n";
  for (const auto& t : traces) {
    out << t.epoch << ',' << csv::format_double(lambda) << ',' << csv::format_double(t.bce) << ','
        << csv::format_double(t.w_proxy) << ',' << format_optional(t.acc_75) << '\n';
  }
}

void cmd_generate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const GeneratedData data = generate_data(cfg, repetition_seed(cfg.seed, 0));
  write_sample_csv(out_dir / "train.csv", data.train);
  write_sample_csv(out_dir / "test.csv", data.test);
  write_file(out_dir / "config.json", [&](std::ostream& out) { out << config_to_json(cfg); });
}

void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& train_path,
               const std::optional<std::filesystem::path>& test_path,
               const std::filesystem::path& out_dir) {
  cfg.validate();
  const Sample train_set = read_sample_csv(train_path);
  if (!train_set.has_labels()) throw ParameterError("training CSV must have a label column");
  const Sample normals = rows_with_label(train_set, kNormalLabel);
  const Sample reference = rows_with_label(train_set, kOutlierLabel);
  std::optional<Sample> test;
  if (test_path) {
    test = read_sample_csv(*test_path);
    if (!test->has_labels()) throw ParameterError("test CSV must have a label column");
  }
  EvalHook hook;
  if (test && test->size() >= kTraceNLowest) {
    hook = [&](const MlpScorer& model) { return acc_at_or_nan(model, *test, kTraceNLowest); };
  }
  const Stage1Result fit = stage1_fit_with_reference(
      normals, reference, stage1_config(cfg, split_seed(repetition_seed(cfg.seed, 0), kTraining)),
      hook);

  ensure_dir(out_dir);
  write_file(out_dir / "traces.csv", [&](std::ostream& out) {
    bool header = true;
    for (const auto& c : fit.candidates) {
      write_traces_csv(out, c.lambda, c.traces, header);
      header = false;
    }
  });
  ordered_json selected;
  selected["rng"] = std::string(kRngAlgorithm);
  selected["phi"] = to_string(cfg.phi);
  ordered_json models = ordered_json::array();
  for (const auto& c : fit.candidates) {
    const std::string file = "model_lambda_" + lambda_label(c.lambda) + ".json";
    write_file(out_dir / file, [&](std::ostream& out) { write_model_json(out, c.model); });
    models.push_back({{"lambda", c.lambda}, {"w_phi", c.w_phi}, {"file", file}});
  }
  selected["models"] = models;
  selected["selected_index"] = fit.selected;
  selected["selected_lambda"] = fit.best().lambda;
  selected["selected_file"] = models[fit.selected]["file"];
  write_file(out_dir / "selected.json", [&](std::ostream& out) { out << selected.dump(2) << '\n'; });
}

void cmd_evaluate(const std::filesystem::path& model_path,
                  const std::filesystem::path& test_path,
                  const std::vector<std::size_t>& n_lowest_grid,
                  const std::filesystem::path& out_dir) {
  if (n_lowest_grid.empty()) throw ParameterError("n_lowest grid must not be empty");
  auto model_in = csv::open_for_read(model_path);
  const MlpScorer model = read_model_json(model_in);
  const Sample test = read_sample_csv(test_path);
  if (!test.has_labels()) {
    throw ParameterError("test file '" + test_path.string() + "' has no label column");
  }
  const std::size_t widest = *std::max_element(n_lowest_grid.begin(), n_lowest_grid.end());
  if (widest > test.size() || *std::min_element(n_lowest_grid.begin(), n_lowest_grid.end()) == 0) {
    throw ParameterError("n_lowest values must lie in [1, test size]");
  }
  const auto scores = score_all(model, test);
  ensure_dir(out_dir);
  write_file(out_dir / "accuracy.csv", [&](std::ostream& out) {
    out << "n_lowest,acc\n";
    for (std::size_t k : n_lowest_grid) {
      out << k << ',' << csv::format_double(accuracy_at(rank_scores(scores, k), test, k)) << '\n';
    }
  });
  write_file(out_dir / "ranked.csv",
             [&](std::ostream& out) { write_ranked_csv(out, rank_scores(scores, widest), test); });
}

ReproduceResult cmd_reproduce(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                              std::size_t jobs) {
  ensure_dir(out_dir);
  ReproduceResult result = reproduce(cfg, jobs);
  const auto& reps = result.repetitions;
  const std::size_t ok_count =
      static_cast<std::size_t>(std::count_if(reps.begin(), reps.end(), [](const auto& r) { return r.ok; }));

  write_file(out_dir / "config.json", [&](std::ostream& out) { out << config_to_json(cfg); });

  // Accuracy of the selected network per n_lowest.
  write_file(out_dir / "summary.csv", [&](std::ostream& out) {
    out << "n_lowest,mean,std,count,complete\n";
    const auto rows = summarize_selected_accuracy(result);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out << cfg.n_lowest_grid[k] << ',' << csv::format_double(rows[k].mean) << ','
          << format_optional(rows[k].std) << ',' << rows[k].count << ','
          << (rows[k].count == cfg.repetitions ? 1 : 0) << '\n';
    }
  });

  write_file(out_dir / "summary_by_lambda.csv", [&](std::ostream& out) {
    out << "lambda,n_lowest,mean,std,count,times_selected\n";
    for (std::size_t l = 0; l < cfg.lambda_grid.size(); ++l) {
      const auto rows = summarize_lambda_accuracy(result, l);
      const auto picked = std::count_if(reps.begin(), reps.end(),
                                        [l](const auto& r) { return r.ok && r.selected == l; });
      for (std::size_t k = 0; k < rows.size(); ++k) {
        out << csv::format_double(cfg.lambda_grid[l]) << ',' << cfg.n_lowest_grid[k] << ','
            << csv::format_double(rows[k].mean) << ',' << format_optional(rows[k].std) << ','
            << rows[k].count << ',' << picked << '\n';
      }
    }
  });

  write_file(out_dir / "repetitions.csv", [&](std::ostream& out) {
    out << "rep,seed,status,selected_lambda";
    for (std::size_t k : cfg.n_lowest_grid) out << ",acc_" << k;
    out << ",mv_auc_selected,mv_auc_untrained,error\n";
    for (const auto& r : reps) {
      out << r.rep << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',';
      if (r.ok) {
        out << csv::format_double(cfg.lambda_grid[r.selected]);
        for (double a : r.accuracy[r.selected]) out << ',' << csv::format_double(a);
        out << ',' << csv::format_double(r.mv_auc_selected) << ','
            << csv::format_double(r.mv_auc_untrained) << ',';
      } else {
        out << "NA";
        for (std::size_t k = 0; k < cfg.n_lowest_grid.size(); ++k) out << ",NA";
        out << ",NA,NA,";
      }
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out << err << '\n';
    }
  });

  // Mean and std of the selected model's MV curve per alpha.
  write_file(out_dir / "mv_curve.csv", [&](std::ostream& out) {
    out << "alpha,mean,std,count\n";
    const auto grid = mv_eval_grid(kMvGridSize);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::vector<double> values;
      for (const auto& r : reps) {
        if (r.ok) values.push_back(r.mv_selected[k]);
      }
      const auto s = mean_std(values);
      out << csv::format_double(grid[k]) << ',' << csv::format_double(s.mean) << ','
          << format_optional(s.std) << ',' << s.count << '\n';
    }
  });

  write_file(out_dir / "mv_auc.csv", [&](std::ostream& out) {
    out << "model,mean,std,count\n";
    std::vector<double> selected;
    std::vector<double> untrained;
    for (const auto& r : reps) {
      if (!r.ok) continue;
      selected.push_back(r.mv_auc_selected);
      untrained.push_back(r.mv_auc_untrained);
    }
    for (const auto& [name, values] : {std::pair{"selected", selected}, {"untrained", untrained}}) {
      const auto s = mean_std(values);
      out << name << ',' << csv::format_double(s.mean) << ',' << format_optional(s.std) << ','
          << s.count << '\n';
    }
  });

  // Training traces and score heatmap from the first successful repetition.
  const auto first_ok = std::find_if(reps.begin(), reps.end(), [](const auto& r) { return r.ok; });
  if (first_ok != reps.end()) {
    const GeneratedData data = generate_data(cfg, first_ok->seed);
    const Sample normals = rows_with_label(data.train, kNormalLabel);
    const Sample reference = rows_with_label(data.train, kOutlierLabel);
    EvalHook hook;
    if (data.test.size() >= kTraceNLowest) {
      hook = [&](const MlpScorer& model) { return acc_at_or_nan(model, data.test, kTraceNLowest); };
    }
    const Stage1Result fit = stage1_fit_with_reference(
        normals, reference, stage1_config(cfg, split_seed(first_ok->seed, kTraining)), hook);
    write_file(out_dir / "traces.csv", [&](std::ostream& out) {
      bool header = true;
      for (const auto& c : fit.candidates) {
        write_traces_csv(out, c.lambda, c.traces, header);
        header = false;
      }
    });
    if (cfg.d == 2) {
      const Box box = bounding_box(data.train);
      write_file(out_dir / "heatmap.csv", [&](std::ostream& out) {
        out << "x,y,score\n";
        std::array<double, 2> point{};
        for (std::size_t i = 0; i < kHeatmapSide; ++i) {
          point[0] = box.lower[0] + (box.upper[0] - box.lower[0]) * static_cast<double>(i) /
                                        static_cast<double>(kHeatmapSide - 1);
          for (std::size_t j = 0; j < kHeatmapSide; ++j) {
            point[1] = box.lower[1] + (box.upper[1] - box.lower[1]) * static_cast<double>(j) /
                                          static_cast<double>(kHeatmapSide - 1);
            out << csv::format_double(point[0]) << ',' << csv::format_double(point[1]) << ','
                << csv::format_double(forward(fit.best().model, point)) << '\n';
          }
        }
      });
    }
  }

  write_file(out_dir / "run_info.json", [&](std::ostream& out) {
    ordered_json info;
    info["rng"] = std::string(kRngAlgorithm);
    info["repetitions"] = cfg.repetitions;
    info["completed"] = ok_count;
    info["mv_reference_size"] = kMvReferenceSize;
    out << info.dump(2) << '\n';
  });
  return result;
}

}  // namespace mvrank
