#include "mvrank/sample.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "mvrank/csv.hpp"
#include "mvrank/errors.hpp"
#include "mvrank/random.hpp"

namespace mvrank {

namespace csv {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("invalid number '" + std::string(field) + "'", line_no);
  }
  return value;
}

long long parse_int(std::string_view field, std::size_t line_no) {
  long long value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("invalid integer '" + std::string(field) + "'", line_no);
  }
  return value;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace csv

Sample::Sample(std::size_t dim, std::vector<double> coords,
               std::optional<std::vector<int>> labels)
    : dim_(dim), coords_(std::move(coords)), labels_(std::move(labels)) {
  if (dim_ == 0) throw ParameterError("sample dimension must be positive");
  if (coords_.size() % dim_ != 0) {
    throw ParameterError("coordinate count is not a multiple of the dimension");
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw ParameterError("sample contains a non-finite coordinate");
  }
  if (labels_) {
    if (labels_->size() != size()) {
      throw ParameterError("label count does not match point count");
    }
    for (int y : *labels_) {
      if (y != kNormalLabel && y != kOutlierLabel) {
        throw ParameterError("labels must be 0 or 1");
      }
    }
  }
}

const std::vector<int>& Sample::labels() const {
  if (!labels_) throw ParameterError("sample has no labels");
  return *labels_;
}

std::size_t Sample::count_label(int value) const {
  std::size_t count = 0;
  for (int y : labels()) count += (y == value);
  return count;
}

Sample Sample::with_labels(std::vector<int> labels) const {
  return Sample(dim_, coords_, std::move(labels));
}

namespace {

void require_counts(std::size_t count, std::size_t d) {
  if (count == 0) throw ParameterError("sample size must be at least 1");
  if (d == 0) throw ParameterError("dimension must be at least 1");
}

}  // namespace

Sample sample_gaussian(std::size_t n, std::size_t d, double variance_scale,
                       std::uint64_t seed) {
  require_counts(n, d);
  if (!(variance_scale > 0.0) || !std::isfinite(variance_scale)) {
    throw ParameterError("variance_scale must be positive");
  }
  Rng rng(seed);
  const double sd = std::sqrt(variance_scale);
  std::vector<double> coords(n * d);
  for (double& c : coords) c = sd * rng.normal();
  return Sample(d, std::move(coords));
}

Sample sample_uniform_cube(std::size_t m, std::size_t d, std::uint64_t seed) {
  require_counts(m, d);
  Rng rng(seed);
  std::vector<double> coords(m * d);
  for (double& c : coords) c = rng.uniform();
  return Sample(d, std::move(coords));
}

Sample sample_radlaw(std::size_t m, std::size_t d, RadLawParams params,
                     std::uint64_t seed) {
  require_counts(m, d);
  if (!(params.alpha > 0.0) || !(params.beta > 0.0)) {
    throw ParameterError("RadLaw parameters must be positive");
  }
  Rng rng(seed);
  std::vector<double> coords(m * d);
  std::vector<double> direction(d);
  for (std::size_t i = 0; i < m; ++i) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& v : direction) {
        v = rng.normal();
        norm2 += v * v;
      }
    } while (norm2 == 0.0);
    const double radius = rng.beta(params.alpha, params.beta);
    const double scale = radius / std::sqrt(norm2);
    for (std::size_t k = 0; k < d; ++k) coords[i * d + k] = direction[k] * scale;
  }
  return Sample(d, std::move(coords));
}

double compute_rad(const Sample& sample) {
  if (sample.empty()) throw ParameterError("compute_rad of an empty sample");
  double best = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double norm2 = 0.0;
    for (double c : sample.point(i)) norm2 += c * c;
    best = std::max(best, norm2);
  }
  return std::sqrt(best);
}

Sample dilate(const Sample& sample, double factor) {
  if (!(factor > 0.0)) throw ParameterError("dilation factor must be positive");
  std::vector<double> coords(sample.coords().begin(), sample.coords().end());
  for (double& c : coords) c *= factor;
  return sample.has_labels() ? Sample(sample.dim(), std::move(coords), sample.labels())
                             : Sample(sample.dim(), std::move(coords));
}

Sample make_train_set(const Sample& normals, const Sample& outliers) {
  if (normals.dim() != outliers.dim()) {
    throw ParameterError("make_train_set: dimension mismatch");
  }
  std::vector<double> coords;
  coords.reserve(normals.coords().size() + outliers.coords().size());
  coords.insert(coords.end(), normals.coords().begin(), normals.coords().end());
  coords.insert(coords.end(), outliers.coords().begin(), outliers.coords().end());
  std::vector<int> labels(normals.size(), kNormalLabel);
  labels.resize(normals.size() + outliers.size(), kOutlierLabel);
  return Sample(normals.dim(), std::move(coords), std::move(labels));
}

void write_sample_csv(std::ostream& out, const Sample& sample) {
  for (std::size_t k = 0; k < sample.dim(); ++k) {
    if (k) out << ',';
    out << 'x' << k;
  }
  if (sample.has_labels()) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto p = sample.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) out << ',';
      out << csv::format_double(p[k]);
    }
    if (sample.has_labels()) out << ',' << sample.label(i);
    out << '\n';
  }
}

void write_sample_csv(const std::filesystem::path& path, const Sample& sample) {
  auto out = csv::open_for_write(path);
  write_sample_csv(out, sample);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Sample read_sample_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing CSV header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = csv::split(line);
  bool labeled = false;
  std::size_t dim = 0;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "label" && k + 1 == header.size()) {
      labeled = true;
    } else if (header[k] == "x" + std::to_string(k)) {
      ++dim;
    } else {
      throw ParseError("unexpected header column '" + std::string(header[k]) + "'", 1);
    }
  }
  if (dim == 0) throw ParseError("header declares no coordinate columns", 1);

  std::vector<double> coords;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = csv::parse_double(fields[k], line_no);
      if (!std::isfinite(v)) throw ParseError("non-finite coordinate", line_no);
      coords.push_back(v);
    }
    if (labeled) {
      const long long y = csv::parse_int(fields[dim], line_no);
      if (y != kNormalLabel && y != kOutlierLabel) {
        throw ParseError("label must be 0 or 1", line_no);
      }
      labels.push_back(static_cast<int>(y));
    }
  }
  if (coords.empty()) throw ParseError("CSV contains no data rows", line_no);
  if (labeled) return Sample(dim, std::move(coords), std::move(labels));
  return Sample(dim, std::move(coords));
}

Sample read_sample_csv(const std::filesystem::path& path) {
  auto in = csv::open_for_read(path);
  try {
    return read_sample_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace mvrank
