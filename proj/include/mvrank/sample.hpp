#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace mvrank {

// Label convention: 1 marks a "normal" point, 0 a synthetic or true outlier.
inline constexpr int kNormalLabel = 1;
inline constexpr int kOutlierLabel = 0;

/// A set of points in R^d, stored row-major, with optional binary labels.
///
/// Construction validates every invariant: each point has exactly `dim`
/// coordinates, coordinates are finite, and labels (if present) are 0/1 and
/// match the number of points. Samples are immutable afterwards.
class Sample {
 public:
  Sample(std::size_t dim, std::vector<double> coords,
         std::optional<std::vector<int>> labels = std::nullopt);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const noexcept { return coords_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<int>& labels() const;
  int label(std::size_t i) const { return labels().at(i); }

  // Count of points carrying `value`; requires labels.
  std::size_t count_label(int value) const;

  Sample with_labels(std::vector<int> labels) const;

  friend bool operator==(const Sample&, const Sample&) = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::optional<std::vector<int>> labels_;
};

struct RadLawParams {
  double alpha = 3.0;
  double beta = 1.0;
};

// N(0, variance_scale * I_d).
Sample sample_gaussian(std::size_t n, std::size_t d, double variance_scale,
                       std::uint64_t seed);

// Uniform on [0,1]^d.
Sample sample_uniform_cube(std::size_t m, std::size_t d, std::uint64_t seed);

// v * r with v uniform on the unit sphere S^{d-1} and r ~ Beta(alpha, beta).
Sample sample_radlaw(std::size_t m, std::size_t d, RadLawParams params,
                     std::uint64_t seed);

// Largest Euclidean norm in the sample.
double compute_rad(const Sample& sample);

Sample dilate(const Sample& sample, double factor);

// Normals (label 1) followed by outliers (label 0).
Sample make_train_set(const Sample& normals, const Sample& outliers);

// CSV with header `x0,...,x{d-1}[,label]`, doubles at 17 significant digits.
void write_sample_csv(std::ostream& out, const Sample& sample);
void write_sample_csv(const std::filesystem::path& path, const Sample& sample);
Sample read_sample_csv(std::istream& in);
Sample read_sample_csv(const std::filesystem::path& path);

}  // namespace mvrank
