#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mvrank/rank_stats.hpp"
#include "mvrank/sample.hpp"
#include "mvrank/score_gen.hpp"

namespace mvrank {

struct MVPoint {
  double alpha;
  double volume;
};

/// Mass-Volume curve alpha -> volume on (0,1).
///
/// Empirical curves come from mv_curve_mc: a right-continuous step function
/// with one breakpoint per alpha = k/n. Each step value is
/// volume_scale * count_k / m and the integer counts are kept so the area can
/// be computed exactly.
///
/// Analytic curves are piecewise linear between breakpoints and constant
/// beyond the last one.
class MVCurve {
 public:
  enum class Kind { EmpiricalMC, Analytic };

  static MVCurve empirical(std::vector<std::int64_t> exceed_counts, std::size_t m,
                           double volume_scale);
  static MVCurve analytic(std::vector<MVPoint> points);

  Kind kind() const noexcept { return kind_; }
  const std::vector<MVPoint>& points() const noexcept { return points_; }

  // Empirical curves only.
  std::span<const std::int64_t> exceed_counts() const noexcept { return counts_; }
  std::size_t n() const noexcept { return counts_.size(); }
  std::size_t m() const noexcept { return m_; }
  double volume_scale() const noexcept { return volume_scale_; }

  double operator()(double alpha) const;

 private:
  MVCurve() = default;

  Kind kind_ = Kind::Analytic;
  std::vector<MVPoint> points_;
  std::vector<std::int64_t> counts_;
  std::size_t m_ = 0;
  double volume_scale_ = 1.0;
};

// ceil(u * n)-th order statistic of `scores` (generalized inverse of the
// empirical cdf).
double empirical_cdf_inverse(std::span<const double> scores, double u);

// Monte-Carlo MV curve: at mass alpha, the fraction of reference scores at or
// above the empirical (1 - alpha)-quantile of the normal scores, times
// volume_scale (the measure of the region the reference points cover).
MVCurve mv_curve_mc(const ScoredPair& pair, double volume_scale = 1.0);

// Exact area of an empirical curve, in units of volume_scale:
// numerator / denominator with denominator = n * m.
struct ExactArea {
  std::int64_t numerator;
  std::int64_t denominator;
};
ExactArea auc_mv_exact(const MVCurve& curve);

// Integral over (0,1).
double auc_mv(const MVCurve& curve);

// nm(1 - area) + n(n+1)/2 == rank_sum, in integer arithmetic. Throws
// DomainError when the pooled scores contain ties.
bool check_mv_ranksum_identity(const ScoredPair& pair);

// Integral over (0,1) of phi(1 - p*alpha - (1-p)*MV(alpha)). The argument is
// clamped into [0,1].
double w_phi_from_mv(const ScoreGen& phi, const MVCurve& curve, double p);

// Optimal MV curve for N(0, variance * I_2): 2 pi variance ln(1/(1-alpha)).
double mv_star_gaussian(double alpha, double variance_scale, std::size_t d = 2);

// Piecewise-linear sampling of mv_star_gaussian, refined geometrically near
// alpha = 1 where the curve diverges.
MVCurve mv_star_gaussian_curve(double variance_scale, std::size_t d = 2,
                               std::size_t grid_size = 4000);

// area(curve) - area(star), clamped at 0 with a warning when negative.
double d1_distance(const MVCurve& curve, const MVCurve& star);

// Axis-aligned box that holds the reference sample for volume estimation.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  double volume() const;
};

Box bounding_box(const Sample& sample);
Box centered_cube(std::size_t d, double half_width);

// Uniform points in `box`: an affine image of sample_uniform_cube.
Sample sample_uniform_box(const Box& box, std::size_t m, std::uint64_t seed);

// Maps `sample` affinely so that `box` becomes [0,1]^d.
Sample rescale_to_unit_cube(const Sample& sample, const Box& box);

// `alpha,volume` at the curve's breakpoints.
void write_mv_curve_csv(std::ostream& out, const MVCurve& curve);

// Evaluation alphas for plotting: (k + 1/2) / size, k = 0..size-1.
std::vector<double> mv_eval_grid(std::size_t size = 200);

}  // namespace mvrank
