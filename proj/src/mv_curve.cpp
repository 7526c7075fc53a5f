#include "mvrank/mv_curve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "mvrank/csv.hpp"
#include "mvrank/errors.hpp"

namespace mvrank {

MVCurve MVCurve::empirical(std::vector<std::int64_t> exceed_counts, std::size_t m,
                           double volume_scale) {
  if (exceed_counts.empty() || m == 0) throw ParameterError("empty MV curve");
  if (!(volume_scale > 0.0)) throw ParameterError("volume_scale must be positive");
  MVCurve curve;
  curve.kind_ = Kind::EmpiricalMC;
  curve.m_ = m;
  curve.volume_scale_ = volume_scale;
  const double n = static_cast<double>(exceed_counts.size());
  curve.points_.reserve(exceed_counts.size());
  for (std::size_t k = 0; k < exceed_counts.size(); ++k) {
    const std::int64_t c = exceed_counts[k];
    if (c < 0 || c > static_cast<std::int64_t>(m)) throw ParameterError("count out of range");
    if (k > 0 && c < exceed_counts[k - 1]) throw ParameterError("MV counts must be nondecreasing");
    curve.points_.push_back(
        {static_cast<double>(k) / n, volume_scale * static_cast<double>(c) / static_cast<double>(m)});
  }
  curve.counts_ = std::move(exceed_counts);
  return curve;
}

MVCurve MVCurve::analytic(std::vector<MVPoint> points) {
  if (points.empty()) throw ParameterError("empty MV curve");
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0) || !(p.volume >= 0.0) || !std::isfinite(p.volume)) {
      throw ParameterError("invalid MV breakpoint");
    }
    if (k > 0 && (p.alpha <= points[k - 1].alpha || p.volume < points[k - 1].volume)) {
      throw ParameterError("MV breakpoints must have increasing alpha and nondecreasing volume");
    }
  }
  MVCurve curve;
  curve.kind_ = Kind::Analytic;
  curve.points_ = std::move(points);
  return curve;
}

double MVCurve::operator()(double alpha) const {
  // Index of the last breakpoint with breakpoint.alpha <= alpha.
  const auto it = std::upper_bound(points_.begin(), points_.end(), alpha,
                                   [](double a, const MVPoint& p) { return a < p.alpha; });
  if (it == points_.begin()) return points_.front().volume;
  const auto& left = *(it - 1);
  if (kind_ == Kind::EmpiricalMC || it == points_.end()) return left.volume;
  const double t = (alpha - left.alpha) / (it->alpha - left.alpha);
  return left.volume + t * (it->volume - left.volume);
}

double empirical_cdf_inverse(std::span<const double> scores, double u) {
  if (scores.empty()) throw ParameterError("empirical_cdf_inverse of an empty sample");
  if (!(u > 0.0 && u <= 1.0)) throw DomainError("empirical_cdf_inverse: u outside (0,1]");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(u * n));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

MVCurve mv_curve_mc(const ScoredPair& pair, double volume_scale) {
  pair.validate();
  std::vector<double> xs = pair.scores_x;
  std::vector<double> us = pair.scores_u;
  std::sort(xs.begin(), xs.end());
  std::sort(us.begin(), us.end());
  const std::size_t n = xs.size();
  const auto m = static_cast<std::int64_t>(us.size());
  // On [k/n, (k+1)/n) the threshold F^{-1}(1 - alpha) is the (n-k)-th order
  // statistic of the normal scores.
  std::vector<std::int64_t> counts(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double threshold = xs[n - 1 - k];
    const auto below = std::lower_bound(us.begin(), us.end(), threshold) - us.begin();
    counts[k] = m - below;
  }
  return MVCurve::empirical(std::move(counts), us.size(), volume_scale);
}

ExactArea auc_mv_exact(const MVCurve& curve) {
  if (curve.kind() != MVCurve::Kind::EmpiricalMC) {
    throw ParameterError("exact area is only defined for empirical curves");
  }
  std::int64_t total = 0;
  for (std::int64_t c : curve.exceed_counts()) total += c;
  return {total, static_cast<std::int64_t>(curve.n()) * static_cast<std::int64_t>(curve.m())};
}

double auc_mv(const MVCurve& curve) {
  if (curve.kind() == MVCurve::Kind::EmpiricalMC) {
    const auto area = auc_mv_exact(curve);
    return curve.volume_scale() * static_cast<double>(area.numerator) /
           static_cast<double>(area.denominator);
  }
  const auto& pts = curve.points();
  double total = pts.front().alpha * pts.front().volume;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    total += 0.5 * (pts[k].alpha - pts[k - 1].alpha) * (pts[k].volume + pts[k - 1].volume);
  }
  total += (1.0 - pts.back().alpha) * pts.back().volume;
  return total;
}

bool check_mv_ranksum_identity(const ScoredPair& pair) {
  if (has_ties(pair)) {
    throw DomainError("rank-sum/MV identity requires distinct pooled scores");
  }
  const auto curve = mv_curve_mc(pair);
  const auto area = auc_mv_exact(curve);
  const auto n = static_cast<std::int64_t>(pair.n());
  // nm(1 - num/(nm)) = nm - num.
  const std::int64_t lhs = area.denominator - area.numerator + n * (n + 1) / 2;
  return lhs == rank_sum(pair);
}

namespace {

struct Piece {
  double a;
  double b;
  double volume_a;
  double volume_b;
};

std::vector<Piece> curve_pieces(const MVCurve& curve) {
  std::vector<Piece> pieces;
  const auto& pts = curve.points();
  if (pts.front().alpha > 0.0) {
    pieces.push_back({0.0, pts.front().alpha, pts.front().volume, pts.front().volume});
  }
  const bool step = curve.kind() == MVCurve::Kind::EmpiricalMC;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    pieces.push_back({pts[k].alpha, pts[k + 1].alpha, pts[k].volume,
                      step ? pts[k].volume : pts[k + 1].volume});
  }
  if (pts.back().alpha < 1.0) {
    pieces.push_back({pts.back().alpha, 1.0, pts.back().volume, pts.back().volume});
  }
  return pieces;
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double w_phi_from_mv(const ScoreGen& phi, const MVCurve& curve, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0,1)");
  constexpr double kRelTol = 1e-8;
  double total = 0.0;
  for (const auto& piece : curve_pieces(curve)) {
    if (piece.b <= piece.a) continue;
    const double slope = (piece.volume_b - piece.volume_a) / (piece.b - piece.a);
    // Argument of phi, affine in alpha on this piece.
    auto argument = [&](double alpha) {
      const double volume = piece.volume_a + slope * (alpha - piece.a);
      return 1.0 - p * alpha - (1.0 - p) * volume;
    };
    auto integrand = [&](double alpha) {
      return eval_phi(phi, std::clamp(argument(alpha), 0.0, 1.0));
    };
    const double arg_a = argument(piece.a);
    const double arg_b = argument(piece.b);
    const bool inside = arg_a >= 0.0 && arg_a <= 1.0 && arg_b >= 0.0 && arg_b <= 1.0;
    if (phi.is_affine() && inside) {
      total += (piece.b - piece.a) * integrand(0.5 * (piece.a + piece.b));
      continue;
    }
    // Split where the argument crosses a jump of phi or a clamp boundary.
    std::vector<double> cuts = {piece.a, piece.b};
    std::vector<double> levels = {0.0, 1.0};
    if (phi.kind == ScoreGen::Kind::Median) levels.push_back(0.5);
    if (phi.kind == ScoreGen::Kind::Truncated) levels.push_back(phi.u0);
    if (arg_b != arg_a) {
      for (double level : levels) {
        const double t = (level - arg_a) / (arg_b - arg_a);
        if (t > 0.0 && t < 1.0) cuts.push_back(piece.a + t * (piece.b - piece.a));
      }
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double lo = cuts[k];
      const double hi = cuts[k + 1];
      if (hi <= lo) continue;
      // Evaluate just inside the sub-interval so a jump exactly at the cut
      // does not leak the neighbouring value into the endpoint samples.
      const double width = hi - lo;
      const double guard = width * 1e-12;
      auto inner = [&](double alpha) {
        return integrand(std::clamp(alpha, lo + guard, hi - guard));
      };
      const double rough = std::abs(width * inner(0.5 * (lo + hi)));
      const double tol = kRelTol * std::max(rough, 1e-3 * width);
      total += integrate(inner, lo, hi, tol);
    }
  }
  return total;
}

double mv_star_gaussian(double alpha, double variance_scale, std::size_t d) {
  if (d != 2) throw ParameterError("mv_star_gaussian: only d = 2 is supported");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("mv_star_gaussian: alpha outside (0,1)");
  if (!(variance_scale > 0.0)) throw ParameterError("variance_scale must be positive");
  return 2.0 * std::numbers::pi * variance_scale * -std::log1p(-alpha);
}

MVCurve mv_star_gaussian_curve(double variance_scale, std::size_t d, std::size_t grid_size) {
  if (d != 2) throw ParameterError("mv_star_gaussian: only d = 2 is supported");
  if (grid_size < 4) throw ParameterError("grid_size must be at least 4");
  // Half the points uniform on [0, 0.9], half geometric in 1 - alpha down to 1e-12.
  const std::size_t uniform_part = grid_size / 2;
  const std::size_t tail_part = grid_size - uniform_part;
  std::vector<MVPoint> points;
  points.reserve(grid_size + 1);
  points.push_back({0.0, 0.0});
  for (std::size_t k = 1; k <= uniform_part; ++k) {
    const double alpha = 0.9 * static_cast<double>(k) / static_cast<double>(uniform_part);
    points.push_back({alpha, mv_star_gaussian(alpha, variance_scale, d)});
  }
  const double log_lo = std::log(0.1);
  const double log_hi = std::log(1e-12);
  for (std::size_t k = 1; k <= tail_part; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(tail_part);
    const double alpha = 1.0 - std::exp(log_lo + t * (log_hi - log_lo));
    if (alpha <= points.back().alpha) continue;
    points.push_back({alpha, mv_star_gaussian(alpha, variance_scale, d)});
  }
  return MVCurve::analytic(std::move(points));
}

double d1_distance(const MVCurve& curve, const MVCurve& star) {
  const double diff = auc_mv(curve) - auc_mv(star);
  if (diff < 0.0) {
    warn("d1_distance: curve area below the optimal area (" + std::to_string(diff) +
         "), clamped to 0");
    return 0.0;
  }
  return diff;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lower.size(); ++k) v *= upper[k] - lower[k];
  return v;
}

Box bounding_box(const Sample& sample) {
  if (sample.empty()) throw ParameterError("bounding_box of an empty sample");
  Box box{std::vector<double>(sample.point(0).begin(), sample.point(0).end()),
          std::vector<double>(sample.point(0).begin(), sample.point(0).end())};
  for (std::size_t i = 1; i < sample.size(); ++i) {
    const auto p = sample.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      box.lower[k] = std::min(box.lower[k], p[k]);
      box.upper[k] = std::max(box.upper[k], p[k]);
    }
  }
  return box;
}

Box centered_cube(std::size_t d, double half_width) {
  if (d == 0 || !(half_width > 0.0)) throw ParameterError("invalid cube");
  return Box{std::vector<double>(d, -half_width), std::vector<double>(d, half_width)};
}

namespace {

void check_box(const Box& box) {
  if (box.dim() == 0 || box.upper.size() != box.dim()) throw ParameterError("malformed box");
  for (std::size_t k = 0; k < box.dim(); ++k) {
    if (!(box.upper[k] > box.lower[k])) throw ParameterError("box has an empty side");
  }
}

}  // namespace

Sample sample_uniform_box(const Box& box, std::size_t m, std::uint64_t seed) {
  check_box(box);
  const Sample cube = sample_uniform_cube(m, box.dim(), seed);
  std::vector<double> coords(cube.coords().begin(), cube.coords().end());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const std::size_t k = i % box.dim();
    coords[i] = box.lower[k] + coords[i] * (box.upper[k] - box.lower[k]);
  }
  return Sample(box.dim(), std::move(coords));
}

Sample rescale_to_unit_cube(const Sample& sample, const Box& box) {
  check_box(box);
  if (sample.dim() != box.dim()) throw ParameterError("rescale: dimension mismatch");
  std::vector<double> coords(sample.coords().begin(), sample.coords().end());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const std::size_t k = i % box.dim();
    coords[i] = (coords[i] - box.lower[k]) / (box.upper[k] - box.lower[k]);
  }
  return sample.has_labels() ? Sample(sample.dim(), std::move(coords), sample.labels())
                             : Sample(sample.dim(), std::move(coords));
}

void write_mv_curve_csv(std::ostream& out, const MVCurve& curve) {
  out << "alpha,volume\n";
  for (const auto& p : curve.points()) {
    out << csv::format_double(p.alpha) << ',' << csv::format_double(p.volume) << '\n';
  }
}

std::vector<double> mv_eval_grid(std::size_t size) {
  std::vector<double> grid(size);
  for (std::size_t k = 0; k < size; ++k) {
    grid[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(size);
  }
  return grid;
}

}  // namespace mvrank
