#include "mvrank/score_gen.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "mvrank/csv.hpp"
#include "mvrank/errors.hpp"

namespace mvrank {

namespace {

// Acklam's rational approximation, relative error ~1.15e-9 before refinement.
constexpr std::array<double, 6> kA = {-3.969683028665376e+01, 2.209460984245205e+02,
                                      -2.759285104469687e+02, 1.383577518672690e+02,
                                      -3.066479806614716e+01, 2.506628277459239e+00};
constexpr std::array<double, 5> kB = {-5.447609879822406e+01, 1.615858368580409e+02,
                                      -1.556989798598866e+02, 6.680131188771972e+01,
                                      -1.328068155288572e+01};
constexpr std::array<double, 6> kC = {-7.784894002430293e-03, -3.223964580411365e-01,
                                      -2.400758277161838e+00, -2.549732539343734e+00,
                                      4.374664141464968e+00,  2.938163982698783e+00};
constexpr std::array<double, 4> kD = {7.784695709041462e-03, 3.224671290700398e-01,
                                      2.445134137142996e+00, 3.754408661907416e+00};
constexpr double kLowRegion = 0.02425;

// Quantile for u in (0, 1/2].
double lower_half_quantile(double u) {
  double x = 0.0;
  if (u < kLowRegion) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
        ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
  } else {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
        (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
  }
  // One Halley step on Phi(x) - u.
  const double e = normal_cdf(x) - u;
  const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - step / (1.0 + 0.5 * x * step);
}

void check_unit_interval(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("phi argument outside [0,1]");
}

double clip(const ScoreGen& phi, double u) {
  return std::clamp(u, phi.clip_eps, 1.0 - phi.clip_eps);
}

}  // namespace

ScoreGen ScoreGen::truncated(double u0) {
  if (!(u0 > 0.0 && u0 < 1.0)) throw ParameterError("truncation point u0 must lie in (0,1)");
  return {Kind::Truncated, u0};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("normal_quantile argument outside (0,1)");
  if (u == 0.5) return 0.0;
  // 1 - u is exact for u >= 1/2, so reflecting keeps full tail precision and
  // makes the function exactly antisymmetric.
  if (u > 0.5) return -lower_half_quantile(1.0 - u);
  return lower_half_quantile(u);
}

double eval_phi(const ScoreGen& phi, double u) {
  check_unit_interval(u);
  switch (phi.kind) {
    case ScoreGen::Kind::Mww:
      return u;
    case ScoreGen::Kind::Logistic:
      return 2.0 * std::sqrt(3.0) * (u - 0.5);
    case ScoreGen::Kind::Logrank:
      return -std::log1p(-clip(phi, u));
    case ScoreGen::Kind::Median:
      return u > 0.5 ? 1.0 : (u < 0.5 ? -1.0 : 0.0);
    case ScoreGen::Kind::VanDerWaerden:
      return normal_quantile(clip(phi, u));
    case ScoreGen::Kind::Truncated:
      return u >= phi.u0 ? u : 0.0;
  }
  throw ParameterError("unknown score-generating function");
}

double eval_phi_derivative(const ScoreGen& phi, double u) {
  check_unit_interval(u);
  switch (phi.kind) {
    case ScoreGen::Kind::Mww:
      return 1.0;
    case ScoreGen::Kind::Logistic:
      return 2.0 * std::sqrt(3.0);
    case ScoreGen::Kind::Logrank:
      return 1.0 / (1.0 - clip(phi, u));
    case ScoreGen::Kind::Median:
      return 0.0;
    case ScoreGen::Kind::VanDerWaerden: {
      const double x = normal_quantile(clip(phi, u));
      return std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    }
    case ScoreGen::Kind::Truncated:
      return u > phi.u0 ? 1.0 : 0.0;
  }
  throw ParameterError("unknown score-generating function");
}

bool is_nondecreasing(const ScoreGen& phi, std::size_t grid_size) {
  return is_nondecreasing([&](double u) { return eval_phi(phi, u); }, grid_size);
}

bool is_nondecreasing(const std::function<double(double)>& f, std::size_t grid_size) {
  if (grid_size < 2) throw ParameterError("grid_size must be at least 2");
  double previous = f(0.0);
  for (std::size_t k = 1; k < grid_size; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(grid_size - 1);
    const double value = f(u);
    if (value < previous - 1e-12) return false;
    previous = value;
  }
  return true;
}

ScoreGen parse_score_gen(std::string_view text) {
  if (text == "mww") return ScoreGen::mww();
  if (text == "logistic") return ScoreGen::logistic();
  if (text == "logrank") return ScoreGen::logrank();
  if (text == "median") return ScoreGen::median();
  if (text == "vdw") return ScoreGen::van_der_waerden();
  constexpr std::string_view kTrunc = "trunc:";
  if (text.starts_with(kTrunc)) {
    double u0 = 0.0;
    try {
      u0 = csv::parse_double(text.substr(kTrunc.size()), 0);
    } catch (const ParseError&) {
      throw ParameterError("invalid truncation point in '" + std::string(text) + "'");
    }
    return ScoreGen::truncated(u0);
  }
  throw ParameterError("unknown score-generating function '" + std::string(text) + "'");
}

std::string to_string(const ScoreGen& phi) {
  switch (phi.kind) {
    case ScoreGen::Kind::Mww:
      return "mww";
    case ScoreGen::Kind::Logistic:
      return "logistic";
    case ScoreGen::Kind::Logrank:
      return "logrank";
    case ScoreGen::Kind::Median:
      return "median";
    case ScoreGen::Kind::VanDerWaerden:
      return "vdw";
    case ScoreGen::Kind::Truncated: {
      char buf[32];
      const auto result = std::to_chars(buf, buf + sizeof buf, phi.u0);
      return "trunc:" + std::string(buf, result.ptr);
    }
  }
  return "unknown";
}

}  // namespace mvrank
