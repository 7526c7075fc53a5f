#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace mvrank {

/// Score-generating function phi: [0,1] -> R, used to weight normalized
/// ranks in two-sample linear rank statistics.
///
///   Mww            u
///   Logistic       2*sqrt(3)*(u - 1/2)
///   Logrank        -log(1 - u)
///   Median         sign(u - 1/2), with sign(0) = 0
///   VanDerWaerden  Phi^{-1}(u)
///   Truncated      u * 1{u >= u0}
///
/// Logrank and VanDerWaerden diverge at the endpoints; they are evaluated at
/// u clipped to [clip_eps, 1 - clip_eps].
struct ScoreGen {
  enum class Kind { Mww, Logistic, Logrank, Median, VanDerWaerden, Truncated };

  Kind kind = Kind::Mww;
  double u0 = 0.7;
  double clip_eps = 1e-12;

  static ScoreGen mww() { return {Kind::Mww}; }
  static ScoreGen logistic() { return {Kind::Logistic}; }
  static ScoreGen logrank() { return {Kind::Logrank}; }
  static ScoreGen median() { return {Kind::Median}; }
  static ScoreGen van_der_waerden() { return {Kind::VanDerWaerden}; }
  static ScoreGen truncated(double u0);

  // Affine in u on all of [0,1].
  bool is_affine() const noexcept {
    return kind == Kind::Mww || kind == Kind::Logistic;
  }

  friend bool operator==(const ScoreGen&, const ScoreGen&) = default;
};

double eval_phi(const ScoreGen& phi, double u);

// d phi / du, with 0 at the jumps of Median and Truncated.
double eval_phi_derivative(const ScoreGen& phi, double u);

// Standard normal quantile; absolute error below 1e-8 on (1e-12, 1 - 1e-12).
double normal_quantile(double u);

// Standard normal cdf.
double normal_cdf(double x);

// Checks phi on a uniform grid of [0,1] with tolerance 1e-12.
bool is_nondecreasing(const ScoreGen& phi, std::size_t grid_size);
bool is_nondecreasing(const std::function<double(double)>& f, std::size_t grid_size);

// Config-string form: mww | logistic | logrank | median | vdw | trunc:<u0>
ScoreGen parse_score_gen(std::string_view text);
std::string to_string(const ScoreGen& phi);

}  // namespace mvrank
