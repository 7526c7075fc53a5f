#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mvrank/errors.hpp"
#include "mvrank/random.hpp"
#include "mvrank/sample.hpp"

using namespace mvrank;

namespace {

struct Moments {
  double mean;
  double var;
  double mean_se;  // standard error of the mean
  double var_se;   // standard error of the variance (fourth-moment estimate)
};

Moments moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : v) {
    const double c = (x - mean) * (x - mean);
    m2 += c;
    m4 += c * c;
  }
  m2 /= n;
  m4 /= n;
  return {mean, m2, std::sqrt(m2 / n), std::sqrt((m4 - m2 * m2) / n)};
}

std::vector<double> norms(const Sample& s) {
  std::vector<double> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double n2 = 0.0;
    for (double c : s.point(i)) n2 += c * c;
    out.push_back(std::sqrt(n2));
  }
  return out;
}

}  // namespace

TEST_CASE("sample_gaussian") {
  SUBCASE("per-coordinate variance near 0.1") {
    const Sample s = sample_gaussian(1000, 2, 0.1, 11);
    CHECK(s.size() == 1000);
    CHECK(s.dim() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<double> coord;
      for (std::size_t i = 0; i < s.size(); ++i) coord.push_back(s.point(i)[k]);
      CHECK(std::abs(moments(coord).var - 0.1) < 0.02);
    }
  }
  SUBCASE("degenerate variance stays at the origin") {
    const Sample s = sample_gaussian(1, 2, 1e-12, 3);
    CHECK(norms(s)[0] < 1e-5);
  }
  SUBCASE("mean squared norm equals d * variance") {
    const Sample s = sample_gaussian(100000, 2, 0.1, 5);
    std::vector<double> sq;
    for (double r : norms(s)) sq.push_back(r * r);
    const auto mo = moments(sq);
    CHECK(std::abs(mo.mean - 0.2) < 3.0 * mo.mean_se);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(sample_gaussian(0, 2, 0.1, 1), ParameterError);
    CHECK_THROWS_AS(sample_gaussian(5, 0, 0.1, 1), ParameterError);
    CHECK_THROWS_AS(sample_gaussian(5, 2, 0.0, 1), ParameterError);
    CHECK_THROWS_AS(sample_gaussian(5, 2, -1.0, 1), ParameterError);
  }
}

TEST_CASE("sample_uniform_cube") {
  const Sample s = sample_uniform_cube(500, 2, 7);
  for (double c : s.coords()) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
  const Sample one = sample_uniform_cube(1, 1, 8);
  CHECK(one.size() == 1);
  CHECK(one.point(0)[0] >= 0.0);
  CHECK(one.point(0)[0] <= 1.0);

  const Sample big = sample_uniform_cube(100000, 2, 9);
  const double tol = 3.0 * (1.0 / std::sqrt(12.0)) / std::sqrt(100000.0);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> coord;
    for (std::size_t i = 0; i < big.size(); ++i) coord.push_back(big.point(i)[k]);
    CHECK(std::abs(moments(coord).mean - 0.5) < tol);
  }
  CHECK_THROWS_AS(sample_uniform_cube(0, 2, 1), ParameterError);
}

TEST_CASE("sample_radlaw") {
  SUBCASE("mean radius of Beta(3,1)") {
    const auto r = moments(norms(sample_radlaw(500, 2, {3.0, 1.0}, 21)));
    CHECK(std::abs(r.mean - 0.75) < 3.0 * std::sqrt(3.0 / 80.0 / 500.0));
  }
  SUBCASE("alpha = beta = 1 gives a uniform radius") {
    const auto r = norms(sample_radlaw(20000, 1, {1.0, 1.0}, 22));
    std::vector<int> bins(10, 0);
    for (double x : r) bins[std::min<std::size_t>(9, static_cast<std::size_t>(x * 10))]++;
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - 2000.0) * (b - 2000.0) / 2000.0;
    CHECK(chi2 < 27.88);  // chi-square, 9 dof, p = 0.001
    const auto mo = moments(r);
    CHECK(std::abs(mo.mean - 0.5) < 4.0 * mo.mean_se);
  }
  SUBCASE("Beta moments at m = 100000") {
    for (auto [a, b] : {std::pair{3.0, 1.0}, {2.0, 1.0}, {0.5, 0.7}}) {
      const auto r = moments(norms(sample_radlaw(100000, 2, {a, b}, 23)));
      const double mean = a / (a + b);
      const double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
      CHECK(std::abs(r.mean - mean) < 4.0 * r.mean_se);
      CHECK(std::abs(r.var - var) < 4.0 * r.var_se);
    }
  }
  SUBCASE("norm bound") {
    for (double r : norms(sample_radlaw(20000, 3, {3.0, 1.0}, 24))) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }
  SUBCASE("direction angles are uniform") {
    const Sample s = sample_radlaw(100000, 2, {3.0, 1.0}, 25);
    std::vector<int> bins(16, 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double theta = std::atan2(s.point(i)[1], s.point(i)[0]) + std::numbers::pi;
      const auto bin = static_cast<std::size_t>(theta / (2.0 * std::numbers::pi) * 16.0);
      bins[std::min<std::size_t>(bin, 15)]++;
    }
    const double expected = 100000.0 / 16.0;
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - expected) * (b - expected) / expected;
    CHECK(chi2 < 37.70);  // chi-square, 15 dof, p = 0.001
  }
  CHECK_THROWS_AS(sample_radlaw(10, 2, {0.0, 1.0}, 1), ParameterError);
  CHECK_THROWS_AS(sample_radlaw(10, 2, {1.0, -1.0}, 1), ParameterError);
}

TEST_CASE("determinism and seed splitting") {
  CHECK(sample_gaussian(100, 3, 0.1, 42) == sample_gaussian(100, 3, 0.1, 42));
  CHECK(sample_radlaw(100, 2, {3, 1}, 42) == sample_radlaw(100, 2, {3, 1}, 42));
  CHECK_FALSE(sample_gaussian(100, 3, 0.1, 42) == sample_gaussian(100, 3, 0.1, 43));
  CHECK(split_seed(7, 0) != split_seed(7, 1));
  CHECK(split_seed(7, 1) != split_seed(8, 1));
}

TEST_CASE("compute_rad") {
  CHECK(compute_rad(Sample(2, {0, 0, 3, 4})) == doctest::Approx(5.0));
  CHECK(compute_rad(Sample(2, {0, 0})) == 0.0);
  CHECK_THROWS_AS(compute_rad(Sample(2, {})), ParameterError);

  // Max of 1000 Rayleigh(sqrt(0.1)) norms lies in [1.0, 1.6] with probability
  // ~0.996; across 200 independent seeds at least 98% must.
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double rad = compute_rad(sample_gaussian(1000, 2, 0.1, split_seed(99, seed)));
    inside += rad >= 1.0 && rad <= 1.6;
  }
  CHECK(inside >= 196);
}

TEST_CASE("dilate") {
  const Sample s(2, {0.5, 0.5}, std::vector<int>{1});
  const Sample d = dilate(s, 2.0);
  CHECK(d.point(0)[0] == 1.0);
  CHECK(d.point(0)[1] == 1.0);
  CHECK(d.labels() == s.labels());
  CHECK(dilate(s, 1.0) == s);
  CHECK_THROWS_AS(dilate(s, 0.0), ParameterError);

  const double factor = 1.2 + 0.01;
  for (double r : norms(dilate(sample_radlaw(5000, 2, {3, 1}, 31), factor))) {
    CHECK(r <= 1.21 + 1e-12);
  }
}

TEST_CASE("make_train_set") {
  const Sample normals = sample_gaussian(1000, 2, 0.1, 1);
  const Sample outliers = sample_radlaw(500, 2, {3, 1}, 2);
  const Sample train = make_train_set(normals, outliers);
  CHECK(train.size() == 1500);
  CHECK(train.count_label(1) == 1000);
  for (std::size_t i = 0; i < 1500; ++i) CHECK(train.label(i) == (i < 1000 ? 1 : 0));
  CHECK(train.point(0)[0] == normals.point(0)[0]);
  CHECK(train.point(1000)[1] == outliers.point(0)[1]);

  const Sample tiny = make_train_set(Sample(1, {0.3}), Sample(1, {0.9}));
  CHECK(tiny.labels() == std::vector<int>{1, 0});
  CHECK_THROWS_AS(make_train_set(Sample(1, {0.3}), Sample(2, {0.9, 1.0})), ParameterError);
}

TEST_CASE("Sample invariants") {
  CHECK_THROWS_AS(Sample(2, {1.0, 2.0, 3.0}), ParameterError);
  CHECK_THROWS_AS(Sample(2, {1.0, NAN}), ParameterError);
  CHECK_THROWS_AS(Sample(1, {1.0, INFINITY}), ParameterError);
  CHECK_THROWS_AS(Sample(1, {1.0, 2.0}, std::vector<int>{1}), ParameterError);
  CHECK_THROWS_AS(Sample(1, {1.0}, std::vector<int>{2}), ParameterError);
  CHECK_THROWS_AS(Sample(0, {}), ParameterError);
  CHECK_THROWS_AS(Sample(1, {1.0}).labels(), ParameterError);
}

TEST_CASE("CSV round trip is lossless") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Sample s = make_train_set(sample_gaussian(30, 3, 0.1, seed),
                                    dilate(sample_radlaw(10, 3, {3, 1}, seed + 100), 1.7));
    std::stringstream buf;
    write_sample_csv(buf, s);
    CHECK(read_sample_csv(buf) == s);
  }
  const Sample unlabeled = sample_uniform_cube(5, 2, 3);
  std::stringstream buf;
  write_sample_csv(buf, unlabeled);
  CHECK(buf.str().starts_with("x0,x1\n"));
  CHECK(read_sample_csv(buf) == unlabeled);
}

TEST_CASE("CSV parse errors carry line numbers") {
  std::stringstream bad("x0,x1,label\n0.1,0.2,1\n0.3,oops,0\n");
  try {
    read_sample_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream short_row("x0,x1\n0.1\n");
  CHECK_THROWS_AS(read_sample_csv(short_row), ParseError);
  std::stringstream bad_header("a,b\n1,2\n");
  CHECK_THROWS_AS(read_sample_csv(bad_header), ParseError);
  std::stringstream bad_label("x0,label\n0.5,3\n");
  CHECK_THROWS_AS(read_sample_csv(bad_label), ParseError);
  std::stringstream empty("x0\n");
  CHECK_THROWS_AS(read_sample_csv(empty), ParseError);
}
