#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "adafnn/bspline.hpp"
#include "adafnn/rng.hpp"

using namespace adafnn;

namespace {

constexpr double kPi = 3.14159265358979323846;

double phi(std::size_t k, double t) {
  if (k == 1) return 1.0;
  return std::sqrt(2.0) * std::cos(static_cast<double>(k - 1) * kPi * t);
}

Grid uniform_grid(std::size_t intervals) { return Grid::uniform(intervals); }

// A fixed oscillatory curve with the large low- and mid-frequency scales of
// the second simulation case: z_1 = z_3 = 5, z_5 = z_10 = 3, the rest 1.
std::vector<double> wiggly_curve(const Grid& g) {
  std::vector<double> z(50, 1.0);
  z[0] = 5.0;
  z[2] = 5.0;
  z[4] = 3.0;
  z[9] = 3.0;
  Rng rng(123);
  std::vector<double> c(50);
  double root3 = std::sqrt(3.0);
  for (std::size_t k = 0; k < 50; ++k) c[k] = z[k] * rng.uniform(-root3, root3);
  std::vector<double> x(g.size(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (std::size_t k = 0; k < 50; ++k) x[j] += c[k] * phi(k + 1, g[j]);
  }
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace

TEST_CASE("knot layout follows the clamped uniform scheme") {
  BSplineBasis basis(uniform_grid(20), 7, 3);
  CHECK(basis.size() == 7);
  CHECK(basis.degree() == 3);
  const std::vector<double>& u = basis.knots();
  REQUIRE(u.size() == 11);  // K + degree + 1
  for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == 0.0);
  CHECK(u[4] == Catch::Approx(0.25));
  CHECK(u[5] == Catch::Approx(0.5));
  CHECK(u[6] == Catch::Approx(0.75));
  for (std::size_t i = 7; i < 11; ++i) CHECK(u[i] == 1.0);
}

TEST_CASE("basis rows are nonnegative and sum to one") {
  Grid g = uniform_grid(50);
  for (std::size_t k : {4u, 7u, 15u}) {
    BSplineBasis basis(g, k, 3);
    const Matrix& d = basis.design();
    REQUIRE(d.rows() == g.size());
    REQUIRE(d.cols() == k);
    for (std::size_t j = 0; j < d.rows(); ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(d(j, i) >= 0.0);
        sum += d(j, i);
      }
      CHECK(sum == Catch::Approx(1.0).margin(1e-10));
    }
  }
}

TEST_CASE("degree one basis gives the hat functions") {
  Grid g({0.0, 0.25, 0.5, 0.75, 1.0});
  BSplineBasis basis(g, 3, 1);  // one interior knot at 0.5
  std::vector<double> at0 = basis.evaluate_at(0.0);
  CHECK(at0[0] == 1.0);
  CHECK(at0[1] == 0.0);
  std::vector<double> atq = basis.evaluate_at(0.25);
  CHECK(atq[0] == Catch::Approx(0.5).margin(1e-14));
  CHECK(atq[1] == Catch::Approx(0.5).margin(1e-14));
  std::vector<double> ath = basis.evaluate_at(0.5);
  CHECK(ath[1] == Catch::Approx(1.0).margin(1e-14));
  std::vector<double> at1 = basis.evaluate_at(1.0);
  CHECK(at1[2] == 1.0);
}

TEST_CASE("knotless cubic basis equals the Bernstein polynomials") {
  BSplineBasis basis(uniform_grid(10), 4, 3);
  for (double t : {0.0, 0.1, 0.35, 0.5, 0.73, 1.0}) {
    std::vector<double> v = basis.evaluate_at(t);
    double s = 1.0 - t;
    CHECK(v[0] == Catch::Approx(s * s * s).margin(1e-14));
    CHECK(v[1] == Catch::Approx(3.0 * t * s * s).margin(1e-14));
    CHECK(v[2] == Catch::Approx(3.0 * t * t * s).margin(1e-14));
    CHECK(v[3] == Catch::Approx(t * t * t).margin(1e-14));
  }
}

TEST_CASE("member of the spline space is recovered exactly") {
  Grid g = uniform_grid(40);
  BSplineBasis basis(g, 9, 3);
  Rng rng(5);
  std::vector<double> truth(9);
  for (double& v : truth) v = rng.uniform(-3.0, 3.0);
  std::vector<double> x = basis.reconstruct(truth);
  std::vector<double> fitted = basis.fit(x);
  for (std::size_t k = 0; k < 9; ++k) {
    CHECK(fitted[k] == Catch::Approx(truth[k]).margin(1e-8));
  }
}

TEST_CASE("constant curve reconstructs through the partition of unity") {
  Grid g = uniform_grid(30);
  BSplineBasis basis(g, 8, 3);
  std::vector<double> ones(g.size(), 1.0);
  std::vector<double> rec = basis.reconstruct(basis.fit(ones));
  CHECK(max_abs_diff(rec, ones) < 1e-10);
}

TEST_CASE("oscillatory curve needs the larger basis") {
  Grid g = uniform_grid(50);
  std::vector<double> x = wiggly_curve(g);
  BSplineBasis coarse(g, 4, 3);
  BSplineBasis fine(g, 15, 3);
  double coarse_err = max_abs_diff(coarse.reconstruct(coarse.fit(x)), x);
  double fine_err = max_abs_diff(fine.reconstruct(fine.fit(x)), x);
  CHECK(fine_err < coarse_err);
}

TEST_CASE("residual is non-increasing along nested knot refinements") {
  // Interior knots at i/4, i/8, i/16 nest, so the least-squares residual
  // cannot grow.
  Grid g = uniform_grid(50);
  std::vector<double> x = wiggly_curve(g);
  double prev = -1.0;
  for (std::size_t k : {4u, 7u, 11u, 19u}) {
    BSplineBasis basis(g, k, 3);
    std::vector<double> rec = basis.reconstruct(basis.fit(x));
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      sq += (rec[j] - x[j]) * (rec[j] - x[j]);
    }
    if (prev >= 0.0) CHECK(sq <= prev + 1e-12);
    prev = sq;
  }
}

TEST_CASE("fit_all stacks per-sample coefficients") {
  Grid g = uniform_grid(25);
  BSplineBasis basis(g, 6, 3);
  FunctionalDataset data{g, {}, Task::regression};
  Rng rng(11);
  for (int i = 0; i < 3; ++i) {
    FunctionalSample s;
    s.values.resize(g.size());
    for (double& v : s.values) v = rng.uniform(-1.0, 1.0);
    data.samples.push_back(std::move(s));
  }
  Matrix coef = basis.fit_all(data);
  REQUIRE(coef.rows() == 3);
  REQUIRE(coef.cols() == 6);
  std::vector<double> one = basis.fit(data.samples[1].values);
  for (std::size_t k = 0; k < 6; ++k) CHECK(coef(1, k) == one[k]);

  FunctionalDataset other{uniform_grid(30), data.samples, Task::regression};
  CHECK_THROWS_AS(basis.fit_all(other), data_error);
}

TEST_CASE("spline validation rejects bad configurations") {
  Grid g = uniform_grid(20);
  CHECK_THROWS_AS(BSplineBasis(g, 3, 3), config_error);   // K < degree+1
  CHECK_THROWS_AS(BSplineBasis(g, 22, 3), config_error);  // K > grid points
  CHECK_THROWS_AS(BSplineBasis(g, 4, 0), config_error);

  // A grid that never observes the middle of the domain leaves interior
  // basis functions unidentified.
  std::vector<double> pts;
  for (int i = 0; i <= 9; ++i) pts.push_back(0.005 * i);
  pts.push_back(1.0);
  CHECK_THROWS_AS(BSplineBasis(Grid(pts), 8, 3), data_error);

  BSplineBasis basis(g, 5, 3);
  CHECK_THROWS_AS(basis.fit(std::vector<double>(7, 0.0)), data_error);
  CHECK_THROWS_AS(basis.reconstruct(std::vector<double>(4, 0.0)), data_error);
}
