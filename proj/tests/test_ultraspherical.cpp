#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "ballns/errors.hpp"
#include "ballns/ultraspherical.hpp"

using namespace ballns;

namespace {

// Gegenbauer C^(λ)_k(x) by the three-term recurrence; λ = 0 means Chebyshev T.
std::vector<double> gegenbauer(int lambda, int size, double x) {
  std::vector<double> c(static_cast<std::size_t>(size));
  c[0] = 1.0;
  if (size > 1) c[1] = lambda == 0 ? x : 2.0 * lambda * x;
  for (int k = 1; k + 1 < size; ++k) {
    if (lambda == 0) {
      c[k + 1] = 2 * x * c[k] - c[k - 1];
    } else {
      c[k + 1] = (2.0 * (k + lambda) * x * c[k] - (k + 2.0 * lambda - 1) * c[k - 1]) / (k + 1);
    }
  }
  return c;
}

double series(const std::vector<double>& coeffs, int lambda, double x) {
  const auto basis = gegenbauer(lambda, static_cast<int>(coeffs.size()), x);
  double s = 0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * basis[k];
  return s;
}

std::vector<double> random_vector(int size, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(static_cast<std::size_t>(size));
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("conversion operators preserve the represented function") {
  const int size = 12;
  // Degree < size - 2 so truncation cannot drop content.
  auto v = random_vector(size, 1);
  v[size - 1] = v[size - 2] = 0;
  const auto s0 = conversion_operator(0, size).apply(std::span<const double>(v));
  const auto s1 = conversion_operator(1, size).apply(std::span<const double>(s0));
  for (double x : {-0.9, -0.2, 0.35, 1.0}) {
    CHECK(std::abs(series(v, 0, x) - series(s0, 1, x)) < 1e-13);
    CHECK(std::abs(series(v, 0, x) - series(s1, 2, x)) < 1e-13);
  }
  CHECK(conversion_operator(0, size).upper() == 2);
  CHECK(conversion_operator(0, size).lower() == 0);
  CHECK_THROWS_AS(conversion_operator(2, size), InvalidParameter);
}

TEST_CASE("differentiation operators match trigonometric derivative formulas") {
  const int size = 10;
  const auto v = random_vector(size, 2);
  const auto d1 = differentiation_operator(1, size).apply(std::span<const double>(v));
  const auto d2 = differentiation_operator(2, size).apply(std::span<const double>(v));
  for (double x : {-0.8, 0.1, 0.6}) {
    const double t = std::acos(x);
    double f1 = 0, f2 = 0;
    for (int k = 0; k < size; ++k) {
      // T_k(cos t) = cos kt.
      const double tk = std::cos(k * t);
      const double dk = k * std::sin(k * t) / std::sin(t);
      f1 += v[k] * dk;
      f2 += v[k] * (x * dk - k * k * tk) / (1 - x * x);
    }
    CHECK(std::abs(series(d1, 1, x) - f1) < 1e-11);
    CHECK(std::abs(series(d2, 2, x) - f2) < 1e-10);
  }
}

TEST_CASE("multiplication operators in the C2 basis") {
  const int size = 14;
  auto v = random_vector(size, 3);
  v[size - 1] = v[size - 2] = 0;
  const double px[] = {0.0, 1.0};
  const double px2[] = {0.5, 0.0, 0.5};  // x² = (T0 + T2) / 2
  const double pq[] = {0.3, -0.2, 0.7};
  const auto mx = multiplication_operator(px, size);
  const auto mx2 = multiplication_operator(px2, size);
  const auto mq = multiplication_operator(pq, size);
  CHECK(mx2.lower() <= 2);
  CHECK(mx2.upper() <= 2);
  const auto ax = mx.apply(std::span<const double>(v));
  const auto ax2 = mx2.apply(std::span<const double>(v));
  const auto aq = mq.apply(std::span<const double>(v));
  for (double x : {-0.7, 0.0, 0.9}) {
    const double f = series(v, 2, x);
    CHECK(std::abs(series(ax, 2, x) - x * f) < 1e-12);
    CHECK(std::abs(series(ax2, 2, x) - x * x * f) < 1e-12);
    CHECK(std::abs(series(aq, 2, x) - (0.3 - 0.2 * x + 0.7 * (2 * x * x - 1)) * f) < 1e-12);
  }
  const double cubic[] = {0, 0, 0, 1};
  CHECK_THROWS_AS(multiplication_operator(cubic, size), InvalidParameter);
}

TEST_CASE("almost-banded QR agrees with dense LU") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int size : {6, 17, 40}) {
    AlmostBandedSystem sys;
    sys.matrix.size = size;
    for (int b = 0; b < 2; ++b) {
      std::vector<double> row(static_cast<std::size_t>(size));
      for (auto& x : row) x = u(rng);
      sys.matrix.border.push_back(row);
    }
    for (int i = 0; i < size - 2; ++i) {
      BandedRow row;
      row.start = i;
      for (int j = 0; j < 5; ++j) row.values.push_back(u(rng) + (j == 2 ? 3.0 : 0.0));
      sys.matrix.rows.push_back(row);
    }
    for (int i = 0; i < size; ++i) sys.rhs.emplace_back(u(rng), u(rng));

    const auto x = almost_banded_solve(sys);
    const auto dense = sys.matrix.dense();
    Eigen::MatrixXd a(size, size);
    Eigen::VectorXcd b(size);
    for (int i = 0; i < size; ++i) {
      b(i) = sys.rhs[i];
      for (int j = 0; j < size; ++j) a(i, j) = dense[i][j];
    }
    const Eigen::VectorXcd ref = a.cast<std::complex<double>>().partialPivLu().solve(b);
    double err = 0, scale = 0;
    for (int i = 0; i < size; ++i) {
      err = std::max(err, std::abs(x[i] - ref(i)));
      scale = std::max(scale, std::abs(ref(i)));
    }
    CHECK(err < 1e-10 * std::max(1.0, scale));
    const auto back = sys.matrix.apply(x);
    double res = 0;
    for (int i = 0; i < size; ++i) res = std::max(res, std::abs(back[i] - sys.rhs[i]));
    CHECK(res < 1e-11);
  }
}

TEST_CASE("singular almost-banded system is reported") {
  AlmostBandedSystem sys;
  sys.matrix.size = 4;
  sys.matrix.border.push_back({1, 1, 1, 1});
  sys.matrix.border.push_back({1, 1, 1, 1});
  for (int i = 0; i < 2; ++i) sys.matrix.rows.push_back({i, {1.0, 0.0, 1.0}});
  sys.rhs.assign(4, 1.0);
  CHECK_THROWS_AS(almost_banded_solve(sys), SingularSystem);
}

TEST_CASE("integral moments") {
  for (int l : {1, 2, 5}) {
    const int size = 12;
    const auto& mu = clenshaw_curtis_moments(l, size);
    REQUIRE(mu.size() == static_cast<std::size_t>(size));
    // Composite Simpson as an independent reference.
    const int intervals = 20000;
    for (int k = 0; k < size; ++k) {
      double s = 0;
      for (int i = 0; i <= intervals; ++i) {
        const double r = static_cast<double>(i) / intervals;
        const double w = (i == 0 || i == intervals) ? 1 : (i % 2 ? 4 : 2);
        s += w * std::pow(r, l + 2) * std::cos(k * std::acos(r));
      }
      s /= 3.0 * intervals;
      CHECK(std::abs(mu[k] - s) < 1e-10);
    }
  }
  CHECK(std::abs(clenshaw_curtis_moments(1, 1)[0] - 0.25) < 1e-15);
  CHECK_THROWS_AS(clenshaw_curtis_moments(0, 4), InvalidParameter);
}
