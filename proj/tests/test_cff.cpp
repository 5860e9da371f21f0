#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ballns/cff.hpp"
#include "ballns/errors.hpp"

using namespace ballns;

namespace {

double max_diff(const CffCoeffs& a, const CffCoeffs& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Samples g(r, λ, θ) on the full DFS grid.
template <class G>
CffCoeffs analyse_dfs(int n, G g) {
  GridValues v(n);
  for (int k = 0; k <= n / 2; ++k)
    for (int l = -n / 2; l <= n / 2; ++l)
      for (int m = -n / 2; m <= n / 2; ++m) v(k, l, m) = g(v.radius(k), v.azimuth(l), v.polar(m));
  return cff_analysis(v);
}

double smooth(double x, double y, double z) { return std::exp(0.3 * x) * std::cos(0.4 * y) + z * z * y; }

}  // namespace

TEST_CASE("constant and linear fields have single-mode expansions") {
  const CffCoeffs one = cff_analysis([](double, double, double) { return 1.0; }, 8);
  CHECK(std::abs(one(0, 0, 0) - 1.0) < 1e-14);
  CHECK(one.max_abs() - 1.0 < 1e-14);

  const CffCoeffs z = cff_analysis([](double, double, double zz) { return zz; }, 8);
  CHECK(std::abs(z(1, 0, 1) - 0.5) < 1e-14);
  CHECK(std::abs(z(1, 0, -1) - 0.5) < 1e-14);
  CffCoeffs rest = z;
  rest(1, 0, 1) = 0;
  rest(1, 0, -1) = 0;
  CHECK(rest.max_abs() < 1e-14);
}

TEST_CASE("synthesis inverts analysis on the grid") {
  for (int n : {4, 8, 16}) {
    const CffCoeffs c = cff_analysis(smooth, n);
    const GridValues g = cff_synthesis(c);
    double err = 0.0;
    for (int k = 0; k <= n / 2; ++k)
      for (int l = -n / 2; l <= n / 2; ++l)
        for (int m = -n / 2; m <= n / 2; ++m) {
          const auto p = g.cartesian(k, l, m);
          err = std::max(err, std::abs(g(k, l, m) - smooth(p.x, p.y, p.z)));
        }
    CHECK(err < 1e-13);
    CHECK(max_diff(cff_analysis(g), c) < 1e-14);
  }
}

TEST_CASE("analysis inverts synthesis for band-limited coefficients") {
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  const int n = 12;
  CffCoeffs c(n);
  // Nyquist content must be split symmetrically to be representable.
  for (int k = 0; k <= n / 2; ++k)
    for (int l = -n / 2 + 1; l < n / 2; ++l)
      for (int m = -n / 2 + 1; m < n / 2; ++m) c(k, l, m) = {nd(rng), nd(rng)};
  CHECK(max_diff(cff_analysis(synthesize_periodic(c)), c) < 1e-13);
}

TEST_CASE("point evaluation matches the sampled function") {
  const CffCoeffs c = cff_analysis(smooth, 24);
  for (double r : {0.0, 0.3, -0.7, 1.0})
    for (double lam : {0.1, 2.0})
      for (double th : {0.4, 2.9}) {
        const double x = r * std::cos(lam) * std::sin(th), y = r * std::sin(lam) * std::sin(th),
                     z = r * std::cos(th);
        CHECK(std::abs(eval_point(c, r, lam, th) - smooth(x, y, z)) < 1e-11);
      }
  CHECK_THROWS_AS(eval_point(c, 1.5, 0, 0), DomainError);
  CHECK_THROWS_AS(CffCoeffs(7), InvalidParameter);
  CHECK_THROWS_AS(cff_analysis(smooth, 2), InvalidParameter);
}

TEST_CASE("coefficient derivatives match analysed exact derivatives") {
  const int n = 32;
  const double a = 0.8;
  auto f = [a](double r, double lam, double th) {
    return std::exp(a * r * std::cos(lam) * std::sin(th)) + r * r * std::sin(lam) * std::cos(th);
  };
  auto fr = [a](double r, double lam, double th) {
    return a * std::cos(lam) * std::sin(th) * std::exp(a * r * std::cos(lam) * std::sin(th)) +
           2 * r * std::sin(lam) * std::cos(th);
  };
  auto fl = [a](double r, double lam, double th) {
    return -a * r * std::sin(lam) * std::sin(th) * std::exp(a * r * std::cos(lam) * std::sin(th)) +
           r * r * std::cos(lam) * std::cos(th);
  };
  auto ft = [a](double r, double lam, double th) {
    return a * r * std::cos(lam) * std::cos(th) * std::exp(a * r * std::cos(lam) * std::sin(th)) -
           r * r * std::sin(lam) * std::sin(th);
  };
  const CffCoeffs c = analyse_dfs(n, f);
  CHECK(max_diff(diff_r(c), analyse_dfs(n, fr)) < 1e-11);
  CHECK(max_diff(diff_lambda(c), analyse_dfs(n, fl)) < 1e-11);
  CHECK(max_diff(diff_theta(c), analyse_dfs(n, ft)) < 1e-11);
}

TEST_CASE("dealiased product of band-limited factors is exact") {
  // x·y has radial degree 2 and angular wavenumbers up to 2 in each direction.
  const int n = 8;
  const CffCoeffs x = cff_analysis([](double xx, double, double) { return xx; }, n);
  const CffCoeffs y = cff_analysis([](double, double yy, double) { return yy; }, n);
  const CffCoeffs xy = cff_analysis([](double xx, double yy, double) { return xx * yy; }, n);
  CHECK(max_diff(multiply_pointwise(x, y, true), xy) < 1e-14);
  CHECK(dealiased_size(16) == 24);
  CHECK(dealiased_size(10) == 16);
}

TEST_CASE("multipliers and exact divisions") {
  const int n = 16;
  const CffCoeffs f = cff_analysis(smooth, n);
  const CffCoeffs padded = resize(f, n + 4);
  double res = 1.0;
  // r·f vanishes at the origin, so division is exact.
  const CffCoeffs rf = mul_r(padded);
  CHECK(max_diff(div_r(rf, &res), padded) < 1e-13);
  CHECK(res < 1e-14);
  const CffCoeffs sf = mul_sin_theta(padded);
  CHECK(max_diff(div_sin_theta(sf, &res), padded) < 1e-13);
  CHECK(res < 1e-14);

  // A constant cannot be divided by r: the remainder reports its size.
  const CffCoeffs one = cff_analysis([](double, double, double) { return 2.0; }, 8);
  div_r(one, &res);
  CHECK(std::abs(res - 2.0) < 1e-14);
  div_sin_theta(one, &res);
  CHECK(std::abs(res - 2.0) < 1e-14);

  // cos θ, cos λ, sin λ multipliers against sampled products.
  auto g = [](double r, double lam, double th) { return r * std::sin(th) * std::cos(lam); };
  const CffCoeffs gc = analyse_dfs(8, g);
  const CffCoeffs g_cos = analyse_dfs(8, [&](double r, double l, double t) { return g(r, l, t) * std::cos(t); });
  const CffCoeffs g_sinl = analyse_dfs(8, [&](double r, double l, double t) { return g(r, l, t) * std::sin(l); });
  CHECK(max_diff(mul_cos_theta(gc), g_cos) < 1e-14);
  CHECK(max_diff(mul_sin_lambda(gc), g_sinl) < 1e-14);
}

TEST_CASE("product grid sizes are minimal 7-smooth multiples of 4") {
  CHECK(product_grid_size(32) == 72);
  CHECK(product_grid_size(48) == 100);
  CHECK(product_grid_size(64) == 140);
  auto smooth7 = [](int m) {
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    return m == 1;
  };
  for (int n = 4; n <= 128; n += 2) {
    const int m = product_grid_size(n);
    CHECK(m >= 2 * n + 2);
    CHECK(m % 4 == 0);
    CHECK(smooth7(m));
    for (int c = 2 * n + 2; c < m; ++c) CHECK_FALSE((c % 4 == 0 && smooth7(c)));
  }
}

TEST_CASE("padded synthesis equals synthesis of the zero-padded series") {
  const CffCoeffs c = cff_analysis(smooth, 12);
  for (int grid_n : {12, 20, 28}) {
    const PeriodicGrid a = synthesize_periodic(c, grid_n);
    const PeriodicGrid b = synthesize_periodic(resize(c, grid_n));
    double err = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) err = std::max(err, std::abs(a.values[i] - b.values[i]));
    CHECK(err < 1e-13);
  }
}

TEST_CASE("truncated analysis equals analysis followed by truncation") {
  const CffCoeffs c = cff_analysis(smooth, 24);
  PeriodicGrid g = synthesize_periodic(c);
  const CffCoeffs full = cff_analysis(g);
  CHECK(max_diff(cff_analysis(std::move(g), 12), resize(full, 12)) < 1e-14);
}

TEST_CASE("half-grid transforms of regular fields match the full transforms") {
  const int n = 12, M = product_grid_size(n);
  const CffCoeffs a = cff_analysis(smooth, n);
  const CffCoeffs b = cff_analysis([](double x, double y, double z) { return std::sin(x + 0.5 * z) - y * z; }, n);
  PeriodicGrid full_a = synthesize_periodic(a, M), full_b = synthesize_periodic(b, M);
  PeriodicGrid half_a = synthesize_regular(a, M), half_b = synthesize_regular(b, M);
  double err = 0.0;
  const std::size_t slice = static_cast<std::size_t>(M) * static_cast<std::size_t>(M);
  for (std::size_t i = 0; i < (static_cast<std::size_t>(M / 4) + 1) * slice; ++i)
    err = std::max(err, std::abs(full_a.values[i] - half_a.values[i]));
  CHECK(err < 1e-13);
  for (std::size_t i = 0; i < full_a.values.size(); ++i) {
    full_a.values[i] *= full_b.values[i];
    half_a.values[i] *= half_b.values[i];
  }
  const CffCoeffs ref = cff_analysis(std::move(full_a), 2 * n);
  CHECK(max_diff(analyze_regular(std::move(half_a), 2 * n, n), ref) < 1e-13);
  CHECK_THROWS_AS(synthesize_regular(a, M + 2), InvalidParameter);
}
