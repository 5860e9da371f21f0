#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ballns/errors.hpp"
#include "ballns/sph_harmonics.hpp"

using namespace ballns;

namespace {

constexpr double kPi = std::numbers::pi;

double poly_field(double x, double y, double z) { return 1 + x - 2 * y * z + x * x * y + 0.5 * z * z * z * x; }
double smooth_field(double x, double y, double z) { return std::exp(0.3 * x) * std::cos(0.4 * y) + z * z * y; }

}  // namespace

TEST_CASE("Gauss-Legendre rule integrates monomials exactly") {
  std::vector<double> x, w;
  gauss_legendre(9, x, w);
  for (int p = 0; p <= 17; ++p) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], p);
    const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
    CHECK(std::abs(s - exact) < 1e-14);
  }
}

TEST_CASE("normalized Legendre values") {
  CHECK(std::abs(normalized_legendre(0, 0, 0.3) - 0.28209479177387814) < 1e-15);
  CHECK(std::abs(normalized_legendre(1, 0, 1.0) - 0.4886025119029199) < 1e-15);
  const double x = 0.37, s = std::sqrt(1 - x * x);
  CHECK(std::abs(normalized_legendre(2, 1, x) + std::sqrt(15 / (8 * kPi)) * x * s) < 1e-15);
  CHECK(std::abs(normalized_legendre(2, -1, x) - std::sqrt(15 / (8 * kPi)) * x * s) < 1e-15);
  CHECK(std::abs(normalized_legendre(2, 2, x) - 0.25 * std::sqrt(15 / (2 * kPi)) * s * s) < 1e-15);
  CHECK_THROWS_AS(normalized_legendre(2, 3, x), InvalidParameter);
}

TEST_CASE("Gram matrix of Y_l^m up to degree 8 is the identity") {
  const int L = 8;
  std::vector<double> x, w;
  gauss_legendre(L + 2, x, w);
  const int J = 2 * L + 2;
  double worst = 0;
  for (int l1 = 0; l1 <= L; ++l1)
    for (int m1 = -l1; m1 <= l1; ++m1)
      for (int l2 = 0; l2 <= L; ++l2)
        for (int m2 = -l2; m2 <= l2; ++m2) {
          Complex s{};
          for (std::size_t q = 0; q < x.size(); ++q)
            for (int j = 0; j < J; ++j) {
              const double lam = 2 * kPi * j / J;
              const Complex y1 = normalized_legendre(l1, m1, x[q]) * std::polar(1.0, m1 * lam);
              const Complex y2 = normalized_legendre(l2, m2, x[q]) * std::polar(1.0, m2 * lam);
              s += w[q] * (2 * kPi / J) * y1 * std::conj(y2);
            }
          const double expect = (l1 == l2 && m1 == m2) ? 1.0 : 0.0;
          worst = std::max(worst, std::abs(s - expect));
        }
  CHECK(worst < 1e-11);
}

TEST_CASE("polar derivative table matches finite differences") {
  const int L = 6;
  const double th = 0.9, eps = 1e-6;
  const auto t = legendre_table(L, std::cos(th), std::sin(th));
  const auto d = legendre_table_dtheta(L, t);
  const auto tp = legendre_table(L, std::cos(th + eps), std::sin(th + eps));
  const auto tm = legendre_table(L, std::cos(th - eps), std::sin(th - eps));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(d[i] - (tp[i] - tm[i]) / (2 * eps)) < 1e-8);
}

TEST_CASE("CFF to CSH single-mode examples") {
  const CshCoeffs one = cff_to_csh(cff_analysis([](double, double, double) { return 1.0; }, 8));
  CHECK(std::abs(one(0, 0, 0) - std::sqrt(4 * kPi)) < 1e-13);
  CHECK(one.max_abs() - std::sqrt(4 * kPi) < 1e-13);

  const CshCoeffs z = cff_to_csh(cff_analysis([](double, double, double zz) { return zz; }, 8));
  CshCoeffs rest = z;
  rest(1, 1, 0) = 0;
  CHECK(std::abs(z(1, 1, 0) - std::sqrt(4 * kPi / 3)) < 1e-13);
  CHECK(rest.max_abs() < 1e-13);

  CshCoeffs u(8);
  u(0, 0, 0) = std::sqrt(4 * kPi);
  const CffCoeffs c = csh_to_cff(u);
  CHECK(std::abs(c(0, 0, 0) - 1.0) < 1e-13);
  CffCoeffs crest = c;
  crest(0, 0, 0) = 0;
  CHECK(crest.max_abs() < 1e-13);
  CHECK(csh_to_cff(CshCoeffs(8)).max_abs() == 0.0);
}

TEST_CASE("CSH series reproduces the CFF series at random points") {
  const CffCoeffs c = cff_analysis(smooth_field, 24);
  const CshCoeffs u = cff_to_csh(c);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ur(-1, 1), ua(-kPi, kPi), ut(0, kPi);
  double scale = c.max_abs();
  for (int i = 0; i < 20; ++i) {
    const double r = ur(rng), lam = ua(rng), th = ut(rng);
    CHECK(std::abs(eval_csh(u, r, lam, th) - eval_point(c, r, lam, th)) < 1e-10 * scale);
  }
}

TEST_CASE("CFF/CSH roundtrips") {
  const CffCoeffs c = cff_analysis(smooth_field, 16);
  CHECK((csh_to_cff(cff_to_csh(c)) - c).max_abs() < 1e-11);

  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  CshCoeffs u(12);
  for (auto& v : u.data()) v = {nd(rng), nd(rng)};
  CshCoeffs back = cff_to_csh(csh_to_cff(u));
  back -= u;
  CHECK(back.max_abs() < 1e-11);

  CffCoeffs cur = c;
  for (int rep = 0; rep < 10; ++rep) cur = csh_to_cff(cff_to_csh(cur));
  CHECK((cur - c).max_abs() < 1e-9);
}

TEST_CASE("parity and reality of CSH coefficients of polynomial fields") {
  const CshCoeffs u = cff_to_csh(cff_analysis(poly_field, 12));
  const double scale = u.max_abs();
  double odd = 0, real_err = 0;
  for (int k = 0; k <= 6; ++k)
    for (int l = 0; l <= 6; ++l)
      for (int m = -l; m <= l; ++m) {
        if ((k + l) % 2) odd = std::max(odd, std::abs(u(k, l, m)));
        const Complex mirror = (m % 2 ? -1.0 : 1.0) * std::conj(u(k, l, m));
        real_err = std::max(real_err, std::abs(u(k, l, -m) - mirror));
      }
  CHECK(odd < 1e-12 * scale);
  CHECK(real_err < 1e-12 * scale);

  // Output of csh_to_cff for parity-respecting input satisfies the doubling
  // symmetry f(r, λ, θ) = f(-r, λ + π, π - θ).
  const CffCoeffs c = csh_to_cff(u);
  for (double r : {0.2, 0.8})
    for (double lam : {0.3, 1.7})
      for (double th : {0.5, 2.2})
        CHECK(std::abs(eval_point(c, r, lam, th) - eval_point(c, -r, lam + kPi, kPi - th)) < 1e-12 * scale);
}

TEST_CASE("surface analysis and synthesis") {
  const SurfaceHarmonicCoeffs g = surface_analysis([](double, double th) { return Complex(std::cos(th)); }, 6);
  CHECK(std::abs(g(1, 0) - std::sqrt(4 * kPi / 3)) < 1e-13);
  SurfaceHarmonicCoeffs rest = g;
  rest(1, 0) = 0;
  CHECK(rest.max_abs() < 1e-13);

  CHECK(surface_analysis([](double, double) { return Complex{}; }, 4).max_abs() == 0.0);

  SurfaceHarmonicCoeffs y32(5);
  y32(3, 2) = 1.0;
  const SphereGrid grid(5);
  const auto values = surface_synthesis(y32, grid);
  const SurfaceHarmonicCoeffs back = surface_analysis(grid, values);
  CHECK(std::abs(back(3, 2) - 1.0) < 1e-12);
  SurfaceHarmonicCoeffs other = back;
  other(3, 2) = 0;
  CHECK(other.max_abs() < 1e-12);

  // Synthesis of the analysis of a band-limited function matches the input at the nodes.
  auto f = [](double lam, double th) {
    return Complex(std::sin(th) * std::sin(th) * std::cos(2 * lam) + std::cos(th), std::sin(th) * std::sin(lam));
  };
  const SurfaceHarmonicCoeffs gf = surface_analysis(f, 4);
  const SphereGrid g4(4);
  const auto synth = surface_synthesis(gf, g4);
  for (std::size_t q = 0; q < g4.polar_count(); ++q)
    for (std::size_t j = 0; j < g4.azimuth_count(); ++j)
      CHECK(std::abs(synth[q * g4.azimuth_count() + j] - f(g4.lambda[j], g4.theta(q))) < 1e-11);
}

TEST_CASE("truncated and profile forms of the CSH projection") {
  const CffCoeffs c = cff_analysis(smooth_field, 16);
  const CshCoeffs full = cff_to_csh(c);
  CshCoeffs cut = cff_to_csh(c, 10);
  cut -= resize(full, 10);
  CHECK(cut.max_abs() < 1e-13);

  const int L = 5;
  const auto prof = cff_to_csh_profiles(c, L);
  const std::size_t R = static_cast<std::size_t>(c.half() + 1);
  CHECK(prof.size() == static_cast<std::size_t>((L + 1) * (L + 1)) * R);
  double err = 0.0;
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m)
      for (int k = 0; k <= c.half(); ++k)
        err = std::max(err, std::abs(prof[static_cast<std::size_t>(l * l + l + m) * R + static_cast<std::size_t>(k)] -
                                     full(k, l, m)));
  CHECK(err < 1e-13);
}

TEST_CASE("regular projection keeps smooth fields and removes the rest") {
  CshCoeffs u = cff_to_csh(cff_analysis(poly_field, 12));
  CshCoeffs p = u;
  project_regular(p);
  CshCoeffs d = p;
  d -= u;
  CHECK(d.max_abs() < 1e-13);

  // A constant profile at l = 2 is not of the form r² q(r²).
  CshCoeffs w(12);
  w(0, 2, 1) = 1.0;
  w(2, 2, 1) = 0.3;
  CshCoeffs q = w;
  project_regular(q);
  const auto prof = q.profile(2, 1);
  CHECK(std::abs(prof[0] - prof[2] + prof[4] - prof[6]) < 1e-13);  // value at r = 0
  Complex inner{};
  for (int k = 0; k < q.radial_size(); ++k) inner += std::conj(q(k, 2, 1)) * (w(k, 2, 1) - q(k, 2, 1));
  CHECK(std::abs(inner) < 1e-13);
  CshCoeffs again = q;
  project_regular(again);
  again -= q;
  CHECK(again.max_abs() < 1e-14);
}
