#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ballns/errors.hpp"
#include "ballns/mode_solvers.hpp"
#include "ballns/sph_harmonics.hpp"

using namespace ballns;

namespace {

// Chebyshev coefficients of a polynomial of degree < size given by monomial
// coefficients, via Gauss–Chebyshev projection (exact for this degree).
std::vector<Complex> chebyshev_from_monomials(const std::vector<double>& mono, int size) {
  const int q = 2 * size + 4;
  std::vector<Complex> c(static_cast<std::size_t>(size));
  for (int j = 0; j < q; ++j) {
    const double t = std::numbers::pi * (j + 0.5) / q;
    const double x = std::cos(t);
    double f = 0, xp = 1;
    for (double a : mono) {
      f += a * xp;
      xp *= x;
    }
    for (int k = 0; k < size; ++k) c[k] += f * std::cos(k * t) * (k == 0 ? 1.0 : 2.0) / q;
  }
  return c;
}

double cheb_eval(std::span<const Complex> c, double x) { return chebyshev_eval(c, x).real(); }

// C^(2) series evaluation.
double c2_eval(const std::vector<double>& c, double x) {
  double p0 = 1, p1 = 4 * x, s = c[0] + (c.size() > 1 ? c[1] * p1 : 0.0);
  for (std::size_t k = 1; k + 1 < c.size(); ++k) {
    const double p2 = (2.0 * (k + 2) * x * p1 - (k + 3.0) * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
    s += c[k + 1] * p1;
  }
  return s;
}

double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<Complex> unit(int size, int k, double v = 1.0) {
  std::vector<Complex> e(static_cast<std::size_t>(size));
  e[static_cast<std::size_t>(k)] = v;
  return e;
}

std::vector<Complex> random_profile(int size, int parity, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Complex> f(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k)
    if (k % 2 == parity) f[k] = Complex(nd(rng), nd(rng)) * std::exp(-0.1 * k);
  return f;
}

// Dense oracle: Ruiz-equilibrated full-pivot LU in extended precision. The
// block systems mix scales (1/Δt against Γ₄ k⁶), so plain double LU is not a
// trustworthy reference.
std::vector<Complex> dense_solve(const AlmostBandedSystem& sys) {
  using LD = long double;
  using CL = std::complex<LD>;
  const auto d = sys.matrix.dense();
  const int n = sys.matrix.size;
  Eigen::Matrix<LD, -1, -1> a(n, n);
  Eigen::Matrix<CL, -1, 1> b(n);
  for (int i = 0; i < n; ++i) {
    b(i) = CL(sys.rhs[i].real(), sys.rhs[i].imag());
    for (int j = 0; j < n; ++j) a(i, j) = d[i][j];
  }
  Eigen::Matrix<LD, -1, 1> rs = Eigen::Matrix<LD, -1, 1>::Ones(n), cs = rs;
  for (int it = 0; it < 20; ++it) {
    for (int i = 0; i < n; ++i) rs(i) /= std::sqrt((rs(i) * a.row(i).cwiseAbs().cwiseProduct(cs.transpose())).maxCoeff());
    for (int j = 0; j < n; ++j) cs(j) /= std::sqrt((cs(j) * a.col(j).cwiseAbs().cwiseProduct(rs)).maxCoeff());
  }
  const Eigen::Matrix<LD, -1, -1> scaled = rs.asDiagonal() * a * cs.asDiagonal();
  const Eigen::Matrix<CL, -1, 1> sb = rs.cast<CL>().asDiagonal() * b;
  const Eigen::Matrix<CL, -1, 1> y = scaled.cast<CL>().fullPivLu().solve(sb);
  std::vector<Complex> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const CL v = cs(i) * y(i);
    x[static_cast<std::size_t>(i)] = Complex(static_cast<double>(v.real()), static_cast<double>(v.imag()));
  }
  return x;
}

// Backward error ‖Ax − b‖ / (‖A‖‖x‖ + ‖b‖) in the max norm.
double residual(const AlmostBandedSystem& sys, std::span<const Complex> x) {
  const auto back = sys.matrix.apply(x);
  const auto d = sys.matrix.dense();
  double res = 0, bnorm = 0, anorm = 0, xnorm = 0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    res = std::max(res, std::abs(back[i] - sys.rhs[i]));
    bnorm = std::max(bnorm, std::abs(sys.rhs[i]));
    double row = 0;
    for (double v : d[i]) row += std::abs(v);
    anorm = std::max(anorm, row);
    xnorm = std::max(xnorm, std::abs(x[i]));
  }
  return res / std::max(anorm * xnorm + bnorm, 1e-300);
}

}  // namespace

TEST_CASE("Helmholtz mode operator structure and kernels") {
  const int size = 12;
  const auto& a0 = assemble_helmholtz_mode(0, 0.0, size);
  CHECK(a0.a.lower() == 0);
  CHECK(a0.a.upper() <= 4);
  CHECK(max_abs_diff(a0.a.apply(std::span<const Complex>(unit(size, 0))), std::vector<Complex>(size)) < 1e-14);

  const auto r2 = chebyshev_from_monomials({0, 0, 1}, size);
  CHECK(max_abs_diff(assemble_helmholtz_mode(2, 0.0, size).a.apply(std::span<const Complex>(r2)),
                     std::vector<Complex>(size)) < 1e-13);

  // Diagonal of A_l with K = 0 is [k(k+1) − l(l+1)] / (2(k+1)).
  const auto& a3 = assemble_helmholtz_mode(3, 0.0, size).a;
  for (int k = 1; k < size; ++k) CHECK(std::abs(a3(k, k) - (k * (k + 1.0) - 12.0) / (2.0 * (k + 1))) < 1e-13);

  // l = 1, K = 1 against the symbolically applied operator.
  const std::vector<double> mono = {0, 1, 0, -0.1, 0, 1.0 / 280};
  const auto u = chebyshev_from_monomials(mono, size);
  const auto au = assemble_helmholtz_mode(1, 1.0, size).a.apply(std::span<const Complex>(u));
  std::vector<double> au_re(au.size());
  for (std::size_t i = 0; i < au.size(); ++i) au_re[i] = au[i].real();
  for (int j = 0; j < 20; ++j) {
    const double r = -1 + 2.0 * j / 19;
    double val = 0, d1 = 0, d2 = 0;
    for (std::size_t p = 0; p < mono.size(); ++p) {
      val += mono[p] * std::pow(r, p);
      if (p >= 1) d1 += p * mono[p] * std::pow(r, p - 1);
      if (p >= 2) d2 += p * (p - 1.0) * mono[p] * std::pow(r, p - 2);
    }
    const double expect = r * r * d2 + 2 * r * d1 + (r * r - 2) * val;
    CHECK(std::abs(c2_eval(au_re, r) - expect) < 1e-10);
  }
}

TEST_CASE("Dirichlet Helmholtz examples") {
  const int size = 9;
  // ∇²u = −6, u(1) = 0 → 1 − r².
  const auto u = solve_helmholtz_dirichlet(0, 0, 0.0, unit(size, 0, -6.0), 0.0);
  auto expect = unit(size, 0, 0.5);
  expect[2] = -0.5;
  CHECK(max_abs_diff(u, expect) < 1e-12);
  // Harmonic extension of Y_1^0: profile r.
  const auto h = solve_helmholtz_dirichlet(1, 0, 0.0, std::vector<Complex>(size), 1.0);
  CHECK(max_abs_diff(h, unit(size, 1)) < 1e-12);
  CHECK_THROWS_AS(solve_helmholtz_dirichlet(1, 2, 0.0, std::vector<Complex>(size), 1.0), InvalidParameter);
}

TEST_CASE("integral-condition examples") {
  const int size = 9;
  const auto u = solve_helmholtz_integral(1, 0, 0.0, std::vector<Complex>(size), 1.0);
  CHECK(max_abs_diff(u, unit(size, 1, -5.0)) < 1e-12);
  const auto z = solve_helmholtz_integral(2, 1, 0.0, std::vector<Complex>(size), 0.0);
  CHECK(max_abs_diff(z, std::vector<Complex>(size)) == 0.0);
  CHECK(max_abs_diff(solve_helmholtz_integral(0, 0, 0.0, unit(size, 0), 1.0), std::vector<Complex>(size)) == 0.0);
  // Dropped row keeps the parity classes square.
  CHECK(integral_dropped_row(1, 9) == 7);
  CHECK(integral_dropped_row(2, 9) == 8);
}

TEST_CASE("solves agree with dense solves and reproduce retained rows") {
  for (int size : {17, 33, 48}) {
    for (int l : {1, 2, 7}) {
      const auto f = random_profile(size, l % 2, 100 + size + l);
      for (double k2 : {0.0, -250.0, 3.0}) {
        for (BcKind kind : {BcKind::Dirichlet, BcKind::Integral}) {
          const Complex value(0.3, -0.7);
          const AlmostBandedSystem sys = helmholtz_system(l, k2, f, kind, value);
          const auto x = kind == BcKind::Dirichlet ? solve_helmholtz_dirichlet(l, 0, k2, f, value)
                                                   : solve_helmholtz_integral(l, 0, k2, f, value);
          const auto ref = dense_solve(sys);
          double err = 0, scale = 0;
          for (int k = 0; k < size; ++k) {
            err = std::max(err, std::abs(x[k] - ref[k]));
            scale = std::max(scale, std::abs(ref[k]));
          }
          CHECK(err < 1e-9 * scale);
          CHECK(residual(sys, x) < 1e-10);
          if (kind == BcKind::Integral) {
            const auto& mu = clenshaw_curtis_moments(l, size);
            Complex s{};
            for (int k = 0; k < size; ++k) s += mu[k] * x[k];
            CHECK(std::abs(s + value) < 1e-12);
          } else {
            // Parity: data (g, (−1)^l g) gives a profile with only k + l even.
            double odd = 0;
            for (int k = 0; k < size; ++k)
              if ((k + l) % 2) odd = std::max(odd, std::abs(x[k]));
            CHECK(odd < 1e-10 * scale);
          }
        }
      }
      for (const GeneralizedParams p : {GeneralizedParams{1.0, -8.13e-3, 1.65e-5, 1e-3},
                                        GeneralizedParams{2.0, 0.01, 0.0, 1e-2}}) {
        for (BcKind kind : {BcKind::Dirichlet, BcKind::Integral}) {
          const AlmostBandedSystem sys = generalized_system(l, p, f, kind, 0.4);
          const auto u = solve_generalized_mode(l, 0, p, f, kind, 0.4);
          const auto ref = dense_solve(sys);
          const int blocks = generalized_block_count(p);
          INFO("size=" << size << " l=" << l << " blocks=" << blocks << " kind=" << to_string(kind));
          double err = 0, scale = 0;
          for (int k = 0; k < size; ++k) {
            err = std::max(err, std::abs(u[k] - ref[blocks * k]));
            scale = std::max(scale, std::abs(ref[blocks * k]));
          }
          CHECK(err < 1e-9 * scale);
          INFO("size=" << size << " l=" << l << " blocks=" << blocks << " kind=" << to_string(kind));
          const auto full = AlmostBandedQR(sys.matrix).solve(sys.rhs);
          CHECK(residual(sys, full) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("generalized solve reduces to modified Helmholtz without hyperviscosity") {
  const int size = 17;
  const GeneralizedParams p{0.5, 0.0, 0.0, 1e-2};
  const auto rhs = random_profile(size, 1, 7);
  std::vector<Complex> f(rhs);
  for (auto& v : f) v /= -p.gamma0;
  const double k2 = -1.0 / (p.gamma0 * p.dt);
  CHECK(max_abs_diff(solve_generalized_mode(3, 1, p, rhs, BcKind::Dirichlet, 0.2),
                     solve_helmholtz_dirichlet(3, 1, k2, f, 0.2)) < 1e-11);
  CHECK(max_abs_diff(solve_generalized_mode(3, 1, p, rhs, BcKind::Integral, 0.2),
                     solve_helmholtz_integral(3, 1, k2, f, 0.2)) < 1e-11);
  CHECK(max_abs_diff(solve_generalized_mode(2, 0, GeneralizedParams{1, -0.1, 0.01, 1e-3}, std::vector<Complex>(size),
                                            BcKind::Dirichlet, 0.0),
                     std::vector<Complex>(size)) == 0.0);
}

TEST_CASE("generalized solve recovers manufactured solutions") {
  const int size = 21;
  const double dt = 1e-2;
  // u* = r for l = 1 is harmonic, so all Laplacian terms vanish.
  for (const GeneralizedParams p : {GeneralizedParams{1.0, -8.13e-3, 1.65e-5, dt}, GeneralizedParams{1.0, 0.2, 0.0, dt},
                                    GeneralizedParams{3.0, 0.0, 0.0, dt}}) {
    const auto u = solve_generalized_mode(1, 0, p, unit(size, 1, 1.0 / dt), BcKind::Dirichlet, 1.0);
    CHECK(max_abs_diff(u, unit(size, 1)) < 1e-10);
  }

  // Non-harmonic u* = r^l Σ c_j r^{2j} with ∇²u* and ∇⁴u* vanishing at r = 1.
  const int l = 2;
  const GeneralizedParams p{0.7, -0.05, 0.002, dt};
  auto lap = [l](const std::vector<double>& mono) {
    std::vector<double> out(mono.size(), 0.0);
    for (std::size_t a = 2; a < mono.size(); ++a) out[a - 2] = (a * (a + 1.0) - l * (l + 1.0)) * mono[a];
    return out;
  };
  auto at_one = [](const std::vector<double>& mono) {
    double s = 0;
    for (double v : mono) s += v;
    return s;
  };
  std::vector<double> base(16, 0.0), e3(16, 0.0), e4(16, 0.0);
  base[2] = 1.0;
  base[4] = -0.4;
  base[6] = 0.3;
  e3[8] = 1.0;
  e4[10] = 1.0;
  // Solve for the r^8 and r^10 weights that zero ∇²u*(1) and ∇⁴u*(1).
  const double a11 = at_one(lap(e3)), a12 = at_one(lap(e4));
  const double a21 = at_one(lap(lap(e3))), a22 = at_one(lap(lap(e4)));
  const double b1 = -at_one(lap(base)), b2 = -at_one(lap(lap(base)));
  const double det = a11 * a22 - a12 * a21;
  std::vector<double> mono = base;
  mono[8] = (b1 * a22 - a12 * b2) / det;
  mono[10] = (a11 * b2 - a21 * b1) / det;
  const auto l1 = lap(mono), l2 = lap(l1), l3 = lap(l2);
  std::vector<double> rhs_mono(mono.size());
  for (std::size_t a = 0; a < mono.size(); ++a)
    rhs_mono[a] = mono[a] / dt - p.gamma0 * l1[a] + p.gamma2 * l2[a] - p.gamma4 * l3[a];
  const auto expect = chebyshev_from_monomials(mono, size);
  const auto rhs = chebyshev_from_monomials(rhs_mono, size);

  const auto ud = solve_generalized_mode(l, 0, p, rhs, BcKind::Dirichlet, at_one(mono));
  CHECK(max_abs_diff(ud, expect) < 1e-10);

  double moment = 0;  // ∫_0^1 r^{l+2} u* dr
  for (std::size_t a = 0; a < mono.size(); ++a) moment += mono[a] / (a + l + 3.0);
  const auto ui = solve_generalized_mode(l, 0, p, rhs, BcKind::Integral, -moment);
  CHECK(max_abs_diff(ui, expect) < 1e-10);
  CHECK(std::abs(cheb_eval(ui, 1.0) - at_one(mono)) < 1e-10);
}

TEST_CASE("full-field Helmholtz problem is solved to its discrete residual") {
  // ∇²u + u = (1 − r²) cos²(10x + 5y), u = 0 on the sphere, mode by mode.
  const int n = 32;
  const CshCoeffs f = cff_to_csh(cff_analysis(
      [](double x, double y, double z) {
        const double c = std::cos(10 * x + 5 * y);
        return (1 - (x * x + y * y + z * z)) * c * c;
      },
      n));
  double res = 0.0, scale = 0.0;
  for (int l = 0; l <= n / 2; ++l)
    for (int m = -l; m <= l; ++m) {
      const AlmostBandedSystem sys = helmholtz_system(l, 1.0, f.profile(l, m), BcKind::Dirichlet, 0.0);
      const auto u = solve_helmholtz_dirichlet(l, m, 1.0, f.profile(l, m), 0.0);
      const auto back = sys.matrix.apply(u);
      for (std::size_t i = 0; i < back.size(); ++i) {
        res = std::max(res, std::abs(back[i] - sys.rhs[i]));
        scale = std::max(scale, std::abs(sys.rhs[i]));
      }
    }
  CHECK(res <= 1e-8 * scale);
}
