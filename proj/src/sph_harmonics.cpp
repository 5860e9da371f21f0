#include "ballns/sph_harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "ballns/errors.hpp"
#include "ballns/timing.hpp"
#include "ballns/parallel.hpp"

namespace ballns {

namespace {

constexpr double kPi = std::numbers::pi;

void require_mode(int l, int m) {
  if (l < 0 || std::abs(m) > l) {
    throw InvalidParameter("spherical harmonic index out of range: l=" + std::to_string(l) +
                           ", m=" + std::to_string(m));
  }
}

}  // namespace

std::vector<double> legendre_table(int L, double x, double s) {
  std::vector<double> p(legendre_index(L, L) + 1, 0.0);
  p[0] = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 1; m <= L; ++m) {
    p[legendre_index(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[legendre_index(m - 1, m - 1)];
  }
  for (int m = 0; m < L; ++m) {
    p[legendre_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * p[legendre_index(m, m)];
    for (int l = m + 2; l <= L; ++l) {
      const double l2 = static_cast<double>(l) * l, m2 = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m2) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p[legendre_index(l, m)] = a * (x * p[legendre_index(l - 1, m)] - b * p[legendre_index(l - 2, m)]);
    }
  }
  return p;
}

std::vector<double> legendre_table_dtheta(int L, std::span<const double> p) {
  std::vector<double> d(p.size(), 0.0);
  for (int l = 1; l <= L; ++l) {
    for (int m = 0; m <= l; ++m) {
      const double up = m + 1 <= l ? std::sqrt((l - m) * (l + m + 1.0)) * p[legendre_index(l, m + 1)] : 0.0;
      // P̃_l^{-1} = -P̃_l^1 when m = 0.
      const double down = m >= 1 ? std::sqrt((l + m) * (l - m + 1.0)) * p[legendre_index(l, m - 1)]
                                 : -std::sqrt(l * (l + 1.0)) * p[legendre_index(l, 1)];
      d[legendre_index(l, m)] = 0.5 * (up - down);
    }
  }
  return d;
}

double normalized_legendre(int l, int m, double x) {
  require_mode(l, m);
  if (!(std::abs(x) <= 1.0)) throw DomainError("Legendre argument outside [-1, 1]");
  const int am = std::abs(m);
  const auto table = legendre_table(l, x, std::sqrt(std::max(0.0, 1.0 - x * x)));
  const double v = table[legendre_index(l, am)];
  return (m < 0 && am % 2) ? -v : v;
}

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(count), 0.0);
  weights.assign(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < count; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (count + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = count * (x * p1 - p0) / (x * x - 1.0);
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

// ---------------------------------------------------------------------------
// Coefficient containers

SurfaceHarmonicCoeffs::SurfaceHarmonicCoeffs(int L) : L_(L) {
  if (L < 0) throw InvalidParameter("negative spherical harmonic degree");
  data_.assign(static_cast<std::size_t>((L + 1) * (L + 1)), Complex{});
}

Complex& SurfaceHarmonicCoeffs::operator()(int l, int m) {
  if (l > L_) throw InvalidParameter("degree above band limit: l=" + std::to_string(l));
  require_mode(l, m);
  return data_[index(l, m)];
}

const Complex& SurfaceHarmonicCoeffs::operator()(int l, int m) const {
  if (l > L_) throw InvalidParameter("degree above band limit: l=" + std::to_string(l));
  require_mode(l, m);
  return data_[index(l, m)];
}

double SurfaceHarmonicCoeffs::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

CshCoeffs::CshCoeffs(int n) : n_(n) {
  if (n < 4 || n % 2) {
    throw InvalidParameter("discretization parameter n must be even and >= 4, got " + std::to_string(n));
  }
  const auto L = static_cast<std::size_t>(n / 2);
  data_.assign((L + 1) * (L + 1) * (L + 1), Complex{});
}

double CshCoeffs::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

CshCoeffs& CshCoeffs::operator+=(const CshCoeffs& other) {
  if (other.n_ != n_) throw InvalidParameter("CSH size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

CshCoeffs& CshCoeffs::operator-=(const CshCoeffs& other) {
  if (other.n_ != n_) throw InvalidParameter("CSH size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

CshCoeffs& CshCoeffs::operator*=(Complex scale) noexcept {
  for (auto& v : data_) v *= scale;
  return *this;
}

namespace {

// Orthonormal basis (columns, row-major size × dim) of span{r^l T_2j : l + 2j < size}.
std::vector<double> regular_basis(int l, int size) {
  using LD = long double;
  const int dim = (size - 1 - l) / 2 + 1;
  std::vector<std::vector<LD>> cols;
  for (int j = 0; j < dim; ++j) {
    std::vector<LD> c(static_cast<std::size_t>(size), 0.0L), next;
    c[static_cast<std::size_t>(2 * j)] = 1.0L;
    for (int p = 0; p < l; ++p) {  // multiply by r: r T_k = (T_{k-1} + T_{k+1}) / 2
      next.assign(c.size(), 0.0L);
      for (int k = 0; k < size; ++k) {
        const LD v = c[static_cast<std::size_t>(k)];
        if (v == 0.0L) continue;
        if (k == 0) {
          next[1] += v;
          continue;
        }
        next[static_cast<std::size_t>(k - 1)] += 0.5L * v;
        if (k + 1 < size) next[static_cast<std::size_t>(k + 1)] += 0.5L * v;
      }
      c.swap(next);
    }
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : cols) {
        LD dot = 0.0L;
        for (int k = 0; k < size; ++k) dot += q[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(k)];
        for (int k = 0; k < size; ++k) c[static_cast<std::size_t>(k)] -= dot * q[static_cast<std::size_t>(k)];
      }
    LD norm = 0.0L;
    for (LD v : c) norm += v * v;
    norm = std::sqrt(norm);
    for (LD& v : c) v /= norm;
    cols.push_back(std::move(c));
  }
  std::vector<double> out(static_cast<std::size_t>(size * dim));
  for (int k = 0; k < size; ++k)
    for (int j = 0; j < dim; ++j)
      out[static_cast<std::size_t>(k * dim + j)] = static_cast<double>(cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
  return out;
}

const std::vector<double>& regular_basis_cached(int l, int size) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<double>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({l, size});
  if (it == cache.end()) it = cache.emplace(std::make_pair(l, size), regular_basis(l, size)).first;
  return it->second;
}

}  // namespace

void project_regular(CshCoeffs& u) {
  const int size = u.radial_size();
  for (int l = 0; l <= u.degree(); ++l) {
    const auto& q = regular_basis_cached(l, size);
    const int dim = (size - 1 - l) / 2 + 1;
    std::vector<Complex> coef(static_cast<std::size_t>(dim));
    for (int m = -l; m <= l; ++m) {
      auto p = u.profile(l, m);
      std::fill(coef.begin(), coef.end(), Complex{});
      for (int k = 0; k < size; ++k)
        for (int j = 0; j < dim; ++j) coef[static_cast<std::size_t>(j)] += q[static_cast<std::size_t>(k * dim + j)] * p[static_cast<std::size_t>(k)];
      for (int k = 0; k < size; ++k) {
        Complex acc{};
        for (int j = 0; j < dim; ++j) acc += q[static_cast<std::size_t>(k * dim + j)] * coef[static_cast<std::size_t>(j)];
        p[static_cast<std::size_t>(k)] = acc;
      }
    }
  }
}

CshCoeffs resize(const CshCoeffs& u, int n_new) {
  CshCoeffs out(n_new);
  const int L = std::min(u.degree(), out.degree());
  const int K = std::min(u.radial_size(), out.radial_size());
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m)
      for (int k = 0; k < K; ++k) out(k, l, m) = u(k, l, m);
  return out;
}

// ---------------------------------------------------------------------------
// CFF <-> CSH

namespace {

// Dense per-order transform matrices. For azimuthal order a:
//   analysis[a]  (L+1) × (n_in+1): u_l = Σ_m analysis[l][slot m] c_m
//   synthesis[a] (n+1) × (L+1):    c_m = Σ_l synthesis[slot m][l] u_l
struct AnalysisPlan {
  int n_in = 0, L = 0;
  std::vector<std::vector<Complex>> analysis;  // indexed by a + L
};

struct SynthesisPlan {
  int n = 0, L = 0;
  std::vector<std::vector<Complex>> synthesis;  // indexed by slot(a)
};

double order_sign(int a) { return (a < 0 && (-a) % 2) ? -1.0 : 1.0; }

// Gauss–Legendre in cos θ with enough nodes for Fourier content up to n_in/2
// against harmonics of degree L.
std::shared_ptr<const AnalysisPlan> build_analysis(int n_in, int L) {
  auto plan = std::make_shared<AnalysisPlan>();
  const int h = n_in / 2, A = n_in + 1;
  plan->n_in = n_in;
  plan->L = L;
  plan->analysis.resize(static_cast<std::size_t>(2 * L + 1));

  std::vector<double> x, w;
  gauss_legendre((h + L) / 2 + 2, x, w);
  std::vector<std::vector<double>> tables;
  for (double xq : x) tables.push_back(legendre_table(L, xq, std::sqrt(1.0 - xq * xq)));

  auto slot = [n_in](int m) { return m >= 0 ? m : m + n_in + 1; };
  for (int a = -L; a <= L; ++a) {
    const int am = std::abs(a);
    auto& an = plan->analysis[static_cast<std::size_t>(a + L)];
    an.assign(static_cast<std::size_t>((L + 1) * A), Complex{});
    for (int l = am; l <= L; ++l) {
      for (std::size_t q = 0; q < x.size(); ++q) {
        const double th = std::acos(x[q]);
        const double weight = 2.0 * kPi * w[q] * order_sign(a) * tables[q][legendre_index(l, am)];
        for (int m = -h; m <= h; ++m) {
          an[static_cast<std::size_t>(l * A + slot(m))] += weight * std::polar(1.0, m * th);
        }
      }
    }
  }
  return plan;
}

std::shared_ptr<const SynthesisPlan> build_synthesis(int n) {
  auto plan = std::make_shared<SynthesisPlan>();
  const int h = n / 2, L = n / 2, A = n + 1;
  plan->n = n;
  plan->L = L;
  plan->synthesis.resize(static_cast<std::size_t>(A));

  const int M = 2 * h + 2;
  std::vector<std::vector<double>> ftables;
  for (int j = 0; j < M; ++j) {
    const double th = 2.0 * kPi * j / M;
    ftables.push_back(legendre_table(L, std::cos(th), std::sin(th)));
  }

  auto slot = [n](int w) { return w >= 0 ? w : w + n + 1; };
  for (int a = -h; a <= h; ++a) {
    const int am = std::abs(a);
    auto& sy = plan->synthesis[static_cast<std::size_t>(slot(a))];
    sy.assign(static_cast<std::size_t>(A * (L + 1)), Complex{});
    for (int l = am; l <= L; ++l) {
      for (int j = 0; j < M; ++j) {
        const double th = 2.0 * kPi * j / M;
        const double v = order_sign(a) * ftables[static_cast<std::size_t>(j)][legendre_index(l, am)] / M;
        for (int m = -h; m <= h; ++m) {
          sy[static_cast<std::size_t>(slot(m) * (L + 1) + l)] += v * std::polar(1.0, -m * th);
        }
      }
    }
  }
  return plan;
}

std::shared_ptr<const AnalysisPlan> analysis_plan(int n_in, int L) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const AnalysisPlan>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({n_in, L});
  if (it == cache.end()) it = cache.emplace(std::make_pair(n_in, L), build_analysis(n_in, L)).first;
  return it->second;
}

std::shared_ptr<const SynthesisPlan> synthesis_plan(int n) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const SynthesisPlan>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_synthesis(n)).first;
  return it->second;
}

}  // namespace

CshCoeffs cff_to_csh(const CffCoeffs& c) { return cff_to_csh(c, c.n()); }

CshCoeffs cff_to_csh(const CffCoeffs& c, int n_out) {
  StageScope timer(Stage::CshConversion);
  if (n_out > c.n()) throw InvalidParameter("cff_to_csh: output size exceeds input size");
  CshCoeffs u(n_out);
  const int L = u.degree(), A = c.angular_size();
  const auto plan = analysis_plan(c.n(), L);
  parallel_for(-L, L + 1, [&](std::ptrdiff_t ai) {
    const int a = static_cast<int>(ai);
    const auto& mat = plan->analysis[static_cast<std::size_t>(a + L)];
    for (int k = 0; k <= L; ++k) {
      const Complex* row = &c(k, a, 0);  // slots 0..n along m are contiguous
      for (int l = std::abs(a); l <= L; ++l) {
        const Complex* coef = mat.data() + static_cast<std::size_t>(l * A);
        Complex acc{};
        for (int s = 0; s < A; ++s) acc += coef[s] * row[s];
        u(k, l, a) = acc;
      }
    }
  });
  return u;
}

std::vector<Complex> cff_to_csh_profiles(const CffCoeffs& c, int L) {
  StageScope timer(Stage::CshConversion);
  if (L < 0 || L > c.half()) throw InvalidParameter("cff_to_csh_profiles: degree out of range");
  const int K = c.half(), A = c.angular_size();
  const std::size_t len = static_cast<std::size_t>(K + 1);
  std::vector<Complex> out(static_cast<std::size_t>((L + 1) * (L + 1)) * len);
  const auto plan = analysis_plan(c.n(), L);
  parallel_for(-L, L + 1, [&](std::ptrdiff_t ai) {
    const int a = static_cast<int>(ai);
    const auto& mat = plan->analysis[static_cast<std::size_t>(a + L)];
    for (int k = 0; k <= K; ++k) {
      const Complex* row = &c(k, a, 0);
      for (int l = std::abs(a); l <= L; ++l) {
        const Complex* coef = mat.data() + static_cast<std::size_t>(l * A);
        Complex acc{};
        for (int s = 0; s < A; ++s) acc += coef[s] * row[s];
        out[static_cast<std::size_t>(l * l + l + a) * len + static_cast<std::size_t>(k)] = acc;
      }
    }
  });
  return out;
}

CffCoeffs csh_to_cff(const CshCoeffs& u) {
  StageScope timer(Stage::CshConversion);
  const int n = u.n(), h = n / 2, N = n / 2, A = n + 1;
  const auto plan = synthesis_plan(n);
  const int L = plan->L;
  CffCoeffs c(n);
  parallel_for(-h, h + 1, [&](std::ptrdiff_t ai) {
    const int a = static_cast<int>(ai);
    const int am = std::abs(a);
    const auto& mat = plan->synthesis[static_cast<std::size_t>(c.slot(a))];
    std::vector<Complex> prof(static_cast<std::size_t>(L + 1));
    for (int k = 0; k <= N; ++k) {
      for (int l = am; l <= L; ++l) prof[static_cast<std::size_t>(l)] = u(k, l, a);
      Complex* row = &c(k, a, 0);
      for (int s = 0; s < A; ++s) {
        const Complex* coef = mat.data() + static_cast<std::size_t>(s * (L + 1));
        Complex acc{};
        for (int l = am; l <= L; ++l) acc += coef[l] * prof[static_cast<std::size_t>(l)];
        row[s] = acc;
      }
    }
  });
  return c;
}

Complex eval_csh(const CshCoeffs& u, double r, double lambda, double theta) {
  if (!(std::abs(r) <= 1.0 + 1e-14)) {
    throw DomainError("radial coordinate outside [-1, 1]: " + std::to_string(r));
  }
  const int L = u.degree(), N = u.degree();
  const auto table = legendre_table(L, std::cos(theta), std::sin(theta));
  std::vector<double> cheb(static_cast<std::size_t>(N + 1));
  cheb[0] = 1.0;
  if (N >= 1) cheb[1] = r;
  for (int k = 2; k <= N; ++k) cheb[k] = 2.0 * r * cheb[k - 1] - cheb[k - 2];
  Complex total{};
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      const auto prof = u.profile(l, m);
      Complex radial{};
      for (int k = 0; k <= N; ++k) radial += cheb[static_cast<std::size_t>(k)] * prof[static_cast<std::size_t>(k)];
      const int am = std::abs(m);
      const double sign = (m < 0 && am % 2) ? -1.0 : 1.0;
      total += radial * sign * table[legendre_index(l, am)] * std::polar(1.0, m * lambda);
    }
  return total;
}

// ---------------------------------------------------------------------------
// Surface transforms

SphereGrid::SphereGrid(int L_) : L(L_) {
  if (L_ < 0) throw InvalidParameter("negative spherical harmonic degree");
  gauss_legendre(L_ + 2, cos_theta, weights);
  const int count = 2 * L_ + 2;
  for (int j = 0; j < count; ++j) lambda.push_back(2.0 * kPi * j / count);
}

double SphereGrid::theta(std::size_t q) const { return std::acos(cos_theta[q]); }

SurfaceHarmonicCoeffs surface_analysis(const SphereGrid& grid, std::span<const Complex> values) {
  const int L = grid.L;
  const std::size_t J = grid.azimuth_count();
  if (values.size() != grid.polar_count() * J) {
    throw InvalidParameter("surface analysis: value count does not match grid");
  }
  SurfaceHarmonicCoeffs g(L);
  std::vector<Complex> fm(static_cast<std::size_t>(2 * L + 1));
  for (std::size_t q = 0; q < grid.polar_count(); ++q) {
    const double x = grid.cos_theta[q];
    const auto table = legendre_table(L, x, std::sqrt(1.0 - x * x));
    // Azimuthal Fourier coefficients ∫ f e^{-imλ} dλ by the trapezoid rule.
    for (int m = -L; m <= L; ++m) {
      Complex acc{};
      for (std::size_t j = 0; j < J; ++j) acc += values[q * J + j] * std::polar(1.0, -m * grid.lambda[j]);
      fm[static_cast<std::size_t>(m + L)] = acc * (2.0 * kPi / static_cast<double>(J));
    }
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m) {
        const int am = std::abs(m);
        const double sign = (m < 0 && am % 2) ? -1.0 : 1.0;
        g(l, m) += grid.weights[q] * sign * table[legendre_index(l, am)] * fm[static_cast<std::size_t>(m + L)];
      }
  }
  return g;
}

SurfaceHarmonicCoeffs surface_analysis(const SphereFunction& f, int L) {
  const SphereGrid grid(L);
  std::vector<Complex> values;
  values.reserve(grid.polar_count() * grid.azimuth_count());
  for (std::size_t q = 0; q < grid.polar_count(); ++q)
    for (double lam : grid.lambda) values.push_back(f(lam, grid.theta(q)));
  return surface_analysis(grid, values);
}

std::vector<Complex> surface_synthesis(const SurfaceHarmonicCoeffs& g, const SphereGrid& grid) {
  std::vector<Complex> out;
  out.reserve(grid.polar_count() * grid.azimuth_count());
  for (std::size_t q = 0; q < grid.polar_count(); ++q)
    for (double lam : grid.lambda) out.push_back(surface_eval(g, lam, grid.theta(q)));
  return out;
}

Complex surface_eval(const SurfaceHarmonicCoeffs& g, double lambda, double theta) {
  const int L = g.degree();
  const auto table = legendre_table(L, std::cos(theta), std::sin(theta));
  Complex total{};
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      const int am = std::abs(m);
      const double sign = (m < 0 && am % 2) ? -1.0 : 1.0;
      total += g(l, m) * sign * table[legendre_index(l, am)] * std::polar(1.0, m * lambda);
    }
  return total;
}

}  // namespace ballns
