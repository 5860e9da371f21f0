#pragma once

// Chebyshev–Fourier–Fourier (CFF) representation of scalar fields on the ball.
//
// A field f(r, λ, θ) is extended by the double Fourier sphere construction to
// (r, λ, θ) ∈ [-1,1] × [-π,π] × [-π,π] and truncated as
//
//   f ≈ Σ_{k=0}^{n/2} Σ_{l=-n/2}^{n/2} Σ_{m=-n/2}^{n/2} f_klm T_k(r) e^{ilλ} e^{imθ}.
//
// Storage is k-major, then l, then m; the l and m axes are held in FFT-natural
// order (0, 1, ..., n/2, -n/2, ..., -1) and exposed through signed indices.
//
// Transform conventions (fixed for the whole library):
//   * radial: Chebyshev–Lobatto nodes r_j = cos(jπ/N), N = n/2, DCT-I pair with
//     c_k = (2/N) Σ'' f_j cos(jkπ/N), halved at k = 0 and k = N;
//   * angular: n equispaced nodes per period, c = (1/n) Σ f_j e^{-i w φ_j}.
//     A grid of n nodes cannot separate the wavenumbers ±n/2, so analysis
//     splits the Nyquist bin equally between them and synthesis adds them.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ballns {

using Complex = std::complex<double>;

class CffCoeffs {
 public:
  /// Zero field. n must be even and at least 4.
  explicit CffCoeffs(int n);

  int n() const noexcept { return n_; }
  int half() const noexcept { return n_ / 2; }
  int radial_size() const noexcept { return n_ / 2 + 1; }
  int angular_size() const noexcept { return n_ + 1; }

  /// Signed access: k ∈ [0, n/2], l, m ∈ [-n/2, n/2].
  Complex& operator()(int k, int l, int m) noexcept { return data_[offset(k, l, m)]; }
  const Complex& operator()(int k, int l, int m) const noexcept {
    return data_[offset(k, l, m)];
  }

  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }

  /// Position of wavenumber w ∈ [-n/2, n/2] along an angular axis.
  int slot(int w) const noexcept { return w >= 0 ? w : w + n_ + 1; }
  /// Wavenumber stored at an angular slot.
  int wavenumber(int slot) const noexcept { return slot <= n_ / 2 ? slot : slot - n_ - 1; }

  std::size_t offset(int k, int l, int m) const noexcept {
    const auto a = static_cast<std::size_t>(angular_size());
    return (static_cast<std::size_t>(k) * a + static_cast<std::size_t>(slot(l))) * a +
           static_cast<std::size_t>(slot(m));
  }

  double max_abs() const noexcept;

  CffCoeffs& operator+=(const CffCoeffs& other);
  CffCoeffs& operator-=(const CffCoeffs& other);
  CffCoeffs& operator*=(Complex scale) noexcept;

 private:
  int n_;
  std::vector<Complex> data_;
};

CffCoeffs operator+(CffCoeffs a, const CffCoeffs& b);
CffCoeffs operator-(CffCoeffs a, const CffCoeffs& b);
CffCoeffs operator*(Complex scale, CffCoeffs a);

/// Values on the tensor grid r_k = cos(2kπ/n), λ_l = 2lπ/n, θ_m = 2mπ/n with
/// k ∈ [0, n/2] and l, m ∈ [-n/2, n/2]. The endpoints l, m = ±n/2 coincide
/// modulo 2π and carry identical values.
class GridValues {
 public:
  explicit GridValues(int n);

  int n() const noexcept { return n_; }
  Complex& operator()(int k, int l, int m) noexcept { return data_[offset(k, l, m)]; }
  const Complex& operator()(int k, int l, int m) const noexcept {
    return data_[offset(k, l, m)];
  }
  std::span<const Complex> data() const noexcept { return data_; }

  double radius(int k) const;
  double azimuth(int l) const;
  double polar(int m) const;

  struct Point {
    double x, y, z;
  };
  /// Cartesian image (r cos λ sin θ, r sin λ sin θ, r cos θ) of grid node (k, l, m).
  Point cartesian(int k, int l, int m) const;

 private:
  std::size_t offset(int k, int l, int m) const noexcept {
    const auto a = static_cast<std::size_t>(n_ + 1);
    return (static_cast<std::size_t>(k) * a + static_cast<std::size_t>(l + n_ / 2)) * a +
           static_cast<std::size_t>(m + n_ / 2);
  }

  int n_;
  std::vector<Complex> data_;
};

/// Values on the periodic grid (no duplicated endpoints): layout [k][jλ][jθ] with
/// jλ, jθ ∈ [0, n). This is the working format of the fast transforms.
struct PeriodicGrid {
  int n = 0;
  std::vector<Complex> values;

  explicit PeriodicGrid(int n_);
  Complex& operator()(int k, int jl, int jm) noexcept {
    return values[(static_cast<std::size_t>(k) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(jl)) *
                      static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(jm)];
  }
};

using BallSampler = std::function<double(double x, double y, double z)>;

/// Samples `sampler` at the Cartesian images of the grid and returns the CFF
/// coefficients. Throws InvalidParameter for odd n or n < 4.
CffCoeffs cff_analysis(const BallSampler& sampler, int n);
CffCoeffs cff_analysis(const GridValues& values);
CffCoeffs cff_analysis(const PeriodicGrid& grid);

/// Analysis truncated to n_out <= grid.n; the grid is used as workspace. With
/// n_out < grid.n no Nyquist bin is kept.
CffCoeffs cff_analysis(PeriodicGrid&& grid, int n_out);

GridValues cff_synthesis(const CffCoeffs& c);
PeriodicGrid synthesize_periodic(const CffCoeffs& c);
/// Values of c on the periodic grid of size grid_n >= c.n(), equal to
/// synthesize_periodic(resize(c, grid_n)) but transforming only stored lines.
PeriodicGrid synthesize_periodic(const CffCoeffs& c, int grid_n);

/// Smallest grid size >= 2n + 2 that is a multiple of 4 with no prime factor
/// above 7. Products of two size-n fields are sampled there without aliasing.
int product_grid_size(int n);

// Fields of smooth ball functions carry only Chebyshev modes with k ≡ m
// (mod 2), so f(−r, λ, θ) = f(r, λ, θ + π) and the slices with r >= 0
// (k <= grid_n/4) determine the rest. The two functions below work on those
// slices only; grid_n must be a multiple of 4.

/// As synthesize_periodic(c, grid_n) on the slices k <= grid_n/4; the other
/// slices are left zero.
PeriodicGrid synthesize_regular(const CffCoeffs& c, int grid_n);

/// Analysis to size n_out < grid.n from the slices k <= grid.n/4, keeping the
/// azimuthal wavenumbers |l| <= l_max. The grid is used as workspace.
CffCoeffs analyze_regular(PeriodicGrid&& grid, int n_out, int l_max);

/// Direct evaluation of the truncated series. Throws DomainError for |r| > 1.
Complex eval_point(const CffCoeffs& c, double r, double lambda, double theta);

CffCoeffs diff_r(const CffCoeffs& c);
CffCoeffs diff_lambda(const CffCoeffs& c);
CffCoeffs diff_theta(const CffCoeffs& c);

/// Pointwise product. With `dealias`, both factors are zero-padded to the even
/// size nearest above 3n/2, multiplied on that grid and truncated back to n.
CffCoeffs multiply_pointwise(const CffCoeffs& a, const CffCoeffs& b, bool dealias);

/// Size used by the 3/2 rule for a given n.
int dealiased_size(int n);

/// Zero-pads (n_new > n) or truncates (n_new < n) the coefficient tensor.
CffCoeffs resize(const CffCoeffs& c, int n_new);

// Coefficient-space multipliers. Content pushed beyond the stored band is
// discarded, so callers pad first when exactness matters.
CffCoeffs mul_r(const CffCoeffs& c);
CffCoeffs mul_sin_theta(const CffCoeffs& c);
CffCoeffs mul_cos_theta(const CffCoeffs& c);
CffCoeffs mul_cos_lambda(const CffCoeffs& c);
CffCoeffs mul_sin_lambda(const CffCoeffs& c);

/// Exact division by r: returns q with r·q = c - ρ, where ρ(λ, θ) is the value
/// of c at r = 0. `residual` (optional) receives max|ρ| over its coefficients.
CffCoeffs div_r(const CffCoeffs& c, double* residual = nullptr);

/// Exact division by sin θ: returns q with sin θ·q = c - (a + b cos θ), where
/// a ± b are the pole values. `residual` receives max(|a|, |b|).
CffCoeffs div_sin_theta(const CffCoeffs& c, double* residual = nullptr);

}  // namespace ballns
