#pragma once

// Orthonormal spherical harmonics Y_l^m(θ, λ) = P̃_l^m(cos θ) e^{imλ} (Condon–Shortley
// phase inside P̃, P̃_l^{-m} = (-1)^m P̃_l^m), surface transforms, and conversion
// between the CFF and Chebyshev–spherical-harmonic (CSH) representations
//
//   f(r, λ, θ) = Σ_k Σ_l Σ_{|m|≤l} u_klm T_k(r) Y_l^m(θ, λ).

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ballns/cff.hpp"

namespace ballns {

/// P̃_l^m(x). Throws InvalidParameter for |m| > l or l < 0, DomainError for |x| > 1.
double normalized_legendre(int l, int m, double x);

/// Table of P̃_l^m(cos θ) for 0 <= m <= l <= L evaluated at one polar angle.
/// `sin_theta` may be negative, which yields the odd/even continuation used by
/// the doubled sphere. Layout: index l(l+1)/2 + m.
std::vector<double> legendre_table(int L, double cos_theta, double sin_theta);

/// d/dθ P̃_l^m(cos θ) for the same layout, given the table from legendre_table.
std::vector<double> legendre_table_dtheta(int L, std::span<const double> table);

inline std::size_t legendre_index(int l, int m) {
  return static_cast<std::size_t>(l) * static_cast<std::size_t>(l + 1) / 2 +
         static_cast<std::size_t>(m);
}

/// Spherical-harmonic coefficients g_lm, l <= L, |m| <= l, stored at l² + l + m.
class SurfaceHarmonicCoeffs {
 public:
  explicit SurfaceHarmonicCoeffs(int L);

  int degree() const noexcept { return L_; }
  Complex& operator()(int l, int m);
  const Complex& operator()(int l, int m) const;
  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }
  double max_abs() const noexcept;

  static std::size_t index(int l, int m) {
    return static_cast<std::size_t>(l * l + l + m);
  }

 private:
  int L_;
  std::vector<Complex> data_;
};

/// Chebyshev–spherical-harmonic coefficients u_klm with k, l <= n/2. Storage is
/// mode-major: all k for (l, m) are contiguous, modes ordered by l then m.
class CshCoeffs {
 public:
  explicit CshCoeffs(int n);

  int n() const noexcept { return n_; }
  int degree() const noexcept { return n_ / 2; }
  int radial_size() const noexcept { return n_ / 2 + 1; }

  Complex& operator()(int k, int l, int m) noexcept { return data_[offset(k, l, m)]; }
  const Complex& operator()(int k, int l, int m) const noexcept { return data_[offset(k, l, m)]; }

  /// The radial Chebyshev profile of mode (l, m).
  std::span<Complex> profile(int l, int m) noexcept {
    return std::span<Complex>(data_).subspan(offset(0, l, m), static_cast<std::size_t>(radial_size()));
  }
  std::span<const Complex> profile(int l, int m) const noexcept {
    return std::span<const Complex>(data_).subspan(offset(0, l, m),
                                                   static_cast<std::size_t>(radial_size()));
  }

  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }
  double max_abs() const noexcept;

  std::size_t offset(int k, int l, int m) const noexcept {
    return static_cast<std::size_t>(l * l + l + m) * static_cast<std::size_t>(radial_size()) +
           static_cast<std::size_t>(k);
  }

  CshCoeffs& operator+=(const CshCoeffs& other);
  CshCoeffs& operator-=(const CshCoeffs& other);
  CshCoeffs& operator*=(Complex scale) noexcept;

 private:
  int n_;
  std::vector<Complex> data_;
};

/// Orthogonal projection (in Chebyshev coefficients) of every mode profile onto
/// the profiles of smooth ball functions, r^l q(r²) with q a polynomial. Mode
/// solves leave truncation-level content outside this space.
void project_regular(CshCoeffs& u);

/// Zero-pads or truncates both the radial and the angular degree.
CshCoeffs resize(const CshCoeffs& u, int n_new);

CffCoeffs csh_to_cff(const CshCoeffs& u);

/// Mode profiles of c for degrees l <= L, keeping all c.half() + 1 radial
/// coefficients. Entry (k, l, m) sits at (l² + l + m)(c.half() + 1) + k.
std::vector<Complex> cff_to_csh_profiles(const CffCoeffs& c, int L);
CshCoeffs cff_to_csh(const CffCoeffs& c);
/// Projection of a CFF series onto CSH of size n_out <= c.n(). The radial and
/// azimuthal indices are truncated; the polar quadrature sees all of c, so the
/// result equals cff_to_csh(c) truncated to n_out.
CshCoeffs cff_to_csh(const CffCoeffs& c, int n_out);

/// Evaluates the CSH series at a point. Throws DomainError for |r| > 1.
Complex eval_csh(const CshCoeffs& u, double r, double lambda, double theta);

/// Quadrature grid on the unit sphere for degree L: Gauss–Legendre nodes in
/// cos θ (L + 2 of them) and 2L + 2 equispaced azimuths.
struct SphereGrid {
  int L = 0;
  std::vector<double> cos_theta, weights, lambda;

  explicit SphereGrid(int L_);
  std::size_t polar_count() const noexcept { return cos_theta.size(); }
  std::size_t azimuth_count() const noexcept { return lambda.size(); }
  double theta(std::size_t q) const;
};

using SphereFunction = std::function<Complex(double lambda, double theta)>;

/// Values layout: [q * azimuth_count + j] for polar node q and azimuth j.
SurfaceHarmonicCoeffs surface_analysis(const SphereGrid& grid, std::span<const Complex> values);
SurfaceHarmonicCoeffs surface_analysis(const SphereFunction& g, int L);

std::vector<Complex> surface_synthesis(const SurfaceHarmonicCoeffs& g, const SphereGrid& grid);
Complex surface_eval(const SurfaceHarmonicCoeffs& g, double lambda, double theta);

/// Gauss–Legendre nodes and weights on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace ballns
