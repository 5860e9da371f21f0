#pragma once

// One-dimensional ultraspherical spectral machinery on [-1, 1]: banded
// conversion, differentiation and multiplication operators acting on Chebyshev
// (T), C^(1) and C^(2) coefficient vectors, the almost-banded QR solver and the
// Clenshaw–Curtis moments used by integral conditions.

#include <complex>
#include <span>
#include <vector>

namespace ballns {

using Complex = std::complex<double>;

/// Square real matrix with entries confined to the diagonals -lower..upper.
class BandedMatrix {
 public:
  BandedMatrix(int size, int lower, int upper);

  int size() const noexcept { return size_; }
  int lower() const noexcept { return lower_; }
  int upper() const noexcept { return upper_; }

  /// Entry (i, j); zero outside the declared band.
  double operator()(int i, int j) const noexcept;
  /// Writable entry; (i, j) must lie inside the band.
  double& at(int i, int j);

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<Complex> apply(std::span<const Complex> x) const;

  /// Leading size×size block.
  BandedMatrix truncated(int size) const;
  /// Same matrix with the band shrunk to the outermost nonzero diagonals.
  BandedMatrix trimmed() const;

  std::vector<std::vector<double>> dense() const;

  friend BandedMatrix operator*(const BandedMatrix& a, const BandedMatrix& b);
  friend BandedMatrix operator+(const BandedMatrix& a, const BandedMatrix& b);
  friend BandedMatrix operator*(double s, const BandedMatrix& a);

 private:
  int size_, lower_, upper_;
  std::vector<double> data_;  // row-major, lower+upper+1 slots per row
};

BandedMatrix identity_operator(int size);

/// order 0: T -> C^(1); order 1: C^(1) -> C^(2).
BandedMatrix conversion_operator(int order, int size);

/// order 1: T -> C^(1) coefficients of the derivative; order 2: T -> C^(2) of
/// the second derivative.
BandedMatrix differentiation_operator(int order, int size);

/// Multiplication by a polynomial of degree <= 2, given by its Chebyshev
/// coefficients, acting on C^(2) coefficient vectors.
BandedMatrix multiplication_operator(std::span<const double> chebyshev_poly, int size);

/// Row of an almost-banded matrix lying in the banded part: nonzeros occupy
/// columns [start, start + values.size()).
struct BandedRow {
  int start = 0;
  std::vector<double> values;
};

/// Dense condition rows on top, banded operator rows below. The row count must
/// equal the number of unknowns.
struct AlmostBandedMatrix {
  int size = 0;
  std::vector<std::vector<double>> border;
  std::vector<BandedRow> rows;

  std::vector<std::vector<double>> dense() const;
  std::vector<Complex> apply(std::span<const Complex> x) const;
};

struct AlmostBandedSystem {
  AlmostBandedMatrix matrix;
  std::vector<Complex> rhs;  // border entries first, then operator rows
};

/// Givens QR of an almost-banded matrix. Fill created by the dense rows is kept
/// as a rank-(#border) term, so factorization and solves cost
/// O(size · bandwidth · (bandwidth + #border)).
class AlmostBandedQR {
 public:
  /// Throws SingularSystem (with l = m = -1) when a pivot falls below 1e-14 of
  /// the matrix scale.
  explicit AlmostBandedQR(const AlmostBandedMatrix& matrix);

  std::vector<Complex> solve(std::span<const Complex> rhs) const;
  int size() const noexcept { return size_; }

 private:
  struct Rotation {
    int p, q;
    double c, s;
  };

  int size_ = 0;
  int lower_ = 0;
  int width_ = 0;  // columns stored per row: [i - lower, i + lower + upper]
  int border_count_ = 0;
  std::vector<double> band_;
  std::vector<double> coef_;                  // size_ × border_count_
  std::vector<std::vector<double>> border_;   // original dense rows
  std::vector<Rotation> rotations_;
};

std::vector<Complex> almost_banded_solve(const AlmostBandedSystem& system);

/// μ_k = ∫_0^1 r^{l+2} T_k(r) dr for k < size, by Clenshaw–Curtis quadrature of
/// sufficient degree. Throws InvalidParameter for l < 1.
const std::vector<double>& clenshaw_curtis_moments(int l, int size);

/// Chebyshev series evaluation (Clenshaw recurrence).
template <class T>
T chebyshev_eval(std::span<const T> coeffs, double x) {
  T b1{}, b2{};
  for (std::size_t k = coeffs.size(); k-- > 1;) {
    const T b0 = coeffs[k] + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  if (coeffs.empty()) return T{};
  return coeffs[0] + x * b1 - b2;
}

}  // namespace ballns
