#pragma once

// Vector fields on the ball held as three Cartesian components in CFF form,
// vector calculus on them, and the poloidal–toroidal pair
//
//   v = ∇×∇×(r P) + ∇×(r T),   r the position vector.

#include <array>

#include "ballns/cff.hpp"
#include "ballns/sph_harmonics.hpp"

namespace ballns {

struct VectorFieldCFF {
  CffCoeffs x, y, z;

  explicit VectorFieldCFF(int n) : x(n), y(n), z(n) {}
  VectorFieldCFF(CffCoeffs cx, CffCoeffs cy, CffCoeffs cz);

  int n() const noexcept { return x.n(); }
  double max_abs() const noexcept;

  CffCoeffs& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const CffCoeffs& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

VectorFieldCFF operator-(const VectorFieldCFF& a, const VectorFieldCFF& b);
VectorFieldCFF resize(const VectorFieldCFF& v, int n_new);

/// Samples three Cartesian component functions.
VectorFieldCFF vector_analysis(const BallSampler& fx, const BallSampler& fy, const BallSampler& fz,
                               int n);

struct PtPair {
  CshCoeffs poloidal, toroidal;
  explicit PtPair(int n) : poloidal(n), toroidal(n) {}
  PtPair(CshCoeffs p, CshCoeffs t) : poloidal(std::move(p)), toroidal(std::move(t)) {}
  int n() const noexcept { return poloidal.n(); }
};

/// Largest relative remainder tolerated by the exact divisions by r and sin θ
/// before ConsistencyError is raised.
inline constexpr double kDivisionTolerance = 1e-8;

/// Cartesian gradient. Derivatives follow from ∂_r, ∂_λ, ∂_θ by the chain rule;
/// the 1/r and 1/sin θ factors are exact coefficient-space divisions. Throws
/// ConsistencyError when a remainder exceeds kDivisionTolerance times the
/// larger of the field's own scale and `reference_scale`. The latter matters
/// for fields that are themselves at roundoff level.
VectorFieldCFF gradient(const CffCoeffs& f, double reference_scale = 0.0);
VectorFieldCFF curl(const VectorFieldCFF& v, double reference_scale = 0.0);
CffCoeffs divergence(const VectorFieldCFF& v, double reference_scale = 0.0);

/// a×b evaluated on the 3/2-padded grid and truncated back to n.
VectorFieldCFF cross_product_dealiased(const VectorFieldCFF& a, const VectorFieldCFF& b);

/// a×b at size 2n, where the product of two size-n fields is represented
/// without truncation.
VectorFieldCFF cross_product_exact(const VectorFieldCFF& a, const VectorFieldCFF& b);

/// r·v = x v_x + y v_y + z v_z (exact, no aliasing).
CffCoeffs radial_projection(const VectorFieldCFF& v);

VectorFieldCFF pt_synthesis(const PtPair& pt);

/// Inverse of pt_synthesis for solenoidal fields. Throws NotSolenoidalTangent
/// when r·w carries an l = 0 component above 1e-8 of the field scale (or of
/// `reference_scale` if larger).
/// With n_out > 0 the scalars are returned truncated to that size.
PtPair pt_analysis(const VectorFieldCFF& w, double reference_scale = 0.0, int n_out = 0);

}  // namespace ballns
