#pragma once

// Vorticity formulation of the (generalized) incompressible Navier–Stokes
// equations in the unit ball, advanced by IMEX-BDF1:
//
//   (1/Δt − Γ₀∇² + Γ₂∇⁴ − Γ₄∇⁶) ω^{k+1} = ω^k/Δt − ∇×(ω^k × v^k)
//
// The state is the poloidal–toroidal pair (P_ω, T_ω) of the vorticity in CSH
// form. The boundary velocity ∇₁f + Λ₁g enters through P_ω = g on r = 1 and
// the integral condition ∫₀¹ r^{l+2} T_ω,lm dr = −f_lm.

#include <cstdint>
#include <vector>

#include "ballns/ball_vectors.hpp"
#include "ballns/mode_solvers.hpp"
#include "ballns/sph_harmonics.hpp"

namespace ballns {

struct SimParams {
  double gamma0 = 1.0, gamma2 = 0.0, gamma4 = 0.0;
  double dt = 1e-3;
  int n = 16;
  std::int64_t steps = 0;

  /// Throws InvalidParameter naming the offending field.
  void validate() const;
  GeneralizedParams generalized() const { return {gamma0, gamma2, gamma4, dt}; }
  /// 1/Γ₀; meaningful when Γ₂ = Γ₄ = 0.
  double reynolds() const { return 1.0 / gamma0; }
};

/// Surface potentials of the boundary velocity ∇₁f + Λ₁g. Entries with l = 0
/// are ignored.
struct BoundaryPotentials {
  SurfaceHarmonicCoeffs f, g;
  explicit BoundaryPotentials(int L) : f(L), g(L) {}
  BoundaryPotentials(SurfaceHarmonicCoeffs f_, SurfaceHarmonicCoeffs g_)
      : f(std::move(f_)), g(std::move(g_)) {}
};

struct FlowState {
  PtPair vorticity;
  double time = 0.0;
  std::int64_t step = 0;
  explicit FlowState(int n) : vorticity(n) {}
  FlowState(PtPair w, double t, std::int64_t k) : vorticity(std::move(w)), time(t), step(k) {}
  int n() const noexcept { return vorticity.n(); }
};

struct ActiveScales {
  double lambda = 0.0, tau = 0.0, kappa = 0.0, kappa_lambda = 0.0;
};

/// (P_v, T_v): ∇²P_v = −T_ω with P_v = 0 on r = 1, and T_v = P_ω.
PtPair velocity_from_vorticity(const FlowState& state);

/// PT scalars of ∇×(ω × v) for the velocity pair (P_v, T_v).
PtPair advection_pt(const PtPair& velocity);

/// One IMEX-BDF1 step. Singular mode systems propagate as SingularSystem.
FlowState step(const FlowState& state, const SimParams& params, const BoundaryPotentials& bc);

/// Cartesian velocity in CFF form at size n + 4, where it is represented exactly.
VectorFieldCFF velocity_field(const FlowState& state);

/// ∫ f dV over the unit ball of a CFF series, integrated term by term.
Complex ball_integral(const CffCoeffs& f);

/// ∫ |v|² dV, with |v|² formed on a grid fine enough to be exact.
double ball_norm_squared(const VectorFieldCFF& v);

/// ∫ v·v dV (no factor 1/2).
double kinetic_energy(const FlowState& state);

/// L² distance between the velocity and the rigid rotation r sin θ λ̂.
double rigid_rotation_error(const FlowState& state);

struct RandomInitOptions {
  double l0 = 0.0;  // angular decay scale; 0 selects n/8
  double k0 = 0.0;  // radial decay scale; 0 selects n/8
  bool normalize = true;
  double energy = 1.0;  // target kinetic energy when normalizing
};

/// Random smooth vorticity. Each scalar is Σ a_ljm r^l T_{2j}(r) Y_l^m with
/// l + 2j <= n/2 and independent complex Gaussian a_ljm of standard deviation
/// exp(−(l/l₀)² − ((l+2j)/k₀)²). Real fields, l = 0 excluded.
FlowState random_initial_state(int n, std::uint64_t seed, const RandomInitOptions& options = {});

/// Vortex size, growth time and active bandwidth of the generalized model.
/// Throws InvalidParameter unless Γ₂ < 0 < Γ₄ and all scales are positive.
ActiveScales active_scales(const SimParams& params);

/// State of rigid rotation v = r sin θ λ̂, ω = 2ẑ.
FlowState rigid_rotation_state(int n);

/// g = cos θ, f = 0: the boundary data of rigid rotation.
BoundaryPotentials rigid_rotation_potentials(int L);

/// Tangential field on the sphere grid, components along θ̂ and λ̂.
struct SurfaceField {
  SphereGrid grid;
  std::vector<double> radial, theta, lambda;  // layout [q * azimuth_count + j]
  explicit SurfaceField(int L);
};

/// ∇₁f + Λ₁g sampled on SphereGrid(L).
SurfaceField surface_tangent_field(const BoundaryPotentials& bc, int L);

/// Velocity of the state evaluated at r = 1 on SphereGrid(L).
SurfaceField surface_velocity(const FlowState& state, int L);

struct BoundaryMismatch {
  double error = 0.0;      // surface L² norm of v − (∇₁f + Λ₁g), radial part included
  double reference = 0.0;  // surface L² norm of ∇₁f + Λ₁g
  /// error / reference, or error when the reference vanishes.
  double relative() const { return reference > 0.0 ? error / reference : error; }
};

BoundaryMismatch boundary_mismatch(const FlowState& state, const BoundaryPotentials& bc);

/// max over modes l >= 1 of |Σ_k μ_k (T_ω)_klm + f_lm|.
double integral_condition_residual(const FlowState& state, const BoundaryPotentials& bc);

/// max over modes l >= 1 of |P_ω,lm(1) − g_lm|.
double dirichlet_residual(const FlowState& state, const BoundaryPotentials& bc);

}  // namespace ballns
