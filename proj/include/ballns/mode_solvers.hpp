#pragma once

// Radial solves for one spherical-harmonic mode (l, m). Profiles are Chebyshev
// coefficient vectors of length n_r = n/2 + 1 on r ∈ [-1, 1]; the mode
// equations are multiplied by r² to remove the singularity at the origin.

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "ballns/ultraspherical.hpp"

namespace ballns {

enum class BcKind { Dirichlet, Integral };

std::string to_string(BcKind kind);

/// A_l : u ↦ ∂_r(r² ∂_r u) + (K² r² − l(l+1)) u, mapping T coefficients to C^(2).
struct ModeOperator {
  int l = 0;
  double k2 = 0.0;
  int size = 0;
  BandedMatrix a{1, 0, 0};
};

const ModeOperator& assemble_helmholtz_mode(int l, double k2, int size);

/// B_l = A_l with K = 0.
const BandedMatrix& radial_laplacian_operator(int l, int size);

/// r²·(·) from T to C^(2): M[r²] S₁ S₀.
const BandedMatrix& r2_weight_operator(int size);

/// Index of the operator row replaced by the single integral condition: the last
/// row whose parity matches l, so each parity class stays square.
int integral_dropped_row(int l, int size);

/// Almost-banded system for ∇²u + K²u = f on one mode. `value` is g_lm for
/// Dirichlet (u(1) = g, u(-1) = (-1)^l g) or p_lm for the integral row
/// Σ μ_k u_k = -p.
AlmostBandedSystem helmholtz_system(int l, double k2, std::span<const Complex> f, BcKind kind,
                                    Complex value);

std::vector<Complex> solve_helmholtz_dirichlet(int l, int m, double k2, std::span<const Complex> f,
                                               Complex g);

/// Returns the zero profile for l = 0 (gauge).
std::vector<Complex> solve_helmholtz_integral(int l, int m, double k2, std::span<const Complex> f,
                                              Complex p);

struct GeneralizedParams {
  double gamma0 = 1.0, gamma2 = 0.0, gamma4 = 0.0, dt = 1e-3;
};

/// Almost-banded block system for (1/Δt − Γ₀∇² + Γ₂∇⁴ − Γ₄∇⁶) u = rhs over the
/// interleaved unknowns (u, ∇²u[, ∇⁴u]) with unknown 3k + s (or 2k + s). The
/// auxiliary Laplacians vanish on the boundary.
AlmostBandedSystem generalized_system(int l, const GeneralizedParams& params,
                                      std::span<const Complex> rhs, BcKind kind, Complex value);

/// Number of interleaved unknowns per radial index used by generalized_system.
int generalized_block_count(const GeneralizedParams& params);

/// Solves one mode of the implicit operator. With Γ₂ = Γ₄ = 0 the equation is a
/// modified Helmholtz problem with K² = −1/(Γ₀Δt). Returns the u profile.
/// Throws SingularSystem naming (l, m, bc kind).
std::vector<Complex> solve_generalized_mode(int l, int m, const GeneralizedParams& params,
                                            std::span<const Complex> rhs, BcKind kind, Complex value);

/// Drops every cached operator and factorization.
void clear_mode_caches();

}  // namespace ballns
