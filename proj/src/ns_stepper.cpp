#include "ballns/ns_stepper.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>

#include "ballns/errors.hpp"
#include "ballns/parallel.hpp"
#include "ballns/timing.hpp"
#include "ballns/ultraspherical.hpp"

namespace ballns {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter(what);
}

Complex potential(const SurfaceHarmonicCoeffs& s, int l, int m) {
  return l <= s.degree() ? s(l, m) : Complex{};
}

// ∫_0^1 r² T_k(r) dr for k < size.
std::vector<double> radial_weights(int size) {
  std::vector<double> x, w;
  gauss_legendre(size / 2 + 3, x, w);
  std::vector<double> out(static_cast<std::size_t>(size), 0.0);
  for (std::size_t q = 0; q < x.size(); ++q) {
    const double r = 0.5 * (x[q] + 1.0), wq = 0.5 * w[q] * r * r;
    double t0 = 1.0, t1 = r;
    for (int k = 0; k < size; ++k) {
      out[static_cast<std::size_t>(k)] += wq * t0;
      const double t2 = 2.0 * r * t1 - t0;
      t0 = t1;
      t1 = t2;
    }
  }
  return out;
}

// ∫_0^π e^{imθ} sin θ dθ.
Complex polar_weight(int m) {
  if (m == 1) return {0.0, kPi / 2};
  if (m == -1) return {0.0, -kPi / 2};
  return {(m % 2 == 0) ? 2.0 / (1.0 - static_cast<double>(m) * m) : 0.0, 0.0};
}

// Chebyshev coefficients of r^l T_{2j}(r), length `size`.
std::vector<double> regular_profile(int l, int j, int size) {
  std::vector<double> c(static_cast<std::size_t>(size), 0.0), next;
  c[static_cast<std::size_t>(2 * j)] = 1.0;
  for (int p = 0; p < l; ++p) {
    next.assign(c.size(), 0.0);
    for (int k = 0; k < size; ++k) {
      const double v = c[static_cast<std::size_t>(k)];
      if (v == 0.0) continue;
      if (k == 0) {
        next[1] += v;
        continue;
      }
      next[static_cast<std::size_t>(k - 1)] += 0.5 * v;
      if (k + 1 < size) next[static_cast<std::size_t>(k + 1)] += 0.5 * v;
    }
    c.swap(next);
  }
  return c;
}

}  // namespace

void SimParams::validate() const {
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive, got " + std::to_string(dt));
  require(gamma0 > 0.0 && std::isfinite(gamma0), "gamma0 must be positive, got " + std::to_string(gamma0));
  require(std::isfinite(gamma2) && std::isfinite(gamma4), "gamma2 and gamma4 must be finite");
  require(n >= 8 && n % 2 == 0, "n must be even and >= 8, got " + std::to_string(n));
  require(steps >= 0, "step count must be nonnegative");
}

PtPair velocity_from_vorticity(const FlowState& state) {
  const int n = state.n(), L = n / 2;
  PtPair out(n);
  const CshCoeffs& pw = state.vorticity.poloidal;
  const CshCoeffs& tw = state.vorticity.toroidal;
  StageScope timer(Stage::ModeSolve);
  parallel_for(1, L + 1, [&](std::ptrdiff_t li) {
    const int l = static_cast<int>(li);
    std::vector<Complex> rhs(static_cast<std::size_t>(L + 1));
    for (int m = -l; m <= l; ++m) {
      const auto t = tw.profile(l, m);
      for (std::size_t k = 0; k < rhs.size(); ++k)
        rhs[k] = (static_cast<int>(k) + l) % 2 ? Complex{} : -t[k];
      const auto p = solve_helmholtz_dirichlet(l, m, 0.0, rhs, Complex{});
      std::copy(p.begin(), p.end(), out.poloidal.profile(l, m).begin());
      const auto q = pw.profile(l, m);
      std::copy(q.begin(), q.end(), out.toroidal.profile(l, m).begin());
    }
  });
  return out;
}

namespace {

using Profile = std::vector<Complex>;

double max_abs(std::span<const Complex> u) {
  double m = 0.0;
  for (const Complex& x : u) m = std::max(m, std::abs(x));
  return m;
}

// d/dr of a Chebyshev series; same length, top coefficient zero.
Profile cheb_diff(std::span<const Complex> u) {
  const int top = static_cast<int>(u.size()) - 1;
  Profile d(u.size());
  Complex next{}, next2{};
  for (int k = top - 1; k >= 0; --k) {
    const Complex dk = next2 + 2.0 * (k + 1) * u[static_cast<std::size_t>(k + 1)];
    d[static_cast<std::size_t>(k)] = dk;
    next2 = next;
    next = dk;
  }
  if (!d.empty()) d[0] *= 0.5;
  return d;
}

// r·u, one coefficient longer.
Profile cheb_mul_r(std::span<const Complex> u) {
  Profile out(u.size() + 1);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (k == 0) {
      out[1] += u[0];
      continue;
    }
    out[k + 1] += 0.5 * u[k];
    out[k - 1] += 0.5 * u[k];
  }
  return out;
}

// q with r·q = u − ρ, where the constant ρ = u(0) is returned in `remainder`.
Profile cheb_div_r(std::span<const Complex> u, double& remainder) {
  const std::size_t d = u.size() - 1;
  Profile q(u.size());
  for (std::size_t k = d; k >= 2; --k) q[k - 1] = 2.0 * u[k] - (k + 1 < q.size() ? q[k + 1] : Complex{});
  q[0] = u[1] - 0.5 * q[2];
  remainder = std::abs(u[0] - 0.5 * q[1]);
  return q;
}

Profile sum(std::span<const Complex> a, Complex wa, std::span<const Complex> b, Complex wb) {
  Profile out(std::max(a.size(), b.size()));
  for (std::size_t k = 0; k < a.size(); ++k) out[k] += wa * a[k];
  for (std::size_t k = 0; k < b.size(); ++k) out[k] += wb * b[k];
  return out;
}

// a + i b for real fields a and b, at the larger size.
CffCoeffs pack(const CffCoeffs& a, const CffCoeffs& b) {
  const int n = std::max(a.n(), b.n());
  CffCoeffs out = a.n() == n ? a : resize(a, n);
  const CffCoeffs im = b.n() == n ? b : resize(b, n);
  auto o = out.data();
  const auto bi = im.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += Complex(0.0, 1.0) * bi[i];
  return out;
}

void check_remainder(double remainder, double scale, const char* what) {
  if (remainder > kDivisionTolerance * scale) {
    std::ostringstream msg;
    msg << "nonlinear term: " << what << " not divisible by r (remainder " << remainder
        << ", scale " << scale << ")";
    throw ConsistencyError(msg.str());
  }
}

}  // namespace

// With N = ∇×c, c = ω × v:
//   r·N = v·∇(r·ω) − ω·∇(r·v),
//   r·∇×N = (1/r)∂_r(r² ∇·c) − ∇²(r·c),  ∇·c = v·(∇×ω) − |ω|².
// The three scalars are quadratic in fields of degree n/2 and are sampled
// exactly on the product grid. Radial derivatives are then taken mode by mode
// at full radial resolution before truncating to n.
PtPair advection_pt(const PtPair& velocity) {
  const int n = velocity.n(), N = n / 2;
  PtPair reg = velocity;
  project_regular(reg.poloidal);
  project_regular(reg.toroidal);
  const VectorFieldCFF v = pt_synthesis(reg);
  if (v.max_abs() == 0.0) return PtPair(n);
  // Components may vanish identically (r·v for toroidal flow), so divisions are
  // judged against the field scales.
  const double sv = v.max_abs();
  const VectorFieldCFF w = curl(v, sv);
  const double sw = std::max(w.max_abs(), sv);
  const VectorFieldCFF J = curl(w, sw);
  const VectorFieldCFF ga = gradient(radial_projection(w), sw);
  const VectorFieldCFF gb = gradient(radial_projection(resize(v, n + 2)), sv);

  const int M = product_grid_size(n), nr = M / 4 + 1;  // slices with r >= 0
  PeriodicGrid g[8] = {
      synthesize_regular(pack(v.x, v.y), M),   synthesize_regular(pack(v.z, w.x), M),
      synthesize_regular(pack(w.y, w.z), M),   synthesize_regular(pack(J.x, J.y), M),
      synthesize_regular(pack(J.z, ga.x), M),  synthesize_regular(pack(ga.y, ga.z), M),
      synthesize_regular(pack(gb.x, gb.y), M), synthesize_regular(gb.z, M)};

  std::vector<double> radius(static_cast<std::size_t>(nr)), cosp(static_cast<std::size_t>(M)),
      sinp(static_cast<std::size_t>(M));
  for (int k = 0; k < nr; ++k) radius[static_cast<std::size_t>(k)] = std::cos(k * kPi / (M / 2));
  for (int j = 0; j < M; ++j) {
    cosp[static_cast<std::size_t>(j)] = std::cos(2.0 * kPi * j / M);
    sinp[static_cast<std::size_t>(j)] = std::sin(2.0 * kPi * j / M);
  }

  // Outputs overwrite g[0] = (r·c, ∇·c) and g[1] = (r·N, 0).
  double ref_p = 0.0;
  std::size_t i = 0;
  for (int k = 0; k < nr; ++k)
    for (int jl = 0; jl < M; ++jl)
      for (int jm = 0; jm < M; ++jm, ++i) {
        const double r = radius[static_cast<std::size_t>(k)];
        const double x = r * sinp[static_cast<std::size_t>(jm)] * cosp[static_cast<std::size_t>(jl)];
        const double y = r * sinp[static_cast<std::size_t>(jm)] * sinp[static_cast<std::size_t>(jl)];
        const double z = r * cosp[static_cast<std::size_t>(jm)];
        const double vx = g[0].values[i].real(), vy = g[0].values[i].imag(), vz = g[1].values[i].real();
        const double wx = g[1].values[i].imag(), wy = g[2].values[i].real(), wz = g[2].values[i].imag();
        const double Jx = g[3].values[i].real(), Jy = g[3].values[i].imag(), Jz = g[4].values[i].real();
        const double ax = g[4].values[i].imag(), ay = g[5].values[i].real(), az = g[5].values[i].imag();
        const double bx = g[6].values[i].real(), by = g[6].values[i].imag(), bz = g[7].values[i].real();
        const double cx = wy * vz - wz * vy, cy = wz * vx - wx * vz, cz = wx * vy - wy * vx;
        const double s = x * cx + y * cy + z * cz;
        const double d = vx * Jx + vy * Jy + vz * Jz - (wx * wx + wy * wy + wz * wz);
        const double pa = vx * ax + vy * ay + vz * az, pb = wx * bx + wy * by + wz * bz;
        ref_p = std::max(ref_p, std::sqrt((vx * vx + vy * vy + vz * vz) * (ax * ax + ay * ay + az * az)) +
                                    std::sqrt((wx * wx + wy * wy + wz * wz) * (bx * bx + by * by + bz * bz)));
        g[0].values[i] = Complex(s, d);
        g[1].values[i] = Complex(pa - pb, 0.0);
      }

  const std::vector<Complex> sd = cff_to_csh_profiles(analyze_regular(std::move(g[0]), 2 * n, N), N);
  const std::vector<Complex> pn = cff_to_csh_profiles(analyze_regular(std::move(g[1]), 2 * n, N), N);
  const std::size_t len = static_cast<std::size_t>(n + 1);
  auto mode = [&](const std::vector<Complex>& u, int l, int m) {
    return std::span<const Complex>(u).subspan(static_cast<std::size_t>(l * l + l + m) * len, len);
  };

  // Split the packed (r·c) + i(∇·c) using u_{l,-m} = (-1)^m conj(u_{l,m}).
  std::vector<Complex> sc(sd.size()), dc(sd.size());
  for (int l = 0; l <= N; ++l)
    for (int m = -l; m <= l; ++m) {
      const auto q = mode(sd, l, m), qm = mode(sd, l, -m);
      const double sign = (m % 2) ? -1.0 : 1.0;
      const std::size_t base = static_cast<std::size_t>(l * l + l + m) * len;
      for (std::size_t k = 0; k < len; ++k) {
        const Complex mirror = sign * std::conj(qm[k]);
        sc[base + k] = 0.5 * (q[k] + mirror);
        dc[base + k] = Complex(0.0, -0.5) * (q[k] - mirror);
      }
    }

  const double ref_s = max_abs(sc);
  // Per mode: div_term = (1/r)(r² ∇·c)', lap_numerator = (r s)'' − l(l+1) s/r,
  // so that ∇²s = lap_numerator / r.
  std::vector<Profile> div_term(sc.size() / len), lap_numerator(sc.size() / len);
  double ref_w = 0.0, ref_q = 0.0;
  for (int l = 0; l <= N; ++l)
    for (int m = -l; m <= l; ++m) {
      const std::size_t idx = static_cast<std::size_t>(l * l + l + m);
      const auto s = mode(sc, l, m), d = mode(dc, l, m);
      double rem = 0.0;
      const Profile s_r = cheb_div_r(s, rem);
      check_remainder(rem, ref_s, "r·(ω×v)");
      const Profile rs2 = cheb_diff(cheb_diff(cheb_mul_r(s)));
      const double ll = static_cast<double>(l) * (l + 1);
      ref_w = std::max({ref_w, max_abs(rs2), ll * max_abs(s_r)});
      lap_numerator[idx] = sum(rs2, 1.0, s_r, -ll);
      div_term[idx] = sum(cheb_mul_r(cheb_diff(d)), 1.0, d, 2.0);
      ref_q = std::max(ref_q, max_abs(div_term[idx]));
    }

  PtPair out(n);
  for (int l = 0; l <= N; ++l)
    for (int m = -l; m <= l; ++m) {
      const std::size_t idx = static_cast<std::size_t>(l * l + l + m);
      double rem = 0.0;
      const Profile lap_s = cheb_div_r(lap_numerator[idx], rem);
      check_remainder(rem, ref_w, "∇²(r·(ω×v))");
      const Profile q = sum(div_term[idx], 1.0, lap_s, -1.0);
      const auto p = mode(pn, l, m);
      if (l == 0) {
        ref_q = std::max(ref_q, max_abs(lap_s));
        const double leak = std::max(max_abs(p) / std::max(ref_p, 1e-300), max_abs(q) / std::max(ref_q, 1e-300));
        if (leak > 1e-8) {
          throw NotSolenoidalTangent("nonlinear term has an l = 0 radial component (relative " +
                                     std::to_string(leak) + ")");
        }
        continue;
      }
      const double inv = 1.0 / (static_cast<double>(l) * (l + 1));
      auto pp = out.poloidal.profile(l, m);
      auto tp = out.toroidal.profile(l, m);
      for (int k = 0; k <= N; ++k) {
        pp[static_cast<std::size_t>(k)] = inv * p[static_cast<std::size_t>(k)];
        tp[static_cast<std::size_t>(k)] = inv * q[static_cast<std::size_t>(k)];
      }
    }
  return out;
}

FlowState step(const FlowState& state, const SimParams& params, const BoundaryPotentials& bc) {
  params.validate();
  const int n = state.n(), L = n / 2;
  require(params.n == n, "state has n=" + std::to_string(n) + " but parameters have n=" +
                             std::to_string(params.n));
  const PtPair nonlinear = advection_pt(velocity_from_vorticity(state));
  const GeneralizedParams gp = params.generalized();
  const double inv_dt = 1.0 / params.dt;

  FlowState next(n);
  next.time = state.time + params.dt;
  next.step = state.step + 1;
  StageScope timer(Stage::ModeSolve);
  parallel_for(1, L + 1, [&](std::ptrdiff_t li) {
    const int l = static_cast<int>(li);
    std::vector<Complex> rhs(static_cast<std::size_t>(L + 1));
    for (int m = -l; m <= l; ++m) {
      for (int which = 0; which < 2; ++which) {
        const CshCoeffs& cur = which == 0 ? state.vorticity.poloidal : state.vorticity.toroidal;
        const CshCoeffs& nl = which == 0 ? nonlinear.poloidal : nonlinear.toroidal;
        const auto c = cur.profile(l, m);
        const auto d = nl.profile(l, m);
        // Smooth fields have profiles of parity l. The other parity is roundoff,
        // and the integral row would couple it back into the solution.
        for (std::size_t k = 0; k < rhs.size(); ++k)
          rhs[k] = (static_cast<int>(k) + l) % 2 ? Complex{} : inv_dt * c[k] - d[k];
        const auto u = which == 0
                           ? solve_generalized_mode(l, m, gp, rhs, BcKind::Dirichlet, potential(bc.g, l, m))
                           : solve_generalized_mode(l, m, gp, rhs, BcKind::Integral, potential(bc.f, l, m));
        CshCoeffs& dst = which == 0 ? next.vorticity.poloidal : next.vorticity.toroidal;
        std::copy(u.begin(), u.end(), dst.profile(l, m).begin());
      }
    }
  });
  return next;
}

VectorFieldCFF velocity_field(const FlowState& state) {
  PtPair vel = velocity_from_vorticity(state);
  project_regular(vel.poloidal);
  project_regular(vel.toroidal);
  const int np = state.n() + 4;
  return pt_synthesis(PtPair(resize(vel.poloidal, np), resize(vel.toroidal, np)));
}

Complex ball_integral(const CffCoeffs& f) {
  const int N = f.half();
  const auto rw = radial_weights(N + 1);
  Complex acc{};
  for (int k = 0; k <= N; ++k)
    for (int m = -N; m <= N; ++m) acc += f(k, 0, m) * rw[static_cast<std::size_t>(k)] * polar_weight(m);
  return 2.0 * kPi * acc;
}

double ball_norm_squared(const VectorFieldCFF& v) {
  const int n = v.n(), np = 2 * n + 2;
  PeriodicGrid sq(np);
  for (int i = 0; i < 3; ++i) {
    const PeriodicGrid g = synthesize_periodic(resize(v[i], np));
    for (std::size_t p = 0; p < g.values.size(); ++p) sq.values[p] += std::norm(g.values[p]);
  }
  return ball_integral(cff_analysis(sq)).real();
}

double kinetic_energy(const FlowState& state) {
  if (state.vorticity.poloidal.max_abs() == 0.0 && state.vorticity.toroidal.max_abs() == 0.0) return 0.0;
  return ball_norm_squared(velocity_field(state));
}

double rigid_rotation_error(const FlowState& state) {
  const VectorFieldCFF v = velocity_field(state);
  const int np = v.n();
  const VectorFieldCFF rigid(cff_analysis([](double, double y, double) { return -y; }, np),
                             cff_analysis([](double x, double, double) { return x; }, np), CffCoeffs(np));
  return std::sqrt(std::max(0.0, ball_norm_squared(v - rigid)));
}

FlowState random_initial_state(int n, std::uint64_t seed, const RandomInitOptions& options) {
  require(options.l0 >= 0.0 && options.k0 >= 0.0, "decay scales must be nonnegative");
  const double l0 = options.l0 > 0.0 ? options.l0 : n / 8.0;
  const double k0 = options.k0 > 0.0 ? options.k0 : n / 8.0;
  FlowState state(n);
  const int L = n / 2, size = L + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (CshCoeffs* field : {&state.vorticity.poloidal, &state.vorticity.toroidal}) {
    for (int l = 1; l <= L; ++l) {
      for (int j = 0; l + 2 * j <= L; ++j) {
        const double kk = l + 2.0 * j;
        const double amp = std::exp(-(l / l0) * (l / l0) - (kk / k0) * (kk / k0));
        const auto basis = regular_profile(l, j, size);
        for (int m = 0; m <= l; ++m) {
          Complex a = m == 0 ? Complex(normal(rng), 0.0)
                             : Complex(normal(rng), normal(rng)) / std::numbers::sqrt2;
          a *= amp;
          const double sign = (m % 2) ? -1.0 : 1.0;
          for (int k = 0; k < size; ++k) {
            const double b = basis[static_cast<std::size_t>(k)];
            if (b == 0.0) continue;
            (*field)(k, l, m) += a * b;
            if (m > 0) (*field)(k, l, -m) += sign * std::conj(a) * b;
          }
        }
      }
    }
  }
  if (options.normalize) {
    const double e = kinetic_energy(state);
    if (e > 0.0) {
      const double s = std::sqrt(options.energy / e);
      state.vorticity.poloidal *= s;
      state.vorticity.toroidal *= s;
    }
  }
  return state;
}

ActiveScales active_scales(const SimParams& params) {
  const double g0 = params.gamma0, g2 = params.gamma2, g4 = params.gamma4;
  require(g2 < 0.0, "active scales need gamma2 < 0");
  require(g4 > 0.0, "active scales need gamma4 > 0");
  ActiveScales s;
  s.lambda = kPi * std::sqrt(-2.0 * g4 / g2);
  s.tau = 1.0 / (g2 / (2.0 * g4) * (g0 - g2 * g2 / (4.0 * g4)));
  const double k2 = -g2 / g4 - 2.0 * std::sqrt(g0 / g4);
  require(k2 > 0.0 && s.tau > 0.0, "parameters give no active band (stable fluid)");
  s.kappa = std::sqrt(k2);
  s.kappa_lambda = s.kappa * s.lambda;
  return s;
}

FlowState rigid_rotation_state(int n) {
  FlowState state(n);
  state.vorticity.poloidal(1, 1, 0) = std::sqrt(4.0 * kPi / 3.0);
  return state;
}

BoundaryPotentials rigid_rotation_potentials(int L) {
  BoundaryPotentials bc(L);
  bc.g(1, 0) = std::sqrt(4.0 * kPi / 3.0);
  return bc;
}

SurfaceField::SurfaceField(int L) : grid(L) {
  const std::size_t count = grid.polar_count() * grid.azimuth_count();
  radial.assign(count, 0.0);
  theta.assign(count, 0.0);
  lambda.assign(count, 0.0);
}

SurfaceField surface_tangent_field(const BoundaryPotentials& bc, int L) {
  SurfaceField out(L);
  const int Lp = std::max(bc.f.degree(), bc.g.degree());
  const std::size_t J = out.grid.azimuth_count();
  for (std::size_t q = 0; q < out.grid.polar_count(); ++q) {
    const double x = out.grid.cos_theta[q], s = std::sqrt(1.0 - x * x);
    const auto p = legendre_table(Lp, x, s);
    const auto dp = legendre_table_dtheta(Lp, p);
    for (std::size_t j = 0; j < J; ++j) {
      const double lam = out.grid.lambda[j];
      Complex vt{}, vl{};
      for (int l = 1; l <= Lp; ++l) {
        for (int m = -l; m <= l; ++m) {
          const int am = std::abs(m);
          const double sign = (m < 0 && am % 2) ? -1.0 : 1.0;
          const Complex e = std::polar(1.0, m * lam);
          const Complex y = sign * p[legendre_index(l, am)] * e;
          const Complex dy = sign * dp[legendre_index(l, am)] * e;
          const Complex dl = Complex(0.0, m) * y / s;
          const Complex f = potential(bc.f, l, m), g = potential(bc.g, l, m);
          // ∇₁f = ∂θf θ̂ + ∂λf/sin θ λ̂,  Λ₁g = ∂λg/sin θ θ̂ − ∂θg λ̂
          vt += f * dy + g * dl;
          vl += f * dl - g * dy;
        }
      }
      out.theta[q * J + j] = vt.real();
      out.lambda[q * J + j] = vl.real();
    }
  }
  return out;
}

SurfaceField surface_velocity(const FlowState& state, int L) {
  SurfaceField out(L);
  const VectorFieldCFF v = velocity_field(state);
  const int h = v.x.half();
  const std::size_t J = out.grid.azimuth_count();
  // Values at r = 1: T_k(1) = 1 collapses the radial sum.
  std::vector<std::vector<Complex>> trace(3, std::vector<Complex>(static_cast<std::size_t>((2 * h + 1) * (2 * h + 1))));
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k <= h; ++k)
      for (int a = -h; a <= h; ++a)
        for (int m = -h; m <= h; ++m)
          trace[static_cast<std::size_t>(i)][static_cast<std::size_t>((a + h) * (2 * h + 1) + m + h)] += v[i](k, a, m);

  std::vector<Complex> column(static_cast<std::size_t>(2 * h + 1));
  for (std::size_t q = 0; q < out.grid.polar_count(); ++q) {
    const double th = out.grid.theta(q), ct = std::cos(th), st = std::sin(th);
    std::vector<std::array<double, 3>> vals(J);
    for (int i = 0; i < 3; ++i) {
      const auto& tr = trace[static_cast<std::size_t>(i)];
      for (int a = -h; a <= h; ++a) {
        Complex acc{};
        for (int m = -h; m <= h; ++m) acc += tr[static_cast<std::size_t>((a + h) * (2 * h + 1) + m + h)] * std::polar(1.0, m * th);
        column[static_cast<std::size_t>(a + h)] = acc;
      }
      for (std::size_t j = 0; j < J; ++j) {
        Complex acc{};
        for (int a = -h; a <= h; ++a) acc += column[static_cast<std::size_t>(a + h)] * std::polar(1.0, a * out.grid.lambda[j]);
        vals[j][static_cast<std::size_t>(i)] = acc.real();
      }
    }
    for (std::size_t j = 0; j < J; ++j) {
      const double cl = std::cos(out.grid.lambda[j]), sl = std::sin(out.grid.lambda[j]);
      const auto& w = vals[j];
      out.radial[q * J + j] = st * cl * w[0] + st * sl * w[1] + ct * w[2];
      out.theta[q * J + j] = ct * cl * w[0] + ct * sl * w[1] - st * w[2];
      out.lambda[q * J + j] = -sl * w[0] + cl * w[1];
    }
  }
  return out;
}

BoundaryMismatch boundary_mismatch(const FlowState& state, const BoundaryPotentials& bc) {
  const int L = std::max(state.n() / 2, std::max(bc.f.degree(), bc.g.degree())) + 2;
  const SurfaceField v = surface_velocity(state, L);
  const SurfaceField t = surface_tangent_field(bc, L);
  const std::size_t J = v.grid.azimuth_count();
  const double dl = 2.0 * kPi / static_cast<double>(J);
  double err = 0.0, ref = 0.0;
  for (std::size_t q = 0; q < v.grid.polar_count(); ++q) {
    const double w = v.grid.weights[q] * dl;
    for (std::size_t j = 0; j < J; ++j) {
      const std::size_t p = q * J + j;
      const double et = v.theta[p] - t.theta[p], el = v.lambda[p] - t.lambda[p];
      err += w * (v.radial[p] * v.radial[p] + et * et + el * el);
      ref += w * (t.theta[p] * t.theta[p] + t.lambda[p] * t.lambda[p]);
    }
  }
  return {std::sqrt(err), std::sqrt(ref)};
}

double integral_condition_residual(const FlowState& state, const BoundaryPotentials& bc) {
  const int L = state.n() / 2;
  double worst = 0.0;
  for (int l = 1; l <= L; ++l) {
    const auto& mu = clenshaw_curtis_moments(l, L + 1);
    for (int m = -l; m <= l; ++m) {
      const auto t = state.vorticity.toroidal.profile(l, m);
      Complex acc = potential(bc.f, l, m);
      for (int k = 0; k <= L; ++k) acc += mu[static_cast<std::size_t>(k)] * t[static_cast<std::size_t>(k)];
      worst = std::max(worst, std::abs(acc));
    }
  }
  return worst;
}

double dirichlet_residual(const FlowState& state, const BoundaryPotentials& bc) {
  const int L = state.n() / 2;
  double worst = 0.0;
  for (int l = 1; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      const auto p = state.vorticity.poloidal.profile(l, m);
      Complex acc = -potential(bc.g, l, m);
      for (const Complex& c : p) acc += c;
      worst = std::max(worst, std::abs(acc));
    }
  return worst;
}

}  // namespace ballns
