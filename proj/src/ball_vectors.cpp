#include "ballns/ball_vectors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <span>
#include <vector>

#include "ballns/errors.hpp"

namespace ballns {

VectorFieldCFF::VectorFieldCFF(CffCoeffs cx, CffCoeffs cy, CffCoeffs cz)
    : x(std::move(cx)), y(std::move(cy)), z(std::move(cz)) {
  if (x.n() != y.n() || x.n() != z.n()) throw InvalidParameter("vector components differ in size");
}

double VectorFieldCFF::max_abs() const noexcept {
  return std::max({x.max_abs(), y.max_abs(), z.max_abs()});
}

VectorFieldCFF operator-(const VectorFieldCFF& a, const VectorFieldCFF& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

VectorFieldCFF resize(const VectorFieldCFF& v, int n_new) {
  return {resize(v.x, n_new), resize(v.y, n_new), resize(v.z, n_new)};
}

VectorFieldCFF vector_analysis(const BallSampler& fx, const BallSampler& fy, const BallSampler& fz,
                               int n) {
  return {cff_analysis(fx, n), cff_analysis(fy, n), cff_analysis(fz, n)};
}

namespace {

void check_division(double residual, double scale, const char* what) {
  if (residual > kDivisionTolerance * scale) {
    std::ostringstream os;
    os << "division by " << what << " left a remainder of " << residual << " (field scale " << scale
       << ")";
    throw ConsistencyError(os.str());
  }
}

// One radial slice of a CFF tensor in signed (l, m) order with a zero border,
// so the neighbour stencils of the sin/cos multipliers need no bounds checks.
class Plane {
 public:
  explicit Plane(int h) : h_(h), w_(2 * h + 3), data_(static_cast<std::size_t>(w_ * w_)) {}

  Complex& operator()(int l, int m) noexcept { return data_[index(l, m)]; }
  Complex operator()(int l, int m) const noexcept { return data_[index(l, m)]; }
  void clear() { std::fill(data_.begin(), data_.end(), Complex{}); }

  void load(const CffCoeffs& c, int k) {
    const int A = c.angular_size();
    for (int l = -h_; l <= h_; ++l) {
      const Complex* src = &c(k, l, 0);
      Complex* dst = &data_[index(l, 0)];
      for (int m = 0; m <= h_; ++m) dst[m] = src[m];
      for (int m = 1; m <= h_; ++m) dst[-m] = src[A - m];
    }
  }

  void store(CffCoeffs& c, int k) const {
    const int A = c.angular_size();
    for (int l = -h_; l <= h_; ++l) {
      Complex* dst = &c(k, l, 0);
      const Complex* src = &data_[index(l, 0)];
      for (int m = 0; m <= h_; ++m) dst[m] = src[m];
      for (int m = 1; m <= h_; ++m) dst[A - m] = src[-m];
    }
  }

  int half() const noexcept { return h_; }

 private:
  std::size_t index(int l, int m) const noexcept {
    return static_cast<std::size_t>((l + h_ + 1) * w_ + (m + h_ + 1));
  }
  int h_, w_;
  std::vector<Complex> data_;
};

constexpr Complex kHalf{0.5, 0.0};
constexpr Complex kHalfOverI{0.0, -0.5};  // 1 / (2i)

// out(l, m) += up·in(l, m−1) + down·in(l, m+1): multiplier in θ.
void add_polar(Plane& out, const Plane& in, Complex up, Complex down) {
  const int h = in.half();
  for (int l = -h; l <= h; ++l)
    for (int m = -h; m <= h; ++m) out(l, m) += up * in(l, m - 1) + down * in(l, m + 1);
}

// out(l, m) += up·in(l−1, m) + down·in(l+1, m): multiplier in λ.
void add_azimuthal(Plane& out, const Plane& in, Complex up, Complex down) {
  const int h = in.half();
  for (int l = -h; l <= h; ++l)
    for (int m = -h; m <= h; ++m) out(l, m) += up * in(l - 1, m) + down * in(l + 1, m);
}

void add_sin_theta(Plane& out, const Plane& in, double w) { add_polar(out, in, w * kHalfOverI, -w * kHalfOverI); }
void add_cos_theta(Plane& out, const Plane& in, double w) { add_polar(out, in, w * kHalf, w * kHalf); }
void add_sin_lambda(Plane& out, const Plane& in, double w) { add_azimuthal(out, in, w * kHalfOverI, -w * kHalfOverI); }
void add_cos_lambda(Plane& out, const Plane& in, double w) { add_azimuthal(out, in, w * kHalf, w * kHalf); }

// Row-wise exact division by sin θ (see div_sin_theta), scaled by `factor`.
// Returns the remainder max(|a|, |b|) times |factor|.
double div_sin_theta_row(const Plane& in, int l, Complex factor, Plane& out, std::vector<Complex>& q) {
  const int h = in.half();
  const Complex two_i(0.0, 2.0);
  std::fill(q.begin(), q.end(), Complex{});
  auto Q = [&](int m) -> Complex& { return q[static_cast<std::size_t>(m + h + 1)]; };
  auto p = [&](int m) { return in(l, m); };
  for (int m = h; m >= 2; --m) Q(m - 1) = two_i * p(m) + Q(m + 1);
  for (int m = -h; m <= -2; ++m) Q(m + 1) = Q(m - 1) - two_i * p(m);
  const Complex a = p(0) - (Q(-1) - Q(1)) / two_i;
  const Complex b = p(1) + p(-1) - (Q(-2) - Q(2)) / two_i;
  Q(0) = Q(2) + two_i * (p(1) - 0.5 * b);
  for (int m = -h; m <= h; ++m) out(l, m) = m == -h || m == h ? Complex{} : factor * Q(m);
  return std::abs(factor) * std::max(std::abs(a), std::abs(b));
}

// Radial kernels on whole slices: slice k occupies [k·S, (k+1)·S).
void radial_derivative(std::span<const Complex> f, std::span<Complex> out, int N, std::size_t S) {
  std::fill(out.begin(), out.end(), Complex{});
  for (int k = N - 1; k >= 0; --k) {
    Complex* o = &out[static_cast<std::size_t>(k) * S];
    const Complex* above = &f[static_cast<std::size_t>(k + 1) * S];
    const double w = 2.0 * (k + 1);
    if (k + 2 <= N) {
      const Complex* o2 = &out[static_cast<std::size_t>(k + 2) * S];
      for (std::size_t i = 0; i < S; ++i) o[i] = o2[i] + w * above[i];
    } else {
      for (std::size_t i = 0; i < S; ++i) o[i] = w * above[i];
    }
  }
  for (std::size_t i = 0; i < S; ++i) out[i] *= 0.5;
}

// q with r·q = f − ρ, ρ the value at r = 0, per line.
void radial_quotient(std::span<const Complex> f, std::span<Complex> q, std::vector<Complex>& rho, int N,
                     std::size_t S) {
  std::fill(q.begin(), q.end(), Complex{});
  auto row = [S](std::span<Complex> a, int k) { return &a[static_cast<std::size_t>(k) * S]; };
  auto crow = [S](std::span<const Complex> a, int k) { return &a[static_cast<std::size_t>(k) * S]; };
  {
    Complex* o = row(q, N - 1);
    const Complex* p = crow(f, N);
    for (std::size_t i = 0; i < S; ++i) o[i] = 2.0 * p[i];
  }
  for (int k = N - 1; k >= 2; --k) {
    Complex* o = row(q, k - 1);
    const Complex* p = crow(f, k);
    const Complex* up = row(q, k + 1);
    for (std::size_t i = 0; i < S; ++i) o[i] = 2.0 * p[i] - up[i];
  }
  {
    Complex* o = row(q, 0);
    const Complex* p = crow(f, 1);
    const Complex* q2 = row(q, 2);
    for (std::size_t i = 0; i < S; ++i) o[i] = p[i] - 0.5 * q2[i];
  }
  rho.resize(S);
  const Complex* p0 = crow(f, 0);
  const Complex* q1 = row(q, 1);
  for (std::size_t i = 0; i < S; ++i) rho[i] = p0[i] - 0.5 * q1[i];
}

void radial_multiply(std::span<const Complex> f, std::span<Complex> out, int N, std::size_t S) {
  std::fill(out.begin(), out.end(), Complex{});
  for (int k = 0; k <= N; ++k) {
    const Complex* p = &f[static_cast<std::size_t>(k) * S];
    if (k == 0) {
      Complex* o = &out[S];
      for (std::size_t i = 0; i < S; ++i) o[i] += p[i];
      continue;
    }
    Complex* lo = &out[static_cast<std::size_t>(k - 1) * S];
    for (std::size_t i = 0; i < S; ++i) lo[i] += 0.5 * p[i];
    if (k + 1 <= N) {
      Complex* hi = &out[static_cast<std::size_t>(k + 1) * S];
      for (std::size_t i = 0; i < S; ++i) hi[i] += 0.5 * p[i];
    }
  }
}

std::size_t slice_size(const CffCoeffs& c) {
  return static_cast<std::size_t>(c.angular_size()) * static_cast<std::size_t>(c.angular_size());
}

// Largest |w·ρ| over lines, w = |m| (polar) or |l| (azimuthal) of the line.
double weighted_remainder(const CffCoeffs& shape, const std::vector<Complex>& rho, bool polar) {
  const int A = shape.angular_size();
  double worst = 0.0;
  for (int sl = 0; sl < A; ++sl)
    for (int sm = 0; sm < A; ++sm) {
      const int w = polar ? shape.wavenumber(sm) : shape.wavenumber(sl);
      worst = std::max(worst, std::abs(w) * std::abs(rho[static_cast<std::size_t>(sl * A + sm)]));
    }
  return worst;
}

struct Partials {
  CffCoeffs dx, dy, dz;
};

// Cartesian partials at the size of f. Content may grow by one wavenumber in
// each angle, so callers supply headroom. `scale` sets the reference for the
// divisibility check. With A = ∂r f, B = ∂θ f / r, C = ∂λ f / (r sin θ):
//   ∂x = cos λ (sin θ A + cos θ B) − sin λ C
//   ∂y = sin λ (sin θ A + cos θ B) + cos λ C
//   ∂z = cos θ A − sin θ B
// ∂θ and ∂λ commute with the radial division, so one quotient serves both.
Partials partials(const CffCoeffs& f, double scale) {
  const int n = f.n(), N = f.half(), h = f.half();
  const std::size_t S = slice_size(f);
  CffCoeffs a(n), q(n);
  std::vector<Complex> rho;
  radial_derivative(f.data(), a.data(), N, S);
  radial_quotient(f.data(), q.data(), rho, N, S);
  check_division(weighted_remainder(f, rho, true), scale, "r");
  check_division(weighted_remainder(f, rho, false), scale, "r");

  Partials out{CffCoeffs(n), CffCoeffs(n), CffCoeffs(n)};
  Plane pa(h), pq(h), pb(h), pc(h), ps(h), px(h), py(h), pz(h);
  std::vector<Complex> work(static_cast<std::size_t>(2 * h + 3));
  double worst = 0.0;
  for (int k = 0; k <= N; ++k) {
    pa.load(a, k);
    pq.load(q, k);
    for (int l = -h; l <= h; ++l) {
      for (int m = -h; m <= h; ++m) pb(l, m) = Complex(0.0, m) * pq(l, m);
      worst = std::max(worst, div_sin_theta_row(pq, l, Complex(0.0, l), pc, work));
    }
    ps.clear();
    add_sin_theta(ps, pa, 1.0);
    add_cos_theta(ps, pb, 1.0);
    px.clear();
    add_cos_lambda(px, ps, 1.0);
    add_sin_lambda(px, pc, -1.0);
    py.clear();
    add_sin_lambda(py, ps, 1.0);
    add_cos_lambda(py, pc, 1.0);
    pz.clear();
    add_cos_theta(pz, pa, 1.0);
    add_sin_theta(pz, pb, -1.0);
    px.store(out.dx, k);
    py.store(out.dy, k);
    pz.store(out.dz, k);
  }
  check_division(worst, scale, "sin(theta)");
  return out;
}

VectorFieldCFF curl_same_size(const VectorFieldCFF& v, double scale) {
  const Partials px = partials(v.x, scale);
  const Partials py = partials(v.y, scale);
  const Partials pz = partials(v.z, scale);
  return {pz.dy - py.dz, px.dz - pz.dx, py.dx - px.dy};
}

// L f with L = r×∇ = (−sin λ ∂θ − cos λ cot θ ∂λ, cos λ ∂θ − sin λ cot θ ∂λ, ∂λ).
// No radial derivative and no 1/r; cot θ ∂λ f is divisible for smooth f.
VectorFieldCFF angular_momentum(const CffCoeffs& f, double scale) {
  const int n = f.n(), N = f.half(), h = f.half();
  VectorFieldCFF out(n);
  Plane pf(h), pt(h), pl(h), pd(h), pq(h), px(h), py(h);
  std::vector<Complex> work(static_cast<std::size_t>(2 * h + 3));
  double worst = 0.0;
  for (int k = 0; k <= N; ++k) {
    pf.load(f, k);
    for (int l = -h; l <= h; ++l) {
      for (int m = -h; m <= h; ++m) {
        pt(l, m) = Complex(0.0, m) * pf(l, m);
        pl(l, m) = Complex(0.0, l) * pf(l, m);
      }
      worst = std::max(worst, div_sin_theta_row(pf, l, Complex(0.0, l), pd, work));
    }
    pq.clear();
    add_cos_theta(pq, pd, 1.0);
    px.clear();
    add_sin_lambda(px, pt, -1.0);
    add_cos_lambda(px, pq, -1.0);
    py.clear();
    add_cos_lambda(py, pt, 1.0);
    add_sin_lambda(py, pq, -1.0);
    px.store(out.x, k);
    py.store(out.y, k);
    pl.store(out.z, k);
  }
  check_division(worst, scale, "sin(theta)");
  return out;
}

// L·F = Σ L_i F_i.
CffCoeffs angular_dot(const VectorFieldCFF& F, double scale) {
  const int n = F.n(), N = F.x.half(), h = F.x.half();
  CffCoeffs out(n);
  Plane fx(h), fy(h), fz(h), tx(h), ty(h), g(h), gd(h), o(h);
  std::vector<Complex> work(static_cast<std::size_t>(2 * h + 3));
  double worst = 0.0;
  for (int k = 0; k <= N; ++k) {
    fx.load(F.x, k);
    fy.load(F.y, k);
    fz.load(F.z, k);
    for (int l = -h; l <= h; ++l)
      for (int m = -h; m <= h; ++m) {
        tx(l, m) = Complex(0.0, m) * fx(l, m);
        ty(l, m) = Complex(0.0, m) * fy(l, m);
        fx(l, m) *= Complex(0.0, l);
        fy(l, m) *= Complex(0.0, l);
      }
    // g = cos λ ∂λF_x + sin λ ∂λF_y, then cot θ g.
    g.clear();
    add_cos_lambda(g, fx, 1.0);
    add_sin_lambda(g, fy, 1.0);
    for (int l = -h; l <= h; ++l) worst = std::max(worst, div_sin_theta_row(g, l, 1.0, gd, work));
    o.clear();
    add_cos_lambda(o, ty, 1.0);
    add_sin_lambda(o, tx, -1.0);
    add_cos_theta(o, gd, -1.0);
    for (int l = -h; l <= h; ++l)
      for (int m = -h; m <= h; ++m) o(l, m) += Complex(0.0, l) * fz(l, m);
    o.store(out, k);
  }
  check_division(worst, scale, "sin(theta)");
  return out;
}

// r·v = r (sin θ (cos λ v_x + sin λ v_y) + cos θ v_z).
CffCoeffs radial_projection_same_size(const VectorFieldCFF& v) {
  const int n = v.n(), N = v.x.half(), h = v.x.half();
  CffCoeffs u(n);
  Plane vx(h), vy(h), vz(h), hz(h), o(h);
  for (int k = 0; k <= N; ++k) {
    vx.load(v.x, k);
    vy.load(v.y, k);
    vz.load(v.z, k);
    hz.clear();
    add_cos_lambda(hz, vx, 1.0);
    add_sin_lambda(hz, vy, 1.0);
    o.clear();
    add_sin_theta(o, hz, 1.0);
    add_cos_theta(o, vz, 1.0);
    o.store(u, k);
  }
  CffCoeffs out(n);
  radial_multiply(u.data(), out.data(), N, slice_size(u));
  return out;
}

}  // namespace

VectorFieldCFF gradient(const CffCoeffs& f, double reference_scale) {
  const int n = f.n();
  Partials p = partials(resize(f, n + 2), std::max(f.max_abs(), reference_scale));
  return {resize(p.dx, n), resize(p.dy, n), resize(p.dz, n)};
}

VectorFieldCFF curl(const VectorFieldCFF& v, double reference_scale) {
  const int n = v.n();
  return resize(curl_same_size(resize(v, n + 2), std::max(v.max_abs(), reference_scale)), n);
}

CffCoeffs divergence(const VectorFieldCFF& v, double reference_scale) {
  const int n = v.n();
  const double scale = std::max(v.max_abs(), reference_scale);
  const VectorFieldCFF p = resize(v, n + 2);
  CffCoeffs out = partials(p.x, scale).dx;
  out += partials(p.y, scale).dy;
  out += partials(p.z, scale).dz;
  return resize(out, n);
}

namespace {

// a×b on the periodic grid of size np, analysed at np.
VectorFieldCFF cross_on_grid(const VectorFieldCFF& a, const VectorFieldCFF& b, int np) {
  PeriodicGrid ga[3] = {synthesize_periodic(resize(a.x, np)), synthesize_periodic(resize(a.y, np)),
                        synthesize_periodic(resize(a.z, np))};
  const PeriodicGrid gb[3] = {synthesize_periodic(resize(b.x, np)), synthesize_periodic(resize(b.y, np)),
                              synthesize_periodic(resize(b.z, np))};
  PeriodicGrid out[3] = {PeriodicGrid(np), PeriodicGrid(np), PeriodicGrid(np)};
  for (std::size_t i = 0; i < ga[0].values.size(); ++i) {
    const Complex ax = ga[0].values[i], ay = ga[1].values[i], az = ga[2].values[i];
    const Complex bx = gb[0].values[i], by = gb[1].values[i], bz = gb[2].values[i];
    out[0].values[i] = ay * bz - az * by;
    out[1].values[i] = az * bx - ax * bz;
    out[2].values[i] = ax * by - ay * bx;
  }
  return {cff_analysis(out[0]), cff_analysis(out[1]), cff_analysis(out[2])};
}

}  // namespace

VectorFieldCFF cross_product_dealiased(const VectorFieldCFF& a, const VectorFieldCFF& b) {
  if (a.n() != b.n()) throw InvalidParameter("cross product: size mismatch");
  return resize(cross_on_grid(a, b, dealiased_size(a.n())), a.n());
}

VectorFieldCFF cross_product_exact(const VectorFieldCFF& a, const VectorFieldCFF& b) {
  if (a.n() != b.n()) throw InvalidParameter("cross product: size mismatch");
  // Wavenumbers of the product reach n, strictly inside the Nyquist limit of 2n + 2.
  return resize(cross_on_grid(a, b, 2 * a.n() + 2), 2 * a.n());
}

CffCoeffs radial_projection(const VectorFieldCFF& v) {
  const int n = v.n();
  return resize(radial_projection_same_size(resize(v, n + 2)), n);
}

VectorFieldCFF pt_synthesis(const PtPair& pt) {
  const int n = pt.n();
  if (pt.toroidal.n() != n) throw InvalidParameter("poloidal/toroidal size mismatch");
  const int np = n + 4;
  const CffCoeffs p = resize(csh_to_cff(pt.poloidal), np);
  const CffCoeffs t = resize(csh_to_cff(pt.toroidal), np);

  // One scale for both scalars, so a roundoff-level partner is not judged on its own.
  const double scale = std::max(p.max_abs(), t.max_abs());
  VectorFieldCFF v(np);
  // ∇×(r T) = −L T and ∇×∇×(r P) = −∇×(L P).
  if (t.max_abs() > 0.0) {
    const VectorFieldCFF lt = angular_momentum(t, scale);
    v = VectorFieldCFF(-1.0 * lt.x, -1.0 * lt.y, -1.0 * lt.z);
  }
  if (p.max_abs() > 0.0) {
    const VectorFieldCFF lp = angular_momentum(p, scale);
    const VectorFieldCFF c = curl_same_size(lp, std::max(lp.max_abs(), scale));
    v.x -= c.x;
    v.y -= c.y;
    v.z -= c.z;
  }
  return resize(v, n);
}

PtPair pt_analysis(const VectorFieldCFF& w, double reference_scale, int n_out) {
  const int n = n_out > 0 ? n_out : w.n();
  const int L = n / 2;
  // r·(∇×w) = L·w.
  const double wscale = std::max(w.max_abs(), reference_scale);
  CshCoeffs p = cff_to_csh(radial_projection(w), n);
  CshCoeffs t = cff_to_csh(resize(angular_dot(resize(w, w.n() + 2), wscale), w.n()), n);

  const double scale = std::max({w.max_abs(), p.max_abs(), reference_scale});
  double l0 = 0.0;
  for (int k = 0; k <= L; ++k) l0 = std::max(l0, std::abs(p(k, 0, 0)));
  if (l0 > 1e-8 * scale) {
    std::ostringstream os;
    os << "field has an l=0 radial component of size " << l0 << " (scale " << scale << ")";
    throw NotSolenoidalTangent(os.str());
  }
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      const double inv = l == 0 ? 0.0 : 1.0 / (l * (l + 1.0));
      for (auto& c : p.profile(l, m)) c *= inv;
      for (auto& c : t.profile(l, m)) c *= inv;
    }
  return {std::move(p), std::move(t)};
}

}  // namespace ballns
