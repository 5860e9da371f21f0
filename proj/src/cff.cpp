#include "ballns/cff.hpp"

#include <fftw3.h>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "ballns/errors.hpp"
#include "ballns/timing.hpp"

namespace ballns {

namespace {

#if defined(__GLIBC__)
// Coefficient tensors of a few MB are allocated and freed many times per time
// step. Served by mmap, each one costs a page-fault storm; kept on the heap,
// they are reused.
const bool kHeapTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 32 << 20);  // the largest value glibc accepts
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

void require_valid_n(int n) {
  if (n < 4 || n % 2 != 0) {
    throw InvalidParameter("discretization parameter n must be even and >= 4, got " +
                           std::to_string(n));
  }
}

void require_same_n(const CffCoeffs& a, const CffCoeffs& b) {
  if (a.n() != b.n()) {
    throw InvalidParameter("CFF size mismatch: " + std::to_string(a.n()) + " vs " +
                           std::to_string(b.n()));
  }
}

// FFTW plans for one n: 2-D DFTs over the angular axes of every radial slice and
// a DCT-I along r applied to real and imaginary parts. The planner is not
// re-entrant, so plan creation is serialized; execution uses the new-array
// interface, which is thread-safe.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  fftw_plan dct = nullptr;
};

const Plans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  const int nr = n / 2 + 1;
  const std::size_t total = static_cast<std::size_t>(nr) * n * n;
  fftw_complex* buffer = fftw_alloc_complex(total);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

  Plans p;
  fftw_iodim dims[2] = {{n, n, n}, {n, 1, 1}};
  fftw_iodim slices[1] = {{nr, n * n, n * n}};
  p.forward = fftw_plan_guru_dft(2, dims, 1, slices, buffer, buffer, FFTW_FORWARD, flags);
  p.backward = fftw_plan_guru_dft(2, dims, 1, slices, buffer, buffer, FFTW_BACKWARD, flags);

  double* real = reinterpret_cast<double*>(buffer);
  fftw_iodim rdims[1] = {{nr, 2 * n * n, 2 * n * n}};
  fftw_iodim rhowmany[2] = {{n * n, 2, 2}, {2, 1, 1}};
  fftw_r2r_kind kind = FFTW_REDFT00;
  p.dct = fftw_plan_guru_r2r(1, rdims, 2, rhowmany, real, real, &kind, flags);
  fftw_free(buffer);

  return cache.emplace(n, p).first->second;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

// Plans for synthesis from a series with A = n + 1 stored wavenumbers per axis
// onto a larger grid of size M: the DCT runs over the stored lines only, the
// m-transform over the occupied rows only.
struct PaddedPlans {
  fftw_plan dct = nullptr;
  fftw_plan rows = nullptr;
  fftw_plan cols = nullptr;
  fftw_plan rows_half = nullptr;  // slices k <= M/4 only
  fftw_plan cols_half = nullptr;
};

const PaddedPlans& padded_plans_for(int M, int A) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, PaddedPlans> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({M, A});
  if (it != cache.end()) return it->second;

  const int nr = M / 2 + 1, h = (A - 1) / 2;
  const int lines = A * A;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PaddedPlans p;

  fftw_complex* work = fftw_alloc_complex(static_cast<std::size_t>(nr) * lines);
  double* real = reinterpret_cast<double*>(work);
  fftw_iodim rdims[1] = {{nr, 2 * lines, 2 * lines}};
  fftw_iodim rhowmany[1] = {{2 * lines, 1, 1}};
  fftw_r2r_kind kind = FFTW_REDFT00;
  p.dct = fftw_plan_guru_r2r(1, rdims, 1, rhowmany, real, real, &kind, flags);
  fftw_free(work);

  fftw_complex* grid = fftw_alloc_complex(static_cast<std::size_t>(nr) * M * M);
  fftw_iodim row_dim[1] = {{M, 1, 1}};
  fftw_iodim row_loops[2] = {{nr, M * M, M * M}, {h + 1, M, M}};
  p.rows = fftw_plan_guru_dft(1, row_dim, 2, row_loops, grid, grid, FFTW_BACKWARD, flags);
  fftw_iodim col_dim[1] = {{M, M, M}};
  fftw_iodim col_loops[2] = {{nr, M * M, M * M}, {M, 1, 1}};
  p.cols = fftw_plan_guru_dft(1, col_dim, 2, col_loops, grid, grid, FFTW_BACKWARD, flags);
  if (M % 4 == 0) {
    const int half = M / 4 + 1;
    fftw_iodim hrow_loops[2] = {{half, M * M, M * M}, {h + 1, M, M}};
    p.rows_half = fftw_plan_guru_dft(1, row_dim, 2, hrow_loops, grid, grid, FFTW_BACKWARD, flags);
    fftw_iodim hcol_loops[2] = {{half, M * M, M * M}, {M, 1, 1}};
    p.cols_half = fftw_plan_guru_dft(1, col_dim, 2, hcol_loops, grid, grid, FFTW_BACKWARD, flags);
  }
  fftw_free(grid);

  return cache.emplace(std::make_pair(M, A), p).first->second;
}

// Forward transforms for analyze_regular on a grid of size M keeping |l| <= L:
// λ-FFT on the r >= 0 slices, θ-FFT on the kept rows, DCT on the kept lines.
struct RegularAnalysisPlans {
  fftw_plan cols = nullptr;
  fftw_plan rows = nullptr;
  fftw_plan dct = nullptr;
};

const RegularAnalysisPlans& regular_analysis_plans(int M, int L) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, RegularAnalysisPlans> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({M, L});
  if (it != cache.end()) return it->second;

  const int nr = M / 2 + 1, half = M / 4 + 1;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  RegularAnalysisPlans p;
  fftw_complex* grid = fftw_alloc_complex(static_cast<std::size_t>(nr) * M * M);
  fftw_iodim col_dim[1] = {{M, M, M}};
  fftw_iodim col_loops[2] = {{half, M * M, M * M}, {M, 1, 1}};
  p.cols = fftw_plan_guru_dft(1, col_dim, 2, col_loops, grid, grid, FFTW_FORWARD, flags);
  fftw_iodim row_dim[1] = {{M, 1, 1}};
  fftw_iodim row_loops[2] = {{half, M * M, M * M}, {L + 1, M, M}};
  p.rows = fftw_plan_guru_dft(1, row_dim, 2, row_loops, grid, grid, FFTW_FORWARD, flags);
  double* real = reinterpret_cast<double*>(grid);
  fftw_iodim rdims[1] = {{nr, 2 * M * M, 2 * M * M}};
  fftw_iodim rhowmany[1] = {{2 * (L + 1) * M, 1, 1}};
  fftw_r2r_kind kind = FFTW_REDFT00;
  p.dct = fftw_plan_guru_r2r(1, rdims, 1, rhowmany, real, real, &kind, flags);
  fftw_free(grid);
  return cache.emplace(std::make_pair(M, L), p).first->second;
}

int wrap(int w, int n) { return ((w % n) + n) % n; }

// Apply fn(line_base, stride) to every radial line (fixed l, m).
template <class Fn>
void for_each_radial_line(CffCoeffs& c, Fn&& fn) {
  const std::size_t a = static_cast<std::size_t>(c.angular_size());
  const std::size_t stride = a * a;
  for (std::size_t lm = 0; lm < stride; ++lm) fn(lm, stride);
}

}  // namespace

// ---------------------------------------------------------------------------
// CffCoeffs

CffCoeffs::CffCoeffs(int n) : n_(n) {
  require_valid_n(n);
  data_.assign(static_cast<std::size_t>(n / 2 + 1) * (n + 1) * (n + 1), Complex{});
}

double CffCoeffs::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

CffCoeffs& CffCoeffs::operator+=(const CffCoeffs& other) {
  require_same_n(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

CffCoeffs& CffCoeffs::operator-=(const CffCoeffs& other) {
  require_same_n(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

CffCoeffs& CffCoeffs::operator*=(Complex scale) noexcept {
  for (auto& v : data_) v *= scale;
  return *this;
}

CffCoeffs operator+(CffCoeffs a, const CffCoeffs& b) { return a += b; }
CffCoeffs operator-(CffCoeffs a, const CffCoeffs& b) { return a -= b; }
CffCoeffs operator*(Complex scale, CffCoeffs a) { return a *= scale; }

// ---------------------------------------------------------------------------
// Grids

GridValues::GridValues(int n) : n_(n) {
  require_valid_n(n);
  data_.assign(static_cast<std::size_t>(n / 2 + 1) * (n + 1) * (n + 1), Complex{});
}

double GridValues::radius(int k) const { return std::cos(2.0 * k * std::numbers::pi / n_); }
double GridValues::azimuth(int l) const { return 2.0 * l * std::numbers::pi / n_; }
double GridValues::polar(int m) const { return 2.0 * m * std::numbers::pi / n_; }

GridValues::Point GridValues::cartesian(int k, int l, int m) const {
  const double r = radius(k), lam = azimuth(l), th = polar(m);
  return {r * std::cos(lam) * std::sin(th), r * std::sin(lam) * std::sin(th),
          r * std::cos(th)};
}

PeriodicGrid::PeriodicGrid(int n_) : n(n_) {
  require_valid_n(n_);
  values.assign(static_cast<std::size_t>(n_ / 2 + 1) * n_ * n_, Complex{});
}

// ---------------------------------------------------------------------------
// Transforms

PeriodicGrid synthesize_periodic(const CffCoeffs& c) {
  StageScope timer(Stage::CffTransform);
  const int n = c.n(), N = c.half(), a = c.angular_size();
  PeriodicGrid grid(n);
  for (int k = 0; k <= N; ++k) {
    const double weight = (k == 0 || k == N) ? 1.0 : 0.5;
    for (int sl = 0; sl < a; ++sl) {
      const int jl = wrap(c.wavenumber(sl), n);
      for (int sm = 0; sm < a; ++sm) {
        const int jm = wrap(c.wavenumber(sm), n);
        grid(k, jl, jm) += weight * c.data()[c.offset(k, c.wavenumber(sl), c.wavenumber(sm))];
      }
    }
  }
  const Plans& p = plans_for(n);
  fftw_execute_dft(p.backward, as_fftw(grid.values.data()), as_fftw(grid.values.data()));
  double* real = reinterpret_cast<double*>(grid.values.data());
  fftw_execute_r2r(p.dct, real, real);
  return grid;
}

CffCoeffs cff_analysis(const PeriodicGrid& grid) {
  StageScope timer(Stage::CffTransform);
  const int n = grid.n, N = n / 2, h = n / 2;
  std::vector<Complex> work = grid.values;
  const Plans& p = plans_for(n);
  fftw_execute_dft(p.forward, as_fftw(work.data()), as_fftw(work.data()));
  double* real = reinterpret_cast<double*>(work.data());
  fftw_execute_r2r(p.dct, real, real);

  CffCoeffs c(n);
  const double base = 1.0 / (static_cast<double>(n) * n * N);
  for (int k = 0; k <= N; ++k) {
    const double scale = base * ((k == 0 || k == N) ? 0.5 : 1.0);
    for (int jl = 0; jl < n; ++jl) {
      const bool nyq_l = (jl == h);
      const int wl = jl < h ? jl : jl - n;
      for (int jm = 0; jm < n; ++jm) {
        const bool nyq_m = (jm == h);
        const int wm = jm < h ? jm : jm - n;
        const Complex v =
            scale * work[(static_cast<std::size_t>(k) * n + jl) * n + jm];
        if (!nyq_l && !nyq_m) {
          c(k, wl, wm) = v;
        } else if (nyq_l && !nyq_m) {
          c(k, h, wm) = 0.5 * v;
          c(k, -h, wm) = 0.5 * v;
        } else if (!nyq_l && nyq_m) {
          c(k, wl, h) = 0.5 * v;
          c(k, wl, -h) = 0.5 * v;
        } else {
          for (int sl : {-h, h})
            for (int sm : {-h, h}) c(k, sl, sm) = 0.25 * v;
        }
      }
    }
  }
  return c;
}

PeriodicGrid synthesize_periodic(const CffCoeffs& c, int grid_n) {
  if (grid_n == c.n()) return synthesize_periodic(c);
  if (grid_n < c.n() || grid_n % 2 != 0) {
    throw InvalidParameter("padded synthesis needs an even grid size >= " + std::to_string(c.n()) +
                           ", got " + std::to_string(grid_n));
  }
  StageScope timer(Stage::CffTransform);
  const int M = grid_n, nr = M / 2 + 1, N = c.half(), h = c.half(), A = c.angular_size();
  const std::size_t lines = static_cast<std::size_t>(A) * A;
  std::vector<Complex> work(static_cast<std::size_t>(nr) * lines);
  const auto src = c.data();
  for (int k = 0; k <= N; ++k) {
    const double weight = k == 0 ? 1.0 : 0.5;
    for (std::size_t i = 0; i < lines; ++i) work[k * lines + i] = weight * src[k * lines + i];
  }
  const PaddedPlans& p = padded_plans_for(M, A);
  double* real = reinterpret_cast<double*>(work.data());
  fftw_execute_r2r(p.dct, real, real);

  PeriodicGrid grid(M);
  for (int k = 0; k < nr; ++k)
    for (int sl = 0; sl < A; ++sl) {
      const Complex* row = &work[(static_cast<std::size_t>(k) * A + sl) * A];
      Complex* dst = &grid(k, wrap(c.wavenumber(sl), M), 0);
      std::copy(row, row + h + 1, dst);
      std::copy(row + h + 1, row + A, dst + (M - h));
    }
  fftw_complex* g = as_fftw(grid.values.data());
  fftw_execute_dft(p.rows, g, g);
  fftw_execute_dft(p.rows, g + static_cast<std::size_t>(M - h - 1) * M,
                   g + static_cast<std::size_t>(M - h - 1) * M);
  fftw_execute_dft(p.cols, g, g);
  return grid;
}

CffCoeffs cff_analysis(PeriodicGrid&& grid, int n_out) {
  if (n_out == grid.n) return cff_analysis(grid);
  require_valid_n(n_out);
  if (n_out > grid.n) {
    throw InvalidParameter("analysis size " + std::to_string(n_out) + " exceeds grid size " +
                           std::to_string(grid.n));
  }
  StageScope timer(Stage::CffTransform);
  const int M = grid.n, h = n_out / 2;
  const Plans& p = plans_for(M);
  fftw_complex* g = as_fftw(grid.values.data());
  fftw_execute_dft(p.forward, g, g);
  double* real = reinterpret_cast<double*>(grid.values.data());
  fftw_execute_r2r(p.dct, real, real);

  CffCoeffs c(n_out);
  const double base = 1.0 / (static_cast<double>(M) * M * (M / 2));
  for (int k = 0; k <= h; ++k) {
    const double scale = k == 0 ? 0.5 * base : base;
    for (int l = -h; l <= h; ++l) {
      const Complex* row = &grid(k, wrap(l, M), 0);
      Complex* dst = &c(k, l, 0);
      for (int m = 0; m <= h; ++m) dst[m] = scale * row[m];
      for (int m = 1; m <= h; ++m) dst[n_out + 1 - m] = scale * row[M - m];
    }
  }
  return c;
}

void require_regular_grid(int grid_n) {
  if (grid_n < 8 || grid_n % 4 != 0) {
    throw InvalidParameter("regular transforms need a grid size divisible by 4, got " +
                           std::to_string(grid_n));
  }
}

PeriodicGrid synthesize_regular(const CffCoeffs& c, int grid_n) {
  require_regular_grid(grid_n);
  if (grid_n <= c.n()) {
    throw InvalidParameter("regular synthesis needs a grid larger than the series");
  }
  StageScope timer(Stage::CffTransform);
  const int M = grid_n, nr = M / 2 + 1, half = M / 4 + 1, N = c.half(), h = c.half(),
            A = c.angular_size();
  const std::size_t lines = static_cast<std::size_t>(A) * A;
  std::vector<Complex> work(static_cast<std::size_t>(nr) * lines);
  const auto src = c.data();
  for (int k = 0; k <= N; ++k) {
    const double weight = k == 0 ? 1.0 : 0.5;
    for (std::size_t i = 0; i < lines; ++i) work[k * lines + i] = weight * src[k * lines + i];
  }
  const PaddedPlans& p = padded_plans_for(M, A);
  double* real = reinterpret_cast<double*>(work.data());
  fftw_execute_r2r(p.dct, real, real);

  PeriodicGrid grid(M);
  for (int k = 0; k < half; ++k)
    for (int sl = 0; sl < A; ++sl) {
      const Complex* row = &work[(static_cast<std::size_t>(k) * A + sl) * A];
      Complex* dst = &grid(k, wrap(c.wavenumber(sl), M), 0);
      std::copy(row, row + h + 1, dst);
      std::copy(row + h + 1, row + A, dst + (M - h));
    }
  fftw_complex* g = as_fftw(grid.values.data());
  fftw_execute_dft(p.rows_half, g, g);
  fftw_execute_dft(p.rows_half, g + static_cast<std::size_t>(M - h - 1) * M,
                   g + static_cast<std::size_t>(M - h - 1) * M);
  fftw_execute_dft(p.cols_half, g, g);
  return grid;
}

CffCoeffs analyze_regular(PeriodicGrid&& grid, int n_out, int l_max) {
  require_regular_grid(grid.n);
  require_valid_n(n_out);
  const int M = grid.n, NM = M / 2, h = n_out / 2;
  if (n_out >= M || l_max < 0 || l_max > h) {
    throw InvalidParameter("regular analysis: need n_out < grid size and 0 <= l_max <= n_out/2");
  }
  StageScope timer(Stage::CffTransform);
  const RegularAnalysisPlans& p = regular_analysis_plans(M, l_max);
  fftw_complex* g = as_fftw(grid.values.data());
  const std::size_t upper = static_cast<std::size_t>(M - l_max - 1) * M;
  fftw_execute_dft(p.cols, g, g);
  fftw_execute_dft(p.rows, g, g);
  fftw_execute_dft(p.rows, g + upper, g + upper);

  // Slice NM − k holds r → −r, that is θ → θ + π: a factor (−1)^m.
  for (int k = 0; k < NM / 2; ++k) {
    for (int block = 0; block < 2; ++block) {
      const std::size_t first = block == 0 ? 0 : upper;
      const Complex* src = &grid.values[static_cast<std::size_t>(k) * M * M + first];
      Complex* dst = &grid.values[static_cast<std::size_t>(NM - k) * M * M + first];
      for (int row = 0; row <= l_max; ++row)
        for (int jm = 0; jm < M; ++jm) {
          const std::size_t i = static_cast<std::size_t>(row) * M + jm;
          dst[i] = (jm % 2) ? -src[i] : src[i];
        }
    }
  }
  double* real = reinterpret_cast<double*>(grid.values.data());
  fftw_execute_r2r(p.dct, real, real);
  fftw_execute_r2r(p.dct, real + 2 * upper, real + 2 * upper);

  CffCoeffs c(n_out);
  const double base = 1.0 / (static_cast<double>(M) * M * NM);
  for (int k = 0; k <= h; ++k) {
    const double scale = k == 0 ? 0.5 * base : base;
    for (int l = -l_max; l <= l_max; ++l) {
      const Complex* row = &grid(k, wrap(l, M), 0);
      Complex* dst = &c(k, l, 0);
      for (int m = 0; m <= h; ++m) dst[m] = scale * row[m];
      for (int m = 1; m <= h; ++m) dst[n_out + 1 - m] = scale * row[M - m];
    }
  }
  return c;
}

int product_grid_size(int n) {
  for (int m = 4 * ((2 * n + 5) / 4);; m += 4) {
    int r = m;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

CffCoeffs cff_analysis(const GridValues& values) {
  const int n = values.n(), N = n / 2;
  PeriodicGrid grid(n);
  for (int k = 0; k <= N; ++k)
    for (int jl = 0; jl < n; ++jl)
      for (int jm = 0; jm < n; ++jm)
        grid(k, jl, jm) = values(k, jl <= n / 2 ? jl : jl - n, jm <= n / 2 ? jm : jm - n);
  return cff_analysis(grid);
}

CffCoeffs cff_analysis(const BallSampler& sampler, int n) {
  require_valid_n(n);
  const int N = n / 2;
  PeriodicGrid grid(n);
  std::vector<double> cosl(n), sinl(n);
  for (int j = 0; j < n; ++j) {
    const double ang = 2.0 * std::numbers::pi * j / n;
    cosl[j] = std::cos(ang);
    sinl[j] = std::sin(ang);
  }
  for (int k = 0; k <= N; ++k) {
    const double r = std::cos(k * std::numbers::pi / N);
    for (int jl = 0; jl < n; ++jl)
      for (int jm = 0; jm < n; ++jm)
        grid(k, jl, jm) = sampler(r * cosl[jl] * sinl[jm], r * sinl[jl] * sinl[jm], r * cosl[jm]);
  }
  return cff_analysis(grid);
}

GridValues cff_synthesis(const CffCoeffs& c) {
  const int n = c.n(), N = c.half(), h = c.half();
  PeriodicGrid grid = synthesize_periodic(c);
  GridValues out(n);
  for (int k = 0; k <= N; ++k)
    for (int l = -h; l <= h; ++l)
      for (int m = -h; m <= h; ++m) out(k, l, m) = grid(k, wrap(l, n), wrap(m, n));
  return out;
}

Complex eval_point(const CffCoeffs& c, double r, double lambda, double theta) {
  if (!(std::abs(r) <= 1.0 + 1e-14)) {
    throw DomainError("radial coordinate outside [-1, 1]: " + std::to_string(r));
  }
  const int N = c.half(), h = c.half(), a = c.angular_size();
  std::vector<double> cheb(static_cast<std::size_t>(N + 1));
  cheb[0] = 1.0;
  if (N >= 1) cheb[1] = r;
  for (int k = 2; k <= N; ++k) cheb[k] = 2.0 * r * cheb[k - 1] - cheb[k - 2];

  std::vector<Complex> el(static_cast<std::size_t>(a)), em(static_cast<std::size_t>(a));
  for (int s = 0; s < a; ++s) {
    el[s] = std::polar(1.0, c.wavenumber(s) * lambda);
    em[s] = std::polar(1.0, c.wavenumber(s) * theta);
  }
  (void)h;
  Complex total{};
  const auto data = c.data();
  std::size_t idx = 0;
  for (int k = 0; k <= N; ++k) {
    Complex slice{};
    for (int sl = 0; sl < a; ++sl) {
      Complex row{};
      for (int sm = 0; sm < a; ++sm) row += data[idx++] * em[sm];
      slice += row * el[sl];
    }
    total += cheb[k] * slice;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Differentiation

CffCoeffs diff_r(const CffCoeffs& c) {
  CffCoeffs out(c.n());
  const int N = c.half();
  const auto in = c.data();
  auto res = out.data();
  for_each_radial_line(out, [&](std::size_t base, std::size_t stride) {
    Complex d_next{}, d_next2{};  // d_{k+1}, d_{k+2}
    for (int k = N - 1; k >= 0; --k) {
      const Complex dk = d_next2 + 2.0 * (k + 1) * in[base + (k + 1) * stride];
      res[base + k * stride] = dk;
      d_next2 = d_next;
      d_next = dk;
    }
    res[base] *= 0.5;
  });
  return out;
}

CffCoeffs diff_lambda(const CffCoeffs& c) {
  CffCoeffs out = c;
  const int N = c.half(), a = c.angular_size();
  for (int k = 0; k <= N; ++k)
    for (int sl = 0; sl < a; ++sl) {
      const Complex factor(0.0, c.wavenumber(sl));
      for (int sm = 0; sm < a; ++sm) out(k, c.wavenumber(sl), c.wavenumber(sm)) *= factor;
    }
  return out;
}

CffCoeffs diff_theta(const CffCoeffs& c) {
  CffCoeffs out = c;
  const int N = c.half(), a = c.angular_size();
  for (int k = 0; k <= N; ++k)
    for (int sl = 0; sl < a; ++sl)
      for (int sm = 0; sm < a; ++sm)
        out(k, c.wavenumber(sl), c.wavenumber(sm)) *= Complex(0.0, c.wavenumber(sm));
  return out;
}

// ---------------------------------------------------------------------------
// Products and resizing

int dealiased_size(int n) {
  int m = (3 * n + 1) / 2;
  if (m % 2 != 0) ++m;
  return m;
}

CffCoeffs resize(const CffCoeffs& c, int n_new) {
  CffCoeffs out(n_new);
  const int N = std::min(c.half(), out.half());
  const int h = std::min(c.half(), out.half());
  for (int k = 0; k <= N; ++k)
    for (int l = -h; l <= h; ++l)
      for (int m = -h; m <= h; ++m) out(k, l, m) = c(k, l, m);
  return out;
}

CffCoeffs multiply_pointwise(const CffCoeffs& a, const CffCoeffs& b, bool dealias) {
  require_same_n(a, b);
  const int n = a.n();
  const int np = dealias ? dealiased_size(n) : n;
  PeriodicGrid ga = synthesize_periodic(dealias ? resize(a, np) : a);
  const PeriodicGrid gb = synthesize_periodic(dealias ? resize(b, np) : b);
  for (std::size_t i = 0; i < ga.values.size(); ++i) ga.values[i] *= gb.values[i];
  CffCoeffs product = cff_analysis(ga);
  return dealias ? resize(product, n) : product;
}

// ---------------------------------------------------------------------------
// Coefficient-space multipliers

CffCoeffs mul_r(const CffCoeffs& c) {
  CffCoeffs out(c.n());
  const int N = c.half();
  const auto in = c.data();
  auto res = out.data();
  for_each_radial_line(out, [&](std::size_t base, std::size_t stride) {
    for (int k = 0; k <= N; ++k) {
      const Complex v = in[base + k * stride];
      if (k == 0) {
        res[base + stride] += v;
        continue;
      }
      if (k + 1 <= N) res[base + (k + 1) * stride] += 0.5 * v;
      res[base + (k - 1) * stride] += 0.5 * v;
    }
  });
  return out;
}

namespace {

// out_{w+1} += up * c_w, out_{w-1} += down * c_w along the polar (m) axis.
// out_m = up·c_{m-1} + down·c_{m+1} along θ, within |m| <= n/2.
CffCoeffs shift_polar(const CffCoeffs& c, Complex up, Complex down) {
  CffCoeffs out(c.n());
  const int h = c.half(), A = c.angular_size();
  std::vector<Complex> in(static_cast<std::size_t>(A + 2)), res(static_cast<std::size_t>(A));
  const Complex* src = c.data().data();
  Complex* dst = out.data().data();
  const std::size_t rows = c.data().size() / static_cast<std::size_t>(A);
  for (std::size_t row = 0; row < rows; ++row) {
    const Complex* a = src + row * static_cast<std::size_t>(A);
    Complex* b = dst + row * static_cast<std::size_t>(A);
    // signed order with a zero guard on each side: in[m + h + 1]
    for (int m = 0; m <= h; ++m) in[static_cast<std::size_t>(m + h + 1)] = a[m];
    for (int m = -h; m < 0; ++m) in[static_cast<std::size_t>(m + h + 1)] = a[m + A];
    for (int j = 0; j < A; ++j)
      res[static_cast<std::size_t>(j)] = up * in[static_cast<std::size_t>(j)] + down * in[static_cast<std::size_t>(j + 2)];
    for (int m = 0; m <= h; ++m) b[m] = res[static_cast<std::size_t>(m + h)];
    for (int m = -h; m < 0; ++m) b[m + A] = res[static_cast<std::size_t>(m + h)];
  }
  return out;
}

// out_l = up·c_{l-1} + down·c_{l+1} along λ, within |l| <= n/2.
CffCoeffs shift_azimuthal(const CffCoeffs& c, Complex up, Complex down) {
  CffCoeffs out(c.n());
  const int N = c.half(), h = c.half(), A = c.angular_size();
  for (int k = 0; k <= N; ++k)
    for (int l = -h; l <= h; ++l) {
      Complex* b = &out(k, l, 0);
      if (l - 1 >= -h) {
        const Complex* a = &c(k, l - 1, 0);
        for (int s = 0; s < A; ++s) b[s] += up * a[s];
      }
      if (l + 1 <= h) {
        const Complex* a = &c(k, l + 1, 0);
        for (int s = 0; s < A; ++s) b[s] += down * a[s];
      }
    }
  return out;
}

constexpr Complex kHalfOverI{0.0, -0.5};  // 1 / (2i)

}  // namespace

CffCoeffs mul_sin_theta(const CffCoeffs& c) { return shift_polar(c, kHalfOverI, -kHalfOverI); }
CffCoeffs mul_cos_theta(const CffCoeffs& c) { return shift_polar(c, 0.5, 0.5); }
CffCoeffs mul_cos_lambda(const CffCoeffs& c) { return shift_azimuthal(c, 0.5, 0.5); }
CffCoeffs mul_sin_lambda(const CffCoeffs& c) {
  return shift_azimuthal(c, kHalfOverI, -kHalfOverI);
}

CffCoeffs div_r(const CffCoeffs& c, double* residual) {
  CffCoeffs out(c.n());
  const int N = c.half();
  const auto p = c.data();
  auto q = out.data();
  double worst = 0.0;
  for_each_radial_line(out, [&](std::size_t base, std::size_t stride) {
    auto P = [&](int k) { return p[base + static_cast<std::size_t>(k) * stride]; };
    auto Q = [&](int k) -> Complex& { return q[base + static_cast<std::size_t>(k) * stride]; };
    // r·q reproduces rows 1..N of p exactly; row 0 carries the remainder.
    Q(N - 1) = 2.0 * P(N);
    for (int k = N - 1; k >= 2; --k) Q(k - 1) = 2.0 * P(k) - Q(k + 1);
    Q(0) = P(1) - 0.5 * (N >= 2 ? Q(2) : Complex{});
    worst = std::max(worst, std::abs(P(0) - 0.5 * Q(1)));
  });
  if (residual) *residual = worst;
  return out;
}

CffCoeffs div_sin_theta(const CffCoeffs& c, double* residual) {
  CffCoeffs out(c.n());
  const int N = c.half(), h = c.half();
  const Complex two_i(0.0, 2.0);
  double worst = 0.0;
  std::vector<Complex> q(static_cast<std::size_t>(2 * h + 3));
  for (int k = 0; k <= N; ++k)
    for (int l = -h; l <= h; ++l) {
      auto p = [&](int m) { return c(k, l, m); };
      std::fill(q.begin(), q.end(), Complex{});
      auto Q = [&](int m) -> Complex& { return q[static_cast<std::size_t>(m + h + 1)]; };
      // Top rows determine q_{h-1}..q_1, bottom rows q_{-h+1}..q_{-1}.
      for (int m = h; m >= 2; --m) Q(m - 1) = two_i * p(m) + Q(m + 1);
      for (int m = -h; m <= -2; ++m) Q(m + 1) = Q(m - 1) - two_i * p(m);
      // Rows -1, 0, 1 fix q_0 and the remainder a + b cos θ.
      const Complex a = p(0) - (Q(-1) - Q(1)) / two_i;
      const Complex b = p(1) + p(-1) - (Q(-2) - Q(2)) / two_i;
      Q(0) = Q(2) + two_i * (p(1) - 0.5 * b);
      worst = std::max({worst, std::abs(a), std::abs(b)});
      for (int m = -h + 1; m <= h - 1; ++m) out(k, l, m) = Q(m);
    }
  if (residual) *residual = worst;
  return out;
}

}  // namespace ballns
