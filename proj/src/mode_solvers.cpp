#include "ballns/mode_solvers.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "ballns/errors.hpp"

namespace ballns {

std::string to_string(BcKind kind) { return kind == BcKind::Dirichlet ? "dirichlet" : "integral"; }

namespace {

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

struct Caches {
  std::map<std::pair<int, int>, BandedMatrix> laplacian;  // (l, size)
  std::map<int, BandedMatrix> weight;                     // size
  std::map<std::tuple<int, double, int>, ModeOperator> helmholtz;
  std::map<std::tuple<int, double, int, BcKind>, std::shared_ptr<const AlmostBandedQR>> helmholtz_qr;
  std::map<std::tuple<int, double, double, double, double, int, BcKind>,
           std::shared_ptr<const AlmostBandedQR>>
      generalized_qr;
};

Caches& caches() {
  static Caches c;
  return c;
}

void require_size(int size) {
  if (size < 3) throw InvalidParameter("radial profile needs at least 3 coefficients");
}

// Products are formed at a padded size so the retained block equals the
// truncation of the exact operator.
BandedMatrix build_laplacian(int l, int size) {
  const int big = size + 4;
  const double r2[] = {0.5, 0.0, 0.5}, r1[] = {0.0, 1.0};
  const BandedMatrix s0 = conversion_operator(0, big), s1 = conversion_operator(1, big);
  const BandedMatrix m2 = multiplication_operator(r2, big), m1 = multiplication_operator(r1, big);
  const BandedMatrix b = m2 * differentiation_operator(2, big) +
                         2.0 * (m1 * (s1 * differentiation_operator(1, big))) +
                         (-static_cast<double>(l) * (l + 1.0)) * (s1 * s0);
  return b.truncated(size).trimmed();
}

BandedMatrix build_weight(int size) {
  const int big = size + 4;
  const double r2[] = {0.5, 0.0, 0.5};
  const BandedMatrix w = multiplication_operator(r2, big) * (conversion_operator(1, big) * conversion_operator(0, big));
  return w.truncated(size).trimmed();
}

// Nonzeros of row i of a banded matrix, shifted to interleaved columns.
void add_row(std::map<int, double>& row, const BandedMatrix& a, int i, double scale, int blocks, int var) {
  if (scale == 0.0) return;
  for (int j = std::max(0, i - a.lower()); j <= std::min(a.size() - 1, i + a.upper()); ++j) {
    const double v = a(i, j);
    if (v != 0.0) row[blocks * j + var] += scale * v;
  }
}

BandedRow to_banded(const std::map<int, double>& row) {
  BandedRow out;
  if (row.empty()) return out;
  out.start = row.begin()->first;
  out.values.assign(static_cast<std::size_t>(row.rbegin()->first - out.start + 1), 0.0);
  for (const auto& [j, v] : row) out.values[static_cast<std::size_t>(j - out.start)] = v;
  return out;
}

std::vector<double> evaluation_row(int size, int sign, int blocks, int var) {
  std::vector<double> row(static_cast<std::size_t>(blocks * size), 0.0);
  for (int k = 0; k < size; ++k) row[static_cast<std::size_t>(blocks * k + var)] = (sign < 0 && k % 2) ? -1.0 : 1.0;
  return row;
}

std::vector<double> integral_row(int l, int size, int blocks, int var) {
  const auto& mu = clenshaw_curtis_moments(l, size);
  std::vector<double> row(static_cast<std::size_t>(blocks * size), 0.0);
  for (int k = 0; k < size; ++k) row[static_cast<std::size_t>(blocks * k + var)] = mu[static_cast<std::size_t>(k)];
  return row;
}

AlmostBandedMatrix helmholtz_matrix(int l, double k2, int size, BcKind kind) {
  const ModeOperator& op = assemble_helmholtz_mode(l, k2, size);
  AlmostBandedMatrix m;
  m.size = size;
  int drop_a = size, drop_b = size;
  if (kind == BcKind::Dirichlet) {
    m.border.push_back(evaluation_row(size, +1, 1, 0));
    m.border.push_back(evaluation_row(size, -1, 1, 0));
    drop_a = size - 2;
    drop_b = size - 1;
  } else {
    m.border.push_back(integral_row(l, size, 1, 0));
    drop_a = integral_dropped_row(l, size);
  }
  for (int i = 0; i < size; ++i) {
    if (i == drop_a || i == drop_b) continue;
    std::map<int, double> row;
    add_row(row, op.a, i, 1.0, 1, 0);
    m.rows.push_back(to_banded(row));
  }
  return m;
}

std::vector<Complex> helmholtz_rhs(int l, int size, std::span<const Complex> f, BcKind kind, Complex value) {
  const auto wf = r2_weight_operator(size).apply(f);
  std::vector<Complex> rhs;
  int drop_a = size, drop_b = size;
  if (kind == BcKind::Dirichlet) {
    rhs.push_back(value);
    rhs.push_back(l % 2 ? -value : value);
    drop_a = size - 2;
    drop_b = size - 1;
  } else {
    rhs.push_back(-value);
    drop_a = integral_dropped_row(l, size);
  }
  for (int i = 0; i < size; ++i) {
    if (i == drop_a || i == drop_b) continue;
    rhs.push_back(wf[static_cast<std::size_t>(i)]);
  }
  return rhs;
}

struct BlockRowSpec {
  int block;
  int index;
};

AlmostBandedMatrix generalized_matrix(int l, const GeneralizedParams& p, int size, BcKind kind) {
  const int blocks = generalized_block_count(p);
  const BandedMatrix& b = radial_laplacian_operator(l, size);
  const BandedMatrix& w = r2_weight_operator(size);
  AlmostBandedMatrix m;
  m.size = blocks * size;
  if (kind == BcKind::Dirichlet) {
    m.border.push_back(evaluation_row(size, +1, blocks, 0));
    m.border.push_back(evaluation_row(size, -1, blocks, 0));
  } else {
    m.border.push_back(integral_row(l, size, blocks, 0));
  }
  for (int var = 1; var < blocks; ++var) {
    m.border.push_back(evaluation_row(size, +1, blocks, var));
    m.border.push_back(evaluation_row(size, -1, blocks, var));
  }
  const int drop_u = kind == BcKind::Integral ? integral_dropped_row(l, size) : -1;
  for (int i = 0; i < size; ++i) {
    for (int blk = 0; blk < blocks; ++blk) {
      const bool last_block = blk == blocks - 1;
      if (blk == 0) {
        if (kind == BcKind::Dirichlet ? i >= size - 2 : i == drop_u) continue;
      } else if (i >= size - 2) {
        continue;
      }
      std::map<int, double> row;
      if (!last_block) {
        // B_l w_blk − r² w_{blk+1} = 0
        add_row(row, b, i, 1.0, blocks, blk);
        add_row(row, w, i, -1.0, blocks, blk + 1);
      } else if (blocks == 3) {
        add_row(row, w, i, 1.0 / p.dt, blocks, 0);
        add_row(row, w, i, -p.gamma0, blocks, 1);
        add_row(row, w, i, p.gamma2, blocks, 2);
        add_row(row, b, i, -p.gamma4, blocks, 2);
      } else {
        add_row(row, w, i, 1.0 / p.dt, blocks, 0);
        add_row(row, w, i, -p.gamma0, blocks, 1);
        add_row(row, b, i, p.gamma2, blocks, 1);
      }
      m.rows.push_back(to_banded(row));
    }
  }
  return m;
}

std::vector<Complex> generalized_rhs(int l, const GeneralizedParams& p, std::span<const Complex> rhs,
                                     BcKind kind, Complex value) {
  const int blocks = generalized_block_count(p);
  const int size = static_cast<int>(rhs.size());
  const auto wr = r2_weight_operator(size).apply(rhs);
  std::vector<Complex> out;
  if (kind == BcKind::Dirichlet) {
    out.push_back(value);
    out.push_back(l % 2 ? -value : value);
  } else {
    out.push_back(-value);
  }
  for (int var = 1; var < blocks; ++var) {
    out.push_back(0.0);
    out.push_back(0.0);
  }
  const int drop_u = kind == BcKind::Integral ? integral_dropped_row(l, size) : -1;
  for (int i = 0; i < size; ++i) {
    for (int blk = 0; blk < blocks; ++blk) {
      if (blk == 0) {
        if (kind == BcKind::Dirichlet ? i >= size - 2 : i == drop_u) continue;
      } else if (i >= size - 2) {
        continue;
      }
      out.push_back(blk == blocks - 1 ? wr[static_cast<std::size_t>(i)] : Complex{});
    }
  }
  return out;
}

template <class Key, class Build>
std::shared_ptr<const AlmostBandedQR> cached_qr(
    std::map<Key, std::shared_ptr<const AlmostBandedQR>>& cache, const Key& key, Build&& build) {
  {
    std::lock_guard lock(cache_mutex());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto qr = std::make_shared<const AlmostBandedQR>(build());
  std::lock_guard lock(cache_mutex());
  return cache.emplace(key, std::move(qr)).first->second;
}

}  // namespace

const BandedMatrix& radial_laplacian_operator(int l, int size) {
  require_size(size);
  std::lock_guard lock(cache_mutex());
  auto& cache = caches().laplacian;
  auto it = cache.find({l, size});
  if (it == cache.end()) it = cache.emplace(std::pair{l, size}, build_laplacian(l, size)).first;
  return it->second;
}

const BandedMatrix& r2_weight_operator(int size) {
  require_size(size);
  std::lock_guard lock(cache_mutex());
  auto& cache = caches().weight;
  auto it = cache.find(size);
  if (it == cache.end()) it = cache.emplace(size, build_weight(size)).first;
  return it->second;
}

const ModeOperator& assemble_helmholtz_mode(int l, double k2, int size) {
  if (l < 0) throw InvalidParameter("negative spherical harmonic degree");
  const BandedMatrix& b = radial_laplacian_operator(l, size);
  const BandedMatrix& w = r2_weight_operator(size);
  std::lock_guard lock(cache_mutex());
  auto& cache = caches().helmholtz;
  const auto key = std::tuple{l, k2, size};
  auto it = cache.find(key);
  if (it == cache.end()) {
    ModeOperator op;
    op.l = l;
    op.k2 = k2;
    op.size = size;
    op.a = k2 == 0.0 ? b : b + k2 * w;
    it = cache.emplace(key, std::move(op)).first;
  }
  return it->second;
}

int integral_dropped_row(int l, int size) {
  const int last = size - 1;
  return (last + l) % 2 == 0 ? last : last - 1;
}

AlmostBandedSystem helmholtz_system(int l, double k2, std::span<const Complex> f, BcKind kind,
                                    Complex value) {
  const int size = static_cast<int>(f.size());
  require_size(size);
  return {helmholtz_matrix(l, k2, size, kind), helmholtz_rhs(l, size, f, kind, value)};
}

namespace {

std::vector<Complex> solve_helmholtz(int l, int m, double k2, std::span<const Complex> f, BcKind kind,
                                     Complex value) {
  const int size = static_cast<int>(f.size());
  require_size(size);
  if (std::abs(m) > l) throw InvalidParameter("mode index |m| > l");
  try {
    const auto qr = cached_qr(caches().helmholtz_qr, std::tuple{l, k2, size, kind},
                              [&] { return AlmostBandedQR(helmholtz_matrix(l, k2, size, kind)); });
    return qr->solve(helmholtz_rhs(l, size, f, kind, value));
  } catch (const SingularSystem&) {
    throw SingularSystem(l, m, to_string(kind), "Helmholtz mode system is singular");
  }
}

}  // namespace

std::vector<Complex> solve_helmholtz_dirichlet(int l, int m, double k2, std::span<const Complex> f,
                                               Complex g) {
  return solve_helmholtz(l, m, k2, f, BcKind::Dirichlet, g);
}

std::vector<Complex> solve_helmholtz_integral(int l, int m, double k2, std::span<const Complex> f,
                                              Complex p) {
  if (l == 0) return std::vector<Complex>(f.size(), Complex{});
  return solve_helmholtz(l, m, k2, f, BcKind::Integral, p);
}

int generalized_block_count(const GeneralizedParams& p) {
  if (p.gamma4 != 0.0) return 3;
  if (p.gamma2 != 0.0) return 2;
  return 1;
}

AlmostBandedSystem generalized_system(int l, const GeneralizedParams& params,
                                      std::span<const Complex> rhs, BcKind kind, Complex value) {
  const int size = static_cast<int>(rhs.size());
  require_size(size);
  if (generalized_block_count(params) == 1) {
    std::vector<Complex> f(rhs.begin(), rhs.end());
    for (auto& v : f) v /= -params.gamma0;
    return helmholtz_system(l, -1.0 / (params.gamma0 * params.dt), f, kind, value);
  }
  return {generalized_matrix(l, params, size, kind), generalized_rhs(l, params, rhs, kind, value)};
}

std::vector<Complex> solve_generalized_mode(int l, int m, const GeneralizedParams& params,
                                            std::span<const Complex> rhs, BcKind kind, Complex value) {
  if (!(params.dt > 0.0)) throw InvalidParameter("time step must be positive");
  if (!(params.gamma0 > 0.0)) throw InvalidParameter("gamma0 must be positive");
  const int size = static_cast<int>(rhs.size());
  require_size(size);
  if (std::abs(m) > l) throw InvalidParameter("mode index |m| > l");
  if (kind == BcKind::Integral && l == 0) return std::vector<Complex>(rhs.size(), Complex{});

  const int blocks = generalized_block_count(params);
  if (blocks == 1) {
    std::vector<Complex> f(rhs.begin(), rhs.end());
    for (auto& v : f) v /= -params.gamma0;
    return solve_helmholtz(l, m, -1.0 / (params.gamma0 * params.dt), f, kind, value);
  }
  try {
    const auto key = std::tuple{l, params.gamma0, params.gamma2, params.gamma4, params.dt, size, kind};
    const auto qr = cached_qr(caches().generalized_qr, key,
                              [&] { return AlmostBandedQR(generalized_matrix(l, params, size, kind)); });
    const auto x = qr->solve(generalized_rhs(l, params, rhs, kind, value));
    std::vector<Complex> u(static_cast<std::size_t>(size));
    for (int k = 0; k < size; ++k) u[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(blocks * k)];
    return u;
  } catch (const SingularSystem&) {
    throw SingularSystem(l, m, to_string(kind), "generalized mode system is singular");
  }
}

void clear_mode_caches() {
  std::lock_guard lock(cache_mutex());
  caches() = Caches{};
}

}  // namespace ballns
