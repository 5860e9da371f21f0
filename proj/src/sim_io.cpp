#include "ballns/sim_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>
#include <system_error>
#include <utility>

#include "ballns/errors.hpp"

namespace ballns {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view s) {
  const auto h = s.find('#');
  return trim(h == std::string_view::npos ? s : s.substr(0, h));
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter(what);
}

// Little-endian encoding of the snapshot fields.
template <class T>
void put(std::string& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <class T>
T get(const std::string& buf, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bits |= static_cast<U>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += sizeof(U);
  return std::bit_cast<T>(bits);
}

constexpr char kMagic[4] = {'B', 'N', 'S', 'S'};
constexpr std::size_t kHeaderBytes = 28;

bool finite(const CshCoeffs& u) {
  for (const Complex& c : u.data())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

}  // namespace

void SimConfig::validate() const {
  require(n >= 8 && n % 2 == 0, "n must be even and >= 8, got " + std::to_string(n));
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(t_final > 0.0 && std::isfinite(t_final), "t_final must be positive");
  require(gamma0 > 0.0 && std::isfinite(gamma0), "gamma0 must be positive");
  require(std::isfinite(gamma2), "gamma2 must be finite");
  require(std::isfinite(gamma4), "gamma4 must be finite");
  require(init_energy > 0.0 && std::isfinite(init_energy), "init_energy must be positive");
  require(init_scale >= 0.0 && std::isfinite(init_scale), "init_scale must be nonnegative");
  require(energy_every >= 0, "energy_every must be >= 0");
  require(snapshot_every >= 0, "snapshot_every must be >= 0");
  require(grid_dump_every >= 0, "grid_dump_every must be >= 0");
  require(checkpoint_every >= 0, "checkpoint_every must be >= 0");
}

std::int64_t SimConfig::total_steps() const {
  const double q = t_final / dt;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, q)) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(q));
}

SimParams SimConfig::params() const {
  SimParams p;
  p.n = n;
  p.dt = dt;
  p.gamma0 = gamma0;
  p.gamma2 = gamma2;
  p.gamma4 = gamma4;
  p.steps = total_steps();
  return p;
}

SimConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  SimConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_comment(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = " at line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw LoadError("expected 'key = value'" + where);
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw LoadError("duplicate key '" + key + "'" + where);
    if (value.empty()) throw LoadError("empty value for '" + key + "'" + where);
    const std::string bad = "bad value '" + std::string(value) + "' for '" + key + "'" + where;

    auto real = [&](double& dst) {
      if (!parse_number(value, dst)) throw LoadError(bad);
    };
    auto integer = [&](std::int64_t& dst) {
      if (!parse_number(value, dst)) throw LoadError(bad);
    };
    if (key == "n") {
      std::int64_t v = 0;
      integer(v);
      if (v < 0 || v > 4096) throw LoadError(bad);
      c.n = static_cast<int>(v);
    } else if (key == "dt") {
      real(c.dt);
    } else if (key == "t_final") {
      real(c.t_final);
    } else if (key == "gamma0") {
      real(c.gamma0);
    } else if (key == "gamma2") {
      real(c.gamma2);
    } else if (key == "gamma4") {
      real(c.gamma4);
    } else if (key == "seed") {
      if (!parse_number(value, c.seed)) throw LoadError(bad);
    } else if (key == "normalize_init") {
      if (value == "true" || value == "1") c.normalize_init = true;
      else if (value == "false" || value == "0") c.normalize_init = false;
      else throw LoadError(bad);
    } else if (key == "init") {
      if (value == "random") c.init = InitKind::Random;
      else if (value == "zero") c.init = InitKind::Zero;
      else if (value == "rigid") c.init = InitKind::Rigid;
      else throw LoadError(bad);
    } else if (key == "init_energy") {
      real(c.init_energy);
    } else if (key == "init_scale") {
      real(c.init_scale);
    } else if (key == "bc_f_file") {
      c.bc_f_file = base_dir / std::filesystem::path(std::string(value));
    } else if (key == "bc_g_file") {
      c.bc_g_file = base_dir / std::filesystem::path(std::string(value));
    } else if (key == "output_dir") {
      c.output_dir = std::string(value);
    } else if (key == "energy_every") {
      integer(c.energy_every);
    } else if (key == "snapshot_every") {
      integer(c.snapshot_every);
    } else if (key == "grid_dump_every") {
      integer(c.grid_dump_every);
    } else if (key == "checkpoint_every") {
      integer(c.checkpoint_every);
    } else {
      throw LoadError("unknown key '" + key + "'" + where);
    }
  }
  for (const char* key : {"n", "dt", "t_final", "gamma0"})
    if (!seen.count(key)) throw LoadError(std::string("missing required key '") + key + "'");
  c.validate();
  return c;
}

SimConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.parent_path().empty() ? "." : path.parent_path());
}

SurfaceHarmonicCoeffs parse_potentials(std::istream& in, int L, const std::string& source) {
  SurfaceHarmonicCoeffs out(L);
  std::map<std::pair<int, int>, int> listed;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_comment(raw);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    std::istringstream fields{std::string(line)};
    int l = 0, m = 0;
    double re = 0.0, im = 0.0;
    std::string extra;
    if (!(fields >> l >> m >> re >> im) || (fields >> extra))
      throw LoadError(where + ": expected 'l m re im'");
    if (l < 0 || std::abs(m) > l) throw LoadError(where + ": need |m| <= l, got l=" + std::to_string(l) + " m=" + std::to_string(m));
    if (l > L) throw LoadError(where + ": degree " + std::to_string(l) + " exceeds " + std::to_string(L));
    if (!listed.emplace(std::pair{l, m}, line_no).second) throw LoadError(where + ": repeated entry");
    out(l, m) = {re, im};
  }
  for (const auto& [lm, line] : listed) {
    const auto [l, m] = lm;
    if (m > 0 && !listed.count({l, -m})) out(l, -m) = (m % 2 ? -1.0 : 1.0) * std::conj(out(l, m));
  }
  return out;
}

SurfaceHarmonicCoeffs read_potential_file(const std::filesystem::path& path, int L) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open potential file " + path.string());
  return parse_potentials(in, L, path.string());
}

std::uint64_t snapshot_size(int n) {
  const auto s = static_cast<std::uint64_t>(n / 2 + 1);
  return kHeaderBytes + 2 * 16 * s * s * s;
}

void write_snapshot(const FlowState& state, const std::filesystem::path& path) {
  const int n = state.n(), L = n / 2;
  std::string buf(kMagic, 4);
  buf.reserve(snapshot_size(n));
  put(buf, kSnapshotVersion);
  put(buf, static_cast<std::uint32_t>(n));
  put(buf, static_cast<std::uint64_t>(state.step));
  put(buf, state.time);
  for (const CshCoeffs* u : {&state.vorticity.poloidal, &state.vorticity.toroidal})
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m)
        for (const Complex& c : u->profile(l, m)) {
          put(buf, c.real());
          put(buf, c.imag());
        }

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write snapshot " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out.flush()) throw LoadError("cannot write snapshot " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

FlowState read_snapshot(const std::filesystem::path& path, int expected_n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open snapshot " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < kHeaderBytes) throw LoadError(name + ": truncated header");
  if (buf.compare(0, 4, kMagic, 4) != 0) throw LoadError(name + ": not a BNSS snapshot");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(buf, pos);
  if (version != kSnapshotVersion) throw LoadError(name + ": unsupported version " + std::to_string(version));
  const auto n32 = get<std::uint32_t>(buf, pos);
  if (n32 < 4 || n32 % 2 || n32 > 4096) throw LoadError(name + ": invalid n " + std::to_string(n32));
  const int n = static_cast<int>(n32);
  if (expected_n > 0 && n != expected_n)
    throw LoadError(name + ": snapshot has n=" + std::to_string(n) + " but the run has n=" + std::to_string(expected_n));
  if (buf.size() != snapshot_size(n))
    throw LoadError(name + ": expected " + std::to_string(snapshot_size(n)) + " bytes, found " + std::to_string(buf.size()));
  const auto step = get<std::uint64_t>(buf, pos);
  const double time = get<double>(buf, pos);

  PtPair w(n);
  const int L = n / 2;
  for (CshCoeffs* u : {&w.poloidal, &w.toroidal})
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m)
        for (Complex& c : u->profile(l, m)) {
          const double re = get<double>(buf, pos);
          c = {re, get<double>(buf, pos)};
        }
  return FlowState(std::move(w), time, static_cast<std::int64_t>(step));
}

BoundaryPotentials load_potentials(const SimConfig& config) {
  const int L = config.n / 2;
  BoundaryPotentials bc(L);
  if (!config.bc_f_file.empty()) bc.f = read_potential_file(config.bc_f_file, L);
  if (!config.bc_g_file.empty()) bc.g = read_potential_file(config.bc_g_file, L);
  return bc;
}

FlowState initial_state(const SimConfig& config) {
  switch (config.init) {
    case InitKind::Zero:
      return FlowState(config.n);
    case InitKind::Rigid:
      return rigid_rotation_state(config.n);
    case InitKind::Random:
      break;
  }
  RandomInitOptions o;
  o.l0 = o.k0 = config.init_scale;
  o.normalize = config.normalize_init;
  o.energy = config.init_energy;
  return random_initial_state(config.n, config.seed, o);
}

std::filesystem::path snapshot_path(const SimConfig& config, std::int64_t step) {
  return config.output_dir / ("state_" + std::to_string(step) + ".bnss");
}

void write_grid_dump(const FlowState& state, const std::filesystem::path& path) {
  const VectorFieldCFF v = velocity_field(state);
  const GridValues gx = cff_synthesis(v.x), gy = cff_synthesis(v.y), gz = cff_synthesis(v.z);
  const int h = v.n() / 2;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write grid dump " + path.string());
  out << std::setprecision(17) << "x,y,z,vx,vy,vz\n";
  // The endpoints l, m = n/2 repeat l, m = −n/2 and are skipped.
  for (int k = 0; k <= h; ++k) {
    if (gx.radius(k) < 0.0) continue;
    for (int l = -h; l < h; ++l)
      for (int m = -h; m < h; ++m) {
        const auto p = gx.cartesian(k, l, m);
        out << p.x << ',' << p.y << ',' << p.z << ',' << gx(k, l, m).real() << ',' << gy(k, l, m).real() << ','
            << gz(k, l, m).real() << '\n';
      }
  }
  if (!out) throw LoadError("cannot write grid dump " + path.string());
}

RunResult run_simulation(const SimConfig& config, FlowState start, std::ostream& log) {
  config.validate();
  const SimParams params = config.params();
  const std::int64_t total = params.steps;
  if (start.n() != config.n)
    throw LoadError("initial state has n=" + std::to_string(start.n()) + " but the config has n=" +
                    std::to_string(config.n));
  if (start.step > total)
    throw InvalidParameter("start step " + std::to_string(start.step) + " is past the final step " +
                           std::to_string(total));
  const BoundaryPotentials bc = load_potentials(config);
  std::filesystem::create_directories(config.output_dir);

  const auto energy_path = config.output_dir / "energy.csv";
  const bool resuming = start.step > 0;
  const bool header = !resuming || !std::filesystem::exists(energy_path) || std::filesystem::file_size(energy_path) == 0;
  std::ofstream energy(energy_path, resuming ? std::ios::app : std::ios::trunc);
  if (!energy) throw LoadError("cannot write " + energy_path.string());
  energy << std::setprecision(17);
  if (header) energy << "step,time,kinetic_energy\n";

  auto every = [](std::int64_t step, std::int64_t period) { return period > 0 && step % period == 0; };
  // Returns false when the state is no longer finite.
  auto record = [&](const FlowState& s, bool first) {
    if (!finite(s.vorticity.poloidal) || !finite(s.vorticity.toroidal)) return false;
    if (every(s.step, config.energy_every) && (!first || !resuming)) {
      const double e = kinetic_energy(s);
      energy << s.step << ',' << s.time << ',' << e << '\n';
      energy.flush();
      if (!std::isfinite(e)) return false;
    }
    if (!first || !resuming) {
      if (every(s.step, config.snapshot_every) || every(s.step, config.checkpoint_every))
        write_snapshot(s, snapshot_path(config, s.step));
      if (every(s.step, config.grid_dump_every))
        write_grid_dump(s, config.output_dir / ("grid_" + std::to_string(s.step) + ".csv"));
    }
    return true;
  };

  RunResult result{0, start, {}};
  const std::int64_t report = std::max<std::int64_t>(1, total / 20);
  try {
    if (!record(start, true)) throw ConsistencyError("initial state is not finite");
    FlowState cur = std::move(start);
    while (cur.step < total) {
      FlowState next = step(cur, params, bc);
      if (!record(next, false)) {
        result.final_state = std::move(cur);
        throw ConsistencyError("state became non-finite at step " + std::to_string(next.step));
      }
      cur = std::move(next);
      if (cur.step % report == 0 || cur.step == total)
        log << "step " << cur.step << '/' << total << "  t=" << cur.time << '\n' << std::flush;
      result.final_state = cur;
    }
  } catch (const std::exception& e) {
    result.status = 2;
    result.error = e.what();
    log << "error: " << e.what() << '\n';
  }
  const auto final_path = snapshot_path(config, result.final_state.step);
  write_snapshot(result.final_state, final_path);
  log << "checkpoint " << final_path.string() << '\n';
  return result;
}

}  // namespace ballns
