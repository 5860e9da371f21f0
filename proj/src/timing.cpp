#include "ballns/timing.hpp"

#include <atomic>

namespace ballns {

namespace {

constexpr int kStages = static_cast<int>(Stage::Count);
std::array<std::atomic<long long>, kStages> g_nanos{};
thread_local bool t_active = false;

}  // namespace

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::CffTransform: return "cff_transform";
    case Stage::CshConversion: return "csh_conversion";
    case Stage::ModeSolve: return "mode_solve";
    default: return "unknown";
  }
}

std::array<double, kStages> stage_seconds() {
  std::array<double, kStages> out{};
  for (int i = 0; i < kStages; ++i) out[static_cast<std::size_t>(i)] = 1e-9 * static_cast<double>(g_nanos[static_cast<std::size_t>(i)].load());
  return out;
}

void reset_stage_timers() {
  for (auto& a : g_nanos) a.store(0);
}

StageScope::StageScope(Stage stage) : stage_(stage), outermost_(!t_active) {
  if (outermost_) {
    t_active = true;
    start_ = std::chrono::steady_clock::now();
  }
}

StageScope::~StageScope() {
  if (!outermost_) return;
  const auto dt = std::chrono::steady_clock::now() - start_;
  g_nanos[static_cast<std::size_t>(stage_)] +=
      std::chrono::duration_cast<std::chrono::nanoseconds>(dt).count();
  t_active = false;
}

}  // namespace ballns
