#pragma once

// Wall-clock accumulators for the stages of a time step. Nested scopes on one
// thread are charged to the outermost stage only.

#include <array>
#include <chrono>

namespace ballns {

enum class Stage { CffTransform = 0, CshConversion, ModeSolve, Count };

const char* to_string(Stage stage);

/// Seconds accumulated per stage since the last reset.
std::array<double, static_cast<int>(Stage::Count)> stage_seconds();
void reset_stage_timers();

class StageScope {
 public:
  explicit StageScope(Stage stage);
  ~StageScope();
  StageScope(const StageScope&) = delete;
  StageScope& operator=(const StageScope&) = delete;

 private:
  Stage stage_;
  bool outermost_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ballns
