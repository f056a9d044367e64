#pragma once

// Independent reference implementations used to cross-check the library.
// They deliberately avoid the library's helpers: raw coordinates in,
// integer frame counters for timers, long double for sums.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

struct Xy {
  double x, y;
};

/// Min over every wrist/ankle pair that is present; nullopt when no pair.
inline std::optional<double> toeDistance(const std::array<std::optional<Xy>, 2>& wrists,
                                         const std::array<std::optional<Xy>, 2>& ankles) {
  std::optional<double> best;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (!wrists[i] || !ankles[j]) continue;
      const double dx = wrists[i]->x - ankles[j]->x;
      const double dy = wrists[i]->y - ankles[j]->y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (!best || d < *best) best = d;
    }
  }
  return best;
}

/// Literal evaluation of the signed trunk angle, in degrees.
inline double leanDegrees(Xy ls, Xy rs, Xy lh, Xy rh) {
  const long double msx = (static_cast<long double>(ls.x) + rs.x) * 0.5L;
  const long double msy = (static_cast<long double>(ls.y) + rs.y) * 0.5L;
  const long double mhx = (static_cast<long double>(lh.x) + rh.x) * 0.5L;
  const long double mhy = (static_cast<long double>(lh.y) + rh.y) * 0.5L;
  const long double pi = 3.141592653589793238462643383279502884L;
  return static_cast<double>(std::atan((msx - mhx) / (mhy - msy)) * 180.0L / pi);
}

/// Weighted late fusion by direct summation.
inline std::map<std::string, double> fuse(const std::vector<std::pair<double, std::map<std::string, double>>>& channels,
                                          const std::vector<std::string>& labels) {
  long double wsum = 0;
  for (const auto& [w, _] : channels) wsum += w;
  std::map<std::string, double> out;
  for (const auto& label : labels) {
    long double acc = 0;
    for (const auto& [w, scores] : channels) {
      auto it = scores.find(label);
      if (it != scores.end()) acc += static_cast<long double>(w) * it->second;
    }
    out[label] = static_cast<double>(acc / wsum);
  }
  return out;
}

/// Frame-counting hold timer: `targetFrames` valid frames complete the
/// hold; the first invalid frame past `resetFrames` consecutive invalid
/// frames resets it, once per run.
struct HoldSim {
  std::int64_t targetFrames;
  std::int64_t resetFrames;
  std::int64_t held = 0;
  std::int64_t invalidRun = 0;
  bool done = false;
  int successes = 0;
  int correctives = 0;

  void step(bool valid) {
    if (valid) {
      invalidRun = 0;
      if (!done && ++held == targetFrames) {
        done = true;
        ++successes;
      }
      return;
    }
    ++invalidRun;
    if (!done && invalidRun == resetFrames + 1) {
      held = 0;
      ++correctives;
    }
  }
};

/// Two independent side counters; success once both reach the target.
struct LeanSim {
  std::int64_t targetFrames;
  std::int64_t left = 0;
  std::int64_t right = 0;
  bool done = false;
  int successes = 0;

  /// side: -1 left, +1 right, 0 upright/invalid
  void step(int side) {
    if (side < 0 && left < targetFrames) ++left;
    if (side > 0 && right < targetFrames) ++right;
    if (!done && left == targetFrames && right == targetFrames) {
      done = true;
      ++successes;
    }
  }
};

}  // namespace oracle
