#pragma once

// Synthetic landmark streams for scenarios and the console. Each generator
// is a fixed base pose plus seeded per-coordinate jitter.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stretchbot/error.hpp"
#include "stretchbot/pose.hpp"

namespace stretchbot::gen {

enum class Generator { kValidArmsOverhead, kValidToeTouch, kLeanLeft, kLeanRight, kInvalidSlouch };

inline constexpr std::array kGenerators = {Generator::kValidArmsOverhead, Generator::kValidToeTouch,
                                           Generator::kLeanLeft, Generator::kLeanRight, Generator::kInvalidSlouch};

constexpr std::string_view to_string(Generator g) {
  switch (g) {
    case Generator::kValidArmsOverhead: return "valid-arms-overhead";
    case Generator::kValidToeTouch: return "valid-toe-touch";
    case Generator::kLeanLeft: return "lean-left";
    case Generator::kLeanRight: return "lean-right";
    case Generator::kInvalidSlouch: return "invalid-slouch";
  }
  return "?";
}

inline std::optional<Generator> generator_from_string(std::string_view s) {
  for (auto g : kGenerators)
    if (to_string(g) == s) return g;
  return std::nullopt;
}

/// Maximum per-coordinate jitter. Every base pose keeps at least 3x this
/// margin from the nearest rule threshold.
inline constexpr double kJitter = 0.004;

namespace detail {

using pose::Landmark;

struct Base {
  Landmark lm;
  double x, y;
};

inline std::vector<Base> base_pose(Generator g) {
  // Standing figure: hips at y=0.65, ankles near the bottom edge.
  std::vector<Base> legs = {{Landmark::kLeftHip, 0.45, 0.65},
                            {Landmark::kRightHip, 0.55, 0.65},
                            {Landmark::kLeftAnkle, 0.45, 0.97},
                            {Landmark::kRightAnkle, 0.55, 0.97}};
  std::vector<Base> upper;
  switch (g) {
    case Generator::kValidArmsOverhead:
      upper = {{Landmark::kNose, 0.50, 0.30},       {Landmark::kLeftShoulder, 0.42, 0.40},
               {Landmark::kRightShoulder, 0.58, 0.40}, {Landmark::kLeftElbow, 0.45, 0.22},
               {Landmark::kRightElbow, 0.55, 0.22},    {Landmark::kLeftWrist, 0.47, 0.12},
               {Landmark::kRightWrist, 0.53, 0.12}};
      break;
    case Generator::kValidToeTouch:
      // Folded forward: head and wrists down by the feet.
      upper = {{Landmark::kNose, 0.50, 0.80},       {Landmark::kLeftShoulder, 0.44, 0.72},
               {Landmark::kRightShoulder, 0.56, 0.72}, {Landmark::kLeftElbow, 0.45, 0.83},
               {Landmark::kRightElbow, 0.55, 0.83},    {Landmark::kLeftWrist, 0.46, 0.92},
               {Landmark::kRightWrist, 0.54, 0.92}};
      break;
    case Generator::kLeanLeft:
    case Generator::kLeanRight: {
      // Shoulder midpoint 0.144 sideways over a 0.25 rise: about 30 degrees.
      const double dx = g == Generator::kLeanRight ? 0.144 : -0.144;
      upper = {{Landmark::kNose, 0.50 + 1.3 * dx, 0.32},       {Landmark::kLeftShoulder, 0.42 + dx, 0.40},
               {Landmark::kRightShoulder, 0.58 + dx, 0.40},    {Landmark::kLeftElbow, 0.40 + dx, 0.52},
               {Landmark::kRightElbow, 0.60 + dx, 0.52},       {Landmark::kLeftWrist, 0.40 + dx, 0.55},
               {Landmark::kRightWrist, 0.60 + dx, 0.55}};
      break;
    }
    case Generator::kInvalidSlouch:
      // Upright, arms hanging: wrists stay about 0.42 from the ankles.
      upper = {{Landmark::kNose, 0.50, 0.33},       {Landmark::kLeftShoulder, 0.42, 0.42},
               {Landmark::kRightShoulder, 0.58, 0.42}, {Landmark::kLeftElbow, 0.40, 0.50},
               {Landmark::kRightElbow, 0.60, 0.50},    {Landmark::kLeftWrist, 0.40, 0.55},
               {Landmark::kRightWrist, 0.60, 0.55}};
      break;
  }
  upper.insert(upper.end(), legs.begin(), legs.end());
  return upper;
}

/// Uniform in [-a, a] from the 53 high bits of one draw.
inline double jitter(std::mt19937_64& rng, double a) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * a;
}

}  // namespace detail

/// `count` frames starting at `t0`, spaced by `period`.
inline std::vector<pose::LandmarkFrame> generateFrames(Generator g, std::size_t count, double t0, double period,
                                                       std::uint64_t seed, double jitterAmplitude = kJitter) {
  std::mt19937_64 rng(seed);
  const auto base = detail::base_pose(g);
  std::vector<pose::LandmarkFrame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    pose::LandmarkFrame f;
    f.timestamp = t0 + static_cast<double>(i) * period;
    for (const auto& b : base)
      f.set(b.lm, b.x + detail::jitter(rng, jitterAmplitude), b.y + detail::jitter(rng, jitterAmplitude));
    frames.push_back(f);
  }
  return frames;
}

/// Frames covering `duration` seconds at the configured frame rate.
inline std::size_t frameCount(double duration, double period) {
  if (duration <= 0) return 0;
  return static_cast<std::size_t>(duration / period + 0.5);
}

}  // namespace stretchbot::gen
