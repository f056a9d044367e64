#pragma once

// Rule-based verification of the three stretching poses over normalized
// 2-D landmarks, plus the hold/reset timer that turns per-frame validity
// into success and corrective events.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "stretchbot/error.hpp"

namespace stretchbot::pose {

/// Timer comparisons absorb accumulated rounding of repeated 1/30 s steps.
inline constexpr double kTimeEpsilon = 1e-9;

enum class Landmark : std::size_t {
  kNose,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
  kLeftHip,
  kRightHip,
  kLeftAnkle,
  kRightAnkle,
};
inline constexpr std::size_t kLandmarkCount = 11;

inline constexpr std::array<std::string_view, kLandmarkCount> kLandmarkNames = {
    "nose",      "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
    "right_wrist", "left_hip",    "right_hip",      "left_ankle", "right_ankle",
};

constexpr std::string_view to_string(Landmark lm) {
  return kLandmarkNames[static_cast<std::size_t>(lm)];
}

inline std::optional<Landmark> landmark_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    if (kLandmarkNames[i] == name) return static_cast<Landmark>(i);
  }
  return std::nullopt;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// One video frame of normalized landmarks; y grows downward, so a smaller
/// y is physically higher.
struct LandmarkFrame {
  double timestamp = 0.0;
  std::array<std::optional<Point2>, kLandmarkCount> landmarks{};

  const std::optional<Point2>& operator[](Landmark lm) const {
    return landmarks[static_cast<std::size_t>(lm)];
  }
  std::optional<Point2>& operator[](Landmark lm) { return landmarks[static_cast<std::size_t>(lm)]; }

  LandmarkFrame& set(Landmark lm, double x, double y) {
    (*this)[lm] = Point2{x, y};
    return *this;
  }

  /// True when every present coordinate lies in [0,1].
  bool in_bounds() const {
    return std::all_of(landmarks.begin(), landmarks.end(), [](const auto& p) {
      return !p || (p->x >= 0.0 && p->x <= 1.0 && p->y >= 0.0 && p->y <= 1.0);
    });
  }

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

/// Horizontal reflection x -> 1 - x of every present landmark.
inline LandmarkFrame mirrored(const LandmarkFrame& frame) {
  LandmarkFrame out = frame;
  for (auto& p : out.landmarks) {
    if (p) p->x = 1.0 - p->x;
  }
  return out;
}

struct PoseParameters {
  double wristDistanceMax = 0.3;
  double toeTouchMax = 0.4;
  double leanAngleDeg = 15.0;
  double framePeriod = 1.0 / 30.0;
  double holdTarget = 5.0;
  double resetTolerance = 40.0;

  bool valid() const {
    return wristDistanceMax > 0 && toeTouchMax > 0 && leanAngleDeg > 0 && framePeriod > 0 &&
           holdTarget > 0 && resetTolerance > 0 && framePeriod < holdTarget &&
           holdTarget < resetTolerance;
  }
  friend bool operator==(const PoseParameters&, const PoseParameters&) = default;
};

// ---------------------------------------------------------------------------
// Geometric rules

/// Both wrists and elbows strictly above the nose, wrists closer than
/// wristDistanceMax horizontally. Missing landmarks make the frame invalid.
inline bool checkArmsOverhead(const LandmarkFrame& frame, const PoseParameters& params) {
  const auto& nose = frame[Landmark::kNose];
  const auto& lw = frame[Landmark::kLeftWrist];
  const auto& rw = frame[Landmark::kRightWrist];
  const auto& le = frame[Landmark::kLeftElbow];
  const auto& re = frame[Landmark::kRightElbow];
  if (!nose || !lw || !rw || !le || !re) return false;
  const bool raised = lw->y < nose->y && rw->y < nose->y && le->y < nose->y && re->y < nose->y;
  return raised && std::abs(lw->x - rw->x) < params.wristDistanceMax;
}

/// Minimum Euclidean distance over every present wrist/ankle pair.
inline Expected<double> toeTouchDistance(const LandmarkFrame& frame) {
  constexpr std::array wrists = {Landmark::kLeftWrist, Landmark::kRightWrist};
  constexpr std::array ankles = {Landmark::kLeftAnkle, Landmark::kRightAnkle};
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (auto w : wrists) {
    const auto& wp = frame[w];
    if (!wp) continue;
    for (auto a : ankles) {
      const auto& ap = frame[a];
      if (!ap) continue;
      best = std::min(best, std::hypot(wp->x - ap->x, wp->y - ap->y));
      any = true;
    }
  }
  if (!any) return fail(ErrorCode::kInsufficientLandmarks, "no wrist-ankle pair present");
  return best;
}

inline bool checkToeTouch(const LandmarkFrame& frame, const PoseParameters& params) {
  auto d = toeTouchDistance(frame);
  return d && *d < params.toeTouchMax;
}

/// Signed trunk inclination in degrees; positive when the shoulder midpoint
/// sits to the right (larger x) of the hip midpoint.
inline Expected<double> trunkLeanAngle(const LandmarkFrame& frame) {
  const auto& ls = frame[Landmark::kLeftShoulder];
  const auto& rs = frame[Landmark::kRightShoulder];
  const auto& lh = frame[Landmark::kLeftHip];
  const auto& rh = frame[Landmark::kRightHip];
  if (!ls || !rs || !lh || !rh)
    return fail(ErrorCode::kInsufficientLandmarks, "both shoulders and hips are required");
  const double msx = (ls->x + rs->x) / 2.0;
  const double msy = (ls->y + rs->y) / 2.0;
  const double mhx = (lh->x + rh->x) / 2.0;
  const double mhy = (lh->y + rh->y) / 2.0;
  const double rise = mhy - msy;
  if (rise == 0.0) return fail(ErrorCode::kDegenerateTorso, "shoulder and hip midpoints share y");
  return std::atan((msx - mhx) / rise) * 180.0 / std::numbers::pi;
}

enum class LeanDirection { kUpright, kLeft, kRight };

constexpr std::string_view to_string(LeanDirection d) {
  switch (d) {
    case LeanDirection::kLeft: return "left";
    case LeanDirection::kRight: return "right";
    case LeanDirection::kUpright: break;
  }
  return "upright";
}

inline LeanDirection classifyLean(double angleDeg, const PoseParameters& params) {
  if (angleDeg > params.leanAngleDeg) return LeanDirection::kRight;
  if (angleDeg < -params.leanAngleDeg) return LeanDirection::kLeft;
  return LeanDirection::kUpright;
}

// ---------------------------------------------------------------------------
// Hold timing

struct SideTimer {
  double heldSeconds = 0.0;
  bool completed = false;
  friend bool operator==(const SideTimer&, const SideTimer&) = default;
};

/// Timer state for the current exercise. Lateral lean uses `left`/`right`;
/// its `heldSeconds` mirrors the lesser of the two side timers.
struct HoldState {
  double heldSeconds = 0.0;
  double invalidSeconds = 0.0;
  bool completed = false;
  SideTimer left;
  SideTimer right;
  friend bool operator==(const HoldState&, const HoldState&) = default;
};

enum class PoseEvent { kSuccess, kCorrective };

constexpr std::string_view to_string(PoseEvent e) {
  return e == PoseEvent::kSuccess ? "success" : "corrective";
}

struct HoldUpdate {
  HoldState state;
  std::optional<PoseEvent> event;
};

namespace detail {

inline bool reaches(double held, double target) { return held + kTimeEpsilon >= target; }

inline bool crosses_reset(double before, double after, double tolerance) {
  return before <= tolerance + kTimeEpsilon && after > tolerance + kTimeEpsilon;
}

inline bool advance(SideTimer& timer, const PoseParameters& params) {
  if (timer.completed) return false;
  timer.heldSeconds += params.framePeriod;
  if (reaches(timer.heldSeconds, params.holdTarget)) {
    timer.heldSeconds = params.holdTarget;
    timer.completed = true;
    return true;
  }
  return false;
}

}  // namespace detail

inline HoldUpdate updateHold(HoldState state, bool valid, const PoseParameters& params) {
  std::optional<PoseEvent> event;
  if (valid) {
    state.invalidSeconds = 0.0;
    if (!state.completed) {
      SideTimer timer{state.heldSeconds, false};
      if (detail::advance(timer, params)) {
        state.completed = true;
        event = PoseEvent::kSuccess;
      }
      state.heldSeconds = timer.heldSeconds;
    }
    return {state, event};
  }
  const double before = state.invalidSeconds;
  state.invalidSeconds += params.framePeriod;
  if (!state.completed &&
      detail::crosses_reset(before, state.invalidSeconds, params.resetTolerance)) {
    state.heldSeconds = 0.0;
    event = PoseEvent::kCorrective;
  }
  return {state, event};
}

/// Two-sided variant for lateral lean: a frame advances only the side it
/// leans towards; completion needs both sides.
inline HoldUpdate updateLeanHold(HoldState state, LeanDirection side, bool landmarksOk,
                                 const PoseParameters& params) {
  std::optional<PoseEvent> event;
  if (landmarksOk && side != LeanDirection::kUpright) {
    state.invalidSeconds = 0.0;
    SideTimer& timer = side == LeanDirection::kLeft ? state.left : state.right;
    const bool finished_side = detail::advance(timer, params);
    if (finished_side && state.left.completed && state.right.completed && !state.completed) {
      state.completed = true;
      event = PoseEvent::kSuccess;
    }
  } else {
    const double before = state.invalidSeconds;
    state.invalidSeconds += params.framePeriod;
    if (!state.completed &&
        detail::crosses_reset(before, state.invalidSeconds, params.resetTolerance)) {
      if (!state.left.completed) state.left.heldSeconds = 0.0;
      if (!state.right.completed) state.right.heldSeconds = 0.0;
      event = PoseEvent::kCorrective;
    }
  }
  state.heldSeconds = std::min(state.left.heldSeconds, state.right.heldSeconds);
  return {state, event};
}

// ---------------------------------------------------------------------------
// Exercise dispatch

enum class ExerciseId { kArmsOverhead, kToeTouch, kLateralLean };

constexpr std::string_view to_string(ExerciseId id) {
  switch (id) {
    case ExerciseId::kArmsOverhead: return "arms-overhead";
    case ExerciseId::kToeTouch: return "toe-touch";
    case ExerciseId::kLateralLean: return "lateral-lean";
  }
  return "?";
}

inline Expected<ExerciseId> parseExerciseId(std::string_view name) {
  for (auto id : {ExerciseId::kArmsOverhead, ExerciseId::kToeTouch, ExerciseId::kLateralLean}) {
    if (to_string(id) == name) return id;
  }
  return fail(ErrorCode::kUnknownExercise, std::string(name));
}

struct FrameOutcome {
  HoldState state;
  std::optional<PoseEvent> event;
  bool valid = false;
};

inline FrameOutcome evaluateExerciseFrame(ExerciseId exercise, const LandmarkFrame& frame,
                                          const HoldState& state, const PoseParameters& params) {
  switch (exercise) {
    case ExerciseId::kArmsOverhead: {
      const bool ok = checkArmsOverhead(frame, params);
      auto u = updateHold(state, ok, params);
      return {u.state, u.event, ok};
    }
    case ExerciseId::kToeTouch: {
      const bool ok = checkToeTouch(frame, params);
      auto u = updateHold(state, ok, params);
      return {u.state, u.event, ok};
    }
    case ExerciseId::kLateralLean: {
      auto angle = trunkLeanAngle(frame);
      const auto side = angle ? classifyLean(*angle, params) : LeanDirection::kUpright;
      auto u = updateLeanHold(state, side, angle.has_value(), params);
      return {u.state, u.event, angle.has_value() && side != LeanDirection::kUpright};
    }
  }
  return {state, std::nullopt, false};
}

inline Expected<FrameOutcome> evaluateExerciseFrame(std::string_view exercise,
                                                    const LandmarkFrame& frame,
                                                    const HoldState& state,
                                                    const PoseParameters& params) {
  auto id = parseExerciseId(exercise);
  if (!id) return Unexpected{id.error()};
  return evaluateExerciseFrame(*id, frame, state, params);
}

}  // namespace stretchbot::pose
