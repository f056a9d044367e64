#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stretchbot/error.hpp"
#include "stretchbot/pose.hpp"

namespace stretchbot {

/// One scripted step: the pose rule that verifies it, how long to hold, and
/// the instruction line the coach reads out.
struct ExercisePrimitive {
  std::string name;
  pose::ExerciseId rule = pose::ExerciseId::kArmsOverhead;
  double holdSeconds = 5.0;
  std::string instruction;
  friend bool operator==(const ExercisePrimitive&, const ExercisePrimitive&) = default;
};

struct RoutineScript {
  std::vector<ExercisePrimitive> exercises;

  std::size_t size() const { return exercises.size(); }
  const ExercisePrimitive& operator[](std::size_t i) const { return exercises.at(i); }

  static RoutineScript defaults() {
    return {{
        {"ArmRaise", pose::ExerciseId::kArmsOverhead, 5.0,
         "Stretch your arms above your head for 5 seconds"},
        {"ToeTouch", pose::ExerciseId::kToeTouch, 5.0, "Touch your toes for 5 seconds"},
        {"LeanLeftRight", pose::ExerciseId::kLateralLean, 5.0,
         "lean left and right for 5 seconds each"},
    }};
  }
  friend bool operator==(const RoutineScript&, const RoutineScript&) = default;
};

inline constexpr std::string_view kRoutineSchema = "stretchbot.routine/1";

/// {"schema": "stretchbot.routine/1", "exercises": [{"name", "rule", "hold_seconds", "instruction"}]}
inline RoutineScript parseRoutineScript(const nlohmann::json& doc) {
  auto bad = [](const std::string& why) { return StretchbotError(ErrorCode::kInvalidConfig, "routine: " + why); };
  if (!doc.is_object() || doc.value("schema", "") != kRoutineSchema)
    throw bad("expected schema " + std::string(kRoutineSchema));
  if (!doc.contains("exercises") || !doc["exercises"].is_array() || doc["exercises"].empty())
    throw bad("exercises must be a non-empty list");
  RoutineScript script;
  for (const auto& e : doc["exercises"]) {
    ExercisePrimitive p;
    p.name = e.at("name").get<std::string>();
    auto rule = pose::parseExerciseId(e.at("rule").get<std::string>());
    if (!rule) throw bad(rule.error().describe());
    p.rule = *rule;
    p.holdSeconds = e.value("hold_seconds", 5.0);
    if (p.holdSeconds <= 0) throw bad(p.name + ": hold_seconds must be positive");
    p.instruction = e.at("instruction").get<std::string>();
    script.exercises.push_back(std::move(p));
  }
  return script;
}

inline nlohmann::json toJson(const RoutineScript& script) {
  nlohmann::json out{{"schema", kRoutineSchema}, {"exercises", nlohmann::json::array()}};
  for (const auto& p : script.exercises) {
    out["exercises"].push_back({{"name", p.name},
                                {"rule", std::string(to_string(p.rule))},
                                {"hold_seconds", p.holdSeconds},
                                {"instruction", p.instruction}});
  }
  return out;
}

}  // namespace stretchbot
