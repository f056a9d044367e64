#pragma once

// Hand-transcribed reference triples for the six core entities. Kept apart
// from data/kg so a data edit cannot silently redefine the expectation.

#include <vector>

#include "stretchbot/knowledge.hpp"

namespace reference {

inline const std::vector<stretchbot::kg::Triple>& coreTriples() {
  static const std::vector<stretchbot::kg::Triple> triples = {
      {"Banana", "affords", "EatBanana"},
      {"Banana", "used_for", "QuickEnergyBoost"},
      {"Banana", "is_relevant_when", "Fatigue"},
      {"Banana", "is_a", "Food"},
      {"DrySweat", "requires", "Towel"},
      {"DrySweat", "helps_with", "Comfort"},
      {"Sweating", "indicates", "Exertion"},
      {"Sweating", "motivates", "DrySweat"},
      {"ExerciseSession", "contains", "ArmRaise"},
      {"ExerciseSession", "contains", "ToeTouch"},
      {"ExerciseSession", "contains", "LeanLeftRight"},
      {"ExerciseSession", "goal", "BodyRelaxation"},
      {"ToeTouch", "targets", "Hamstrings"},
      {"ToeTouch", "requires_flexibility", "Moderate"},
      {"ToeTouch", "can_cause", "LowerBackStrain"},
      {"Pain", "suggests", "StopExercise"},
      {"Pain", "can_be_detected_by", "TouchingAffectedArea"},
  };
  return triples;
}

}  // namespace reference
