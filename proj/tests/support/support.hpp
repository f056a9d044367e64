#pragma once

// Shared fixtures: shipped data, frame builders, and log-level safety checks
// used by both the unit suite and the acceptance runner.

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "stretchbot/stretchbot.hpp"

namespace support {

using namespace stretchbot;
namespace fs = std::filesystem;

inline fs::path sourceDir() { return STRETCHBOT_SOURCE_DIR; }
inline fs::path scenarioDir() { return sourceDir() / "scenarios"; }
inline fs::path goldenDir() { return sourceDir() / "tests" / "golden"; }

inline std::shared_ptr<const kg::KnowledgeGraph> shippedGraph() {
  static const auto graph = std::make_shared<const kg::KnowledgeGraph>(
      kg::loadKnowledgeGraph(readTextFile(dataDir() / "kg" / "stretching_kg.json")));
  return graph;
}

inline std::shared_ptr<kg::FixtureFallback> shippedFallback() {
  return std::make_shared<kg::FixtureFallback>(
      kg::FixtureFallback::fromJson(readTextFile(dataDir() / "kg" / "fallback_fixture.json")));
}

inline SessionConfig shippedConfig() { return loadConfig(dataDir() / "config" / "default.json"); }

inline std::vector<fs::path> shippedScenarios() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(scenarioDir()))
    if (e.path().extension() == ".jsonl") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline ReplayResult replayFile(const fs::path& path, std::shared_ptr<kg::FallbackClient> fallback = nullptr) {
  ReplayOptions opts{shippedConfig(), shippedGraph(), fallback ? fallback : shippedFallback(), nullptr};
  return replayScenario(parseScenario(readTextFile(path)), opts);
}

/// Random frame with each landmark present with probability `presence`.
inline pose::LandmarkFrame randomFrame(std::mt19937_64& rng, double presence = 0.9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  pose::LandmarkFrame f;
  for (auto& p : f.landmarks)
    if (u(rng) < presence) p = pose::Point2{u(rng), u(rng)};
  return f;
}

inline pose::LandmarkFrame torso(double lsx, double lsy, double rsx, double rsy, double lhx, double lhy, double rhx,
                                 double rhy) {
  pose::LandmarkFrame f;
  f.set(pose::Landmark::kLeftShoulder, lsx, lsy)
      .set(pose::Landmark::kRightShoulder, rsx, rsy)
      .set(pose::Landmark::kLeftHip, lhx, lhy)
      .set(pose::Landmark::kRightHip, rhx, rhy);
  return f;
}

/// Torso whose midpoints are exactly ms and mh.
inline pose::LandmarkFrame torsoMid(double msx, double msy, double mhx, double mhy) {
  return torso(msx - 0.1, msy, msx + 0.1, msy, mhx - 0.05, mhy, mhx + 0.05, mhy);
}

struct SafetyReport {
  std::size_t verified = 0;
  std::size_t executedPoints = 0;
  std::size_t executedNexts = 0;
  std::vector<std::string> violations;
};

/// Walks a log and checks every executed command against the state at the
/// moment its decision started: POINT only at detected, pointable objects;
/// NEXT only after success or an explicit confirmation.
inline SafetyReport checkSafety(const std::vector<Event>& log, const SessionConfig& config) {
  SafetyReport report;
  SessionState state;
  std::map<std::uint64_t, SessionState> atStart;
  for (const auto& e : log) {
    if (const auto* d = e.as<events::DecisionStarted>()) atStart[d->cycle] = state;
    if (const auto* v = e.as<events::CommandVerified>()) {
      ++report.verified;
      const auto& before = atStart.at(v->cycle);
      if (v->command.kind == ActionCommand::Kind::kPoint) {
        ++report.executedPoints;
        auto hit = config.catalog.resolveDetected(v->command.object, before.objects);
        if (!hit || !config.catalog.byName(*hit))
          report.violations.push_back("cycle " + std::to_string(v->cycle) + ": POINT_" + v->command.object +
                                      " at an undetected object");
      }
      if (v->command.kind == ActionCommand::Kind::kNextExercise) {
        ++report.executedNexts;
        std::string transcript;
        for (auto it = before.dialogue.rbegin(); it != before.dialogue.rend(); ++it)
          if (it->speaker == context::Speaker::kUser) {
            transcript = it->text;
            break;
          }
        const bool ok = before.status == context::ExerciseStatus::kSuccess ||
                        verify::isConfirmation(transcript, config.verifier);
        if (!ok)
          report.violations.push_back("cycle " + std::to_string(v->cycle) +
                                      ": NEXT_EXERCISE without success or confirmation");
      }
    }
    reduce(state, e);
  }
  return report;
}

/// Non-approved decisions split exactly across the edit classes.
inline bool editClassesPartition(const std::vector<Event>& log, std::string* why = nullptr) {
  std::size_t approved = 0, edited = 0;
  std::map<std::string, std::uint64_t> byClass;
  for (const auto& e : log) {
    if (const auto* v = e.as<events::CommandVerified>()) {
      if (v->report.editClass == verify::EditClass::kNone) {
        ++approved;
        if (v->report.verdict != verify::Verdict::kApproved || v->report.before != v->report.after) {
          if (why) *why = "approved decision with edits";
          return false;
        }
      } else {
        ++edited;
        ++byClass[std::string(verify::to_string(v->report.editClass))];
      }
    }
  }
  const auto m = foldLog(log).metrics;
  std::uint64_t sum = 0;
  for (auto c : verify::kEditClasses) {
    const auto key = std::string(verify::to_string(c));
    sum += m.verifierEdits.at(key);
    if (m.verifierEdits.at(key) != byClass[key]) {
      if (why) *why = "counter mismatch for " + key;
      return false;
    }
  }
  if (sum != edited || m.approvedDecisions != approved || m.nonApprovedDecisions() != edited) {
    if (why) *why = "counters do not partition verified decisions";
    return false;
  }
  return true;
}

}  // namespace support
