#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stretchbot/text.hpp"

namespace stretchbot {

/// Robot-frame target, meters.
struct Position3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Position3&, const Position3&) = default;
};

struct ObjectEntry {
  std::string name;                  // as perception reports it, e.g. "water bottle"
  std::vector<std::string> aliases;  // extra POINT_ tokens, e.g. "WATER"
  std::string cue;                   // short word used in adaptation cues, e.g. "water"
  Position3 position;

  std::string token() const { return text::object_token(name); }

  bool answersTo(std::string_view pointToken) const {
    if (token() == pointToken) return true;
    for (const auto& a : aliases)
      if (text::object_token(a) == pointToken) return true;
    return false;
  }
  friend bool operator==(const ObjectEntry&, const ObjectEntry&) = default;
};

/// Fixed object positions; pointing targets resolve against this table.
class ObjectCatalog {
 public:
  ObjectCatalog() = default;
  explicit ObjectCatalog(std::vector<ObjectEntry> entries) : entries_(std::move(entries)) {}

  static ObjectCatalog defaults() {
    return ObjectCatalog({
        {"chair", {"SEAT"}, "chair", {0.60, -0.40, 0.45}},
        {"water bottle", {"WATER", "BOTTLE"}, "water", {0.55, 0.30, 0.80}},
        {"coffee mug", {"COFFEE", "MUG", "CUP"}, "coffee", {0.50, 0.45, 0.80}},
        {"banana", {}, "banana", {0.45, 0.20, 0.80}},
        {"glass", {"WATER_GLASS"}, "glass", {0.55, 0.10, 0.80}},
        {"towel", {}, "towel", {0.35, -0.30, 0.75}},
    });
  }

  const std::vector<ObjectEntry>& entries() const { return entries_; }

  const ObjectEntry* byName(std::string_view name) const {
    const auto key = text::entity_key(name);
    for (const auto& e : entries_)
      if (text::entity_key(e.name) == key) return &e;
    return nullptr;
  }

  const ObjectEntry* byToken(std::string_view pointToken) const {
    for (const auto& e : entries_)
      if (e.answersTo(pointToken)) return &e;
    return nullptr;
  }

  /// The detected object a POINT_ token refers to, if any. Objects missing
  /// from the catalog still match on their own token.
  std::optional<std::string> resolveDetected(std::string_view pointToken,
                                             std::span<const std::string> detected) const {
    for (const auto& d : detected) {
      if (text::object_token(d) == pointToken) return d;
      if (const auto* e = byName(d); e && e->answersTo(pointToken)) return d;
    }
    return std::nullopt;
  }

  std::string cueFor(std::string_view detectedName) const {
    if (const auto* e = byName(detectedName); e && !e->cue.empty()) return e->cue;
    return std::string(detectedName);
  }

  friend bool operator==(const ObjectCatalog&, const ObjectCatalog&) = default;

 private:
  std::vector<ObjectEntry> entries_;
};

}  // namespace stretchbot
