#pragma once

// Scenario files: line-delimited JSON. The first record is a header, every
// following record is one timeline item with a timestamp in seconds.
//
//   {"schema": "stretchbot.scenario/1", "name": "...", "seed": 7, "config": {...}}
//   {"t": 0.0, "type": "objects", "objects": ["water bottle"]}
//   {"t": 0.5, "type": "emotion", "channels": {"voice": {"tired": 0.8}}, "weights": {"voice": 1.0}}
//   {"t": 1.0, "type": "utterance", "text": "hello"}
//   {"t": 2.0, "type": "landmarks", "generator": "valid-arms-overhead", "duration": 5.5}
//   {"t": 2.0, "type": "landmarks", "frames": [{"dt": 0.0, "landmarks": {"nose": [0.5, 0.3]}}]}
//   {"t": 0.0, "type": "mock_reply", "text": "Reasoning: ...\nOutput: ...", "delay": 2.0}

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stretchbot/affect.hpp"
#include "stretchbot/error.hpp"
#include "stretchbot/generators.hpp"
#include "stretchbot/pose.hpp"
#include "stretchbot/reasoner.hpp"
#include "stretchbot/text.hpp"

namespace stretchbot {

inline constexpr std::string_view kScenarioSchema = "stretchbot.scenario/1";

struct TimelineItem {
  enum class Kind { kUtterance, kObjects, kEmotion, kLandmarks, kMockReply };
  Kind kind = Kind::kUtterance;
  double t = 0.0;
  std::size_t line = 0;

  std::string text;                                  // utterance, mock_reply
  std::vector<std::string> objects;                  // objects
  std::vector<affect::ChannelPrediction> channels;   // emotion
  std::optional<affect::ReliabilityWeights> weights;  // emotion
  std::optional<gen::Generator> generator;           // landmarks
  double duration = 0.0;                             // landmarks (generator)
  std::vector<pose::LandmarkFrame> frames;           // landmarks (inline; timestamps relative to t)
  double delay = 0.0;                                // mock_reply
  std::optional<ErrorCode> failure;                  // mock_reply
};

constexpr std::string_view to_string(TimelineItem::Kind k) {
  switch (k) {
    case TimelineItem::Kind::kUtterance: return "utterance";
    case TimelineItem::Kind::kObjects: return "objects";
    case TimelineItem::Kind::kEmotion: return "emotion";
    case TimelineItem::Kind::kLandmarks: return "landmarks";
    case TimelineItem::Kind::kMockReply: return "mock_reply";
  }
  return "?";
}

struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t seed = 0;
  nlohmann::json config;  // overlay onto the session config, may be null
  std::vector<TimelineItem> timeline;

  std::vector<reasoner::MockTurn> mockTurns() const {
    std::vector<reasoner::MockTurn> turns;
    for (const auto& item : timeline)
      if (item.kind == TimelineItem::Kind::kMockReply) turns.push_back({item.text, item.delay, item.failure});
    return turns;
  }
};

namespace detail {

inline StretchbotError scenario_error(std::size_t line, const std::string& field, const std::string& why) {
  return StretchbotError(ErrorCode::kInvalidScenario,
                         "line " + std::to_string(line) + (field.empty() ? "" : ", field '" + field + "'") + ": " + why);
}

inline std::vector<affect::ChannelPrediction> parse_channels(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object() || j.empty()) throw scenario_error(line, "channels", "expected a non-empty object of channels");
  std::vector<affect::ChannelPrediction> out;
  for (const auto& [name, scores] : j.items()) {
    auto c = affect::channel_from_string(name);
    if (!c) throw scenario_error(line, "channels." + name, "unknown channel (voice, facial, text)");
    if (!scores.is_object()) throw scenario_error(line, "channels." + name, "expected label -> score map");
    affect::ChannelPrediction p{*c, {}};
    for (const auto& [label, v] : scores.items()) {
      if (!v.is_number()) throw scenario_error(line, "channels." + name + "." + label, "expected a number");
      const double s = v.get<double>();
      if (s < 0.0 || s > 1.0) throw scenario_error(line, "channels." + name + "." + label, "score outside [0, 1]");
      p.scores[label] = s;
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline pose::LandmarkFrame parse_frame(const nlohmann::json& j, std::size_t line, std::size_t index) {
  const auto where = "frames[" + std::to_string(index) + "]";
  if (!j.is_object() || !j.contains("landmarks") || !j["landmarks"].is_object())
    throw scenario_error(line, where, "expected {\"dt\": seconds, \"landmarks\": {name: [x, y]}}");
  pose::LandmarkFrame f;
  f.timestamp = j.value("dt", 0.0);
  for (const auto& [name, xy] : j["landmarks"].items()) {
    auto lm = pose::landmark_from_string(name);
    if (!lm) throw scenario_error(line, where + ".landmarks." + name, "unknown landmark");
    if (!xy.is_array() || xy.size() != 2 || !xy[0].is_number() || !xy[1].is_number())
      throw scenario_error(line, where + ".landmarks." + name, "expected [x, y]");
    f.set(*lm, xy[0].get<double>(), xy[1].get<double>());
  }
  if (!f.in_bounds()) throw scenario_error(line, where, "coordinates must be normalized to [0, 1]");
  return f;
}

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_string()) throw scenario_error(line, key, "required string");
  return j[key].get<std::string>();
}

}  // namespace detail

/// Validates the whole file before anything runs.
inline Scenario parseScenario(std::string_view document) {
  using detail::scenario_error;
  Scenario sc;
  bool header = false;
  double lastT = 0.0;
  std::size_t lineNo = 0;
  for (auto raw : text::split_lines(document)) {
    ++lineNo;
    const auto line = text::trim(raw);
    if (line.empty() || line.starts_with("#")) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw scenario_error(lineNo, "", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw scenario_error(lineNo, "", "expected an object");

    if (!header) {
      if (j.value("schema", "") != kScenarioSchema)
        throw scenario_error(lineNo, "schema", "first record must declare " + std::string(kScenarioSchema));
      sc.name = detail::require_string(j, "name", lineNo);
      sc.description = j.value("description", "");
      if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw scenario_error(lineNo, "seed", "expected a non-negative integer");
        sc.seed = j["seed"].get<std::uint64_t>();
      }
      if (j.contains("config")) {
        if (!j["config"].is_object()) throw scenario_error(lineNo, "config", "expected an object");
        sc.config = j["config"];
      }
      header = true;
      continue;
    }

    TimelineItem item;
    item.line = lineNo;
    if (!j.contains("t") || !j["t"].is_number()) throw scenario_error(lineNo, "t", "required number (seconds)");
    item.t = j["t"].get<double>();
    if (item.t < 0) throw scenario_error(lineNo, "t", "must be >= 0");
    if (item.t < lastT) throw scenario_error(lineNo, "t", "timestamps must be non-decreasing");
    lastT = item.t;

    const auto type = detail::require_string(j, "type", lineNo);
    if (type == "utterance") {
      item.kind = TimelineItem::Kind::kUtterance;
      item.text = detail::require_string(j, "text", lineNo);
      if (text::trim(item.text).empty()) throw scenario_error(lineNo, "text", "must not be empty");
    } else if (type == "objects") {
      item.kind = TimelineItem::Kind::kObjects;
      if (!j.contains("objects") || !j["objects"].is_array()) throw scenario_error(lineNo, "objects", "required list");
      for (const auto& o : j["objects"]) {
        if (!o.is_string()) throw scenario_error(lineNo, "objects", "entries must be strings");
        item.objects.push_back(o.get<std::string>());
      }
    } else if (type == "emotion") {
      item.kind = TimelineItem::Kind::kEmotion;
      if (!j.contains("channels")) throw scenario_error(lineNo, "channels", "required");
      item.channels = detail::parse_channels(j["channels"], lineNo);
      if (j.contains("weights")) {
        try {
          item.weights = j["weights"].get<affect::ReliabilityWeights>();
        } catch (const std::exception& e) {
          throw scenario_error(lineNo, "weights", e.what());
        }
      }
    } else if (type == "landmarks") {
      item.kind = TimelineItem::Kind::kLandmarks;
      if (j.contains("generator")) {
        const auto g = detail::require_string(j, "generator", lineNo);
        item.generator = gen::generator_from_string(g);
        if (!item.generator) throw scenario_error(lineNo, "generator", "unknown generator '" + g + "'");
        if (!j.contains("duration") || !j["duration"].is_number() || j["duration"].get<double>() <= 0)
          throw scenario_error(lineNo, "duration", "required positive number (seconds)");
        item.duration = j["duration"].get<double>();
      } else if (j.contains("frames") && j["frames"].is_array() && !j["frames"].empty()) {
        double lastDt = -1.0;
        for (std::size_t i = 0; i < j["frames"].size(); ++i) {
          auto f = detail::parse_frame(j["frames"][i], lineNo, i);
          if (f.timestamp < 0 || f.timestamp <= lastDt)
            throw scenario_error(lineNo, "frames[" + std::to_string(i) + "].dt", "must be >= 0 and increasing");
          lastDt = f.timestamp;
          item.frames.push_back(f);
        }
      } else {
        throw scenario_error(lineNo, "generator", "landmarks need a generator + duration or a non-empty frames list");
      }
    } else if (type == "mock_reply") {
      item.kind = TimelineItem::Kind::kMockReply;
      item.text = j.value("text", "");
      item.delay = j.value("delay", 0.0);
      if (item.delay < 0) throw scenario_error(lineNo, "delay", "must be >= 0");
      if (j.contains("error")) {
        const auto e = detail::require_string(j, "error", lineNo);
        if (e == "network") item.failure = ErrorCode::kNetwork;
        else if (e == "timeout") item.failure = ErrorCode::kTimeout;
        else if (e == "empty") item.failure = ErrorCode::kEmptyCompletion;
        else throw scenario_error(lineNo, "error", "expected network, timeout or empty");
      }
    } else {
      throw scenario_error(lineNo, "type", "unknown item type '" + type + "'");
    }
    sc.timeline.push_back(std::move(item));
  }
  if (!header) throw scenario_error(lineNo, "schema", "missing header record");
  return sc;
}

}  // namespace stretchbot
