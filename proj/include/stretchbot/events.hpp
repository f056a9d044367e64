#pragma once

// Session event log: one record per state change, serialized as one JSON
// object per line. SessionState is the left fold of these records.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "stretchbot/affect.hpp"
#include "stretchbot/commands.hpp"
#include "stretchbot/error.hpp"
#include "stretchbot/knowledge.hpp"
#include "stretchbot/objects.hpp"
#include "stretchbot/pose.hpp"
#include "stretchbot/verifier.hpp"

namespace stretchbot {

inline constexpr std::string_view kEventLogSchema = "stretchbot.events/1";

namespace events {

struct SessionStarted {
  static constexpr std::string_view kType = "session_started";
  std::string session;
  std::vector<std::string> routine;
  std::uint64_t seed = 0;
  friend bool operator==(const SessionStarted&, const SessionStarted&) = default;
};

struct UtteranceReceived {
  static constexpr std::string_view kType = "utterance_received";
  std::string text;
  friend bool operator==(const UtteranceReceived&, const UtteranceReceived&) = default;
};

struct ObjectsChanged {
  static constexpr std::string_view kType = "objects_changed";
  std::vector<std::string> objects;
  friend bool operator==(const ObjectsChanged&, const ObjectsChanged&) = default;
};

struct EmotionChanged {
  static constexpr std::string_view kType = "emotion_changed";
  std::vector<affect::ChannelPrediction> channels;
  affect::ReliabilityWeights weights;
  friend bool operator==(const EmotionChanged&, const EmotionChanged&) = default;
};

struct PoseSegmentStarted {
  static constexpr std::string_view kType = "pose_segment_started";
  std::string generator;
  std::uint64_t frames = 0;
  friend bool operator==(const PoseSegmentStarted&, const PoseSegmentStarted&) = default;
};

/// Batched hold-timer snapshot; `frames` counts frames folded since the last one.
struct HoldProgress {
  static constexpr std::string_view kType = "hold_progress";
  std::uint64_t index = 0;
  std::uint64_t frames = 0;
  pose::HoldState hold;
  friend bool operator==(const HoldProgress&, const HoldProgress&) = default;
};

struct ExerciseSuccess {
  static constexpr std::string_view kType = "exercise_success";
  std::uint64_t index = 0;
  std::string name;
  friend bool operator==(const ExerciseSuccess&, const ExerciseSuccess&) = default;
};

struct CorrectiveFeedback {
  static constexpr std::string_view kType = "corrective_feedback";
  std::uint64_t index = 0;
  std::string name;
  friend bool operator==(const CorrectiveFeedback&, const CorrectiveFeedback&) = default;
};

/// `source`: coach, corrective or fallback.
struct Spoke {
  static constexpr std::string_view kType = "spoke";
  std::string text;
  std::string source;
  friend bool operator==(const Spoke&, const Spoke&) = default;
};

struct DecisionQueued {
  static constexpr std::string_view kType = "decision_queued";
  std::string trigger;
  friend bool operator==(const DecisionQueued&, const DecisionQueued&) = default;
};

struct DecisionStarted {
  static constexpr std::string_view kType = "decision_started";
  std::uint64_t cycle = 0;
  std::string trigger;
  bool fromQueue = false;
  std::vector<std::string> mentions;
  std::vector<std::string> annotations;
  friend bool operator==(const DecisionStarted&, const DecisionStarted&) = default;
};

struct KnowledgeRetrieved {
  static constexpr std::string_view kType = "knowledge_retrieved";
  std::uint64_t cycle = 0;
  std::vector<kg::RetrievedKnowledge> results;
  friend bool operator==(const KnowledgeRetrieved&, const KnowledgeRetrieved&) = default;
};

struct PromptRendered {
  static constexpr std::string_view kType = "prompt_rendered";
  std::uint64_t cycle = 0;
  std::string currentExercise;
  std::string nextExercise;
  std::string contextDescription;
  std::string history;
  std::string kgBlock;
  std::string promptSha256;
  friend bool operator==(const PromptRendered&, const PromptRendered&) = default;
};

struct ReasonerReplied {
  static constexpr std::string_view kType = "reasoner_replied";
  std::uint64_t cycle = 0;
  std::string raw;
  double latency = 0.0;
  friend bool operator==(const ReasonerReplied&, const ReasonerReplied&) = default;
};

/// Transport failure: network, timeout, empty completion, exhausted script.
struct ReasonerFailed {
  static constexpr std::string_view kType = "reasoner_failed";
  std::uint64_t cycle = 0;
  std::string error;
  std::string message;
  double latency = 0.0;
  friend bool operator==(const ReasonerFailed&, const ReasonerFailed&) = default;
};

/// A reply arrived but no output line could be parsed or repaired.
struct ReplyRejected {
  static constexpr std::string_view kType = "reply_rejected";
  std::uint64_t cycle = 0;
  std::string error;
  std::string message;
  friend bool operator==(const ReplyRejected&, const ReplyRejected&) = default;
};

struct CommandVerified {
  static constexpr std::string_view kType = "command_verified";
  std::uint64_t cycle = 0;
  ActionCommand draft;
  ActionCommand command;
  verify::VerifierReport report;
  friend bool operator==(const CommandVerified&, const CommandVerified&) = default;
};

/// `outcome`: applied or fallback.
struct DecisionFinished {
  static constexpr std::string_view kType = "decision_finished";
  std::uint64_t cycle = 0;
  std::string outcome;
  friend bool operator==(const DecisionFinished&, const DecisionFinished&) = default;
};

struct ExerciseStarted {
  static constexpr std::string_view kType = "exercise_started";
  std::uint64_t index = 0;
  std::string name;
  friend bool operator==(const ExerciseStarted&, const ExerciseStarted&) = default;
};

struct PointStarted {
  static constexpr std::string_view kType = "point_started";
  std::string object;
  Position3 position;
  friend bool operator==(const PointStarted&, const PointStarted&) = default;
};

struct PointFinished {
  static constexpr std::string_view kType = "point_finished";
  std::string object;
  friend bool operator==(const PointFinished&, const PointFinished&) = default;
};

struct Paused {
  static constexpr std::string_view kType = "paused";
  std::string cue;
  friend bool operator==(const Paused&, const Paused&) = default;
};

struct Resumed {
  static constexpr std::string_view kType = "resumed";
  friend bool operator==(const Resumed&, const Resumed&) = default;
};

struct RoutineStopped {
  static constexpr std::string_view kType = "routine_stopped";
  std::string reason;
  friend bool operator==(const RoutineStopped&, const RoutineStopped&) = default;
};

/// An input that arrived in a phase that cannot take it (e.g. pose frames
/// before the first exercise).
struct EventIgnored {
  static constexpr std::string_view kType = "event_ignored";
  std::string what;
  std::string reason;
  friend bool operator==(const EventIgnored&, const EventIgnored&) = default;
};

using Body = std::variant<SessionStarted, UtteranceReceived, ObjectsChanged, EmotionChanged, PoseSegmentStarted,
                          HoldProgress, ExerciseSuccess, CorrectiveFeedback, Spoke, DecisionQueued, DecisionStarted,
                          KnowledgeRetrieved, PromptRendered, ReasonerReplied, ReasonerFailed, ReplyRejected,
                          CommandVerified, DecisionFinished, ExerciseStarted, PointStarted, PointFinished, Paused,
                          Resumed, RoutineStopped, EventIgnored>;

}  // namespace events

struct Event {
  std::uint64_t seq = 0;
  double t = 0.0;  // session clock, seconds
  events::Body body;

  std::string_view type() const {
    return std::visit([](const auto& b) { return std::decay_t<decltype(b)>::kType; }, body);
  }
  template <typename T>
  const T* as() const {
    return std::get_if<T>(&body);
  }
  friend bool operator==(const Event&, const Event&) = default;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace pose {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SideTimer, heldSeconds, completed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(HoldState, heldSeconds, invalidSeconds, completed, left, right)
}  // namespace pose

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Position3, x, y, z)

NLOHMANN_JSON_SERIALIZE_ENUM(ActionCommand::Kind, {{ActionCommand::Kind::kNextExercise, "next_exercise"},
                                                   {ActionCommand::Kind::kPoint, "point"},
                                                   {ActionCommand::Kind::kStopRoutine, "stop_routine"},
                                                   {ActionCommand::Kind::kSay, "say"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ActionCommand, kind, object, utterance)

namespace affect {
NLOHMANN_JSON_SERIALIZE_ENUM(Channel, {{Channel::kVoice, "voice"}, {Channel::kFacial, "facial"}, {Channel::kText, "text"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ChannelPrediction, channel, scores)

inline void to_json(nlohmann::json& j, const ReliabilityWeights& w) {
  j = nlohmann::json::object();
  for (const auto& [c, v] : w.weights) j[std::string(to_string(c))] = v;
}
inline void from_json(const nlohmann::json& j, ReliabilityWeights& w) {
  w.weights.clear();
  for (const auto& [k, v] : j.items()) {
    auto c = channel_from_string(k);
    if (!c) throw StretchbotError(ErrorCode::kInvalidConfig, "unknown channel '" + k + "'");
    w.weights[*c] = v.get<double>();
  }
}
}  // namespace affect

namespace kg {
NLOHMANN_JSON_SERIALIZE_ENUM(Source, {{Source::kInternal, "internal"}, {Source::kFallback, "fallback"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Triple, entity, relation, target)

inline void to_json(nlohmann::json& j, const RetrievedKnowledge& r) {
  j = {{"entity", r.entity}, {"source", r.source}, {"triples", r.triples}};
  j["warning"] = r.warning ? nlohmann::json(*r.warning) : nlohmann::json(nullptr);
}
inline void from_json(const nlohmann::json& j, RetrievedKnowledge& r) {
  j.at("entity").get_to(r.entity);
  j.at("source").get_to(r.source);
  j.at("triples").get_to(r.triples);
  r.warning.reset();
  if (j.contains("warning") && !j["warning"].is_null()) r.warning = j["warning"].get<std::string>();
}
}  // namespace kg

namespace verify {
NLOHMANN_JSON_SERIALIZE_ENUM(EditClass, {{EditClass::kNone, "none"},
                                         {EditClass::kPrefixNormalization, "prefix-normalization"},
                                         {EditClass::kFormattingRepair, "formatting-repair"},
                                         {EditClass::kToneAdjustment, "tone-adjustment"},
                                         {EditClass::kSemanticRewrite, "semantic-rewrite"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Verdict, {{Verdict::kApproved, "approved"},
                                       {Verdict::kEdited, "edited"},
                                       {Verdict::kRewritten, "rewritten"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(VerifierReport, verdict, editClass, before, after, edits)
}  // namespace verify

namespace events {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SessionStarted, session, routine, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(UtteranceReceived, text)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ObjectsChanged, objects)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EmotionChanged, channels, weights)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PoseSegmentStarted, generator, frames)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(HoldProgress, index, frames, hold)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExerciseSuccess, index, name)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CorrectiveFeedback, index, name)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Spoke, text, source)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecisionQueued, trigger)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecisionStarted, cycle, trigger, fromQueue, mentions, annotations)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(KnowledgeRetrieved, cycle, results)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PromptRendered, cycle, currentExercise, nextExercise, contextDescription, history,
                                   kgBlock, promptSha256)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReasonerReplied, cycle, raw, latency)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReasonerFailed, cycle, error, message, latency)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReplyRejected, cycle, error, message)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CommandVerified, cycle, draft, command, report)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecisionFinished, cycle, outcome)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExerciseStarted, index, name)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PointStarted, object, position)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PointFinished, object)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Paused, cue)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RoutineStopped, reason)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EventIgnored, what, reason)

inline void to_json(nlohmann::json& j, const Resumed&) { j = nlohmann::json::object(); }
inline void from_json(const nlohmann::json&, Resumed&) {}

namespace detail {

template <std::size_t I = 0>
bool body_from_json(std::string_view type, const nlohmann::json& data, Body& out) {
  if constexpr (I < std::variant_size_v<Body>) {
    using T = std::variant_alternative_t<I, Body>;
    if (T::kType == type) {
      out = data.get<T>();
      return true;
    }
    return body_from_json<I + 1>(type, data, out);
  } else {
    return false;
  }
}

}  // namespace detail
}  // namespace events

/// {"seq": n, "t": seconds, "type": "...", "data": {...}}
inline nlohmann::json toJson(const Event& e) {
  nlohmann::json data;
  std::visit([&](const auto& b) { data = b; }, e.body);
  return {{"seq", e.seq}, {"t", e.t}, {"type", std::string(e.type())}, {"data", std::move(data)}};
}

inline Event eventFromJson(const nlohmann::json& j) {
  Event e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.t = j.at("t").get<double>();
    const auto type = j.at("type").get<std::string>();
    if (!events::detail::body_from_json(type, j.at("data"), e.body))
      throw StretchbotError(ErrorCode::kInvalidScenario, "unknown event type '" + type + "'");
  } catch (const nlohmann::json::exception& ex) {
    throw StretchbotError(ErrorCode::kInvalidScenario, std::string("malformed event record: ") + ex.what());
  }
  return e;
}

inline std::string toJsonLine(const Event& e) { return toJson(e).dump() + "\n"; }

/// Line-delimited log: a schema header record followed by one event per line.
inline std::string serializeLog(const std::vector<Event>& log) {
  std::string out = nlohmann::json{{"schema", kEventLogSchema}}.dump() + "\n";
  for (const auto& e : log) out += toJsonLine(e);
  return out;
}

inline std::vector<Event> parseLog(std::string_view document) {
  std::vector<Event> log;
  std::size_t lineNo = 0;
  for (auto line : text::split_lines(document)) {
    ++lineNo;
    line = text::trim(line);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw StretchbotError(ErrorCode::kInvalidScenario, "log line " + std::to_string(lineNo) + ": " + ex.what());
    }
    if (j.contains("schema")) {
      if (j["schema"] != kEventLogSchema)
        throw StretchbotError(ErrorCode::kInvalidScenario, "unsupported log schema " + j["schema"].dump());
      continue;
    }
    log.push_back(eventFromJson(j));
  }
  return log;
}

}  // namespace stretchbot
