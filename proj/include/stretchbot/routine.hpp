#pragma once

// Routine state machine. SessionState is never mutated directly: every
// operation returns events and the new state is their fold.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stretchbot/context.hpp"
#include "stretchbot/events.hpp"
#include "stretchbot/knowledge.hpp"
#include "stretchbot/objects.hpp"
#include "stretchbot/routine_script.hpp"

namespace stretchbot {

enum class Phase { kGreeting, kInExercise, kAwaitingConfirmation, kPaused, kStopped };

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kGreeting: return "greeting";
    case Phase::kInExercise: return "in_exercise";
    case Phase::kAwaitingConfirmation: return "awaiting_confirmation";
    case Phase::kPaused: return "paused";
    case Phase::kStopped: return "stopped";
  }
  return "?";
}

struct SessionMetrics {
  std::uint64_t kgInternalHits = 0;
  std::uint64_t kgFallbacks = 0;
  std::uint64_t kgWarnings = 0;
  std::map<std::string, std::uint64_t> verifierEdits = [] {
    std::map<std::string, std::uint64_t> m;
    for (auto c : verify::kEditClasses) m[std::string(verify::to_string(c))] = 0;
    return m;
  }();
  std::uint64_t decisionCycles = 0;
  std::uint64_t approvedDecisions = 0;
  std::uint64_t reasonerFailures = 0;
  std::uint64_t rejectedReplies = 0;
  std::uint64_t fallbackUtterances = 0;
  std::uint64_t queuedTriggers = 0;
  std::vector<double> decisionLatencies;
  std::uint64_t correctiveResets = 0;
  std::uint64_t exercisesCompleted = 0;
  std::uint64_t points = 0;

  std::uint64_t nonApprovedDecisions() const {
    std::uint64_t n = 0;
    for (const auto& [_, v] : verifierEdits) n += v;
    return n;
  }
  friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;
};

struct SessionState {
  std::string sessionId;
  std::uint64_t seed = 0;
  std::vector<std::string> routine;  // exercise names
  Phase phase = Phase::kGreeting;
  Phase resumePhase = Phase::kGreeting;
  bool started = false;
  std::size_t index = 0;
  context::ExerciseStatus status = context::ExerciseStatus::kNotYet;
  pose::HoldState hold;
  std::vector<std::size_t> visited;  // exercise indices in start order

  std::vector<std::string> objects;
  std::vector<affect::ChannelPrediction> channels;
  affect::ReliabilityWeights weights;
  std::vector<context::DialogueTurn> dialogue;

  std::optional<ActionCommand> pendingAction;  // verified, being executed
  bool decisionInFlight = false;
  std::uint64_t queuedTriggers = 0;
  std::uint64_t cycles = 0;
  std::string stopReason;

  SessionMetrics metrics;
  std::uint64_t nextSeq = 0;
  double lastTime = 0.0;

  bool stopped() const { return phase == Phase::kStopped; }
  context::RoutinePosition position() const { return {started, index}; }
  friend bool operator==(const SessionState&, const SessionState&) = default;
};

// ---------------------------------------------------------------------------
// Fold

namespace detail {

struct Reducer {
  SessionState& s;

  void operator()(const events::SessionStarted& e) {
    s.sessionId = e.session;
    s.routine = e.routine;
    s.seed = e.seed;
  }
  void operator()(const events::UtteranceReceived& e) {
    s.dialogue.push_back({context::Speaker::kUser, e.text});
  }
  void operator()(const events::ObjectsChanged& e) { s.objects = e.objects; }
  void operator()(const events::EmotionChanged& e) {
    s.channels = e.channels;
    s.weights = e.weights;
  }
  void operator()(const events::PoseSegmentStarted&) {}
  void operator()(const events::HoldProgress& e) { s.hold = e.hold; }
  void operator()(const events::ExerciseSuccess&) {
    s.status = context::ExerciseStatus::kSuccess;
    s.phase = Phase::kAwaitingConfirmation;
    ++s.metrics.exercisesCompleted;
  }
  void operator()(const events::CorrectiveFeedback&) { ++s.metrics.correctiveResets; }
  void operator()(const events::Spoke& e) {
    s.dialogue.push_back({context::Speaker::kCoach, e.text});
    if (e.source == "fallback") ++s.metrics.fallbackUtterances;
    if (e.source == "coach") s.pendingAction.reset();
  }
  void operator()(const events::DecisionQueued&) {
    ++s.queuedTriggers;
    ++s.metrics.queuedTriggers;
  }
  void operator()(const events::DecisionStarted& e) {
    s.decisionInFlight = true;
    s.cycles = e.cycle;
    if (e.fromQueue && s.queuedTriggers > 0) --s.queuedTriggers;
    ++s.metrics.decisionCycles;
  }
  void operator()(const events::KnowledgeRetrieved& e) {
    for (const auto& r : e.results) {
      if (r.source == kg::Source::kInternal)
        ++s.metrics.kgInternalHits;
      else
        ++s.metrics.kgFallbacks;
      if (r.warning) ++s.metrics.kgWarnings;
    }
  }
  void operator()(const events::PromptRendered&) {}
  void operator()(const events::ReasonerReplied& e) { s.metrics.decisionLatencies.push_back(e.latency); }
  void operator()(const events::ReasonerFailed&) { ++s.metrics.reasonerFailures; }
  void operator()(const events::ReplyRejected&) { ++s.metrics.rejectedReplies; }
  void operator()(const events::CommandVerified& e) {
    s.pendingAction = e.command;
    if (e.report.editClass == verify::EditClass::kNone)
      ++s.metrics.approvedDecisions;
    else
      ++s.metrics.verifierEdits[std::string(verify::to_string(e.report.editClass))];
  }
  void operator()(const events::DecisionFinished&) { s.decisionInFlight = false; }
  void operator()(const events::ExerciseStarted& e) {
    s.started = true;
    s.index = e.index;
    s.phase = Phase::kInExercise;
    s.status = context::ExerciseStatus::kNotYet;
    s.hold = {};
    s.visited.push_back(e.index);
    s.pendingAction.reset();
  }
  void operator()(const events::PointStarted&) { ++s.metrics.points; }
  void operator()(const events::PointFinished&) {}
  void operator()(const events::Paused&) {
    s.resumePhase = s.phase;
    s.phase = Phase::kPaused;
    s.pendingAction.reset();
  }
  void operator()(const events::Resumed&) { s.phase = s.resumePhase; }
  void operator()(const events::RoutineStopped& e) {
    s.phase = Phase::kStopped;
    s.stopReason = e.reason;
    s.queuedTriggers = 0;
    s.pendingAction.reset();
  }
  void operator()(const events::EventIgnored&) {}
};

}  // namespace detail

/// Folds one event into the state.
inline void reduce(SessionState& state, const Event& event) {
  std::visit(detail::Reducer{state}, event.body);
  state.nextSeq = event.seq + 1;
  state.lastTime = event.t;
}

inline SessionState foldLog(std::span<const Event> log, SessionState initial = {}) {
  for (const auto& e : log) reduce(initial, e);
  return initial;
}

/// New state plus the events that produced it.
struct Step {
  SessionState state;
  std::vector<Event> events;
};

inline Step advance(SessionState state, double t, std::vector<events::Body> bodies) {
  Step step;
  for (auto& b : bodies) {
    Event e{state.nextSeq, t, std::move(b)};
    reduce(state, e);
    step.events.push_back(std::move(e));
  }
  step.state = std::move(state);
  return step;
}

// ---------------------------------------------------------------------------
// Commands and pose events

struct RoutineOptions {
  std::vector<std::string> pauseCues = {"take a break", "short break", "take a pause", "let's pause",
                                        "rest a moment", "rest for a moment", "catch your breath"};
  std::string fallbackUtterance = "Sorry, I lost my train of thought. Could you say that again?";
  std::string correctivePrefix = "That doesn't look quite right yet. Let's try again: ";
  std::string completionReason = "routine complete";
  std::string stopReason = "stop requested";
};

/// Corrective line for the exercise, e.g. "...Let's try again: touch your toes for 5 seconds."
inline std::string correctiveUtterance(const ExercisePrimitive& exercise, const RoutineOptions& options) {
  std::string instruction = exercise.instruction;
  if (!instruction.empty()) instruction[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(instruction[0])));
  return options.correctivePrefix + instruction + ".";
}

inline std::optional<std::string> pauseCueIn(std::string_view utterance, const RoutineOptions& options) {
  for (const auto& cue : options.pauseCues)
    if (text::contains_phrase(utterance, cue)) return cue;
  return std::nullopt;
}

/// Executes a verified command. Pointing resolves through the fixed object
/// table; a NEXT_EXERCISE past the last exercise ends the routine.
inline Expected<Step> applyCommand(const SessionState& state, const ActionCommand& command, const ObjectCatalog& catalog,
                                   const RoutineScript& script, double t, const RoutineOptions& options = {}) {
  if (state.stopped()) return fail(ErrorCode::kSessionStopped, "session is stopped");
  std::vector<events::Body> out;
  const auto spoke = [&] { out.push_back(events::Spoke{command.utterance, "coach"}); };

  switch (command.kind) {
    case ActionCommand::Kind::kNextExercise: {
      const std::size_t next = state.started ? state.index + 1 : 0;
      spoke();
      if (next >= script.size()) {
        out.push_back(events::RoutineStopped{options.completionReason});
      } else {
        out.push_back(events::ExerciseStarted{next, script[next].name});
      }
      break;
    }
    case ActionCommand::Kind::kPoint: {
      const ObjectEntry* entry = nullptr;
      if (auto detected = catalog.resolveDetected(command.object, state.objects)) entry = catalog.byName(*detected);
      if (!entry) entry = catalog.byToken(command.object);
      if (!entry) return fail(ErrorCode::kUnknownObject, "POINT_" + command.object + " has no fixed position");
      out.push_back(events::PointStarted{entry->token(), entry->position});
      out.push_back(events::PointFinished{entry->token()});
      spoke();
      break;
    }
    case ActionCommand::Kind::kStopRoutine:
      spoke();
      out.push_back(events::RoutineStopped{options.stopReason});
      break;
    case ActionCommand::Kind::kSay:
      spoke();
      if (auto cue = pauseCueIn(command.utterance, options)) out.push_back(events::Paused{*cue});
      break;
  }
  return advance(state, t, std::move(out));
}

struct PoseStep {
  Step step;
  bool triggersDecision = false;
};

/// Routes a hold-timer event. Only meaningful while an exercise is running;
/// anything else is logged and ignored.
inline PoseStep onPoseEvent(const SessionState& state, pose::PoseEvent event, const RoutineScript& script, double t,
                            const RoutineOptions& options = {}) {
  if (state.phase != Phase::kInExercise || state.index >= script.size()) {
    return {advance(state, t,
                    {events::EventIgnored{std::string("pose:") + std::string(pose::to_string(event)),
                                          "phase " + std::string(to_string(state.phase))}}),
            false};
  }
  const auto& exercise = script[state.index];
  if (event == pose::PoseEvent::kSuccess)
    return {advance(state, t, {events::ExerciseSuccess{state.index, exercise.name}}), true};
  return {advance(state, t,
                  {events::CorrectiveFeedback{state.index, exercise.name},
                   events::Spoke{correctiveUtterance(exercise, options), "corrective"}}),
          false};
}

// ---------------------------------------------------------------------------
// Context updater

struct AdaptationLexicon {
  std::vector<std::string> fatigueCues = {"tired", "exhausted", "sleepy", "worn out", "no energy", "fatigued"};
  std::vector<std::string> discomfortCues = {"hurts", "hurt", "pain", "painful", "sore", "ache", "aches", "strain",
                                             "injured"};
  std::vector<std::string> sweatCues = {"sweaty", "sweating", "sweat"};
  std::vector<std::string> thirstCues = {"thirsty", "dehydrated"};
  std::vector<std::string> fatigueLabels = {"tired"};
  std::vector<std::string> frustrationLabels = {"frustrated", "angry"};
};

struct Adaptation {
  std::vector<std::string> annotations;
  std::vector<std::string> mentions;  // extra KG lookups the cues call for
  friend bool operator==(const Adaptation&, const Adaptation&) = default;
};

namespace detail {

inline bool any_cue(std::string_view textIn, const std::vector<std::string>& cues) {
  return std::any_of(cues.begin(), cues.end(), [&](const auto& c) { return text::contains_phrase(textIn, c); });
}

inline void add_unique(std::vector<std::string>& list, std::string value) {
  if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(std::move(value));
}

/// Detected objects whose KG entry says they help with `state` (is_relevant_when).
inline std::vector<std::string> relevant_objects(const SessionState& s, const kg::KnowledgeGraph& graph,
                                                 std::string_view state) {
  std::vector<std::string> out;
  for (const auto& obj : s.objects) {
    auto entity = graph.lookup(obj);
    if (!entity) continue;
    if (const auto* rel = entity->relation("is_relevant_when")) {
      for (const auto& target : rel->targets)
        if (text::entity_key(target) == text::entity_key(state)) out.push_back(obj);
    }
  }
  return out;
}

}  // namespace detail

/// Declarative cues for the prompt; the reasoner decides what to do with them.
inline Adaptation adaptationHooks(const SessionState& state, const context::ContextPackage& pkg,
                                  const kg::KnowledgeGraph& graph, const ObjectCatalog& catalog,
                                  const AdaptationLexicon& lexicon = {}) {
  Adaptation out;
  const auto& said = pkg.transcript;
  const std::string label = pkg.fusedEmotion ? pkg.fusedEmotion->label : std::string();
  auto labelIn = [&](const std::vector<std::string>& labels) {
    return !label.empty() && std::find(labels.begin(), labels.end(), label) != labels.end();
  };

  if (labelIn(lexicon.fatigueLabels) || detail::any_cue(said, lexicon.fatigueCues)) {
    std::vector<std::string> cues;
    for (const auto& obj : detail::relevant_objects(state, graph, "Fatigue")) detail::add_unique(cues, catalog.cueFor(obj));
    out.annotations.push_back(cues.empty() ? "user may be tired"
                                           : "user may be tired; " + text::join(cues, ", ") + " available");
    detail::add_unique(out.mentions, "Fatigue");
  }
  if (detail::any_cue(said, lexicon.discomfortCues)) {
    out.annotations.push_back("possible discomfort reported");
    detail::add_unique(out.mentions, "Pain");
  }
  if (detail::any_cue(said, lexicon.sweatCues)) {
    std::vector<std::string> cues;
    for (const auto& obj : detail::relevant_objects(state, graph, "Sweating")) detail::add_unique(cues, catalog.cueFor(obj));
    out.annotations.push_back(cues.empty() ? "user reports sweating"
                                           : "user reports sweating; " + text::join(cues, ", ") + " available");
    detail::add_unique(out.mentions, "Sweating");
  }
  if (detail::any_cue(said, lexicon.thirstCues)) {
    out.annotations.push_back("user reports thirst");
    detail::add_unique(out.mentions, "Thirst");
  }
  if (labelIn(lexicon.frustrationLabels)) {
    out.annotations.push_back("user seems frustrated");
    detail::add_unique(out.mentions, "Frustration");
  }
  return out;
}

/// Entities to look up this cycle: detected objects, adaptation cues, then
/// words or word pairs in the transcript that name a KG entity.
inline std::vector<std::string> collectMentions(const context::ContextPackage& pkg, const Adaptation& adaptation,
                                                const kg::KnowledgeGraph& graph) {
  std::vector<std::string> out;
  for (const auto& o : pkg.detectedObjects) detail::add_unique(out, o);
  for (const auto& m : adaptation.mentions) detail::add_unique(out, m);
  const auto ws = text::words(pkg.transcript);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (i + 1 < ws.size()) {
      const auto pair = ws[i] + " " + ws[i + 1];
      if (auto e = graph.lookup(pair)) {
        detail::add_unique(out, e->name);
        ++i;
        continue;
      }
    }
    if (auto e = graph.lookup(ws[i])) detail::add_unique(out, e->name);
  }
  // Drop spellings that normalize to an entry already present.
  std::vector<std::string> unique;
  std::vector<std::string> keys;
  for (auto& m : out) {
    auto key = text::entity_key(m);
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
    keys.push_back(key);
    unique.push_back(std::move(m));
  }
  return unique;
}

// ---------------------------------------------------------------------------
// Snapshot JSON

NLOHMANN_JSON_SERIALIZE_ENUM(Phase, {{Phase::kGreeting, "greeting"},
                                     {Phase::kInExercise, "in_exercise"},
                                     {Phase::kAwaitingConfirmation, "awaiting_confirmation"},
                                     {Phase::kPaused, "paused"},
                                     {Phase::kStopped, "stopped"}})

inline nlohmann::json toJson(const SessionMetrics& m) {
  double mean = 0.0;
  double maxLatency = 0.0;
  for (double l : m.decisionLatencies) {
    mean += l;
    maxLatency = std::max(maxLatency, l);
  }
  if (!m.decisionLatencies.empty()) mean /= static_cast<double>(m.decisionLatencies.size());
  return {{"kg_internal_hits", m.kgInternalHits},
          {"kg_fallbacks", m.kgFallbacks},
          {"kg_warnings", m.kgWarnings},
          {"verifier_edits", m.verifierEdits},
          {"approved_decisions", m.approvedDecisions},
          {"decision_cycles", m.decisionCycles},
          {"reasoner_failures", m.reasonerFailures},
          {"rejected_replies", m.rejectedReplies},
          {"fallback_utterances", m.fallbackUtterances},
          {"queued_triggers", m.queuedTriggers},
          {"decision_latencies", m.decisionLatencies},
          {"latency_mean", mean},
          {"latency_max", maxLatency},
          {"corrective_resets", m.correctiveResets},
          {"exercises_completed", m.exercisesCompleted},
          {"points", m.points}};
}

inline nlohmann::json toJson(const SessionState& s) {
  nlohmann::json dialogue = nlohmann::json::array();
  for (const auto& d : s.dialogue) dialogue.push_back({{"speaker", std::string(to_string(d.speaker))}, {"text", d.text}});
  return {{"session", s.sessionId},
          {"seed", s.seed},
          {"routine", s.routine},
          {"phase", s.phase},
          {"started", s.started},
          {"index", s.index},
          {"exercise", s.started && s.index < s.routine.size() ? nlohmann::json(s.routine[s.index]) : nlohmann::json()},
          {"status", std::string(to_string(s.status))},
          {"hold", s.hold},
          {"visited", s.visited},
          {"objects", s.objects},
          {"channels", s.channels},
          {"weights", s.weights},
          {"dialogue", dialogue},
          {"pending_action", s.pendingAction ? nlohmann::json(*s.pendingAction) : nlohmann::json()},
          {"decision_in_flight", s.decisionInFlight},
          {"queued_triggers", s.queuedTriggers},
          {"cycles", s.cycles},
          {"stop_reason", s.stopReason},
          {"metrics", toJson(s.metrics)},
          {"next_seq", s.nextSeq},
          {"last_time", s.lastTime}};
}

}  // namespace stretchbot
