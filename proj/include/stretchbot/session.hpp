#pragma once

// SessionCore: the single owner of one session's event log. It runs the
// decision pipeline up to the reasoner request and from the reply onward;
// the request itself is executed by the caller (simulated in replay, on a
// worker thread in live mode), so pose frames keep flowing while it runs.

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stretchbot/config.hpp"
#include "stretchbot/context.hpp"
#include "stretchbot/digest.hpp"
#include "stretchbot/events.hpp"
#include "stretchbot/knowledge.hpp"
#include "stretchbot/reasoner.hpp"
#include "stretchbot/routine.hpp"
#include "stretchbot/verifier.hpp"

namespace stretchbot {

struct PendingDecision {
  std::uint64_t cycle = 0;
  reasoner::CompletionRequest request;
  context::ContextPackage context;  // verification uses the request-time view
};

inline constexpr std::string_view kTriggerUtterance = "utterance";
inline constexpr std::string_view kTriggerSuccess = "exercise_success";

class SessionCore {
 public:
  using Listener = std::function<void(const Event&)>;

  SessionCore(std::string id, SessionConfig config, std::shared_ptr<const kg::KnowledgeGraph> graph,
              std::shared_ptr<kg::FallbackClient> fallback, std::uint64_t seed = 0, double t0 = 0.0,
              Listener listener = {})
      : config_(std::move(config)),
        graph_(graph ? std::move(graph) : std::make_shared<const kg::KnowledgeGraph>()),
        fallback_(std::move(fallback)),
        verifier_(config_.verifier, config_.catalog),
        listener_(std::move(listener)) {
    std::vector<std::string> names;
    for (const auto& e : config_.script.exercises) names.push_back(e.name);
    append(t0, {events::SessionStarted{std::move(id), std::move(names), seed}});
  }

  SessionCore(const SessionCore&) = delete;
  SessionCore& operator=(const SessionCore&) = delete;

  const SessionState& state() const { return state_; }
  const std::vector<Event>& log() const { return log_; }
  const SessionConfig& config() const { return config_; }
  bool stopped() const { return state_.stopped(); }
  bool decisionInFlight() const { return inflight_.has_value(); }
  std::optional<pose::HoldState> unflushedHold() const { return pendingHold_; }

  using Result = Expected<std::optional<PendingDecision>>;

  Result utterance(std::string textIn, double t) {
    if (stopped()) return stoppedError();
    flushHold(t);
    if (state_.phase == Phase::kPaused) append(t, {events::Resumed{}});
    append(t, {events::UtteranceReceived{std::move(textIn)}});
    return trigger(kTriggerUtterance, t);
  }

  Result objects(std::vector<std::string> detected, double t) {
    if (stopped()) return stoppedError();
    flushHold(t);
    append(t, {events::ObjectsChanged{std::move(detected)}});
    return std::optional<PendingDecision>{};
  }

  Result emotion(std::vector<affect::ChannelPrediction> channels, std::optional<affect::ReliabilityWeights> weights,
                 double t) {
    if (stopped()) return stoppedError();
    flushHold(t);
    append(t, {events::EmotionChanged{std::move(channels), weights ? *weights : config_.weights}});
    return std::optional<PendingDecision>{};
  }

  Result segmentStarted(std::string generator, std::uint64_t frames, double t) {
    if (stopped()) return stoppedError();
    flushHold(t);
    ignoredRun_ = false;
    append(t, {events::PoseSegmentStarted{std::move(generator), frames}});
    return std::optional<PendingDecision>{};
  }

  /// One pose-loop tick.
  Result frame(const pose::LandmarkFrame& f, double t) {
    if (stopped()) return stoppedError();
    if (state_.phase != Phase::kInExercise) {
      flushHold(t);
      if (!ignoredRun_) {
        append(t, {events::EventIgnored{"pose frame", "phase " + std::string(to_string(state_.phase))}});
        ignoredRun_ = true;
      }
      return std::optional<PendingDecision>{};
    }
    ignoredRun_ = false;
    const auto& exercise = config_.script[state_.index];
    auto outcome = pose::evaluateExerciseFrame(exercise.rule, f, pendingHold_ ? *pendingHold_ : state_.hold,
                                               exerciseParams(exercise));
    pendingHold_ = outcome.state;
    ++pendingFrames_;
    if (outcome.event) {
      flushHold(t);
      auto step = onPoseEvent(state_, *outcome.event, config_.script, t, config_.routine);
      commit(step.step);
      if (step.triggersDecision) return trigger(kTriggerSuccess, t);
    } else if (pendingFrames_ >= config_.holdProgressEvery) {
      flushHold(t);
    }
    return std::optional<PendingDecision>{};
  }

  /// Writes batched hold progress to the log.
  void flushHold(double t) {
    if (!pendingHold_) return;
    const auto hold = *pendingHold_;
    const auto frames = pendingFrames_;
    pendingHold_.reset();
    pendingFrames_ = 0;
    if (stopped() || state_.phase == Phase::kGreeting) return;
    append(t, {events::HoldProgress{state_.index, frames, hold}});
  }

  /// Consumes the reasoner result for the in-flight decision. Returns the
  /// next queued decision, if any.
  std::optional<PendingDecision> completeDecision(const reasoner::DecisionAttempt& attempt, double t) {
    if (!inflight_) return std::nullopt;
    flushHold(t);
    const PendingDecision pending = std::move(*inflight_);
    inflight_.reset();
    const auto cycle = pending.cycle;

    if (!attempt.reply) {
      const auto& err = attempt.reply.error();
      append(t, {events::ReasonerFailed{cycle, std::string(to_string(err.code)), err.message, attempt.latency}});
      degrade(cycle, t);
    } else {
      const auto& reply = *attempt.reply;
      append(t, {events::ReasonerReplied{cycle, reply.rawText, attempt.latency}});
      auto decision = verifier_.review(reply.rawText, pending.context);
      if (!decision) {
        append(t, {events::ReplyRejected{cycle, std::string(to_string(decision.error().code)), decision.error().message}});
        degrade(cycle, t);
      } else {
        append(t, {events::CommandVerified{cycle, decision->draft, decision->command, decision->report},
                   events::DecisionFinished{cycle, "applied"}});
        auto applied = applyCommand(state_, decision->command, config_.catalog, config_.script, t, config_.routine);
        if (applied) {
          commit(*applied);
        } else {
          append(t, {events::EventIgnored{"command", applied.error().describe()},
                     events::Spoke{config_.routine.fallbackUtterance, "fallback"}});
        }
      }
    }

    if (stopped()) {
      queue_.clear();
      return std::nullopt;
    }
    if (!queue_.empty()) {
      auto next = queue_.front();
      queue_.pop_front();
      return startDecision(next, true, t);
    }
    return std::nullopt;
  }

 private:
  static Result stoppedError() { return fail(ErrorCode::kSessionStopped, "session is stopped"); }

  pose::PoseParameters exerciseParams(const ExercisePrimitive& exercise) const {
    auto params = config_.pose;
    params.holdTarget = exercise.holdSeconds;
    return params;
  }

  void append(double t, std::vector<events::Body> bodies) { commit(advance(state_, t, std::move(bodies))); }

  void commit(const Step& step) {
    state_ = step.state;
    for (const auto& e : step.events) {
      log_.push_back(e);
      if (listener_) listener_(e);
    }
  }

  void degrade(std::uint64_t cycle, double t) {
    append(t, {events::DecisionFinished{cycle, "fallback"}, events::Spoke{config_.routine.fallbackUtterance, "fallback"}});
  }

  Result trigger(std::string_view kind, double t) {
    if (inflight_ || !queue_.empty()) {
      queue_.emplace_back(kind);
      append(t, {events::DecisionQueued{std::string(kind)}});
      return std::optional<PendingDecision>{};
    }
    return startDecision(std::string(kind), false, t);
  }

  std::optional<PendingDecision> startDecision(const std::string& kind, bool fromQueue, double t) {
    const auto cycle = state_.cycles + 1;
    context::PerceptionSnapshot perception{state_.objects, state_.channels, state_.weights};
    auto pkg = context::assembleContext(perception, state_.dialogue, state_.status, config_.context);
    const auto adaptation = adaptationHooks(state_, pkg, *graph_, config_.catalog, config_.lexicon);
    pkg.annotations = adaptation.annotations;
    const auto mentions = collectMentions(pkg, adaptation, *graph_);
    auto results = kg::retrieveRelations(*graph_, mentions, fallback_.get(), config_.retrieval);
    const auto kgBlock = kg::serializeForPrompt(results);

    append(t, {events::DecisionStarted{cycle, kind, fromQueue, mentions, pkg.annotations},
               events::KnowledgeRetrieved{cycle, std::move(results)}});

    auto bundle = context::renderPrompt(pkg, config_.script, state_.position(), kgBlock, config_.promptTemplate);
    if (!bundle) {
      append(t, {events::ReplyRejected{cycle, std::string(to_string(bundle.error().code)), bundle.error().message}});
      degrade(cycle, t);
      return std::nullopt;
    }
    append(t, {events::PromptRendered{cycle, bundle->currentExercise, bundle->nextExercise,
                                      bundle->contextDescription, context::historyString(pkg), bundle->kgBlock,
                                      sha256Hex(bundle->systemPrompt)}});
    PendingDecision pending{cycle, {bundle->systemPrompt, config_.userMessage, config_.timeoutSeconds}, std::move(pkg)};
    inflight_ = pending;
    return pending;
  }

  SessionConfig config_;
  std::shared_ptr<const kg::KnowledgeGraph> graph_;
  std::shared_ptr<kg::FallbackClient> fallback_;
  verify::Verifier verifier_;
  Listener listener_;

  SessionState state_;
  std::vector<Event> log_;
  std::optional<PendingDecision> inflight_;
  std::deque<std::string> queue_;
  std::optional<pose::HoldState> pendingHold_;
  std::size_t pendingFrames_ = 0;
  bool ignoredRun_ = false;
};

}  // namespace stretchbot
