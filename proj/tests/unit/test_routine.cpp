#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace stretchbot;
using Kind = ActionCommand::Kind;

namespace {

SessionState inExercise(std::size_t index) {
  SessionState s;
  s.routine = {"ArmRaise", "ToeTouch", "LeanLeftRight"};
  s.started = true;
  s.index = index;
  s.phase = Phase::kInExercise;
  return s;
}

std::vector<std::string_view> types(const std::vector<Event>& log) {
  std::vector<std::string_view> out;
  for (const auto& e : log) out.push_back(e.type());
  return out;
}

const RoutineScript kScript = RoutineScript::defaults();
const ObjectCatalog kCatalog = ObjectCatalog::defaults();

}  // namespace

// ---------------------------------------------------------------------------
// Command execution

TEST(ApplyCommand, NextStartsFollowingExerciseWithFreshTimers) {
  auto s = inExercise(1);
  s.hold.heldSeconds = 4.0;
  s.status = context::ExerciseStatus::kSuccess;
  auto step = applyCommand(s, ActionCommand::next("Now lean."), kCatalog, kScript, 10.0).value();
  EXPECT_EQ(types(step.events), (std::vector<std::string_view>{"spoke", "exercise_started"}));
  EXPECT_EQ(step.state.index, 2u);
  EXPECT_EQ(step.state.phase, Phase::kInExercise);
  EXPECT_EQ(step.state.hold, pose::HoldState{});
  EXPECT_EQ(step.state.status, context::ExerciseStatus::kNotYet);
}

TEST(ApplyCommand, NextFromGreetingStartsFirstExercise) {
  auto step = applyCommand(SessionState{}, ActionCommand::next("Let's start."), kCatalog, kScript, 1.0).value();
  EXPECT_TRUE(step.state.started);
  EXPECT_EQ(step.state.index, 0u);
}

TEST(ApplyCommand, NextAfterLastExerciseEndsRoutine) {
  auto step = applyCommand(inExercise(2), ActionCommand::next("All done."), kCatalog, kScript, 1.0).value();
  EXPECT_EQ(step.state.phase, Phase::kStopped);
  EXPECT_EQ(step.state.stopReason, "routine complete");
}

TEST(ApplyCommand, PointMovesThenSpeaks) {
  auto s = inExercise(0);
  s.objects = {"water bottle"};
  auto step = applyCommand(s, ActionCommand::point("WATER", "Here's water."), kCatalog, kScript, 3.0).value();
  EXPECT_EQ(types(step.events), (std::vector<std::string_view>{"point_started", "point_finished", "spoke"}));
  const auto* started = step.events[0].as<events::PointStarted>();
  ASSERT_TRUE(started);
  EXPECT_EQ(started->object, "WATER_BOTTLE");
  EXPECT_EQ(started->position, kCatalog.byName("water bottle")->position);
  EXPECT_EQ(step.state.metrics.points, 1u);
  EXPECT_EQ(step.state.phase, Phase::kInExercise);
}

TEST(ApplyCommand, PointAtUnknownObjectFails) {
  auto r = applyCommand(inExercise(0), ActionCommand::point("UNICORN", "Look."), kCatalog, kScript, 3.0);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().code, ErrorCode::kUnknownObject);
}

TEST(ApplyCommand, StopEndsSessionAndFurtherCommandsFail) {
  auto step = applyCommand(inExercise(1), ActionCommand::stop("Rest now."), kCatalog, kScript, 5.0).value();
  EXPECT_TRUE(step.state.stopped());
  EXPECT_EQ(step.state.stopReason, "stop requested");
  auto again = applyCommand(step.state, ActionCommand::say("hello"), kCatalog, kScript, 6.0);
  ASSERT_FALSE(again);
  EXPECT_EQ(again.error().code, ErrorCode::kSessionStopped);
}

TEST(ApplyCommand, SayWithPauseCuePauses) {
  auto step = applyCommand(inExercise(0), ActionCommand::say("Let's take a break for a minute."), kCatalog, kScript,
                           2.0)
                  .value();
  EXPECT_EQ(step.state.phase, Phase::kPaused);
  EXPECT_EQ(step.state.resumePhase, Phase::kInExercise);
  auto plain = applyCommand(inExercise(0), ActionCommand::say("Keep going!"), kCatalog, kScript, 2.0).value();
  EXPECT_EQ(plain.state.phase, Phase::kInExercise);
  EXPECT_EQ(types(plain.events), (std::vector<std::string_view>{"spoke"}));
}

// ---------------------------------------------------------------------------
// Pose events

TEST(PoseEvents, SuccessAwaitsConfirmationAndTriggersDecision) {
  auto r = onPoseEvent(inExercise(0), pose::PoseEvent::kSuccess, kScript, 5.0);
  EXPECT_TRUE(r.triggersDecision);
  EXPECT_EQ(r.step.state.phase, Phase::kAwaitingConfirmation);
  EXPECT_EQ(r.step.state.status, context::ExerciseStatus::kSuccess);
  EXPECT_EQ(r.step.state.metrics.exercisesCompleted, 1u);
}

TEST(PoseEvents, CorrectiveRepeatsInstructionWithoutReasoner) {
  auto r = onPoseEvent(inExercise(1), pose::PoseEvent::kCorrective, kScript, 45.0);
  EXPECT_FALSE(r.triggersDecision);
  EXPECT_EQ(types(r.step.events), (std::vector<std::string_view>{"corrective_feedback", "spoke"}));
  EXPECT_EQ(r.step.events[1].as<events::Spoke>()->text,
            "That doesn't look quite right yet. Let's try again: touch your toes for 5 seconds.");
  EXPECT_EQ(r.step.state.phase, Phase::kInExercise);
  EXPECT_EQ(r.step.state.metrics.correctiveResets, 1u);
}

TEST(PoseEvents, IgnoredOutsideExercise) {
  auto s = inExercise(0);
  s.phase = Phase::kPaused;
  auto r = onPoseEvent(s, pose::PoseEvent::kSuccess, kScript, 5.0);
  EXPECT_FALSE(r.triggersDecision);
  EXPECT_EQ(types(r.step.events), (std::vector<std::string_view>{"event_ignored"}));
  EXPECT_EQ(r.step.state.phase, Phase::kPaused);
}

// ---------------------------------------------------------------------------
// Adaptation cues

TEST(Adaptation, FatigueWithWaterBottle) {
  auto s = inExercise(0);
  s.objects = {"water bottle"};
  auto pkg = context::assembleContext({s.objects, {}, {}}, std::vector<context::DialogueTurn>{{context::Speaker::kUser, "I'm tired"}},
                                      context::ExerciseStatus::kNotYet);
  auto a = adaptationHooks(s, pkg, *support::shippedGraph(), kCatalog);
  EXPECT_EQ(a.annotations, std::vector<std::string>{"user may be tired; water available"});
  EXPECT_EQ(collectMentions(pkg, a, *support::shippedGraph()), (std::vector<std::string>{"water bottle", "Fatigue"}));
}

TEST(Adaptation, DiscomfortMentionsPain) {
  context::ContextPackage pkg;
  pkg.transcript = "Ouch, my back hurts";
  auto a = adaptationHooks(inExercise(1), pkg, *support::shippedGraph(), kCatalog);
  EXPECT_EQ(a.annotations, std::vector<std::string>{"possible discomfort reported"});
  EXPECT_EQ(a.mentions, std::vector<std::string>{"Pain"});
}

TEST(Adaptation, NeutralContextHasNoCues) {
  context::ContextPackage pkg;
  pkg.transcript = "I'm ready";
  pkg.fusedEmotion = affect::FusedEmotion{"happy", {}};
  EXPECT_EQ(adaptationHooks(inExercise(0), pkg, *support::shippedGraph(), kCatalog), Adaptation{});
}

TEST(Adaptation, FatigueOnlyOffersRelevantObjects) {
  auto s = inExercise(0);
  s.objects = {"towel", "chair"};
  context::ContextPackage pkg;
  pkg.fusedEmotion = affect::FusedEmotion{"tired", {}};
  auto a = adaptationHooks(s, pkg, *support::shippedGraph(), kCatalog);
  ASSERT_EQ(a.annotations.size(), 1u);
  EXPECT_EQ(a.annotations[0].find("towel"), std::string::npos);
  EXPECT_NE(a.annotations[0].find("chair"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Event log

TEST(EventLog, EveryEventTypeRoundTrips) {
  ReasonerReply unused;
  (void)unused;
  std::vector<events::Body> bodies = {
      events::SessionStarted{"s1", {"ArmRaise", "ToeTouch"}, 42},
      events::UtteranceReceived{"hello"},
      events::ObjectsChanged{{"chair", "towel"}},
      events::EmotionChanged{{{affect::Channel::kVoice, {{"tired", 0.25}}}}, {}},
      events::PoseSegmentStarted{"valid-arms-overhead", 150},
      events::HoldProgress{0, 30, pose::HoldState{1.0, 0.5, false, {0.25, true}, {}}},
      events::ExerciseSuccess{0, "ArmRaise"},
      events::CorrectiveFeedback{1, "ToeTouch"},
      events::Spoke{"hi", "coach"},
      events::DecisionQueued{"utterance"},
      events::DecisionStarted{3, "utterance", true, {"Banana"}, {"user may be tired"}},
      events::KnowledgeRetrieved{3, {{"Banana", kg::Source::kInternal, {{"Banana", "is_a", "Food"}}, std::nullopt},
                                     {"phone", kg::Source::kFallback, {}, "unavailable"}}},
      events::PromptRendered{3, "a", "b", "c", "d", "e", "f00d"},
      events::ReasonerReplied{3, "Output: hi", 4.25},
      events::ReasonerFailed{3, "timeout", "late", 30.0},
      events::ReplyRejected{3, "unrepairable_reply", "nothing"},
      events::CommandVerified{3, ActionCommand::point("TOWEL", "x"), ActionCommand::say("y"),
                              {verify::Verdict::kRewritten, verify::EditClass::kSemanticRewrite, "a", "b", {"e"}}},
      events::DecisionFinished{3, "applied"},
      events::ExerciseStarted{1, "ToeTouch"},
      events::PointStarted{"CHAIR", {0.5, -0.25, 1.0}},
      events::PointFinished{"CHAIR"},
      events::Paused{"take a break"},
      events::Resumed{},
      events::RoutineStopped{"stop requested"},
      events::EventIgnored{"frames", "phase greeting"},
  };
  EXPECT_EQ(bodies.size(), std::variant_size_v<events::Body>);
  std::vector<Event> log;
  for (std::size_t i = 0; i < bodies.size(); ++i) log.push_back({i, 0.5 * static_cast<double>(i), bodies[i]});
  for (const auto& e : log) EXPECT_EQ(eventFromJson(toJson(e)), e) << e.type();
  const auto text = serializeLog(log);
  EXPECT_TRUE(text.starts_with("{\"schema\":\"stretchbot.events/1\"}\n"));
  EXPECT_EQ(parseLog(text), log);
  EXPECT_EQ(foldLog(parseLog(text)), foldLog(log));
}

TEST(EventLog, UnknownTypeIsRejected) {
  EXPECT_THROW(parseLog("{\"schema\":\"stretchbot.events/1\"}\n{\"seq\":0,\"t\":0,\"type\":\"teleport\",\"data\":{}}\n"),
               StretchbotError);
}

TEST(EventLog, AdvanceEqualsFold) {
  SessionState s;
  std::vector<Event> all;
  auto a = advance(s, 0.0, {events::SessionStarted{"x", {"ArmRaise"}, 1}, events::UtteranceReceived{"hi"}});
  all.insert(all.end(), a.events.begin(), a.events.end());
  auto b = applyCommand(a.state, ActionCommand::next("Go."), kCatalog, kScript, 1.0).value();
  all.insert(all.end(), b.events.begin(), b.events.end());
  EXPECT_EQ(foldLog(all), b.state);
  EXPECT_EQ(b.state.nextSeq, all.size());
}

// ---------------------------------------------------------------------------
// Config and scenario files

TEST(Config, ShippedDefaultsMatchBuiltIns) {
  const auto cfg = support::shippedConfig();
  EXPECT_EQ(cfg.pose, pose::PoseParameters{});
  EXPECT_EQ(cfg.script, RoutineScript::defaults());
  EXPECT_EQ(cfg.context.historyCap, 8u);
  EXPECT_EQ(cfg.retrieval.whitelist, kg::RetrievalOptions{}.whitelist);
  EXPECT_EQ(cfg.timeoutSeconds, 30.0);
  EXPECT_EQ(cfg.latency, reasoner::LatencyModel::off());
}

TEST(Config, UnknownKeyNamesTheField) {
  try {
    parseConfig(nlohmann::json::parse(R"({"pose": {"wrist_distance_max": 0.3, "elbow_magic": 1}})"));
    FAIL();
  } catch (const StretchbotError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    EXPECT_NE(std::string(e.what()).find("pose.elbow_magic"), std::string::npos) << e.what();
  }
}

TEST(Config, OverlayKeepsUntouchedValues) {
  auto cfg = parseConfig(nlohmann::json::parse(R"({"reasoner": {"latency": "3-10"}})"));
  EXPECT_EQ(cfg.latency, reasoner::LatencyModel::uniform(3, 10));
  EXPECT_EQ(cfg.pose, pose::PoseParameters{});
}

TEST(Scenario, ShippedScenariosParse) {
  const auto files = support::shippedScenarios();
  EXPECT_GE(files.size(), 6u);
  for (const auto& f : files) EXPECT_NO_THROW(parseScenario(readTextFile(f))) << f;
}

TEST(Scenario, ErrorsNameLineAndField) {
  const std::string header = R"({"schema":"stretchbot.scenario/1","name":"x"})";
  auto expectError = [](const std::string& doc, const std::string& needle) {
    try {
      parseScenario(doc);
      ADD_FAILURE() << "accepted: " << doc;
    } catch (const StretchbotError& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidScenario);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expectError(header + "\n{\"t\":1,\"type\":\"dance\"}", "line 2, field 'type'");
  expectError(header + "\n{\"type\":\"utterance\",\"text\":\"hi\"}", "line 2, field 't'");
  expectError(header + "\n{\"t\":2,\"type\":\"utterance\",\"text\":\"a\"}\n{\"t\":1,\"type\":\"utterance\",\"text\":\"b\"}",
              "line 3, field 't'");
  expectError(header + "\n{\"t\":1,\"type\":\"landmarks\",\"generator\":\"moonwalk\",\"duration\":2}",
              "field 'generator'");
  expectError(header + "\n{\"t\":1,\"type\":\"mock_reply\",\"text\":\"x\",\"error\":\"gremlins\"}", "field 'error'");
  expectError("{\"t\":0,\"type\":\"utterance\"}", "line 1, field 'schema'");
  expectError(header + "\nnot json", "line 2");
}

// ---------------------------------------------------------------------------
// Reasoner transport

TEST(Reasoner, MockRepliesInOrderThenExhausts) {
  reasoner::MockReasoner mock({{"Output: one", 0.0, {}}, {"Output: two", 0.0, {}}});
  reasoner::ManualClock clock;
  EXPECT_EQ(mock.complete({}, clock).value(), "Output: one");
  EXPECT_EQ(mock.complete({}, clock).value(), "Output: two");
  EXPECT_EQ(mock.complete({}, clock).error().code, ErrorCode::kScriptExhausted);
  EXPECT_EQ(mock.turnsUsed(), 2u);
}

TEST(Reasoner, FixedInjectedLatency) {
  auto inner = std::make_shared<reasoner::MockReasoner>(std::vector<reasoner::MockTurn>{{"Output: hi", 0.0, {}}});
  reasoner::LatencyInjectingClient client(inner, reasoner::LatencyModel::fixed(4.2), 1);
  reasoner::ManualClock clock;
  auto attempt = reasoner::requestDecision({"sys", "user", 30.0}, client, clock);
  ASSERT_TRUE(attempt.reply);
  EXPECT_NEAR(attempt.latency, 4.2, 1e-12);
  EXPECT_EQ(attempt.reply->rawText, "Output: hi");
}

TEST(Reasoner, FailureModesAreDistinct) {
  reasoner::MockReasoner mock({{"late", 45.0, {}}, {"", 0.0, ErrorCode::kNetwork}, {"   ", 0.0, {}}});
  reasoner::ManualClock clock;
  auto timeout = reasoner::requestDecision({"s", "u", 30.0}, mock, clock);
  EXPECT_EQ(timeout.reply.error().code, ErrorCode::kTimeout);
  EXPECT_NEAR(timeout.latency, 30.0, 1e-12);
  EXPECT_EQ(reasoner::requestDecision({"s", "u", 30.0}, mock, clock).reply.error().code, ErrorCode::kNetwork);
  EXPECT_EQ(reasoner::requestDecision({"s", "u", 30.0}, mock, clock).reply.error().code, ErrorCode::kEmptyCompletion);
}

TEST(Reasoner, InjectedLatencyBeyondTimeoutTimesOut) {
  auto inner = std::make_shared<reasoner::MockReasoner>(std::vector<reasoner::MockTurn>{{"Output: hi", 0.0, {}}});
  reasoner::LatencyInjectingClient client(inner, reasoner::LatencyModel::fixed(31.0), 1);
  reasoner::ManualClock clock;
  EXPECT_EQ(reasoner::requestDecision({"s", "u", 30.0}, client, clock).reply.error().code, ErrorCode::kTimeout);
}

TEST(Reasoner, LatencyModelParsing) {
  EXPECT_EQ(reasoner::LatencyModel::parse("off"), reasoner::LatencyModel::off());
  EXPECT_EQ(reasoner::LatencyModel::parse("4.2"), reasoner::LatencyModel::fixed(4.2));
  EXPECT_EQ(reasoner::LatencyModel::parse("3-10"), reasoner::LatencyModel::uniform(3, 10));
  EXPECT_EQ(reasoner::LatencyModel::parse("low-budget"), reasoner::LatencyModel::uniform(3, 10));
  EXPECT_FALSE(reasoner::LatencyModel::parse("10-3"));
  EXPECT_FALSE(reasoner::LatencyModel::parse("soon"));
}

TEST(Reasoner, UniformDrawsStayInBandAndRepeatPerSeed) {
  const auto model = reasoner::LatencyModel::uniform(3, 10);
  std::mt19937_64 a(9), b(9);
  double lo = 100, hi = 0;
  for (int i = 0; i < 5000; ++i) {
    const double x = model.sample(a);
    ASSERT_GE(x, 3.0);
    ASSERT_LE(x, 10.0);
    ASSERT_EQ(x, model.sample(b));
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  EXPECT_LT(lo, 3.1);
  EXPECT_GT(hi, 9.9);
}

TEST(Reasoner, MockScriptFormats) {
  auto lines = reasoner::MockReasoner::fromJson("# demo\n{\"reply\":\"Output: a\",\"delay\":1.5}\n{\"error\":\"timeout\"}\n");
  auto array = reasoner::MockReasoner::fromJson(R"([{"reply":"Output: a","delay":1.5},{"error":"timeout"}])");
  reasoner::ManualClock c1, c2;
  EXPECT_EQ(lines.complete({}, c1).value(), array.complete({}, c2).value());
  EXPECT_EQ(c1.now(), 1.5);
  EXPECT_EQ(lines.complete({}, c1).error().code, ErrorCode::kTimeout);
  EXPECT_NO_THROW(reasoner::MockReasoner::fromJson(readTextFile(dataDir() / "mock" / "demo_script.jsonl")));
}
