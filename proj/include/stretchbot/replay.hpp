#pragma once

// Deterministic replay: a discrete-event simulation over the scenario
// timeline with a simulated clock. A reasoner request dispatched at time
// t0 completes at t0 + latency; the completion is handled before any
// timeline item stamped at or after that instant.

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stretchbot/config.hpp"
#include "stretchbot/digest.hpp"
#include "stretchbot/generators.hpp"
#include "stretchbot/reasoner.hpp"
#include "stretchbot/scenario.hpp"
#include "stretchbot/session.hpp"

namespace stretchbot {

struct ReplayResult {
  std::string scenario;
  SessionState state;
  std::vector<Event> log;
  std::string serializedLog;
  std::string digest;  // SHA-256 of serializedLog
  SessionMetrics metrics() const { return state.metrics; }
};

struct ReplayOptions {
  SessionConfig config;  // scenario overlays apply on top
  std::shared_ptr<const kg::KnowledgeGraph> graph;
  std::shared_ptr<kg::FallbackClient> fallback;
  /// Replaces the scenario's scripted replies when set.
  std::shared_ptr<reasoner::ReasonerClient> client;
};

namespace detail {

struct Work {
  double t = 0.0;
  std::size_t order = 0;  // timeline index
  std::size_t sub = 0;    // frame index within a landmark segment
  const TimelineItem* item = nullptr;
  std::optional<pose::LandmarkFrame> frame;
};

/// Per-segment generator seed derived from the scenario seed and the item index.
inline std::uint64_t segment_seed(std::uint64_t seed, std::size_t order) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(order) + 1));
}

}  // namespace detail

inline ReplayResult replayScenario(const Scenario& scenario, const ReplayOptions& options) {
  SessionConfig config =
      scenario.config.is_null() ? options.config : parseConfig(scenario.config, dataDir(), options.config);

  std::shared_ptr<reasoner::ReasonerClient> client = options.client;
  if (!client) client = std::make_shared<reasoner::MockReasoner>(scenario.mockTurns());
  if (config.latency.kind != reasoner::LatencyModel::Kind::kOff)
    client = std::make_shared<reasoner::LatencyInjectingClient>(client, config.latency, scenario.seed);

  // Expand landmark segments into timed frames, then merge everything.
  std::vector<detail::Work> work;
  const double period = config.pose.framePeriod;
  for (std::size_t i = 0; i < scenario.timeline.size(); ++i) {
    const auto& item = scenario.timeline[i];
    if (item.kind == TimelineItem::Kind::kMockReply) continue;
    if (item.kind != TimelineItem::Kind::kLandmarks) {
      work.push_back({item.t, i, 0, &item, std::nullopt});
      continue;
    }
    std::vector<pose::LandmarkFrame> frames;
    if (item.generator) {
      frames = gen::generateFrames(*item.generator, gen::frameCount(item.duration, period), item.t, period,
                                   detail::segment_seed(scenario.seed, i));
    } else {
      for (auto f : item.frames) {
        f.timestamp += item.t;
        frames.push_back(f);
      }
    }
    for (std::size_t k = 0; k < frames.size(); ++k) work.push_back({frames[k].timestamp, i, k, &item, frames[k]});
  }
  std::stable_sort(work.begin(), work.end(), [](const auto& a, const auto& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.order != b.order) return a.order < b.order;
    return a.sub < b.sub;
  });

  SessionCore core(scenario.name, config, options.graph, options.fallback, scenario.seed, 0.0);

  struct InFlight {
    double completeAt;
    reasoner::DecisionAttempt attempt;
  };
  std::optional<InFlight> inflight;

  auto dispatch = [&](const std::optional<PendingDecision>& pending, double t) {
    if (!pending) return;
    reasoner::ManualClock clock(t);
    auto attempt = reasoner::requestDecision(pending->request, *client, clock);
    inflight = InFlight{t + attempt.latency, std::move(attempt)};
  };
  auto settleUntil = [&](double t, bool inclusive) {
    while (inflight && (inclusive ? inflight->completeAt <= t : true)) {
      auto done = std::move(*inflight);
      inflight.reset();
      dispatch(core.completeDecision(done.attempt, done.completeAt), done.completeAt);
    }
  };
  auto handle = [&](const Expected<std::optional<PendingDecision>>& r, double t) {
    if (r) dispatch(*r, t);
  };

  for (const auto& w : work) {
    settleUntil(w.t, true);
    if (core.stopped()) break;
    const auto& item = *w.item;
    switch (item.kind) {
      case TimelineItem::Kind::kUtterance: handle(core.utterance(item.text, w.t), w.t); break;
      case TimelineItem::Kind::kObjects: handle(core.objects(item.objects, w.t), w.t); break;
      case TimelineItem::Kind::kEmotion: handle(core.emotion(item.channels, item.weights, w.t), w.t); break;
      case TimelineItem::Kind::kLandmarks:
        if (w.sub == 0) {
          const std::string source = item.generator ? std::string(to_string(*item.generator)) : "inline";
          const auto count = item.generator ? gen::frameCount(item.duration, period) : item.frames.size();
          handle(core.segmentStarted(source, count, w.t), w.t);
        }
        handle(core.frame(*w.frame, w.t), w.t);
        break;
      case TimelineItem::Kind::kMockReply: break;
    }
  }
  if (!core.stopped() && !work.empty()) core.flushHold(std::max(work.back().t, core.state().lastTime));
  settleUntil(0.0, false);

  ReplayResult result;
  result.scenario = scenario.name;
  result.state = core.state();
  result.log = core.log();
  result.serializedLog = serializeLog(result.log);
  result.digest = sha256Hex(result.serializedLog);
  return result;
}

}  // namespace stretchbot
