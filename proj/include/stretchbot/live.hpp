#pragma once

// Interactive sessions on the wall clock. One actor thread owns the
// SessionCore; every input, pose frame and reasoner completion is a message
// on its queue. Reasoner requests run on a worker thread, landmark segments
// are fed by a cancellable feeder thread.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "stretchbot/generators.hpp"
#include "stretchbot/reasoner.hpp"
#include "stretchbot/session.hpp"

namespace stretchbot {

/// Append-only feed of serialized events; readers always start at sequence 0.
class EventFeed {
 public:
  void push(const Event& e) {
    {
      std::lock_guard lock(mutex_);
      records_.push_back(toJson(e).dump());
      types_.emplace_back(e.type());
    }
    cv_.notify_all();
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  struct Batch {
    std::size_t first = 0;
    std::vector<std::string> records;
    std::vector<std::string> types;
    bool closed = false;  // no records will follow this batch
  };

  /// Records from index `from`, waiting up to `timeout` if none are available yet.
  Batch waitFrom(std::size_t from, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return records_.size() > from || closed_; });
    Batch b;
    b.first = from;
    for (std::size_t i = from; i < records_.size(); ++i) {
      b.records.push_back(records_[i]);
      b.types.push_back(types_[i]);
    }
    b.closed = closed_;
    return b;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::string> records_;
  std::vector<std::string> types_;
  bool closed_ = false;
};

struct LiveOptions {
  SessionConfig config;
  std::shared_ptr<const kg::KnowledgeGraph> graph;
  std::shared_ptr<kg::FallbackClient> fallback;
  std::shared_ptr<reasoner::ReasonerClient> client;
  std::uint64_t seed = 0;
  /// Feed landmark segments at the frame rate; otherwise as fast as possible.
  bool realtimeFrames = true;
};

class LiveSession {
 public:
  LiveSession(std::string id, LiveOptions options)
      : options_(std::move(options)), clock_(std::make_shared<reasoner::SteadyClock>()) {
    client_ = options_.client;
    if (client_ && options_.config.latency.kind != reasoner::LatencyModel::Kind::kOff)
      client_ = std::make_shared<reasoner::LatencyInjectingClient>(client_, options_.config.latency, options_.seed);
    core_ = std::make_unique<SessionCore>(std::move(id), options_.config, options_.graph, options_.fallback,
                                          options_.seed, 0.0, [this](const Event& e) { feed_.push(e); });
    actor_ = std::jthread([this](std::stop_token st) { run(st); });
  }

  ~LiveSession() {
    feeder_.request_stop();
    if (feeder_.joinable()) feeder_.join();
    actor_.request_stop();
    cv_.notify_all();
    if (actor_.joinable()) actor_.join();
    if (worker_.joinable()) worker_.join();
    feed_.close();
  }

  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  using Ack = Expected<bool>;  // true when a decision cycle started

  Ack utterance(std::string text) {
    return call([this, text = std::move(text)]() mutable { return route(core_->utterance(std::move(text), now())); });
  }
  Ack objects(std::vector<std::string> detected) {
    return call([this, d = std::move(detected)]() mutable { return route(core_->objects(std::move(d), now())); });
  }
  Ack emotion(std::vector<affect::ChannelPrediction> channels, std::optional<affect::ReliabilityWeights> weights) {
    return call([this, c = std::move(channels), weights]() mutable {
      return route(core_->emotion(std::move(c), weights, now()));
    });
  }

  /// Starts feeding a synthetic landmark segment, replacing any running one.
  Ack landmarks(gen::Generator generator, double duration) {
    const auto period = options_.config.pose.framePeriod;
    const auto count = gen::frameCount(duration, period);
    auto ack = call([this, generator, count]() {
      return route(core_->segmentStarted(std::string(to_string(generator)), count, now()));
    });
    if (!ack) return ack;
    std::lock_guard lock(feederMutex_);
    feeder_.request_stop();
    if (feeder_.joinable()) feeder_.join();
    const auto seed = options_.seed ^ (0x9E3779B97F4A7C15ULL * ++segments_);
    feeder_ = std::jthread([this, generator, count, period, seed](std::stop_token st) {
      auto frames = gen::generateFrames(generator, count, 0.0, period, seed);
      auto next = std::chrono::steady_clock::now();
      for (const auto& f : frames) {
        if (st.stop_requested()) return;
        if (options_.realtimeFrames) {
          next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(period));
          std::this_thread::sleep_until(next);
        }
        post([this, f] {
          auto r = core_->frame(f, now());
          if (r && *r) dispatch(std::move(**r));
        });
        if (stopped_.load()) return;
      }
    });
    return ack;
  }

  SessionState snapshot() {
    return callValue([this] {
      core_->flushHold(now());
      return core_->state();
    });
  }
  std::vector<Event> log() {
    return callValue([this] {
      core_->flushHold(now());
      return core_->log();
    });
  }

  /// Blocks until the reasoner is idle and no input is queued, or timeout.
  bool waitIdle(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      if (callValue([this] { return !core_->decisionInFlight(); }) && !busy_.load()) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
  }

  EventFeed& feed() { return feed_; }
  bool stopped() const { return stopped_.load(); }

 private:
  double now() const { return clock_->now(); }

  void post(std::function<void()> fn) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(fn));
    }
    cv_.notify_one();
  }

  template <typename Fn>
  auto callValue(Fn fn) -> decltype(fn()) {
    using R = decltype(fn());
    auto promise = std::make_shared<std::promise<R>>();
    auto future = promise->get_future();
    post([promise, fn = std::move(fn)]() mutable {
      try {
        promise->set_value(fn());
      } catch (...) {
        promise->set_exception(std::current_exception());
      }
    });
    return future.get();
  }

  template <typename Fn>
  Ack call(Fn fn) {
    return callValue(std::move(fn));
  }

  Ack route(const Expected<std::optional<PendingDecision>>& r) {
    if (!r) return Unexpected{r.error()};
    if (*r) {
      dispatch(std::move(**r));
      return true;
    }
    return false;
  }

  /// Runs the request off the actor thread and posts the completion back.
  void dispatch(PendingDecision pending) {
    if (worker_.joinable()) worker_.join();
    busy_ = true;
    worker_ = std::jthread([this, pending = std::move(pending)] {
      reasoner::DecisionAttempt attempt{fail(ErrorCode::kNetwork, "no reasoner configured"), 0.0};
      if (client_) {
        reasoner::SteadyClock local;
        attempt = reasoner::requestDecision(pending.request, *client_, local);
      }
      post([this, attempt = std::move(attempt)] {
        auto next = core_->completeDecision(attempt, now());
        busy_ = false;
        if (next) dispatch(std::move(*next));
      });
    });
  }

  void run(std::stop_token st) {
    while (true) {
      std::function<void()> task;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return !queue_.empty() || st.stop_requested(); });
        if (queue_.empty()) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
      if (core_->stopped() && !stopped_.exchange(true)) feed_.close();
    }
  }

  LiveOptions options_;
  std::shared_ptr<reasoner::SteadyClock> clock_;
  std::shared_ptr<reasoner::ReasonerClient> client_;
  EventFeed feed_;
  std::unique_ptr<SessionCore> core_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  std::atomic<bool> stopped_{false};
  std::atomic<bool> busy_{false};

  std::mutex feederMutex_;
  std::jthread feeder_;
  std::uint64_t segments_ = 0;
  std::jthread worker_;
  std::jthread actor_;  // declared last: started after everything else exists
};

}  // namespace stretchbot
