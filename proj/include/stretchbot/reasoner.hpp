#pragma once

// Reasoner transport: clocks, the client interface, the scripted mock, and
// latency injection. Parsing and verification live in commands.hpp and
// verifier.hpp.

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "stretchbot/commands.hpp"
#include "stretchbot/error.hpp"
#include "stretchbot/text.hpp"

namespace stretchbot::reasoner {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;  // seconds
  virtual void sleepFor(double seconds) = 0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}
  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }
  void sleepFor(double seconds) override {
    if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

/// Simulated time: sleeping advances the clock instantly.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(double start = 0.0) : now_(start) {}
  double now() const override { return now_; }
  void sleepFor(double seconds) override {
    if (seconds > 0) now_ += seconds;
  }
  void set(double t) { now_ = t; }

 private:
  double now_;
};

struct CompletionRequest {
  std::string systemPrompt;
  std::string userMessage;
  double timeoutSeconds = 30.0;
};

class ReasonerClient {
 public:
  virtual ~ReasonerClient() = default;
  /// Raw completion text. Network failure, timeout and empty completion are
  /// reported as distinct error codes.
  virtual Expected<std::string> complete(const CompletionRequest& request, Clock& clock) = 0;
};

struct MockTurn {
  std::string reply;
  double delaySeconds = 0.0;
  std::optional<ErrorCode> failure;  // simulate a transport error instead of replying
};

/// Replies from a script indexed by turn; each call consumes one turn.
class MockReasoner final : public ReasonerClient {
 public:
  MockReasoner() = default;
  explicit MockReasoner(std::vector<MockTurn> turns) : turns_(std::move(turns)) {}
  MockReasoner(MockReasoner&& other) noexcept
      : turns_(std::move(other.turns_)), next_(other.next_), requests_(std::move(other.requests_)) {}

  /// JSON array, or line-delimited objects: {"reply": "...", "delay": 1.5, "error": "network"}.
  static MockReasoner fromJson(std::string_view document) {
    std::vector<MockTurn> turns;
    auto parse_turn = [](const nlohmann::json& j) {
      MockTurn t;
      t.reply = j.value("reply", "");
      t.delaySeconds = j.value("delay", 0.0);
      if (j.contains("error")) {
        const auto e = j["error"].get<std::string>();
        t.failure = e == "timeout" ? ErrorCode::kTimeout : e == "empty" ? ErrorCode::kEmptyCompletion
                                                                         : ErrorCode::kNetwork;
      }
      return t;
    };
    const auto trimmed = text::trim(document);
    if (trimmed.starts_with("[")) {
      for (const auto& j : nlohmann::json::parse(trimmed)) turns.push_back(parse_turn(j));
    } else {
      for (auto line : text::split_lines(document)) {
        line = text::trim(line);
        if (line.empty() || line.starts_with("#")) continue;
        turns.push_back(parse_turn(nlohmann::json::parse(line)));
      }
    }
    return MockReasoner(std::move(turns));
  }

  void push(MockTurn turn) {
    std::lock_guard lock(mutex_);
    turns_.push_back(std::move(turn));
  }

  Expected<std::string> complete(const CompletionRequest& request, Clock& clock) override {
    MockTurn turn;
    {
      std::lock_guard lock(mutex_);
      if (next_ >= turns_.size()) return fail(ErrorCode::kScriptExhausted, "turn " + std::to_string(next_));
      turn = turns_[next_++];
      requests_.push_back(request);
    }
    if (turn.delaySeconds > request.timeoutSeconds) {
      clock.sleepFor(request.timeoutSeconds);
      return fail(ErrorCode::kTimeout, "no reply within " + std::to_string(request.timeoutSeconds) + " s");
    }
    clock.sleepFor(turn.delaySeconds);
    if (turn.failure) return fail(*turn.failure, "scripted failure");
    return turn.reply;
  }

  std::size_t turnsUsed() const {
    std::lock_guard lock(mutex_);
    return next_;
  }
  std::vector<CompletionRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<MockTurn> turns_;
  std::size_t next_ = 0;
  std::vector<CompletionRequest> requests_;
};

struct LatencyModel {
  enum class Kind { kOff, kFixed, kUniform };
  Kind kind = Kind::kOff;
  double low = 0.0;
  double high = 0.0;

  static LatencyModel off() { return {}; }
  static LatencyModel fixed(double s) { return {Kind::kFixed, s, s}; }
  static LatencyModel uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  /// The 3-10 s band seen with API-served models on modest hardware.
  static LatencyModel lowBudgetPreset() { return uniform(3.0, 10.0); }

  /// "off", "4.2", "3-10" or "low-budget".
  static std::optional<LatencyModel> parse(std::string_view spec) {
    spec = text::trim(spec);
    if (spec.empty() || spec == "off") return off();
    if (spec == "low-budget" || spec == "preset") return lowBudgetPreset();
    try {
      auto dash = spec.find('-');
      if (dash == std::string_view::npos) {
        auto v = std::stod(std::string(spec));
        return v >= 0 ? std::optional(fixed(v)) : std::nullopt;
      }
      auto lo = std::stod(std::string(spec.substr(0, dash)));
      auto hi = std::stod(std::string(spec.substr(dash + 1)));
      if (lo < 0 || hi < lo) return std::nullopt;
      return uniform(lo, hi);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  std::string describe() const {
    switch (kind) {
      case Kind::kOff: return "off";
      case Kind::kFixed: return std::to_string(low);
      case Kind::kUniform: return std::to_string(low) + "-" + std::to_string(high);
    }
    return "off";
  }

  /// Portable draw: 53 high bits of a 64-bit Mersenne Twister word.
  double sample(std::mt19937_64& rng) const {
    switch (kind) {
      case Kind::kOff: return 0.0;
      case Kind::kFixed: return low;
      case Kind::kUniform: {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return low + (high - low) * u;
      }
    }
    return 0.0;
  }
  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

/// Adds an injected delay in front of another client.
class LatencyInjectingClient final : public ReasonerClient {
 public:
  LatencyInjectingClient(std::shared_ptr<ReasonerClient> inner, LatencyModel model, std::uint64_t seed)
      : inner_(std::move(inner)), model_(model), rng_(seed) {}

  Expected<std::string> complete(const CompletionRequest& request, Clock& clock) override {
    double extra;
    {
      std::lock_guard lock(mutex_);
      extra = model_.sample(rng_);
    }
    if (extra >= request.timeoutSeconds) {
      clock.sleepFor(request.timeoutSeconds);
      return fail(ErrorCode::kTimeout, "injected latency exceeded timeout");
    }
    clock.sleepFor(extra);
    CompletionRequest rest = request;
    rest.timeoutSeconds -= extra;
    return inner_->complete(rest, clock);
  }

 private:
  std::shared_ptr<ReasonerClient> inner_;
  LatencyModel model_;
  std::mutex mutex_;
  std::mt19937_64 rng_;
};

struct DecisionAttempt {
  Expected<ReasonerReply> reply;
  double latency = 0.0;
};

/// One request; the reply comes back unparsed with its measured latency.
inline DecisionAttempt requestDecision(const CompletionRequest& request, ReasonerClient& client, Clock& clock) {
  const double start = clock.now();
  auto raw = client.complete(request, clock);
  const double latency = std::max(0.0, clock.now() - start);
  if (!raw) return {Unexpected{raw.error()}, latency};
  if (text::trim(*raw).empty()) return {fail(ErrorCode::kEmptyCompletion), latency};
  ReasonerReply reply;
  reply.rawText = std::move(*raw);
  reply.latency = latency;
  return {std::move(reply), latency};
}

}  // namespace stretchbot::reasoner
