#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>

namespace stretchbot {

enum class ErrorCode {
  kInsufficientLandmarks,
  kDegenerateTorso,
  kUnknownExercise,
  kEmptyPredictions,
  kDuplicateChannel,
  kNoReliableChannel,
  kInvalidScore,
  kMalformedEntity,
  kDuplicateEntity,
  kUnknownRoutinePosition,
  kMissingOutput,
  kMalformedCommand,
  kUnrepairableReply,
  kNetwork,
  kTimeout,
  kEmptyCompletion,
  kScriptExhausted,
  kUnknownObject,
  kInvalidScenario,
  kInvalidConfig,
  kSessionStopped,
  kFallbackUnavailable,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInsufficientLandmarks: return "insufficient landmarks";
    case ErrorCode::kDegenerateTorso: return "degenerate torso";
    case ErrorCode::kUnknownExercise: return "unknown exercise";
    case ErrorCode::kEmptyPredictions: return "empty prediction list";
    case ErrorCode::kDuplicateChannel: return "duplicate channel";
    case ErrorCode::kNoReliableChannel: return "no reliable channel";
    case ErrorCode::kInvalidScore: return "invalid score";
    case ErrorCode::kMalformedEntity: return "malformed entity";
    case ErrorCode::kDuplicateEntity: return "duplicate entity";
    case ErrorCode::kUnknownRoutinePosition: return "unknown routine position";
    case ErrorCode::kMissingOutput: return "missing output marker";
    case ErrorCode::kMalformedCommand: return "malformed command";
    case ErrorCode::kUnrepairableReply: return "unrepairable reply";
    case ErrorCode::kNetwork: return "network failure";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kEmptyCompletion: return "empty completion";
    case ErrorCode::kScriptExhausted: return "mock script exhausted";
    case ErrorCode::kUnknownObject: return "unknown object";
    case ErrorCode::kInvalidScenario: return "invalid scenario";
    case ErrorCode::kInvalidConfig: return "invalid config";
    case ErrorCode::kSessionStopped: return "session stopped";
    case ErrorCode::kFallbackUnavailable: return "fallback unavailable";
  }
  return "unknown";
}

struct Error {
  ErrorCode code;
  std::string message;

  std::string describe() const {
    std::string out(to_string(code));
    if (!message.empty()) {
      out += ": ";
      out += message;
    }
    return out;
  }

  friend bool operator==(const Error&, const Error&) = default;
};

/// Thrown by loaders (KG, config, scenario) where failure aborts setup.
class StretchbotError : public std::runtime_error {
 public:
  explicit StretchbotError(Error error)
      : std::runtime_error(error.describe()), error_(std::move(error)) {}
  StretchbotError(ErrorCode code, std::string message)
      : StretchbotError(Error{code, std::move(message)}) {}

  ErrorCode code() const noexcept { return error_.code; }
  const Error& error() const noexcept { return error_; }

 private:
  Error error_;
};

struct Unexpected {
  Error error;
};

inline Unexpected fail(ErrorCode code, std::string message = {}) {
  return Unexpected{Error{code, std::move(message)}};
}

/// Value-or-error for operations whose failures are part of normal flow.
template <typename T>
class Expected {
 public:
  using value_type = T;

  Expected(const T& value) : storage_(value) {}
  Expected(T&& value) : storage_(std::move(value)) {}
  Expected(Unexpected unexpected) : storage_(std::move(unexpected.error)) {}

  bool has_value() const noexcept { return std::holds_alternative<T>(storage_); }
  explicit operator bool() const noexcept { return has_value(); }

  T& value() & {
    if (!has_value()) throw StretchbotError(error());
    return std::get<T>(storage_);
  }
  const T& value() const& {
    if (!has_value()) throw StretchbotError(error());
    return std::get<T>(storage_);
  }
  T&& value() && {
    if (!has_value()) throw StretchbotError(error());
    return std::get<T>(std::move(storage_));
  }

  T& operator*() & { return std::get<T>(storage_); }
  const T& operator*() const& { return std::get<T>(storage_); }
  T* operator->() { return &std::get<T>(storage_); }
  const T* operator->() const { return &std::get<T>(storage_); }

  const Error& error() const& { return std::get<Error>(storage_); }

  template <typename U>
  T value_or(U&& fallback) const& {
    return has_value() ? std::get<T>(storage_) : static_cast<T>(std::forward<U>(fallback));
  }

 private:
  std::variant<T, Error> storage_;
};

}  // namespace stretchbot
