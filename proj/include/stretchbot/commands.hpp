#pragma once

// Reasoner reply format ("Reasoning:" block + "Output:" line) and the
// action-prefix grammar carried by the output line.

#include <cctype>
#include <string>
#include <string_view>

#include "stretchbot/error.hpp"
#include "stretchbot/text.hpp"

namespace stretchbot {

inline constexpr std::string_view kNextExercisePrefix = "NEXT_EXERCISE:";
inline constexpr std::string_view kPointPrefix = "POINT_";
inline constexpr std::string_view kStopPrefix = "STOP_ROUTINE";
inline constexpr std::string_view kReasoningMarker = "Reasoning:";
inline constexpr std::string_view kOutputMarker = "Output:";

struct ReasonerReply {
  std::string rawText;
  std::string reasoning;
  std::string output;
  double latency = 0.0;
  int outputMarkers = 0;
  friend bool operator==(const ReasonerReply&, const ReasonerReply&) = default;
};

/// Keeps the final "Output:" line (plus continuation lines up to a blank
/// line) and the final "Reasoning:" block preceding it.
inline Expected<ReasonerReply> parseReply(std::string_view raw) {
  const auto lines = text::split_lines(raw);
  std::ptrdiff_t last_output = -1;
  std::ptrdiff_t last_reasoning = -1;
  int outputs = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.starts_with(kOutputMarker)) {
      last_output = static_cast<std::ptrdiff_t>(i);
      ++outputs;
    }
  }
  if (last_output < 0) return fail(ErrorCode::kMissingOutput);
  for (std::ptrdiff_t i = last_output; i >= 0; --i) {
    if (text::trim(lines[static_cast<std::size_t>(i)]).starts_with(kReasoningMarker)) {
      last_reasoning = i;
      break;
    }
  }

  ReasonerReply reply;
  reply.rawText = std::string(raw);
  reply.outputMarkers = outputs;

  std::string output(text::trim(lines[static_cast<std::size_t>(last_output)]).substr(kOutputMarker.size()));
  for (auto i = static_cast<std::size_t>(last_output) + 1; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.starts_with(kReasoningMarker)) break;
    output += ' ';
    output += line;
  }
  reply.output = text::collapse_whitespace(output);
  if (reply.output.empty()) return fail(ErrorCode::kMissingOutput, "empty output line");

  if (last_reasoning >= 0) {
    std::string reasoning(text::trim(lines[static_cast<std::size_t>(last_reasoning)]).substr(kReasoningMarker.size()));
    for (auto i = static_cast<std::size_t>(last_reasoning) + 1; i < static_cast<std::size_t>(last_output); ++i) {
      reasoning += '\n';
      reasoning += lines[i];
    }
    reply.reasoning = std::string(text::trim(reasoning));
  }
  return reply;
}

struct ActionCommand {
  enum class Kind { kNextExercise, kPoint, kStopRoutine, kSay };

  Kind kind = Kind::kSay;
  std::string object;  // POINT_ target token, uppercase
  std::string utterance;

  static ActionCommand next(std::string utterance) { return {Kind::kNextExercise, {}, std::move(utterance)}; }
  static ActionCommand point(std::string object, std::string utterance) {
    return {Kind::kPoint, std::move(object), std::move(utterance)};
  }
  static ActionCommand stop(std::string utterance) { return {Kind::kStopRoutine, {}, std::move(utterance)}; }
  static ActionCommand say(std::string utterance) { return {Kind::kSay, {}, std::move(utterance)}; }

  friend bool operator==(const ActionCommand&, const ActionCommand&) = default;
};

constexpr std::string_view to_string(ActionCommand::Kind k) {
  switch (k) {
    case ActionCommand::Kind::kNextExercise: return "next_exercise";
    case ActionCommand::Kind::kPoint: return "point";
    case ActionCommand::Kind::kStopRoutine: return "stop_routine";
    case ActionCommand::Kind::kSay: return "say";
  }
  return "?";
}

namespace detail {

inline bool is_token_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

/// Drops separators models put between a prefix and the sentence.
inline std::string_view strip_separators(std::string_view s) {
  while (true) {
    s = text::trim(s);
    if (s.starts_with(":") || s.starts_with(",") || s.starts_with("-")) {
      s.remove_prefix(1);
    } else if (s.starts_with("—") || s.starts_with("–")) {
      s.remove_prefix(3);
    } else {
      return s;
    }
  }
}

}  // namespace detail

/// Leading-prefix match: NEXT_EXERCISE:, POINT_<NAME>, STOP_ROUTINE, else Say.
inline Expected<ActionCommand> extractCommand(std::string_view output) {
  const auto line = text::trim(output);
  if (line.empty()) return fail(ErrorCode::kMalformedCommand, "empty output");

  if (line.starts_with(kNextExercisePrefix))
    return ActionCommand::next(std::string(text::trim(line.substr(kNextExercisePrefix.size()))));

  if (line.starts_with(kStopPrefix))
    return ActionCommand::stop(std::string(detail::strip_separators(line.substr(kStopPrefix.size()))));

  if (line.starts_with(kPointPrefix)) {
    auto rest = line.substr(kPointPrefix.size());
    std::size_t n = 0;
    while (n < rest.size() && detail::is_token_char(rest[n])) ++n;
    if (n == 0) return fail(ErrorCode::kMalformedCommand, "POINT_ without object name");
    return ActionCommand::point(std::string(rest.substr(0, n)),
                                std::string(detail::strip_separators(rest.substr(n))));
  }
  return ActionCommand::say(std::string(line));
}

/// Canonical output line; extractCommand(renderCommand(c)) == c for
/// well-formed commands.
inline std::string renderCommand(const ActionCommand& cmd) {
  auto with = [&](std::string head) {
    if (!cmd.utterance.empty()) {
      head += ' ';
      head += cmd.utterance;
    }
    return head;
  };
  switch (cmd.kind) {
    case ActionCommand::Kind::kNextExercise: return with(std::string(kNextExercisePrefix));
    case ActionCommand::Kind::kPoint: return with(std::string(kPointPrefix) + cmd.object);
    case ActionCommand::Kind::kStopRoutine: return with(std::string(kStopPrefix));
    case ActionCommand::Kind::kSay: return cmd.utterance;
  }
  return cmd.utterance;
}

}  // namespace stretchbot
