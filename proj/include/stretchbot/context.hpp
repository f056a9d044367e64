#pragma once

// Per-turn context package and the system-prompt renderer. The template is
// the versioned asset data/prompts/system_prompt_v1.txt, embedded verbatim.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stretchbot/affect.hpp"
#include "stretchbot/error.hpp"
#include "stretchbot/knowledge.hpp"
#include "stretchbot/routine_script.hpp"
#include "stretchbot/text.hpp"

namespace stretchbot::context {

inline constexpr std::string_view kPromptTemplateVersion = "system_prompt_v1";

inline constexpr std::string_view kDefaultPromptTemplate = R"PROMPT(You are StretchBot, a friendly and empathetic robot coach guiding a human through a safe and supportive morning stretching routine and normal conversations.

Your stretching plan is:
Stretch your arms above your head for 5 seconds
Touch your toes for 5 seconds
lean left and right for 5 seconds each

Current exercise: {current_exercise}
Next exercise: {next_exercise}

Context:
{context_description}
{history_str}

Relevant commonsense knowledge:
{formatted_kg}

Your instructions:
1. Analyze the user's current state based on the context and recent dialogue.
2. If the user feels fine, gently propose moving on to the next exercise: {next_exercise}, with clear instructions.
3. If the user seems tired, tense, or has previously expressed discomfort, suggest help (e.g., break, water, encouragement), but do NOT repeat offers they already refused.
4. Always prioritize the user's most recent response.
5. Do not offer the same help more than once unless the user expresses a new need.
6. Speak with short, warm, and simple sentences. Use friendly language. Congratulate or encourage when appropriate.
7. Ask a caring question if you think the user may be struggling or needs support.
8. If the user is asking a question, always answer it with something related to that question, even if it is not related to the current exercise.
9. If you want the robot to point to an object detected in front of it (for example, a glass, a banana, or a towel), start your Output line with: POINT_<OBJECT> (for example: POINT_GLASS, POINT_BANANA, POINT_TOWEL), then continue your sentence naturally.
10. If the user wants to stop the stretching routine, or if you think it is necessary to stop for safety or well-being, or if the routine is over, start your Output line with: STOP_ROUTINE — this will be your final message to the user.

- You will receive a line like 'Exercise status: success' or 'Exercise status: not yet' in the context.
- If the status is 'success', congratulate the user and propose moving to the next exercise only if the user succeeded.
- If the status is 'not yet', encourage the user to keep trying and give advice.

IMPORTANT:
- If it's appropriate to start the next exercise, begin your Output line with: NEXT_EXERCISE:
- If you want the robot to point to an object, begin your Output line with: POINT_<OBJECT> (replace <OBJECT> by the object name in English and uppercase, e.g., POINT_GLASS).
- If the user wants to stop or you decide to stop the stretching routine because you have no more exercises left, begin your Output line with: STOP_ROUTINE, this will be your final message to the user.
- Otherwise, respond naturally and empathetically to the user.

Format your reply like this and only one time:

Reasoning:
<step-by-step reasoning>

Output: <what the robot should say or ask next in 1-2 sentences>
)PROMPT";

enum class ExerciseStatus { kNotYet, kSuccess };

constexpr std::string_view to_string(ExerciseStatus s) {
  return s == ExerciseStatus::kSuccess ? "success" : "not yet";
}

enum class Speaker { kUser, kCoach };

constexpr std::string_view to_string(Speaker s) { return s == Speaker::kUser ? "User" : "StretchBot"; }

struct DialogueTurn {
  Speaker speaker = Speaker::kUser;
  std::string text;
  friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct PerceptionSnapshot {
  std::vector<std::string> objects;
  std::vector<affect::ChannelPrediction> channels;
  affect::ReliabilityWeights weights;
};

struct ContextOptions {
  bool affectEnabled = true;
  affect::FusionOptions fusion;
  std::size_t historyCap = 8;
};

struct ContextPackage {
  std::vector<std::string> detectedObjects;
  std::optional<affect::FusedEmotion> fusedEmotion;
  ExerciseStatus exerciseStatus = ExerciseStatus::kNotYet;
  std::string transcript;
  std::vector<DialogueTurn> history;
  std::vector<std::string> annotations;
  friend bool operator==(const ContextPackage&, const ContextPackage&) = default;
};

/// Keeps the `cap` most recent turns.
inline std::vector<DialogueTurn> truncateHistory(std::span<const DialogueTurn> turns, std::size_t cap) {
  const auto skip = turns.size() > cap ? turns.size() - cap : 0;
  return {turns.begin() + static_cast<std::ptrdiff_t>(skip), turns.end()};
}

inline ContextPackage assembleContext(const PerceptionSnapshot& perception,
                                      std::span<const DialogueTurn> dialogue,
                                      ExerciseStatus status, const ContextOptions& options = {}) {
  ContextPackage pkg;
  pkg.detectedObjects = perception.objects;
  if (options.affectEnabled && !perception.channels.empty()) {
    auto fused = affect::fuseEmotions(perception.channels, perception.weights, options.fusion);
    if (fused) pkg.fusedEmotion = std::move(*fused);
  }
  pkg.exerciseStatus = status;
  for (auto it = dialogue.rbegin(); it != dialogue.rend(); ++it) {
    if (it->speaker == Speaker::kUser) {
      pkg.transcript = it->text;
      break;
    }
  }
  pkg.history = truncateHistory(dialogue, options.historyCap);
  return pkg;
}

inline std::string statusLine(ExerciseStatus status) {
  return "Exercise status: " + std::string(to_string(status));
}

/// One line per item: objects, emotion (when fused), status, transcript,
/// then any adaptation notes.
inline std::string contextDescription(const ContextPackage& pkg) {
  std::vector<std::string> lines;
  lines.push_back("Detected objects: " +
                  (pkg.detectedObjects.empty() ? std::string("none") : text::join(pkg.detectedObjects, ", ")));
  if (pkg.fusedEmotion) lines.push_back("User emotion: " + pkg.fusedEmotion->label);
  lines.push_back(statusLine(pkg.exerciseStatus));
  lines.push_back("Latest user message: " +
                  (pkg.transcript.empty() ? std::string("(none yet)") : "\"" + pkg.transcript + "\""));
  for (const auto& a : pkg.annotations) lines.push_back("Note: " + a);
  return text::join(lines, "\n");
}

inline std::string historyString(const ContextPackage& pkg) {
  if (pkg.history.empty()) return "Recent dialogue: none";
  std::string out = "Recent dialogue:";
  for (const auto& turn : pkg.history) {
    out += "\n";
    out += to_string(turn.speaker);
    out += ": ";
    out += turn.text;
  }
  return out;
}

struct RoutinePosition {
  bool started = false;
  std::size_t index = 0;
  friend bool operator==(const RoutinePosition&, const RoutinePosition&) = default;
};

inline constexpr std::string_view kNotStarted = "none (routine not started)";
inline constexpr std::string_view kRoutineComplete = "none — routine complete";

struct PromptBundle {
  std::string systemPrompt;
  std::string currentExercise;
  std::string nextExercise;
  std::string contextDescription;
  std::string kgBlock;
  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Single-pass slot substitution; substituted values are never rescanned.
/// Throws on a slot name the caller did not provide.
inline std::string fillTemplate(std::string_view tpl,
                                std::span<const std::pair<std::string_view, std::string>> slots) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    auto open = tpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(pos));
      break;
    }
    auto close = tpl.find('}', open);
    if (close == std::string_view::npos)
      throw StretchbotError(ErrorCode::kInvalidConfig, "unterminated template slot");
    out.append(tpl.substr(pos, open - pos));
    const auto name = tpl.substr(open + 1, close - open - 1);
    bool filled = false;
    for (const auto& [slot, value] : slots) {
      if (slot == name) {
        out.append(value);
        filled = true;
        break;
      }
    }
    if (!filled)
      throw StretchbotError(ErrorCode::kInvalidConfig, "unknown template slot {" + std::string(name) + "}");
    pos = close + 1;
  }
  return out;
}

inline Expected<PromptBundle> renderPrompt(const ContextPackage& pkg, const RoutineScript& script,
                                           RoutinePosition position, std::string_view kgBlock,
                                           std::string_view tpl = kDefaultPromptTemplate) {
  PromptBundle bundle;
  if (!position.started) {
    if (script.size() == 0) return fail(ErrorCode::kUnknownRoutinePosition, "empty routine");
    bundle.currentExercise = std::string(kNotStarted);
    bundle.nextExercise = script[0].instruction;
  } else {
    if (position.index >= script.size())
      return fail(ErrorCode::kUnknownRoutinePosition, "index " + std::to_string(position.index));
    bundle.currentExercise = script[position.index].instruction;
    bundle.nextExercise = position.index + 1 < script.size() ? script[position.index + 1].instruction
                                                             : std::string(kRoutineComplete);
  }
  bundle.contextDescription = contextDescription(pkg);
  bundle.kgBlock = kgBlock.empty() ? std::string(kg::kNoKnowledgeLine) : std::string(kgBlock);
  const std::pair<std::string_view, std::string> slots[] = {
      {"current_exercise", bundle.currentExercise},
      {"next_exercise", bundle.nextExercise},
      {"context_description", bundle.contextDescription},
      {"history_str", historyString(pkg)},
      {"formatted_kg", bundle.kgBlock},
  };
  bundle.systemPrompt = fillTemplate(tpl, slots);
  return bundle;
}

}  // namespace stretchbot::context
