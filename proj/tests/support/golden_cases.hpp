#pragma once

// Two fixed context packages whose rendered prompts are checked in under
// tests/golden. Set STRETCHBOT_UPDATE_GOLDEN=1 to rewrite the files after a
// reviewed template change.

#include <string>
#include <vector>

#include "support.hpp"

namespace support {

struct GoldenCase {
  std::string file;
  std::string rendered;
};

inline std::vector<GoldenCase> goldenCases() {
  using namespace stretchbot::context;
  std::vector<GoldenCase> out;
  const auto script = RoutineScript::defaults();
  const auto graph = shippedGraph();
  const auto catalog = ObjectCatalog::defaults();

  {
    // Tired user holding the arm raise, water bottle on the table.
    SessionState state;
    state.started = true;
    state.index = 0;
    state.phase = Phase::kInExercise;
    state.objects = {"water bottle"};
    PerceptionSnapshot perception{state.objects,
                                  {{affect::Channel::kVoice, {{"tired", 0.7}, {"neutral", 0.2}, {"happy", 0.1}}},
                                   {affect::Channel::kFacial, {{"tired", 0.6}, {"neutral", 0.3}, {"sad", 0.1}}},
                                   {affect::Channel::kText, {{"tired", 0.5}, {"neutral", 0.4}, {"happy", 0.1}}}},
                                  {}};
    const std::vector<DialogueTurn> dialogue = {
        {Speaker::kUser, "Hi, I'm ready."},
        {Speaker::kCoach, "Let's begin. Stretch your arms above your head for 5 seconds."},
        {Speaker::kUser, "I'm tired"}};
    auto pkg = assembleContext(perception, dialogue, ExerciseStatus::kNotYet);
    const auto adaptation = adaptationHooks(state, pkg, *graph, catalog);
    pkg.annotations = adaptation.annotations;
    const auto mentions = collectMentions(pkg, adaptation, *graph);
    const auto results = kg::retrieveRelations(*graph, mentions, nullptr);
    const auto bundle = renderPrompt(pkg, script, state.position(), kg::serializeForPrompt(results)).value();
    out.push_back({"prompt_not_yet.txt", bundle.systemPrompt});
  }
  {
    // Toe touch just completed; nothing on the table, no affect channels.
    PerceptionSnapshot perception{{}, {}, {}};
    const std::vector<DialogueTurn> dialogue = {
        {Speaker::kUser, "yes"},
        {Speaker::kCoach, "Now touch your toes for 5 seconds."},
        {Speaker::kUser, "Like this?"},
        {Speaker::kCoach, "Exactly, keep holding!"}};
    auto pkg = assembleContext(perception, dialogue, ExerciseStatus::kSuccess);
    const auto bundle = renderPrompt(pkg, script, {true, 1}, kg::serializeForPrompt({})).value();
    out.push_back({"prompt_success.txt", bundle.systemPrompt});
  }
  return out;
}

}  // namespace support
