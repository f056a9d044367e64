#pragma once

// Session configuration: defaults plus a JSON overlay. Unknown keys are
// rejected so typos surface instead of silently falling back to defaults.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stretchbot/affect.hpp"
#include "stretchbot/context.hpp"
#include "stretchbot/events.hpp"
#include "stretchbot/knowledge.hpp"
#include "stretchbot/objects.hpp"
#include "stretchbot/pose.hpp"
#include "stretchbot/reasoner.hpp"
#include "stretchbot/routine.hpp"
#include "stretchbot/routine_script.hpp"
#include "stretchbot/verifier.hpp"

namespace stretchbot {

struct SessionConfig {
  pose::PoseParameters pose;
  affect::ReliabilityWeights weights;
  context::ContextOptions context;
  kg::RetrievalOptions retrieval;
  verify::VerifierConfig verifier;
  RoutineOptions routine;
  AdaptationLexicon lexicon;
  ObjectCatalog catalog = ObjectCatalog::defaults();
  RoutineScript script = RoutineScript::defaults();
  std::string promptTemplate = std::string(context::kDefaultPromptTemplate);
  double timeoutSeconds = 30.0;
  reasoner::LatencyModel latency;
  std::string endpoint;  // chat-completions base URL, empty = not configured
  std::string model;
  std::size_t holdProgressEvery = 30;  // frames between batched hold snapshots
  /// User-role message sent alongside the rendered system prompt.
  std::string userMessage = "Decide the robot's next action.";
};

inline std::string readTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StretchbotError(ErrorCode::kInvalidConfig, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Root of the shipped data files (KG, prompts, config, scenarios' fixtures).
inline std::filesystem::path dataDir() {
  if (const char* env = std::getenv("STRETCHBOT_DATA_DIR"); env && *env) return env;
#ifdef STRETCHBOT_DATA_DIR
  return STRETCHBOT_DATA_DIR;
#else
  return "data";
#endif
}

namespace detail {

inline StretchbotError config_error(const std::string& field, const std::string& why) {
  return StretchbotError(ErrorCode::kInvalidConfig, "config." + field + ": " + why);
}

inline void only_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw config_error(where, "expected an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw config_error(where.empty() ? k : where + "." + k, "unknown key");
  }
}

template <typename T>
void read(const nlohmann::json& j, std::string_view key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    j.at(std::string(key)).get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(where + std::string(key), e.what());
  }
}

}  // namespace detail

/// Overlays `doc` onto `base` (the defaults unless given). Relative file
/// references resolve against `baseDir`.
inline SessionConfig parseConfig(const nlohmann::json& doc, const std::filesystem::path& baseDir = {},
                                 SessionConfig base = {}) {
  using detail::config_error;
  using detail::read;
  SessionConfig cfg = std::move(base);
  if (doc.is_null()) return cfg;
  detail::only_keys(doc, "", {"schema", "pose", "fusion", "history_cap", "retrieval", "reasoner", "objects", "verifier",
                              "routine", "lexicon", "routine_script", "prompt_template", "hold_progress_every"});
  if (doc.contains("schema") && doc["schema"] != "stretchbot.config/1")
    throw config_error("schema", "expected stretchbot.config/1");

  if (doc.contains("pose")) {
    const auto& p = doc["pose"];
    detail::only_keys(p, "pose", {"wrist_distance_max", "toe_touch_max", "lean_angle_deg", "frame_period", "hold_target",
                                  "reset_tolerance"});
    read(p, "wrist_distance_max", cfg.pose.wristDistanceMax, "pose.");
    read(p, "toe_touch_max", cfg.pose.toeTouchMax, "pose.");
    read(p, "lean_angle_deg", cfg.pose.leanAngleDeg, "pose.");
    read(p, "frame_period", cfg.pose.framePeriod, "pose.");
    read(p, "hold_target", cfg.pose.holdTarget, "pose.");
    read(p, "reset_tolerance", cfg.pose.resetTolerance, "pose.");
    if (!cfg.pose.valid()) throw config_error("pose", "parameters must be positive with frame_period < hold_target < reset_tolerance");
  }
  if (doc.contains("fusion")) {
    const auto& f = doc["fusion"];
    detail::only_keys(f, "fusion", {"weights", "labels", "normalize_inputs", "affect_enabled"});
    if (f.contains("weights")) {
      try {
        cfg.weights = f["weights"].get<affect::ReliabilityWeights>();
      } catch (const StretchbotError& e) {
        throw config_error("fusion.weights", e.what());
      }
      for (const auto& [c, w] : cfg.weights.weights)
        if (w < 0) throw config_error("fusion.weights." + std::string(affect::to_string(c)), "must be >= 0");
    }
    read(f, "labels", cfg.context.fusion.labels, "fusion.");
    read(f, "normalize_inputs", cfg.context.fusion.normalizeInputs, "fusion.");
    read(f, "affect_enabled", cfg.context.affectEnabled, "fusion.");
  }
  read(doc, "history_cap", cfg.context.historyCap, "");
  if (doc.contains("retrieval")) {
    const auto& r = doc["retrieval"];
    detail::only_keys(r, "retrieval", {"whitelist", "max_fallback_triples"});
    read(r, "whitelist", cfg.retrieval.whitelist, "retrieval.");
    read(r, "max_fallback_triples", cfg.retrieval.maxFallbackTriples, "retrieval.");
  }
  if (doc.contains("reasoner")) {
    const auto& r = doc["reasoner"];
    detail::only_keys(r, "reasoner", {"timeout_seconds", "latency", "endpoint", "model", "user_message"});
    read(r, "timeout_seconds", cfg.timeoutSeconds, "reasoner.");
    if (cfg.timeoutSeconds <= 0) throw config_error("reasoner.timeout_seconds", "must be positive");
    if (r.contains("latency")) {
      auto model = reasoner::LatencyModel::parse(r["latency"].get<std::string>());
      if (!model) throw config_error("reasoner.latency", "expected off, <seconds>, <lo>-<hi> or low-budget");
      cfg.latency = *model;
    }
    read(r, "endpoint", cfg.endpoint, "reasoner.");
    read(r, "model", cfg.model, "reasoner.");
    read(r, "user_message", cfg.userMessage, "reasoner.");
  }
  if (doc.contains("objects")) {
    std::vector<ObjectEntry> entries;
    for (std::size_t i = 0; i < doc["objects"].size(); ++i) {
      const auto& o = doc["objects"][i];
      const auto where = "objects[" + std::to_string(i) + "]";
      detail::only_keys(o, where, {"name", "aliases", "cue", "position"});
      ObjectEntry e;
      if (!o.contains("name") || !o.contains("position")) throw config_error(where, "name and position are required");
      read(o, "name", e.name, where + ".");
      read(o, "aliases", e.aliases, where + ".");
      e.cue = o.value("cue", e.name);
      const auto& p = o["position"];
      if (!p.is_array() || p.size() != 3) throw config_error(where + ".position", "expected [x, y, z] in meters");
      e.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
      entries.push_back(std::move(e));
    }
    cfg.catalog = ObjectCatalog(std::move(entries));
  }
  if (doc.contains("verifier")) {
    const auto& v = doc["verifier"];
    detail::only_keys(v, "verifier", {"affirmatives", "negations", "tone_rules", "confirmation_prompt", "hold_encouragement"});
    read(v, "affirmatives", cfg.verifier.affirmatives, "verifier.");
    read(v, "negations", cfg.verifier.negations, "verifier.");
    read(v, "confirmation_prompt", cfg.verifier.confirmationPrompt, "verifier.");
    read(v, "hold_encouragement", cfg.verifier.holdEncouragement, "verifier.");
    if (v.contains("tone_rules")) {
      cfg.verifier.toneRules.clear();
      for (const auto& r : v["tone_rules"])
        cfg.verifier.toneRules.push_back({r.at("phrase").get<std::string>(), r.at("replacement").get<std::string>()});
    }
  }
  if (doc.contains("routine")) {
    const auto& r = doc["routine"];
    detail::only_keys(r, "routine", {"pause_cues", "fallback_utterance", "corrective_prefix"});
    read(r, "pause_cues", cfg.routine.pauseCues, "routine.");
    read(r, "fallback_utterance", cfg.routine.fallbackUtterance, "routine.");
    read(r, "corrective_prefix", cfg.routine.correctivePrefix, "routine.");
  }
  if (doc.contains("lexicon")) {
    const auto& l = doc["lexicon"];
    detail::only_keys(l, "lexicon", {"fatigue", "discomfort", "sweat", "thirst", "fatigue_labels", "frustration_labels"});
    read(l, "fatigue", cfg.lexicon.fatigueCues, "lexicon.");
    read(l, "discomfort", cfg.lexicon.discomfortCues, "lexicon.");
    read(l, "sweat", cfg.lexicon.sweatCues, "lexicon.");
    read(l, "thirst", cfg.lexicon.thirstCues, "lexicon.");
    read(l, "fatigue_labels", cfg.lexicon.fatigueLabels, "lexicon.");
    read(l, "frustration_labels", cfg.lexicon.frustrationLabels, "lexicon.");
  }
  if (doc.contains("routine_script")) {
    const auto path = baseDir / doc["routine_script"].get<std::string>();
    try {
      cfg.script = parseRoutineScript(nlohmann::json::parse(readTextFile(path)));
    } catch (const nlohmann::json::exception& e) {
      throw config_error("routine_script", e.what());
    }
  }
  if (doc.contains("prompt_template")) cfg.promptTemplate = readTextFile(baseDir / doc["prompt_template"].get<std::string>());
  read(doc, "hold_progress_every", cfg.holdProgressEvery, "");
  if (cfg.holdProgressEvery == 0) throw config_error("hold_progress_every", "must be at least 1");
  return cfg;
}

inline SessionConfig loadConfig(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(readTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw StretchbotError(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  return parseConfig(doc, path.parent_path());
}

}  // namespace stretchbot
