#pragma once

// Rule-based safeguard between the reasoner and execution. Edits are
// classified into the taxonomy used for metrics: prefix normalization,
// formatting repair, tone adjustment, semantic rewrite.

#include <algorithm>
#include <array>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stretchbot/commands.hpp"
#include "stretchbot/context.hpp"
#include "stretchbot/error.hpp"
#include "stretchbot/objects.hpp"
#include "stretchbot/text.hpp"

namespace stretchbot::verify {

enum class EditClass { kNone, kPrefixNormalization, kFormattingRepair, kToneAdjustment, kSemanticRewrite };

inline constexpr std::array kEditClasses = {EditClass::kPrefixNormalization, EditClass::kFormattingRepair,
                                            EditClass::kToneAdjustment, EditClass::kSemanticRewrite};

constexpr std::string_view to_string(EditClass c) {
  switch (c) {
    case EditClass::kNone: return "none";
    case EditClass::kPrefixNormalization: return "prefix-normalization";
    case EditClass::kFormattingRepair: return "formatting-repair";
    case EditClass::kToneAdjustment: return "tone-adjustment";
    case EditClass::kSemanticRewrite: return "semantic-rewrite";
  }
  return "?";
}

inline std::optional<EditClass> edit_class_from_string(std::string_view s) {
  for (auto c : {EditClass::kNone, EditClass::kPrefixNormalization, EditClass::kFormattingRepair,
                 EditClass::kToneAdjustment, EditClass::kSemanticRewrite})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

enum class Verdict { kApproved, kEdited, kRewritten };

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kApproved: return "approved";
    case Verdict::kEdited: return "edited";
    case Verdict::kRewritten: return "rewritten";
  }
  return "?";
}

struct VerifierReport {
  Verdict verdict = Verdict::kApproved;
  EditClass editClass = EditClass::kNone;
  std::string before;
  std::string after;
  std::vector<std::string> edits;  // human-readable notes, in application order
  friend bool operator==(const VerifierReport&, const VerifierReport&) = default;
};

struct VerifiedDecision {
  ActionCommand draft;
  ActionCommand command;
  VerifierReport report;
};

struct ToneRule {
  std::string phrase;
  std::string replacement;
};

struct VerifierConfig {
  std::vector<std::string> affirmatives = {"yes", "yeah", "yep", "ok", "okay", "ready", "let's go",
                                           "sure", "go ahead", "next one"};
  std::vector<std::string> negations = {"not", "no", "don't", "can't", "cannot", "wait", "never"};
  std::vector<ToneRule> toneRules = {
      {"you must", "please try to"},        {"you failed", "that was not quite it yet"},
      {"hurry up", "take your time"},       {"that's wrong", "let's adjust that a little"},
      {"that is wrong", "let's adjust that a little"}, {"lazy", "tired"},
      {"stop complaining", "I hear you"},   {"pathetic", "a good start"},
      {"do it again", "let's try once more"},
  };
  std::string defaultNextUtterance = "Let's move on to the next exercise.";
  std::string defaultPointUtterance = "Have a look over here.";
  std::string defaultStopUtterance = "Let's stop here for today. Well done!";
  std::string defaultSayUtterance = "How are you feeling right now?";
  std::string holdEncouragement = "Keep going, you're doing great!";
  std::string confirmationPrompt = "Tell me when you're ready to move on.";
};

/// Latest user utterance counts as explicit confirmation when it contains an
/// affirmative phrase and no negation.
inline bool isConfirmation(std::string_view transcript, const VerifierConfig& config) {
  for (const auto& n : config.negations)
    if (text::contains_phrase(transcript, n)) return false;
  for (const auto& a : config.affirmatives)
    if (text::contains_phrase(transcript, a)) return true;
  return false;
}

/// Optional second reviewer (e.g. another model). Returning a line replaces
/// the output and counts as a semantic rewrite.
class SecondPassReviewer {
 public:
  virtual ~SecondPassReviewer() = default;
  virtual std::optional<std::string> review(const ActionCommand& command,
                                            const context::ContextPackage& context) = 0;
};

namespace detail {

inline std::string strip_markup(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != '*' && c != '`') out += c;
  auto t = text::trim(out);
  while (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') || (t.front() == '\'' && t.back() == '\''))) {
    t = text::trim(t.substr(1, t.size() - 2));
  }
  return std::string(t);
}

/// Near-miss prefixes rewritten to canonical form.
inline std::string normalize_prefix(const std::string& line) {
  static const std::regex next_loose(R"(^next[ _-]?exercise\s*(?::|-|—|–)\s*)", std::regex::icase);
  static const std::regex next_caps(R"(^NEXT[ _-]EXERCISE\b\s*(?::|-|—|–)?\s*)");
  static const std::regex next_under(R"(^next_exercise\b\s*(?::|-|—|–)?\s*)", std::regex::icase);
  static const std::regex stop_under(R"(^stop_routine\b)", std::regex::icase);
  static const std::regex stop_caps(R"(^STOP[ -]ROUTINE\b)");
  static const std::regex point_under(R"(^point_<?([A-Za-z]+(?:_[A-Za-z]+)*)>?)", std::regex::icase);
  static const std::regex point_caps(R"(^POINT[ -]<?([A-Z]+(?:_[A-Z]+)*)>?)");

  if (line.starts_with(kNextExercisePrefix) || line.starts_with(kStopPrefix)) return line;
  std::smatch m;
  for (const auto* re : {&next_loose, &next_caps, &next_under}) {
    if (std::regex_search(line, m, *re)) {
      auto rest = line.substr(static_cast<std::size_t>(m.length(0)));
      return std::string(kNextExercisePrefix) + (rest.empty() ? "" : " " + rest);
    }
  }
  for (const auto* re : {&stop_under, &stop_caps}) {
    if (std::regex_search(line, m, *re))
      return std::string(kStopPrefix) + line.substr(static_cast<std::size_t>(m.length(0)));
  }
  for (const auto* re : {&point_under, &point_caps}) {
    if (std::regex_search(line, m, *re))
      return std::string(kPointPrefix) + text::to_upper(m[1].str()) +
             line.substr(static_cast<std::size_t>(m.length(0)));
  }
  return line;
}

/// Removes action tokens and reply markers that leaked into the sentence.
inline std::string strip_stray_markers(const std::string& utterance) {
  static const std::regex stray(
      R"((NEXT_EXERCISE:?|STOP_ROUTINE|POINT_[A-Z_]+|Output:|Reasoning:))");
  return text::collapse_whitespace(std::regex_replace(utterance, stray, " "));
}

/// Words that identify a pointing target: token parts plus catalog name/aliases.
inline std::vector<std::string> object_words(std::string_view token, const ObjectCatalog& catalog) {
  auto split_token = [](std::string_view t) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= t.size()) {
      auto end = t.find('_', start);
      if (end == std::string_view::npos) end = t.size();
      if (end > start) parts.push_back(text::to_lower(t.substr(start, end - start)));
      start = end + 1;
    }
    return parts;
  };
  auto out = split_token(token);
  if (const auto* e = catalog.byToken(token)) {
    for (auto& w : text::words(e->name)) out.push_back(std::move(w));
    for (const auto& a : e->aliases)
      for (auto& w : split_token(a)) out.push_back(std::move(w));
  }
  return out;
}

inline std::string drop_sentences_mentioning(std::string_view utterance, const std::vector<std::string>& words) {
  std::vector<std::string> kept;
  for (auto& s : text::sentences(utterance)) {
    bool mentions = false;
    for (const auto& w : words)
      if (text::contains_phrase(s, w)) mentions = true;
    if (!mentions) kept.push_back(std::move(s));
  }
  return text::join(kept, " ");
}

inline bool mentions_advancing(std::string_view sentence) {
  static const std::vector<std::string> cues = {"next", "move on", "moving on", "now let's", "let's move",
                                                "let's try the", "let's do the"};
  for (const auto& c : cues)
    if (text::contains_phrase(sentence, c)) return true;
  return false;
}

}  // namespace detail

class Verifier {
 public:
  explicit Verifier(VerifierConfig config = {}, ObjectCatalog catalog = ObjectCatalog::defaults(),
                    SecondPassReviewer* second = nullptr)
      : config_(std::move(config)), catalog_(std::move(catalog)), second_(second) {}

  const VerifierConfig& config() const { return config_; }

  /// Near-miss parse: case/markup variants of the Output marker, or a bare
  /// line that starts with an action prefix.
  Expected<ReasonerReply> repair(std::string_view raw) const {
    static const std::regex marker(R"(^[\s*_`#>]*output[\s*_`]*[:\-]\s*[*_`]*\s*(.*)$)", std::regex::icase);
    static const std::regex prefix(R"(^[\s*`"]*(next[ _-]?exercise|stop[ _]routine|point_)\S*)", std::regex::icase);
    const auto lines = text::split_lines(raw);
    std::optional<std::string> found;
    int count = 0;
    for (auto line : lines) {
      std::string s(line);
      std::smatch m;
      if (std::regex_match(s, m, marker)) {
        found = m[1].str();
        ++count;
      }
    }
    if (!found) {
      for (auto line : lines) {
        std::string s(text::trim(line));
        if (std::regex_search(s, prefix)) {
          found = s;
          ++count;
        }
      }
    }
    if (!found || text::trim(*found).empty())
      return fail(ErrorCode::kUnrepairableReply, "no output line could be recovered");
    ReasonerReply reply;
    reply.rawText = std::string(raw);
    reply.output = text::collapse_whitespace(*found);
    reply.outputMarkers = count;
    return reply;
  }

  /// Full review of a raw completion: parse (or repair) then verify.
  Expected<VerifiedDecision> review(std::string_view raw, const context::ContextPackage& ctx) const {
    auto parsed = parseReply(raw);
    if (parsed) return verify(*parsed, ctx, false);
    auto repaired = repair(raw);
    if (!repaired) return Unexpected{repaired.error()};
    return verify(*repaired, ctx, true);
  }

  Expected<VerifiedDecision> verify(const ReasonerReply& reply, const context::ContextPackage& ctx,
                                    bool repairedParse = false) const {
    VerifiedDecision out;
    auto& report = out.report;
    report.before = reply.output;
    auto note = [&](EditClass c, std::string what) {
      report.editClass = std::max(report.editClass, c);
      report.edits.push_back(std::string(to_string(c)) + ": " + what);
    };
    if (repairedParse) note(EditClass::kFormattingRepair, "recovered output line from malformed reply");
    if (reply.outputMarkers > 1) note(EditClass::kFormattingRepair, "collapsed duplicate Output lines");

    std::string line = detail::strip_markup(reply.output);
    if (line != text::trim(reply.output)) note(EditClass::kFormattingRepair, "stripped markup");

    auto draft = extractCommand(line);
    out.draft = draft ? *draft : ActionCommand::say(line);

    const std::string normalized = detail::normalize_prefix(line);
    if (normalized != line) {
      note(EditClass::kPrefixNormalization, "normalized action prefix");
      line = normalized;
    }

    auto extracted = extractCommand(line);
    ActionCommand cmd;
    if (extracted) {
      cmd = *extracted;
    } else {
      note(EditClass::kFormattingRepair, "dropped POINT_ prefix without object");
      cmd = ActionCommand::say(std::string(text::trim(line.substr(kPointPrefix.size()))));
    }

    const auto cleaned = detail::strip_stray_markers(cmd.utterance);
    if (cleaned != cmd.utterance) {
      note(EditClass::kFormattingRepair, "removed stray markers from utterance");
      cmd.utterance = cleaned;
    }

    // contextual coherence
    if (cmd.kind == ActionCommand::Kind::kPoint) {
      auto detected = catalog_.resolveDetected(cmd.object, ctx.detectedObjects);
      const bool pointable = detected && catalog_.byName(*detected) != nullptr;
      if (!pointable) {
        note(EditClass::kSemanticRewrite, "POINT_" + cmd.object + " targets an object that is not detected");
        auto remaining = detail::drop_sentences_mentioning(cmd.utterance, detail::object_words(cmd.object, catalog_));
        cmd = ActionCommand::say(remaining.empty() ? config_.defaultSayUtterance : remaining);
      }
    }
    if (cmd.kind == ActionCommand::Kind::kNextExercise &&
        ctx.exerciseStatus != context::ExerciseStatus::kSuccess && !isConfirmation(ctx.transcript, config_)) {
      note(EditClass::kSemanticRewrite, "NEXT_EXERCISE without success or user confirmation");
      std::vector<std::string> kept;
      for (auto& s : text::sentences(cmd.utterance))
        if (!detail::mentions_advancing(s)) kept.push_back(std::move(s));
      if (kept.empty()) kept.push_back(config_.holdEncouragement);
      kept.push_back(config_.confirmationPrompt);
      cmd = ActionCommand::say(text::join(kept, " "));
    }

    // tone
    for (const auto& rule : config_.toneRules) {
      if (text::to_lower(cmd.utterance).find(text::to_lower(rule.phrase)) != std::string::npos) {
        cmd.utterance = text::replace_all_icase(cmd.utterance, rule.phrase, rule.replacement);
        note(EditClass::kToneAdjustment, "softened '" + rule.phrase + "'");
      }
    }

    if (cmd.utterance.empty()) {
      note(EditClass::kFormattingRepair, "filled empty utterance");
      cmd.utterance = defaultUtterance(cmd.kind);
    }

    if (second_) {
      if (auto rewritten = second_->review(cmd, ctx)) {
        auto again = extractCommand(*rewritten);
        if (again && !again->utterance.empty()) {
          note(EditClass::kSemanticRewrite, "second-pass reviewer rewrite");
          cmd = *again;
        }
      }
    }

    report.after = renderCommand(cmd);
    if (report.editClass == EditClass::kNone && report.after != report.before)
      note(EditClass::kFormattingRepair, "canonical spacing");
    report.verdict = report.editClass == EditClass::kNone              ? Verdict::kApproved
                     : report.editClass == EditClass::kSemanticRewrite ? Verdict::kRewritten
                                                                       : Verdict::kEdited;
    out.command = std::move(cmd);
    return out;
  }

 private:
  std::string defaultUtterance(ActionCommand::Kind kind) const {
    switch (kind) {
      case ActionCommand::Kind::kNextExercise: return config_.defaultNextUtterance;
      case ActionCommand::Kind::kPoint: return config_.defaultPointUtterance;
      case ActionCommand::Kind::kStopRoutine: return config_.defaultStopUtterance;
      case ActionCommand::Kind::kSay: break;
    }
    return config_.defaultSayUtterance;
  }

  VerifierConfig config_;
  ObjectCatalog catalog_;
  SecondPassReviewer* second_;
};

}  // namespace stretchbot::verify
