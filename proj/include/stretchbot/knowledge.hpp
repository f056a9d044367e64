#pragma once

// Internal stretching-domain knowledge graph: loading from the JSON
// resource, mention lookup, retrieval with commonsense fallback, and the
// prompt serialization of retrieved triples.

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stretchbot/error.hpp"
#include "stretchbot/text.hpp"

namespace stretchbot::kg {

struct Relation {
  std::string name;
  std::vector<std::string> targets;  // order preserved (routine sequences)
  friend bool operator==(const Relation&, const Relation&) = default;
};

struct KgEntity {
  std::string name;
  std::string type;
  std::vector<Relation> relations;  // declaration order

  const Relation* relation(std::string_view relation_name) const {
    for (const auto& r : relations)
      if (r.name == relation_name) return &r;
    return nullptr;
  }
  friend bool operator==(const KgEntity&, const KgEntity&) = default;
};

struct Triple {
  std::string entity;
  std::string relation;
  std::string target;
  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Immutable after load; keyed by normalized entity name.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  std::size_t size() const { return entities_.size(); }
  bool empty() const { return entities_.empty(); }

  std::optional<KgEntity> lookup(std::string_view mention) const {
    auto it = entities_.find(text::entity_key(mention));
    if (it == entities_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view mention) const {
    return entities_.count(text::entity_key(mention)) > 0;
  }

  bool hasTriple(const Triple& t) const {
    auto it = entities_.find(text::entity_key(t.entity));
    if (it == entities_.end() || it->second.name != t.entity) return false;
    const auto* rel = it->second.relation(t.relation);
    if (!rel) return false;
    for (const auto& target : rel->targets)
      if (target == t.target) return true;
    return false;
  }

  std::vector<Triple> triples(const KgEntity& entity) const {
    std::vector<Triple> out;
    for (const auto& rel : entity.relations)
      for (const auto& target : rel.targets) out.push_back({entity.name, rel.name, target});
    return out;
  }

  template <typename Fn>
  void forEach(Fn&& fn) const {
    for (const auto& [_, e] : entities_) fn(e);
  }

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;

 private:
  friend KnowledgeGraph loadKnowledgeGraph(std::string_view document);
  std::map<std::string, KgEntity> entities_;
};

/// Parses the KG resource: {"Entity": {"type": "...", "relations": {"rel": "T" | ["T", ...]}}}.
/// Throws StretchbotError naming the offending entity on schema violations
/// or duplicate names.
inline KnowledgeGraph loadKnowledgeGraph(std::string_view document) {
  using json = nlohmann::ordered_json;
  if (text::trim(document).empty()) return {};

  std::vector<std::string> seen_keys;
  std::string duplicate;
  json::parser_callback_t on_event = [&](int depth, json::parse_event_t event, json& parsed) {
    if (depth == 1 && event == json::parse_event_t::key && duplicate.empty()) {
      auto name = parsed.get<std::string>();
      for (const auto& k : seen_keys) {
        if (text::entity_key(k) == text::entity_key(name)) duplicate = name;
      }
      seen_keys.push_back(std::move(name));
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(document.begin(), document.end(), on_event);
  } catch (const json::parse_error& e) {
    throw StretchbotError(ErrorCode::kMalformedEntity, std::string("unparseable document: ") + e.what());
  }
  if (!duplicate.empty()) throw StretchbotError(ErrorCode::kDuplicateEntity, duplicate);
  if (!doc.is_object())
    throw StretchbotError(ErrorCode::kMalformedEntity, "top level must be an object");

  KnowledgeGraph graph;
  for (const auto& [name, entry] : doc.items()) {
    auto bad = [&name](const std::string& why) {
      return StretchbotError(ErrorCode::kMalformedEntity, name + ": " + why);
    };
    if (text::trim(name).empty()) throw bad("empty entity name");
    if (!entry.is_object()) throw bad("entry must be an object");
    if (!entry.contains("type") || !entry["type"].is_string() ||
        entry["type"].get<std::string>().empty())
      throw bad("missing type field");
    if (!entry.contains("relations") || !entry["relations"].is_object())
      throw bad("missing relations map");

    KgEntity entity{name, entry["type"].get<std::string>(), {}};
    for (const auto& [rel_name, value] : entry["relations"].items()) {
      Relation rel{rel_name, {}};
      auto add = [&](const json& v) {
        if (!v.is_string() || text::trim(v.get<std::string>()).empty())
          throw bad("relation '" + rel_name + "' has an empty or non-string target");
        rel.targets.push_back(v.get<std::string>());
      };
      if (value.is_array()) {
        if (value.empty()) throw bad("relation '" + rel_name + "' has no targets");
        for (const auto& v : value) add(v);
      } else {
        add(value);
      }
      entity.relations.push_back(std::move(rel));
    }
    graph.entities_.emplace(text::entity_key(name), std::move(entity));
  }
  return graph;
}

inline std::optional<KgEntity> lookupEntity(const KnowledgeGraph& graph, std::string_view mention) {
  return graph.lookup(mention);
}

// ---------------------------------------------------------------------------
// Fallback commonsense source

struct FallbackEdge {
  std::string relation;
  std::string target;
  friend bool operator==(const FallbackEdge&, const FallbackEdge&) = default;
};

class FallbackClient {
 public:
  virtual ~FallbackClient() = default;
  /// Raw edges for `term`; filtering happens in retrieveRelations.
  virtual Expected<std::vector<FallbackEdge>> query(std::string_view term) = 0;
};

/// Offline fallback backed by a JSON fixture: {"term": [["Relation", "target"], ...]}.
/// Terms listed under "_unavailable" simulate a failing service.
class FixtureFallback final : public FallbackClient {
 public:
  FixtureFallback() = default;

  static FixtureFallback fromJson(std::string_view document) {
    FixtureFallback fixture;
    auto doc = nlohmann::json::parse(document.begin(), document.end());
    for (const auto& [term, edges] : doc.items()) {
      if (term == "_unavailable") {
        for (const auto& t : edges) fixture.unavailable_.insert(text::entity_key(t.get<std::string>()));
        continue;
      }
      if (term.starts_with("_")) continue;
      auto& list = fixture.edges_[text::entity_key(term)];
      for (const auto& e : edges) {
        if (e.is_array() && e.size() == 2)
          list.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
        else
          list.push_back({e.at("relation").get<std::string>(), e.at("target").get<std::string>()});
      }
    }
    return fixture;
  }

  void add(std::string_view term, FallbackEdge edge) {
    std::lock_guard lock(mutex_);
    edges_[text::entity_key(term)].push_back(std::move(edge));
  }

  Expected<std::vector<FallbackEdge>> query(std::string_view term) override {
    std::lock_guard lock(mutex_);
    ++calls_;
    queried_.emplace_back(term);
    const auto key = text::entity_key(term);
    if (unavailable_.count(key)) return fail(ErrorCode::kFallbackUnavailable, std::string(term));
    auto it = edges_.find(key);
    if (it == edges_.end()) return std::vector<FallbackEdge>{};
    return it->second;
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
  }
  std::vector<std::string> queried() const {
    std::lock_guard lock(mutex_);
    return queried_;
  }

  FixtureFallback(const FixtureFallback& other) {
    std::lock_guard lock(other.mutex_);
    edges_ = other.edges_;
    unavailable_ = other.unavailable_;
  }
  FixtureFallback& operator=(const FixtureFallback&) = delete;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<FallbackEdge>> edges_;
  std::set<std::string> unavailable_;
  std::size_t calls_ = 0;
  std::vector<std::string> queried_;
};

// ---------------------------------------------------------------------------
// Retrieval

enum class Source { kInternal, kFallback };

constexpr std::string_view to_string(Source s) {
  return s == Source::kInternal ? "internal" : "fallback";
}

struct RetrievedKnowledge {
  std::string entity;
  Source source = Source::kInternal;
  std::vector<Triple> triples;
  std::optional<std::string> warning;

  std::vector<std::string> serialized() const {
    std::vector<std::string> lines;
    for (const auto& t : triples) lines.push_back(t.entity + " --" + t.relation + "--> " + t.target);
    return lines;
  }
  friend bool operator==(const RetrievedKnowledge&, const RetrievedKnowledge&) = default;
};

struct RetrievalOptions {
  std::vector<std::string> whitelist = {"UsedFor", "CapableOf", "MotivatedByGoal", "HasProperty",
                                        "AtLocation"};
  std::size_t maxFallbackTriples = 5;
};

/// Whitelisted spelling of `relation`, matched ignoring case and separators.
inline std::optional<std::string> whitelisted(std::string_view relation,
                                              const RetrievalOptions& options) {
  const auto key = text::entity_key(relation);
  for (const auto& w : options.whitelist)
    if (text::entity_key(w) == key) return w;
  return std::nullopt;
}

/// ConceptNet-style term: lowercase words joined by underscores.
inline std::string fallbackTerm(std::string_view mention) {
  return text::to_lower(text::object_token(mention));
}

/// Internal hits never reach the fallback client; fallback failures degrade
/// to an empty result carrying a warning.
inline std::vector<RetrievedKnowledge> retrieveRelations(const KnowledgeGraph& graph,
                                                         std::span<const std::string> mentions,
                                                         FallbackClient* fallback,
                                                         const RetrievalOptions& options = {}) {
  std::vector<RetrievedKnowledge> out;
  std::set<std::string> done;
  for (const auto& raw : mentions) {
    const auto mention = std::string(text::trim(raw));
    if (mention.empty() || !done.insert(text::entity_key(mention)).second) continue;

    if (auto entity = graph.lookup(mention)) {
      out.push_back({entity->name, Source::kInternal, graph.triples(*entity), std::nullopt});
      continue;
    }

    RetrievedKnowledge result{mention, Source::kFallback, {}, std::nullopt};
    if (!fallback) {
      result.warning = "no fallback source configured";
    } else if (auto edges = fallback->query(fallbackTerm(mention))) {
      for (const auto& edge : *edges) {
        if (result.triples.size() >= options.maxFallbackTriples) break;
        auto rel = whitelisted(edge.relation, options);
        if (!rel || text::trim(edge.target).empty()) continue;
        Triple t{mention, *rel, edge.target};
        if (std::find(result.triples.begin(), result.triples.end(), t) == result.triples.end())
          result.triples.push_back(std::move(t));
      }
    } else {
      result.warning = "fallback query failed: " + edges.error().describe();
    }
    out.push_back(std::move(result));
  }
  return out;
}

inline constexpr std::string_view kNoKnowledgeLine = "No relevant knowledge retrieved.";

inline std::string serializeForPrompt(std::span<const RetrievedKnowledge> results) {
  std::vector<std::string> lines;
  for (auto source : {Source::kInternal, Source::kFallback}) {
    for (const auto& r : results) {
      if (r.source != source) continue;
      auto l = r.serialized();
      lines.insert(lines.end(), l.begin(), l.end());
    }
  }
  if (lines.empty()) return std::string(kNoKnowledgeLine);
  return text::join(lines, "\n");
}

}  // namespace stretchbot::kg
