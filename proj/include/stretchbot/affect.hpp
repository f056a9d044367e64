#pragma once

// Late fusion of voice / facial / text emotion predictions into the single
// label forwarded to reasoning.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stretchbot/error.hpp"

namespace stretchbot::affect {

enum class Channel { kVoice, kFacial, kText };

inline constexpr std::array kAllChannels = {Channel::kVoice, Channel::kFacial, Channel::kText};

constexpr std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::kVoice: return "voice";
    case Channel::kFacial: return "facial";
    case Channel::kText: return "text";
  }
  return "?";
}

inline std::optional<Channel> channel_from_string(std::string_view s) {
  for (auto c : kAllChannels) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

using ScoreMap = std::map<std::string, double>;

struct ChannelPrediction {
  Channel channel = Channel::kVoice;
  ScoreMap scores;
  friend bool operator==(const ChannelPrediction&, const ChannelPrediction&) = default;
};

struct ReliabilityWeights {
  std::map<Channel, double> weights{
      {Channel::kVoice, 1.0}, {Channel::kFacial, 1.0}, {Channel::kText, 1.0}};

  double of(Channel c) const {
    auto it = weights.find(c);
    return it == weights.end() ? 0.0 : it->second;
  }
  friend bool operator==(const ReliabilityWeights&, const ReliabilityWeights&) = default;
};

struct FusedEmotion {
  std::string label;
  ScoreMap scores;
  friend bool operator==(const FusedEmotion&, const FusedEmotion&) = default;
};

inline const std::vector<std::string>& defaultLabels() {
  static const std::vector<std::string> labels = {"happy", "neutral", "tired",
                                                  "frustrated", "sad", "angry"};
  return labels;
}

struct FusionOptions {
  std::vector<std::string> labels = defaultLabels();
  /// Rescale each channel to sum to one before weighting.
  bool normalizeInputs = false;
};

namespace detail {

/// Highest score wins; equal scores resolve to the lexicographically
/// smallest label (std::map iterates in that order).
inline std::string argmax(const ScoreMap& scores) {
  std::string best;
  double best_score = -1.0;
  for (const auto& [label, score] : scores) {
    if (score > best_score) {
      best = label;
      best_score = score;
    }
  }
  return best;
}

inline std::set<std::string> label_universe(std::span<const ChannelPrediction> predictions,
                                            const FusionOptions& options) {
  std::set<std::string> labels(options.labels.begin(), options.labels.end());
  if (labels.empty()) {
    for (const auto& p : predictions)
      for (const auto& [label, _] : p.scores) labels.insert(label);
  }
  return labels;
}

}  // namespace detail

inline Expected<FusedEmotion> fuseEmotions(std::span<const ChannelPrediction> predictions,
                                           const ReliabilityWeights& weights,
                                           const FusionOptions& options = {}) {
  if (predictions.empty()) return fail(ErrorCode::kEmptyPredictions);

  std::vector<const ChannelPrediction*> ordered;
  for (const auto& p : predictions) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->channel < b->channel; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->channel == ordered[i - 1]->channel)
      return fail(ErrorCode::kDuplicateChannel, std::string(to_string(ordered[i]->channel)));
  }

  double weight_sum = 0.0;
  for (const auto* p : ordered) {
    const double w = weights.of(p->channel);
    if (w < 0.0) return fail(ErrorCode::kNoReliableChannel, "negative weight");
    for (const auto& [label, score] : p->scores) {
      if (!(score >= 0.0 && score <= 1.0))
        return fail(ErrorCode::kInvalidScore, std::string(to_string(p->channel)) + "/" + label);
    }
    weight_sum += w;
  }
  if (weight_sum <= 0.0) return fail(ErrorCode::kNoReliableChannel);

  const auto labels = detail::label_universe(predictions, options);
  FusedEmotion fused;
  for (const auto& label : labels) fused.scores[label] = 0.0;

  for (const auto* p : ordered) {
    const double w = weights.of(p->channel);
    double channel_total = 1.0;
    if (options.normalizeInputs) {
      channel_total = 0.0;
      for (const auto& label : labels) {
        auto it = p->scores.find(label);
        if (it != p->scores.end()) channel_total += it->second;
      }
    }
    for (const auto& label : labels) {
      auto it = p->scores.find(label);
      if (it == p->scores.end()) continue;
      const double score = channel_total > 0.0 ? it->second / channel_total : 0.0;
      fused.scores[label] += w * score;
    }
  }
  for (auto& [_, s] : fused.scores) s /= weight_sum;
  fused.label = detail::argmax(fused.scores);
  return fused;
}

inline FusedEmotion singleChannelPassthrough(const ChannelPrediction& prediction) {
  FusedEmotion fused{detail::argmax(prediction.scores), prediction.scores};
  return fused;
}

}  // namespace stretchbot::affect
