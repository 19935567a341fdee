#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/graph/preference_graph.hpp"

namespace feedguard::graph {

struct RankOptions {
  double damping = 0.85;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

struct RankedEntry {
  FeatureId id;
  std::string label;
  double score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedFeatures {
  /// Score descending; ties by node created_at, then id.
  std::vector<RankedEntry> entries;
  /// False when max_iterations ran out before the L1 change fell below
  /// tolerance. Entries still hold the last iterate, normalized.
  bool converged = true;
  int iterations = 0;

  friend bool operator==(const RankedFeatures&, const RankedFeatures&) = default;
};

/// Weighted PageRank with uniform teleport. A node's out-edges share its mass
/// in proportion to edge weight; nodes without out-edges spread their mass
/// uniformly. Since edges point from the less to the more preferred feature,
/// mass accumulates on features the user favours.
RankedFeatures rank(const PreferenceGraph& graph, const RankOptions& options = {});

inline constexpr std::size_t kBandCount = 5;

/// Display names of the five bands, most liked first.
inline constexpr std::array<std::string_view, kBandCount> kBandNames{
    "Very liked", "Fairly liked", "Neutral", "Fairly disliked", "Very disliked"};

/// Five ordered bands of feature labels.
struct PreferenceProfile {
  std::array<std::vector<std::string>, kBandCount> bands;

  [[nodiscard]] bool empty() const;
  /// All labels in band order.
  [[nodiscard]] std::vector<std::string> labels() const;

  [[nodiscard]] nlohmann::json to_json() const;
  static PreferenceProfile from_json(const nlohmann::json& j);

  friend bool operator==(const PreferenceProfile&, const PreferenceProfile&) = default;
};

/// Band sizes for n ranked features: repeatedly ceil(remaining / bands left).
std::array<std::size_t, kBandCount> band_sizes(std::size_t n);

/// Splits the rank order into five contiguous bands, top-down.
PreferenceProfile band(const RankedFeatures& ranked);

}  // namespace feedguard::graph
