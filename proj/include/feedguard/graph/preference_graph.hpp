#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/common/clock.hpp"
#include "feedguard/llm/types.hpp"

namespace feedguard::graph {

using FeatureId = std::string;

struct FeatureNode {
  FeatureId id;
  std::string label;
  llm::Embedding embedding;
  Timestamp created_at = 0;
  /// Labels of features merged into this node, oldest first.
  std::vector<std::string> absorbed_labels;

  friend bool operator==(const FeatureNode&, const FeatureNode&) = default;
};

/// Weighted directed graph over feature nodes. An edge (neg -> pos) with
/// weight w records that the user preferred `pos` over `neg` w times.
///
/// Invariants: no self-loops, every edge endpoint exists, all weights >= 1.
/// Weight that a merge would turn into a self-loop is dropped from the edge set
/// and accumulated in discarded_self_loop_weight(), so
/// total_edge_weight() + discarded_self_loop_weight() only ever grows by the
/// evidence added.
///
/// Node ids are assigned from an internal counter ("f000001", ...), so applying
/// the same mutations in the same order always yields the same ids.
class PreferenceGraph {
 public:
  using EdgeMap = std::map<std::pair<FeatureId, FeatureId>, std::uint64_t>;

  /// Returns the id of the node whose normalized label or absorbed label
  /// equals `label`, or inserts a new node. Throws Error(EmptyLabel).
  FeatureId upsert_feature(std::string_view label, llm::Embedding embedding, Timestamp created_at);

  /// Node whose label or absorbed labels match `label` after normalization.
  [[nodiscard]] std::optional<FeatureId> find_by_label(std::string_view label) const;

  /// Increments weight(neg -> pos). Throws Error(SelfEdge) / Error(UnknownFeature).
  void add_preference_edge(const FeatureId& neg, const FeatureId& pos);

  /// Folds `absorbed` into `survivor`: edges are re-pointed (weights summed on
  /// collision, would-be self-loops discarded), labels appended to the
  /// survivor's absorbed labels, absorbed nodes removed.
  /// Throws Error(UnknownFeature) / Error(SurvivorAbsorbed).
  void merge_features(const FeatureId& survivor, const std::vector<FeatureId>& absorbed);

  /// Records `label` as an alias of an existing node.
  void absorb_label(const FeatureId& id, std::string_view label);

  /// Accounts for preference evidence that landed on a single node.
  void discard_self_loop(std::uint64_t weight);

  [[nodiscard]] bool contains(const FeatureId& id) const { return nodes_.count(id) != 0; }
  /// Throws Error(UnknownFeature).
  [[nodiscard]] const FeatureNode& node(const FeatureId& id) const;
  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
  [[nodiscard]] std::uint64_t edge_weight(const FeatureId& from, const FeatureId& to) const;
  [[nodiscard]] std::uint64_t total_edge_weight() const;
  [[nodiscard]] std::uint64_t discarded_self_loop_weight() const noexcept { return discarded_; }

  [[nodiscard]] const std::map<FeatureId, FeatureNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const EdgeMap& edges() const noexcept { return edges_; }

  /// Nodes ordered by (created_at, id).
  [[nodiscard]] std::vector<const FeatureNode*> nodes_by_creation() const;

  [[nodiscard]] nlohmann::json to_json() const;
  static PreferenceGraph from_json(const nlohmann::json& j);

  /// Structural equality; the label lookup index is derived state.
  friend bool operator==(const PreferenceGraph& a, const PreferenceGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.discarded_ == b.discarded_ &&
           a.next_ordinal_ == b.next_ordinal_;
  }

 private:
  void require(const FeatureId& id) const;
  void index_label(std::string_view label, const FeatureId& id);

  std::map<FeatureId, FeatureNode> nodes_;
  EdgeMap edges_;
  std::uint64_t discarded_ = 0;
  std::uint64_t next_ordinal_ = 1;
  std::map<std::string, FeatureId, std::less<>> label_index_;
};

}  // namespace feedguard::graph
