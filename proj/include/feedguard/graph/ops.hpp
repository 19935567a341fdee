#pragma once

#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/graph/preference_graph.hpp"

namespace feedguard::graph {

// Journal entries for graph mutations. The profile pipeline records the ops it
// performed so the event log can replay them without calling a model again.

struct UpsertFeatureOp {
  std::string label;
  llm::Embedding embedding;
  Timestamp created_at = 0;
  friend bool operator==(const UpsertFeatureOp&, const UpsertFeatureOp&) = default;
};

struct AddEdgeOp {
  FeatureId neg;
  FeatureId pos;
  friend bool operator==(const AddEdgeOp&, const AddEdgeOp&) = default;
};

struct MergeFeaturesOp {
  FeatureId survivor;
  std::vector<FeatureId> absorbed;
  friend bool operator==(const MergeFeaturesOp&, const MergeFeaturesOp&) = default;
};

struct AbsorbLabelOp {
  FeatureId id;
  std::string label;
  friend bool operator==(const AbsorbLabelOp&, const AbsorbLabelOp&) = default;
};

struct DiscardSelfLoopOp {
  std::uint64_t weight = 0;
  friend bool operator==(const DiscardSelfLoopOp&, const DiscardSelfLoopOp&) = default;
};

using GraphOp = std::variant<UpsertFeatureOp, AddEdgeOp, MergeFeaturesOp, AbsorbLabelOp, DiscardSelfLoopOp>;

/// Applies one op. Returns the id touched (the upserted node for UpsertFeatureOp).
FeatureId apply(PreferenceGraph& graph, const GraphOp& op);

nlohmann::json op_to_json(const GraphOp& op);
GraphOp op_from_json(const nlohmann::json& j);

}  // namespace feedguard::graph
