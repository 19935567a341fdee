#include "feedguard/graph/ops.hpp"

#include "feedguard/common/error.hpp"

namespace feedguard::graph {

using nlohmann::json;

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

FeatureId apply(PreferenceGraph& graph, const GraphOp& op) {
  return std::visit(
      overloaded{
          [&](const UpsertFeatureOp& o) { return graph.upsert_feature(o.label, o.embedding, o.created_at); },
          [&](const AddEdgeOp& o) {
            graph.add_preference_edge(o.neg, o.pos);
            return o.pos;
          },
          [&](const MergeFeaturesOp& o) {
            graph.merge_features(o.survivor, o.absorbed);
            return o.survivor;
          },
          [&](const AbsorbLabelOp& o) {
            graph.absorb_label(o.id, o.label);
            return o.id;
          },
          [&](const DiscardSelfLoopOp& o) {
            graph.discard_self_loop(o.weight);
            return FeatureId{};
          },
      },
      op);
}

json op_to_json(const GraphOp& op) {
  return std::visit(
      overloaded{
          [](const UpsertFeatureOp& o) {
            return json{{"op", "upsert"}, {"label", o.label}, {"embedding", o.embedding.values},
                        {"created_at", o.created_at}};
          },
          [](const AddEdgeOp& o) { return json{{"op", "edge"}, {"neg", o.neg}, {"pos", o.pos}}; },
          [](const MergeFeaturesOp& o) {
            return json{{"op", "merge"}, {"survivor", o.survivor}, {"absorbed", o.absorbed}};
          },
          [](const AbsorbLabelOp& o) { return json{{"op", "absorb"}, {"id", o.id}, {"label", o.label}}; },
          [](const DiscardSelfLoopOp& o) { return json{{"op", "discard"}, {"weight", o.weight}}; },
      },
      op);
}

GraphOp op_from_json(const json& j) {
  try {
    const auto kind = j.at("op").get<std::string>();
    if (kind == "upsert") {
      return UpsertFeatureOp{j.at("label").get<std::string>(),
                             llm::Embedding{j.at("embedding").get<std::vector<double>>()},
                             j.at("created_at").get<Timestamp>()};
    }
    if (kind == "edge") return AddEdgeOp{j.at("neg").get<std::string>(), j.at("pos").get<std::string>()};
    if (kind == "merge") {
      return MergeFeaturesOp{j.at("survivor").get<std::string>(),
                             j.at("absorbed").get<std::vector<std::string>>()};
    }
    if (kind == "absorb") return AbsorbLabelOp{j.at("id").get<std::string>(), j.at("label").get<std::string>()};
    if (kind == "discard") return DiscardSelfLoopOp{j.at("weight").get<std::uint64_t>()};
    throw Error(Errc::MalformedInput, "unknown graph op " + kind);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad graph op: ") + e.what());
  }
}

}  // namespace feedguard::graph
