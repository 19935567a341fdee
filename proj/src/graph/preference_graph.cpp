#include "feedguard/graph/preference_graph.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"

namespace feedguard::graph {

using nlohmann::json;

void PreferenceGraph::require(const FeatureId& id) const {
  if (!contains(id)) throw Error(Errc::UnknownFeature, "unknown feature id " + id);
}

const FeatureNode& PreferenceGraph::node(const FeatureId& id) const {
  require(id);
  return nodes_.at(id);
}

void PreferenceGraph::index_label(std::string_view label, const FeatureId& id) {
  label_index_.insert_or_assign(text::normalize(label), id);
}

FeatureId PreferenceGraph::upsert_feature(std::string_view label, llm::Embedding embedding,
                                          Timestamp created_at) {
  const std::string norm = text::normalize(label);
  if (norm.empty()) throw Error(Errc::EmptyLabel, "feature label is empty");
  if (const auto it = label_index_.find(norm); it != label_index_.end()) return it->second;
  FeatureNode n;
  n.id = fmt::format("f{:06}", next_ordinal_++);
  n.label = text::trim(label);
  n.embedding = std::move(embedding);
  n.created_at = created_at;
  const FeatureId id = n.id;
  nodes_.emplace(id, std::move(n));
  index_label(label, id);
  return id;
}

std::optional<FeatureId> PreferenceGraph::find_by_label(std::string_view label) const {
  const auto it = label_index_.find(text::normalize(label));
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

void PreferenceGraph::add_preference_edge(const FeatureId& neg, const FeatureId& pos) {
  require(neg);
  require(pos);
  if (neg == pos) throw Error(Errc::SelfEdge, "preference edge would be a self-loop on " + neg);
  ++edges_[{neg, pos}];
}

void PreferenceGraph::merge_features(const FeatureId& survivor, const std::vector<FeatureId>& absorbed) {
  require(survivor);
  for (const auto& id : absorbed) require(id);
  if (std::find(absorbed.begin(), absorbed.end(), survivor) != absorbed.end()) {
    throw Error(Errc::SurvivorAbsorbed, "survivor " + survivor + " is listed as absorbed");
  }
  const std::set<FeatureId> gone(absorbed.begin(), absorbed.end());
  auto remap = [&](const FeatureId& id) { return gone.count(id) != 0 ? survivor : id; };

  EdgeMap rebuilt;
  for (const auto& [key, weight] : edges_) {
    const FeatureId from = remap(key.first);
    const FeatureId to = remap(key.second);
    if (from == to) {
      discarded_ += weight;
    } else {
      rebuilt[{from, to}] += weight;
    }
  }
  edges_ = std::move(rebuilt);

  auto& keeper = nodes_.at(survivor);
  for (const auto& id : absorbed) {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) continue;  // listed twice
    keeper.absorbed_labels.push_back(it->second.label);
    for (auto& l : it->second.absorbed_labels) keeper.absorbed_labels.push_back(std::move(l));
    nodes_.erase(it);
  }
  for (auto& [label, owner] : label_index_) {
    if (gone.count(owner) != 0) owner = survivor;
  }
}

void PreferenceGraph::absorb_label(const FeatureId& id, std::string_view label) {
  require(id);
  const std::string trimmed = text::trim(label);
  if (trimmed.empty()) throw Error(Errc::EmptyLabel, "absorbed label is empty");
  if (const auto owner = find_by_label(trimmed)) {
    if (*owner == id) return;
    throw Error(Errc::InvalidArgument, "label \"" + trimmed + "\" already belongs to " + *owner);
  }
  nodes_.at(id).absorbed_labels.push_back(trimmed);
  index_label(trimmed, id);
}

void PreferenceGraph::discard_self_loop(std::uint64_t weight) { discarded_ += weight; }

std::uint64_t PreferenceGraph::edge_weight(const FeatureId& from, const FeatureId& to) const {
  const auto it = edges_.find({from, to});
  return it == edges_.end() ? 0 : it->second;
}

std::uint64_t PreferenceGraph::total_edge_weight() const {
  std::uint64_t total = 0;
  for (const auto& [key, w] : edges_) total += w;
  return total;
}

std::vector<const FeatureNode*> PreferenceGraph::nodes_by_creation() const {
  std::vector<const FeatureNode*> out;
  out.reserve(nodes_.size());
  for (const auto& [id, n] : nodes_) out.push_back(&n);
  std::stable_sort(out.begin(), out.end(), [](const FeatureNode* a, const FeatureNode* b) {
    return a->created_at != b->created_at ? a->created_at < b->created_at : a->id < b->id;
  });
  return out;
}

json PreferenceGraph::to_json() const {
  json nodes = json::array();
  for (const auto* n : nodes_by_creation()) {
    nodes.push_back({{"id", n->id},
                     {"label", n->label},
                     {"embedding", n->embedding.values},
                     {"created_at", n->created_at},
                     {"absorbed_labels", n->absorbed_labels}});
  }
  json edges = json::array();
  for (const auto& [key, w] : edges_) edges.push_back(json::array({key.first, key.second, w}));
  return {{"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"discarded_self_loop_weight", discarded_},
          {"next_ordinal", next_ordinal_}};
}

PreferenceGraph PreferenceGraph::from_json(const json& j) {
  PreferenceGraph g;
  try {
    for (const auto& jn : j.at("nodes")) {
      FeatureNode n;
      n.id = jn.at("id").get<std::string>();
      n.label = jn.at("label").get<std::string>();
      n.embedding.values = jn.at("embedding").get<std::vector<double>>();
      n.created_at = jn.at("created_at").get<Timestamp>();
      n.absorbed_labels = jn.value("absorbed_labels", std::vector<std::string>{});
      g.index_label(n.label, n.id);
      for (const auto& l : n.absorbed_labels) g.index_label(l, n.id);
      const FeatureId id = n.id;
      g.nodes_.emplace(id, std::move(n));
    }
    for (const auto& je : j.at("edges")) {
      const auto from = je.at(0).get<std::string>();
      const auto to = je.at(1).get<std::string>();
      const auto w = je.at(2).get<std::uint64_t>();
      if (from == to || w == 0 || !g.contains(from) || !g.contains(to)) {
        throw Error(Errc::MalformedInput, "invalid edge " + from + " -> " + to);
      }
      g.edges_[{from, to}] = w;
    }
    g.discarded_ = j.value("discarded_self_loop_weight", std::uint64_t{0});
    g.next_ordinal_ = j.value("next_ordinal", static_cast<std::uint64_t>(g.nodes_.size() + 1));
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad graph snapshot: ") + e.what());
  }
  return g;
}

}  // namespace feedguard::graph
