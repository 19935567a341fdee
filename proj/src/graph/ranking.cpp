#include "feedguard/graph/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "feedguard/common/error.hpp"

namespace feedguard::graph {

using nlohmann::json;

RankedFeatures rank(const PreferenceGraph& graph, const RankOptions& options) {
  RankedFeatures result;
  const auto order = graph.nodes_by_creation();
  const std::size_t n = order.size();
  if (n == 0) return result;

  std::unordered_map<FeatureId, std::size_t> index;
  index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) index.emplace(order[i]->id, i);

  struct InEdge {
    std::size_t from;
    double weight;
  };
  std::vector<std::vector<InEdge>> incoming(n);
  std::vector<double> out_weight(n, 0.0);
  for (const auto& [key, w] : graph.edges()) {
    const std::size_t from = index.at(key.first);
    const std::size_t to = index.at(key.second);
    incoming[to].push_back({from, static_cast<double>(w)});
    out_weight[from] += static_cast<double>(w);
  }

  const double d = options.damping;
  const double uniform = 1.0 / static_cast<double>(n);
  std::vector<double> score(n, uniform);
  std::vector<double> next(n, 0.0);
  result.converged = false;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out_weight[i] == 0.0) dangling += score[i];
    }
    const double base = (1.0 - d) * uniform + d * dangling * uniform;
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (const auto& e : incoming[v]) acc += score[e.from] * e.weight / out_weight[e.from];
      next[v] = base + d * acc;
      delta += std::abs(next[v] - score[v]);
    }
    score.swap(next);
    result.iterations = iter;
    if (delta < options.tolerance) {
      result.converged = true;
      break;
    }
  }

  double total = 0.0;
  for (double s : score) total += s;
  result.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.entries.push_back({order[i]->id, order[i]->label, score[i] / total});
  }
  // `order` is already (created_at, id) ascending, so a stable sort on score
  // alone applies the tie-break.
  std::stable_sort(result.entries.begin(), result.entries.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
  return result;
}

std::array<std::size_t, kBandCount> band_sizes(std::size_t n) {
  std::array<std::size_t, kBandCount> sizes{};
  std::size_t remaining = n;
  for (std::size_t b = 0; b < kBandCount; ++b) {
    const std::size_t bands_left = kBandCount - b;
    sizes[b] = (remaining + bands_left - 1) / bands_left;
    remaining -= sizes[b];
  }
  return sizes;
}

PreferenceProfile band(const RankedFeatures& ranked) {
  PreferenceProfile profile;
  const auto sizes = band_sizes(ranked.entries.size());
  std::size_t next = 0;
  for (std::size_t b = 0; b < kBandCount; ++b) {
    for (std::size_t k = 0; k < sizes[b]; ++k) {
      profile.bands[b].push_back(ranked.entries[next++].label);
    }
  }
  return profile;
}

bool PreferenceProfile::empty() const {
  return std::all_of(bands.begin(), bands.end(), [](const auto& b) { return b.empty(); });
}

std::vector<std::string> PreferenceProfile::labels() const {
  std::vector<std::string> out;
  for (const auto& b : bands) out.insert(out.end(), b.begin(), b.end());
  return out;
}

json PreferenceProfile::to_json() const {
  json j = json::array();
  for (std::size_t b = 0; b < kBandCount; ++b) {
    j.push_back({{"name", std::string(kBandNames[b])}, {"features", bands[b]}});
  }
  return j;
}

PreferenceProfile PreferenceProfile::from_json(const json& j) {
  PreferenceProfile p;
  if (!j.is_array() || j.size() != kBandCount) {
    throw Error(Errc::MalformedInput, "profile must have exactly five bands");
  }
  for (std::size_t b = 0; b < kBandCount; ++b) {
    p.bands[b] = j[b].at("features").get<std::vector<std::string>>();
  }
  return p;
}

}  // namespace feedguard::graph
