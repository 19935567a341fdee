#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/common/rng.hpp"
#include "feedguard/graph/preference_graph.hpp"
#include "feedguard/graph/ranking.hpp"
#include "feedguard/llm/gateway.hpp"
#include "feedguard/llm/stub_backend.hpp"
#include "feedguard/profile/types.hpp"
#include "feedguard/service/app.hpp"

namespace feedguard::fgtest {

std::filesystem::path data_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Stub backend loaded with the bundled scripts.
std::shared_ptr<llm::StubBackend> bundled_stub();
std::shared_ptr<llm::Gateway> stub_gateway(std::shared_ptr<llm::StubBackend> backend = bundled_stub());

llm::Embedding unit_vector(std::size_t dimension, std::size_t axis);

profile::Item item(const std::string& id, const std::string& title, const std::string& summary = "");
profile::Impression impression(const std::string& id, const std::string& user,
                               const std::vector<std::pair<std::string, bool>>& titles, Timestamp ts = 0);

std::vector<nlohmann::json> demo_impressions();
nlohmann::json demo_feed();

/// Random graph with up to `max_nodes` nodes and `max_edges` edge increments.
graph::PreferenceGraph random_graph(Rng& rng, std::size_t max_nodes, std::size_t max_edges);

/// Weighted PageRank solved directly as a linear system (Gaussian elimination
/// with partial pivoting), keyed by node id.
std::map<std::string, double> dense_pagerank(const graph::PreferenceGraph& graph, double damping = 0.85);

/// L1 distance between a ranking and the oracle.
double l1_distance(const graph::RankedFeatures& ranked, const std::map<std::string, double>& oracle);

service::AppOptions deterministic_options(std::uint64_t seed = 42);
std::shared_ptr<Clock> fixed_clock();

/// 50 demo impressions, two rules, a 20-item feed, and one profile
/// conversation that ends in a confirmed Add.
void run_e2e_scenario(service::App& app);

/// Steps that each commit exactly one event; 200 of them.
std::vector<std::function<void(service::App&)>> event_script();

std::string read_file(const std::filesystem::path& file);

}  // namespace feedguard::fgtest
