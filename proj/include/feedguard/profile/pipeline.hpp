#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "feedguard/common/rng.hpp"
#include "feedguard/graph/ops.hpp"
#include "feedguard/graph/ranking.hpp"
#include "feedguard/llm/gateway.hpp"
#include "feedguard/profile/types.hpp"

namespace feedguard::profile {

/// One pair per clicked item; the negative is drawn uniformly from the
/// unclicked items of the same impression. Empty when either side is missing.
std::vector<InteractionPair> sample_pairs(const Impression& impression, Rng& rng);

enum class Perception {
  /// The perceive prompt carries the user's five-band profile.
  Personalized,
  /// Same prompt without any preference information.
  Generic,
};

/// Asks the model, in the user's voice, why `pos` was clicked and `neg` was
/// not. Gateway failures propagate.
PerceptionReport perceive(const InteractionPair& pair, const graph::PreferenceProfile& profile,
                          std::uint64_t profile_version, llm::Gateway& gateway,
                          Perception perception = Perception::Personalized);

/// Distills the reasons into pos/neg feature labels and their Cartesian
/// product. Throws Error(ExtractionEmpty) if either side comes back empty.
FeatureExtraction summarize(const InteractionPair& pair, const PerceptionReport& report,
                            llm::Gateway& gateway);

struct ReflectOptions {
  double similarity_threshold = 0.85;
  std::size_t max_candidates = 8;
};

/// Integrates an extraction into `graph`: each feature is matched by label,
/// else shortlisted by embedding similarity and confirmed with a merge query,
/// else inserted. Every ordered pair then adds one neg -> pos edge (a pair that
/// resolves to a single node is counted as discarded self-loop weight).
/// Returns the ops applied, in order.
std::vector<graph::GraphOp> reflect(graph::PreferenceGraph& graph, const FeatureExtraction& extraction,
                                    llm::Gateway& gateway, Timestamp now,
                                    const ReflectOptions& options = {});

struct SkippedPair {
  std::string impression_id;
  std::string pos_id;
  std::string neg_id;
  std::string error;
  friend bool operator==(const SkippedPair&, const SkippedPair&) = default;
};

/// Per-user profile state. `ranked` and `profile` are derived from `graph`.
struct ProfileState {
  std::string user_id;
  graph::PreferenceGraph graph;
  graph::RankedFeatures ranked;
  graph::PreferenceProfile profile;
  std::uint64_t version = 0;
  std::set<std::string> ingested;
  Timestamp watermark = 0;
  std::vector<SkippedPair> skipped;

  [[nodiscard]] json to_json() const;
  static ProfileState from_json(const json& j);

  friend bool operator==(const ProfileState&, const ProfileState&) = default;
};

/// Everything needed to replay one ingest without calling a model.
struct IngestOutcome {
  std::string impression_id;
  std::string user_id;
  Timestamp timestamp = 0;
  std::vector<graph::GraphOp> ops;
  std::vector<SkippedPair> skipped;
  std::size_t pairs = 0;
  /// Profile version every perceive call of this impression saw.
  std::uint64_t profile_version_used = 0;

  [[nodiscard]] json to_json() const;
  static IngestOutcome from_json(const json& j);
};

/// Folds an outcome into the state: graph ops, idempotency key, watermark,
/// version bump, re-rank and re-band.
void apply_outcome(ProfileState& state, const IngestOutcome& outcome,
                   const graph::RankOptions& rank_options = {});

struct BuilderOptions {
  Perception perception = Perception::Personalized;
  ReflectOptions reflect;
  graph::RankOptions rank;
  /// Master seed; each impression samples with a seed derived from its id.
  std::uint64_t seed = 0;
};

/// Drives the perceive/summarize/reflect pipeline for a single user.
class ProfileBuilder {
 public:
  explicit ProfileBuilder(llm::Gateway& gateway, BuilderOptions options = {});

  /// Runs the pipeline against a copy of the graph; `state` is not modified.
  /// A pair whose model calls fail is skipped and reported in the outcome.
  /// Throws Error(DuplicateImpression) and Error(WrongUser).
  [[nodiscard]] IngestOutcome process(const ProfileState& state, const Impression& impression,
                                      Timestamp now) const;

  /// process() + apply_outcome(). A replayed impression id is logged and
  /// ignored; returns false in that case.
  bool ingest_impression(ProfileState& state, const Impression& impression, Timestamp now) const;

  [[nodiscard]] const BuilderOptions& options() const noexcept { return options_; }

 private:
  llm::Gateway& gateway_;
  BuilderOptions options_;
};

}  // namespace feedguard::profile
