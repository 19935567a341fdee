#include "feedguard/profile/pipeline.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/prompts.hpp"

namespace feedguard::profile {

namespace {

std::string band_text(const graph::PreferenceProfile& profile, std::size_t band) {
  return text::join(profile.bands[band], ", ");
}

std::string perceive_prompt(const Item& item, bool interacted, const graph::PreferenceProfile& profile,
                            Perception perception) {
  const std::string have = interacted ? "have" : "have not";
  if (perception == Perception::Generic) {
    return text::render(llm::prompt_template("v1/perceive_generic"),
                        {{"title", text::quote(item.title)}, {"have_or_have_not", have}});
  }
  return text::render(llm::prompt_template("v1/perceive"),
                      {{"very_liked", band_text(profile, 0)},
                       {"fairly_liked", band_text(profile, 1)},
                       {"neutral", band_text(profile, 2)},
                       {"fairly_disliked", band_text(profile, 3)},
                       {"very_disliked", band_text(profile, 4)},
                       {"title", text::quote(item.title)},
                       {"have_or_have_not", have}});
}

std::vector<std::string> feature_labels(const json& parsed) {
  std::vector<std::string> out;
  std::vector<std::string> seen;
  for (const auto& f : parsed.at("features")) {
    std::string label = text::trim(f.get<std::string>());
    if (label.empty()) continue;
    std::string key = text::normalize(label);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(std::move(key));
    out.push_back(std::move(label));
  }
  return out;
}

std::vector<std::string> summarize_side(const Item& item, bool interacted, const std::string& reasons,
                                        llm::Gateway& gateway) {
  auto prompt = text::render(llm::prompt_template("v1/summary"),
                             {{"has_or_has_not", interacted ? "has" : "has not"},
                              {"title", text::quote(item.title)},
                              {"reasons", reasons}});
  auto response = gateway.complete_structured(llm::single_turn(llm::keys::kSummary, std::move(prompt)),
                                              llm::schemas::kFeatureList);
  return feature_labels(*response.parsed);
}

struct Candidate {
  graph::FeatureId id;
  double similarity = 0.0;
  Timestamp created_at = 0;
};

std::vector<Candidate> shortlist(const graph::PreferenceGraph& graph, const llm::Embedding& embedding,
                                 const ReflectOptions& options) {
  std::vector<Candidate> out;
  for (const auto& [id, node] : graph.nodes()) {
    if (node.embedding.dimension() != embedding.dimension()) continue;
    double sim = llm::cosine(node.embedding, embedding);
    if (sim >= options.similarity_threshold) out.push_back({id, sim, node.created_at});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return a.id < b.id;
  });
  if (out.size() > options.max_candidates) out.resize(options.max_candidates);
  return out;
}

// Asks whether `label` should join one or more shortlisted nodes. Returns the
// chosen node ids in the order the model gave them; empty means "keep apart".
std::vector<graph::FeatureId> merge_targets(const graph::PreferenceGraph& graph, const std::string& label,
                                            const std::vector<Candidate>& candidates, llm::Gateway& gateway) {
  std::map<std::string, graph::FeatureId, std::less<>> by_label;
  std::vector<std::string> lines;
  for (const auto& c : candidates) {
    const auto& node_label = graph.node(c.id).label;
    by_label.emplace(text::normalize(node_label), c.id);
    lines.push_back("- " + node_label);
  }
  auto prompt = text::render(llm::prompt_template("v1/reflect_merge"),
                             {{"feature", text::quote(label)}, {"feature_list", text::join(lines, "\n")}});
  auto known_targets = [&](const json& payload) -> std::optional<std::string> {
    if (!payload.value("merge", false)) return std::nullopt;
    for (const auto& t : payload.at("targets")) {
      if (!by_label.count(text::normalize(t.get<std::string>()))) {
        return fmt::format("target {} is not one of the listed features", t.dump());
      }
    }
    return std::nullopt;
  };
  auto response = gateway.complete_structured(llm::single_turn(llm::keys::kReflectMerge, std::move(prompt)),
                                              llm::schemas::kMergeDecision, known_targets);
  std::vector<graph::FeatureId> ids;
  if (!response.parsed->value("merge", false)) return ids;
  for (const auto& t : response.parsed->at("targets")) {
    const auto& id = by_label.find(text::normalize(t.get<std::string>()))->second;
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  return ids;
}

}  // namespace

std::vector<InteractionPair> sample_pairs(const Impression& impression, Rng& rng) {
  std::vector<const Item*> unclicked;
  for (const auto& d : impression.displayed) {
    if (!d.clicked) unclicked.push_back(&d.item);
  }
  std::vector<InteractionPair> pairs;
  if (unclicked.empty()) return pairs;
  for (const auto& d : impression.displayed) {
    if (!d.clicked) continue;
    const Item* neg = unclicked[rng.uniform_index(unclicked.size())];
    pairs.push_back({d.item, *neg, impression.impression_id, impression.timestamp});
  }
  return pairs;
}

PerceptionReport perceive(const InteractionPair& pair, const graph::PreferenceProfile& profile,
                          std::uint64_t profile_version, llm::Gateway& gateway, Perception perception) {
  PerceptionReport report;
  report.profile_version = profile_version;
  report.pos_reasons = gateway
                           .complete(llm::single_turn(llm::keys::kPerceive,
                                                      perceive_prompt(pair.pos, true, profile, perception)))
                           .text;
  report.neg_reasons = gateway
                           .complete(llm::single_turn(llm::keys::kPerceive,
                                                      perceive_prompt(pair.neg, false, profile, perception)))
                           .text;
  return report;
}

FeatureExtraction summarize(const InteractionPair& pair, const PerceptionReport& report, llm::Gateway& gateway) {
  auto pos = summarize_side(pair.pos, true, report.pos_reasons, gateway);
  auto neg = summarize_side(pair.neg, false, report.neg_reasons, gateway);
  if (pos.empty() || neg.empty()) {
    throw Error(Errc::ExtractionEmpty,
                fmt::format("no {} features for pair ({}, {})", pos.empty() ? "positive" : "negative",
                            pair.pos.id, pair.neg.id));
  }
  return FeatureExtraction::from_features(std::move(pos), std::move(neg));
}

std::vector<graph::GraphOp> reflect(graph::PreferenceGraph& graph, const FeatureExtraction& extraction,
                                    llm::Gateway& gateway, Timestamp now, const ReflectOptions& options) {
  std::vector<graph::GraphOp> ops;
  auto run = [&](graph::GraphOp op) {
    auto id = graph::apply(graph, op);
    ops.push_back(std::move(op));
    return id;
  };

  std::map<std::string, graph::FeatureId> resolved;
  auto resolve = [&](const std::string& label) {
    auto key = text::normalize(label);
    if (auto it = resolved.find(key); it != resolved.end()) return;
    if (auto existing = graph.find_by_label(label)) {
      resolved[key] = *existing;
      return;
    }
    auto embedding = gateway.embed(label);
    auto candidates = shortlist(graph, embedding, options);
    std::vector<graph::FeatureId> targets;
    if (!candidates.empty()) targets = merge_targets(graph, label, candidates, gateway);
    if (targets.empty()) {
      resolved[key] = run(graph::UpsertFeatureOp{label, std::move(embedding), now});
      return;
    }
    const auto survivor = targets.front();
    if (targets.size() > 1) {
      std::vector<graph::FeatureId> absorbed(targets.begin() + 1, targets.end());
      run(graph::MergeFeaturesOp{survivor, absorbed});
      for (auto& [k, id] : resolved) {
        if (std::find(absorbed.begin(), absorbed.end(), id) != absorbed.end()) id = survivor;
      }
    }
    run(graph::AbsorbLabelOp{survivor, label});
    resolved[key] = survivor;
  };

  for (const auto& label : extraction.pos_features) resolve(label);
  for (const auto& label : extraction.neg_features) resolve(label);

  for (const auto& [pos, neg] : extraction.ordered_pairs) {
    const auto& pos_id = resolved.at(text::normalize(pos));
    const auto& neg_id = resolved.at(text::normalize(neg));
    if (pos_id == neg_id) {
      run(graph::DiscardSelfLoopOp{1});
    } else {
      run(graph::AddEdgeOp{neg_id, pos_id});
    }
  }
  return ops;
}

json ProfileState::to_json() const {
  json skipped_json = json::array();
  for (const auto& s : skipped) {
    skipped_json.push_back(
        {{"impression_id", s.impression_id}, {"pos_id", s.pos_id}, {"neg_id", s.neg_id}, {"error", s.error}});
  }
  return {{"user_id", user_id},     {"graph", graph.to_json()},
          {"version", version},     {"ingested", ingested},
          {"watermark", watermark}, {"skipped", std::move(skipped_json)}};
}

ProfileState ProfileState::from_json(const json& j) {
  ProfileState state;
  state.user_id = j.at("user_id").get<std::string>();
  state.graph = graph::PreferenceGraph::from_json(j.at("graph"));
  state.version = j.at("version").get<std::uint64_t>();
  state.ingested = j.at("ingested").get<std::set<std::string>>();
  state.watermark = j.at("watermark").get<Timestamp>();
  for (const auto& s : j.at("skipped")) {
    state.skipped.push_back({s.at("impression_id").get<std::string>(), s.at("pos_id").get<std::string>(),
                             s.at("neg_id").get<std::string>(), s.at("error").get<std::string>()});
  }
  state.ranked = graph::rank(state.graph);
  state.profile = graph::band(state.ranked);
  return state;
}

json IngestOutcome::to_json() const {
  json ops_json = json::array();
  for (const auto& op : ops) ops_json.push_back(graph::op_to_json(op));
  json skipped_json = json::array();
  for (const auto& s : skipped) {
    skipped_json.push_back({{"pos_id", s.pos_id}, {"neg_id", s.neg_id}, {"error", s.error}});
  }
  return {{"impression_id", impression_id},
          {"user_id", user_id},
          {"timestamp", timestamp},
          {"ops", std::move(ops_json)},
          {"skipped", std::move(skipped_json)},
          {"pairs", pairs},
          {"profile_version_used", profile_version_used}};
}

IngestOutcome IngestOutcome::from_json(const json& j) {
  IngestOutcome out;
  out.impression_id = j.at("impression_id").get<std::string>();
  out.user_id = j.at("user_id").get<std::string>();
  out.timestamp = j.at("timestamp").get<Timestamp>();
  for (const auto& op : j.at("ops")) out.ops.push_back(graph::op_from_json(op));
  for (const auto& s : j.at("skipped")) {
    out.skipped.push_back({out.impression_id, s.at("pos_id").get<std::string>(), s.at("neg_id").get<std::string>(),
                           s.at("error").get<std::string>()});
  }
  out.pairs = j.at("pairs").get<std::size_t>();
  out.profile_version_used = j.at("profile_version_used").get<std::uint64_t>();
  return out;
}

void apply_outcome(ProfileState& state, const IngestOutcome& outcome, const graph::RankOptions& rank_options) {
  if (state.user_id.empty()) state.user_id = outcome.user_id;
  for (const auto& op : outcome.ops) graph::apply(state.graph, op);
  state.ingested.insert(outcome.impression_id);
  state.watermark = std::max(state.watermark, outcome.timestamp);
  state.skipped.insert(state.skipped.end(), outcome.skipped.begin(), outcome.skipped.end());
  ++state.version;
  state.ranked = graph::rank(state.graph, rank_options);
  if (!state.ranked.converged) {
    spdlog::warn("ranking for user {} did not converge after {} iterations", state.user_id,
                 state.ranked.iterations);
  }
  state.profile = graph::band(state.ranked);
}

ProfileBuilder::ProfileBuilder(llm::Gateway& gateway, BuilderOptions options)
    : gateway_(gateway), options_(std::move(options)) {}

IngestOutcome ProfileBuilder::process(const ProfileState& state, const Impression& impression,
                                      Timestamp now) const {
  if (!state.user_id.empty() && state.user_id != impression.user_id) {
    throw Error(Errc::WrongUser, fmt::format("impression {} belongs to {}, profile is {}", impression.impression_id,
                                             impression.user_id, state.user_id));
  }
  if (state.ingested.count(impression.impression_id)) {
    throw Error(Errc::DuplicateImpression, "impression " + impression.impression_id + " was already ingested");
  }

  IngestOutcome outcome;
  outcome.impression_id = impression.impression_id;
  outcome.user_id = impression.user_id;
  outcome.timestamp = impression.timestamp;
  outcome.profile_version_used = state.version;

  Rng rng(derive_seed(options_.seed, impression.impression_id));
  auto pairs = sample_pairs(impression, rng);
  outcome.pairs = pairs.size();

  graph::PreferenceGraph working = state.graph;
  for (const auto& pair : pairs) {
    try {
      auto report = perceive(pair, state.profile, state.version, gateway_, options_.perception);
      auto extraction = summarize(pair, report, gateway_);
      graph::PreferenceGraph candidate = working;
      auto ops = reflect(candidate, extraction, gateway_, now, options_.reflect);
      working = std::move(candidate);
      outcome.ops.insert(outcome.ops.end(), std::make_move_iterator(ops.begin()),
                         std::make_move_iterator(ops.end()));
    } catch (const Error& e) {
      if (!is_gateway_error(e.code()) && e.code() != Errc::ExtractionEmpty) throw;
      spdlog::warn("skipping pair ({}, {}) of impression {}: {}", pair.pos.id, pair.neg.id,
                   impression.impression_id, e.what());
      outcome.skipped.push_back({impression.impression_id, pair.pos.id, pair.neg.id, e.what()});
    }
  }
  return outcome;
}

bool ProfileBuilder::ingest_impression(ProfileState& state, const Impression& impression, Timestamp now) const {
  IngestOutcome outcome;
  try {
    outcome = process(state, impression, now);
  } catch (const Error& e) {
    if (e.code() != Errc::DuplicateImpression) throw;
    spdlog::warn("{}; ignoring", e.what());
    return false;
  }
  apply_outcome(state, outcome, options_.rank);
  return true;
}

}  // namespace feedguard::profile
