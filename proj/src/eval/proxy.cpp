#include "feedguard/eval/proxy.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/prompts.hpp"
#include "feedguard/needs/conversation.hpp"
#include "feedguard/profile/pipeline.hpp"

namespace feedguard::eval {

namespace {

class NoProfile final : public MethodProfile {
 public:
  [[nodiscard]] std::string render() const override { return {}; }
  void observe(const Impression&) override { ++version_; }
  [[nodiscard]] std::uint64_t version() const override { return version_; }

 private:
  std::uint64_t version_ = 0;
};

class RawTitles final : public MethodProfile {
 public:
  [[nodiscard]] std::string render() const override {
    if (titles_.empty()) return "The user has not clicked any question yet.\n\n";
    std::string out = "Questions the user clicked before, most recent last:\n";
    for (const auto& t : titles_) out += "- " + text::quote(t) + "\n";
    return out + "\n";
  }
  void observe(const Impression& impression) override {
    for (const auto& d : impression.displayed) {
      if (!d.clicked) continue;
      titles_.push_back(d.item.title);
      if (titles_.size() > kRawTitleWindow) titles_.pop_front();
    }
    ++version_;
  }
  [[nodiscard]] std::uint64_t version() const override { return version_; }

 private:
  std::deque<std::string> titles_;
  std::uint64_t version_ = 0;
};

class ClickedFeatures final : public MethodProfile {
 public:
  explicit ClickedFeatures(llm::Gateway& gateway) : gateway_(gateway) {}

  [[nodiscard]] std::string render() const override {
    if (features_.empty()) return "No features of clicked questions are known yet.\n\n";
    return "Features of questions the user clicked before: " + text::join(features_, ", ") + "\n\n";
  }
  void observe(const Impression& impression) override {
    for (const auto& d : impression.displayed) {
      if (!d.clicked) continue;
      auto prompt = text::render(llm::prompt_template("v1/extract_features"),
                                 {{"title", text::quote(d.item.title)}, {"summary", text::quote(d.item.summary)}});
      try {
        auto response = gateway_.complete_structured(
            llm::single_turn(llm::keys::kExtractFeatures, std::move(prompt)), llm::schemas::kFeatureList);
        for (const auto& f : response.parsed->at("features")) {
          auto label = text::trim(f.get<std::string>());
          if (!label.empty() && seen_.insert(text::normalize(label)).second) features_.push_back(std::move(label));
        }
      } catch (const Error& e) {
        if (!is_gateway_error(e.code())) throw;
        spdlog::warn("feature extraction for {} failed: {}", d.item.id, e.what());
      }
    }
    ++version_;
  }
  [[nodiscard]] std::uint64_t version() const override { return version_; }

 private:
  llm::Gateway& gateway_;
  std::vector<std::string> features_;
  std::set<std::string> seen_;
  std::uint64_t version_ = 0;
};

class GraphProfile final : public MethodProfile {
 public:
  GraphProfile(llm::Gateway& gateway, profile::Perception perception, std::uint64_t seed)
      : builder_(gateway, profile::BuilderOptions{perception, {}, {}, seed}) {}

  [[nodiscard]] std::string render() const override {
    return "Preference profile of the user:\n" + needs::render_profile(state_.profile) + "\n\n";
  }
  void observe(const Impression& impression) override {
    if (!builder_.ingest_impression(state_, impression, impression.timestamp)) ++state_.version;
  }
  [[nodiscard]] std::uint64_t version() const override { return state_.version; }

 private:
  profile::ProfileBuilder builder_;
  profile::ProfileState state_;
};

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Full: return "full";
    case Method::A: return "A";
    case Method::B: return "B";
    case Method::C: return "C";
    case Method::D: return "D";
  }
  return "full";
}

Method method_from_string(std::string_view s) {
  const auto key = text::normalize(s);
  if (key == "full") return Method::Full;
  if (key == "a") return Method::A;
  if (key == "b") return Method::B;
  if (key == "c") return Method::C;
  if (key == "d") return Method::D;
  throw Error(Errc::UnknownMethod, fmt::format("unknown method \"{}\"; use full, A, B, C or D", s));
}

std::unique_ptr<MethodProfile> make_method_profile(Method method, llm::Gateway& gateway, std::uint64_t seed) {
  switch (method) {
    case Method::Full: return std::make_unique<GraphProfile>(gateway, profile::Perception::Personalized, seed);
    case Method::A: return std::make_unique<NoProfile>();
    case Method::B: return std::make_unique<RawTitles>();
    case Method::C: return std::make_unique<ClickedFeatures>(gateway);
    case Method::D: return std::make_unique<GraphProfile>(gateway, profile::Perception::Generic, seed);
  }
  throw Error(Errc::UnknownMethod, "unknown method");
}

std::string prediction_prompt(const std::string& profile_section, const TrialSlate& slate) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < slate.candidates.size(); ++i) {
    lines.push_back(fmt::format("[{}] {}", i, text::quote(slate.candidates[i].title)));
  }
  return text::render(llm::prompt_template("v1/predict"),
                      {{"profile_section", profile_section},
                       {"k", std::to_string(slate.candidates.size())},
                       {"candidates", text::join(lines, "\n")}});
}

std::size_t ProxyTrace::correct() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.correct; }));
}

std::size_t ProxyTrace::flagged() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.flagged; }));
}

json ProxyTrace::to_json() const {
  json steps_json = json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"impression_id", s.impression_id},
                          {"candidates", s.candidate_ids},
                          {"pos_index", s.pos_index},
                          {"predicted_index", s.predicted_index ? json(*s.predicted_index) : json(nullptr)},
                          {"correct", s.correct},
                          {"flagged", s.flagged},
                          {"error", s.error},
                          {"profile_version", s.profile_version},
                          {"version_after", s.version_after}});
  }
  return {{"user_id", user_id},
          {"method", to_string(method)},
          {"k", k},
          {"accuracy", accuracy},
          {"correct", correct()},
          {"flagged", flagged()},
          {"skipped_impressions", skipped_impressions},
          {"steps", std::move(steps_json)}};
}

ProxyTrace run_proxy(const std::string& user_id, const std::vector<Impression>& impressions, Method method,
                     llm::Gateway& gateway, const ProxyOptions& options) {
  ProxyTrace trace;
  trace.user_id = user_id;
  trace.method = method;
  trace.k = options.k;
  const auto user_seed = derive_seed(options.seed, user_id);
  auto profile = make_method_profile(method, gateway, user_seed);

  for (const auto& impression : impressions) {
    if (options.max_steps > 0 && trace.steps.size() >= options.max_steps) break;
    Rng rng(derive_seed(user_seed, "slate/" + impression.impression_id));
    auto slate = make_trial(impression, options.k, rng);
    if (slate) {
      ProxyStep step;
      step.impression_id = impression.impression_id;
      step.pos_index = slate->pos_index;
      for (const auto& c : slate->candidates) step.candidate_ids.push_back(c.id);
      step.profile_version = profile->version();

      const auto k = slate->candidates.size();
      auto in_range = [k](const json& payload) -> std::optional<std::string> {
        if (payload.at("index").get<std::int64_t>() >= static_cast<std::int64_t>(k)) {
          return fmt::format("index must be below {}", k);
        }
        return std::nullopt;
      };
      auto request = llm::single_turn(llm::keys::kPredict, prediction_prompt(profile->render(), *slate),
                                      static_cast<std::int64_t>(derive_seed(user_seed, impression.impression_id) >> 1));
      try {
        auto response = gateway.complete_structured(std::move(request), llm::schemas::kPrediction, in_range);
        step.predicted_index = response.parsed->at("index").get<std::size_t>();
        step.correct = *step.predicted_index == step.pos_index;
      } catch (const Error& e) {
        if (!is_gateway_error(e.code())) throw;
        step.flagged = true;
        step.error = e.what();
        spdlog::warn("prediction for {} / {} failed: {}", user_id, impression.impression_id, e.what());
      }
      profile->observe(impression);
      step.version_after = profile->version();
      trace.steps.push_back(std::move(step));
    } else {
      ++trace.skipped_impressions;
      profile->observe(impression);
    }
  }
  trace.accuracy = trace.steps.empty() ? 0.0 : static_cast<double>(trace.correct()) / trace.steps.size();
  return trace;
}

PrecisionRecall confusion_metrics(const ConfusionMatrix& m) {
  PrecisionRecall out;
  if (m.tp + m.fp > 0) out.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) out.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return out;
}

std::string accuracy_csv(const std::vector<AccuracyRow>& rows) {
  std::string out = "method,bucket,users,trials,correct,flagged,accuracy\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{:.4f}\n", r.method, r.bucket, r.users, r.trials, r.correct, r.flagged,
                       r.accuracy());
  }
  return out;
}

}  // namespace feedguard::eval
