#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/eval/mind.hpp"
#include "feedguard/llm/gateway.hpp"

namespace feedguard::eval {

using nlohmann::json;

/// Profile construction methods compared in the proxy task.
enum class Method {
  /// Five-band profile from the preference graph, profile-aware perception.
  Full,
  /// No user information at all.
  A,
  /// Raw titles of recently clicked items.
  B,
  /// Flat list of features extracted from clicked items only.
  C,
  /// Five-band profile built with perception that ignores the profile.
  D,
};

inline constexpr std::array<Method, 5> kAllMethods{Method::Full, Method::A, Method::B, Method::C, Method::D};

std::string_view to_string(Method m);
/// "full", "A".."D" (case-insensitive). Throws Error(UnknownMethod).
Method method_from_string(std::string_view s);

/// Most recent clicked titles shown by method B.
inline constexpr std::size_t kRawTitleWindow = 50;

/// A user's evolving profile under one method.
class MethodProfile {
 public:
  virtual ~MethodProfile() = default;
  /// The profile section placed at the top of the prediction prompt; empty
  /// for method A.
  [[nodiscard]] virtual std::string render() const = 0;
  /// Learns from one impression.
  virtual void observe(const Impression& impression) = 0;
  /// Incremented by every observe().
  [[nodiscard]] virtual std::uint64_t version() const = 0;
};

std::unique_ptr<MethodProfile> make_method_profile(Method method, llm::Gateway& gateway, std::uint64_t seed);

/// Prediction prompt for a slate; candidates are listed as "[i] title".
std::string prediction_prompt(const std::string& profile_section, const TrialSlate& slate);

struct ProxyStep {
  std::string impression_id;
  std::vector<std::string> candidate_ids;
  std::size_t pos_index = 0;
  /// Absent when the model gave no usable answer (the step is flagged).
  std::optional<std::size_t> predicted_index;
  bool correct = false;
  bool flagged = false;
  std::string error;
  /// Profile version the prediction saw, and the version after ingesting.
  std::uint64_t profile_version = 0;
  std::uint64_t version_after = 0;
};

struct ProxyTrace {
  std::string user_id;
  Method method = Method::Full;
  std::size_t k = 4;
  std::vector<ProxyStep> steps;
  /// Impressions that could not form a slate (still used for learning).
  std::size_t skipped_impressions = 0;
  double accuracy = 0.0;

  [[nodiscard]] std::size_t correct() const;
  [[nodiscard]] std::size_t flagged() const;
  [[nodiscard]] json to_json() const;
};

struct ProxyOptions {
  std::size_t k = 4;
  std::uint64_t seed = 0;
  /// Stop after this many scored steps; 0 means no limit.
  std::size_t max_steps = 0;
};

/// For each impression in order: build a slate, ask for the most likely
/// click, score it, then let the method learn from the impression.
ProxyTrace run_proxy(const std::string& user_id, const std::vector<Impression>& impressions, Method method,
                     llm::Gateway& gateway, const ProxyOptions& options);

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
};

struct PrecisionRecall {
  std::optional<double> precision;
  std::optional<double> recall;
};

/// precision = tp / (tp + fp), recall = tp / (tp + fn), each absent when its
/// denominator is zero.
PrecisionRecall confusion_metrics(const ConfusionMatrix& m);

struct AccuracyRow {
  std::string method;
  std::string bucket;
  std::size_t users = 0;
  std::size_t trials = 0;
  std::size_t correct = 0;
  std::size_t flagged = 0;
  [[nodiscard]] double accuracy() const { return trials == 0 ? 0.0 : static_cast<double>(correct) / trials; }
};

/// "method,bucket,users,trials,correct,flagged,accuracy" with a header line.
std::string accuracy_csv(const std::vector<AccuracyRow>& rows);

}  // namespace feedguard::eval
