#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "feedguard/common/rng.hpp"
#include "feedguard/profile/types.hpp"

namespace feedguard::eval {

using profile::Impression;
using profile::Item;

/// MIND-format dataset: news.tsv (id, category, subcategory, title, abstract,
/// url, title entities, abstract entities) and behaviors.tsv (impression id,
/// user id, time, history, impressions as "N1-1 N2-0 ...").
struct MindDataset {
  std::map<std::string, Item> news_by_id;
  /// In file order.
  std::vector<Impression> behaviors;
  std::size_t skipped_rows = 0;
};

inline constexpr const char* kNewsFile = "news.tsv";
inline constexpr const char* kBehaviorsFile = "behaviors.tsv";

/// Throws Error(MissingFile), Error(MalformedInput), and DanglingRefError
/// listing every impression item id that has no news row. Rows with an empty
/// impression column are skipped with a warning.
MindDataset load_mind(const std::filesystem::path& dir);

/// "11/11/2019 9:05:58 AM" -> milliseconds since the epoch (UTC).
Timestamp parse_mind_time(std::string_view s);

/// Click-count interval [lower, upper); upper absent for the open last bucket.
struct Bucket {
  std::uint64_t lower = 0;
  std::optional<std::uint64_t> upper;
  [[nodiscard]] std::string label() const;
  [[nodiscard]] bool contains(std::uint64_t clicks) const {
    return clicks >= lower && (!upper || clicks < *upper);
  }
  friend bool operator==(const Bucket&, const Bucket&) = default;
};

/// [0,10), [10,20), ..., [90,100), [100,inf).
std::vector<Bucket> bucket_bounds();

struct Cohort {
  Bucket bucket;
  /// Users in the bucket.
  std::size_t population = 0;
  /// Users drawn, in draw order.
  std::vector<std::string> users;
  /// Clicks of the drawn users.
  std::uint64_t clicks = 0;
  /// Every user was drawn and the quota was still not reached.
  bool shortfall = false;
};

/// Clicks per user over the impression logs.
std::map<std::string, std::uint64_t> clicks_per_user(const MindDataset& dataset);

/// Groups users by click count and draws users from each bucket in seeded
/// random order until their clicks reach `quota`.
std::vector<Cohort> bucket_users(const MindDataset& dataset, std::uint64_t quota = 10000, std::uint64_t seed = 0);

/// A user's impressions in chronological order (ties keep file order).
std::vector<Impression> impressions_of(const MindDataset& dataset, const std::string& user_id);

struct TrialSlate {
  std::vector<Item> candidates;
  std::size_t pos_index = 0;
  std::string impression_id;
};

/// The clicked item (one drawn at random if several) plus k-1 unclicked items
/// sampled without replacement, in shuffled order. Absent when the impression
/// has no click or fewer than k-1 unclicked items. Throws for k < 2.
std::optional<TrialSlate> make_trial(const Impression& impression, std::size_t k, Rng& rng);

}  // namespace feedguard::eval
