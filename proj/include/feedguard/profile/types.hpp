#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedguard/common/clock.hpp"

namespace feedguard::profile {

using nlohmann::json;

/// One recommended piece of content as the feed delivered it.
struct Item {
  std::string id;
  std::string title;
  std::string summary;
  std::optional<std::string> category;
  /// Original record, kept verbatim.
  json raw;

  friend bool operator==(const Item&, const Item&) = default;
};

struct DisplayedItem {
  Item item;
  bool clicked = false;
  friend bool operator==(const DisplayedItem&, const DisplayedItem&) = default;
};

/// Items shown to one user at the same time, with click labels.
struct Impression {
  std::string impression_id;
  std::string user_id;
  Timestamp timestamp = 0;
  std::vector<DisplayedItem> displayed;

  friend bool operator==(const Impression&, const Impression&) = default;
};

/// A clicked item paired with an unclicked item from the same impression.
struct InteractionPair {
  Item pos;
  Item neg;
  std::string impression_id;
  Timestamp timestamp = 0;
};

struct PerceptionReport {
  std::string pos_reasons;
  std::string neg_reasons;
  std::uint64_t profile_version = 0;
};

struct FeatureExtraction {
  std::vector<std::string> pos_features;
  std::vector<std::string> neg_features;
  /// (pos feature, neg feature), the full Cartesian product in row-major order.
  std::vector<std::pair<std::string, std::string>> ordered_pairs;

  static FeatureExtraction from_features(std::vector<std::string> pos, std::vector<std::string> neg);
};

/// Throws Error(MalformedInput) on missing id/title.
Item item_from_json(const json& j);
json item_to_json(const Item& item);

/// Accepts {"impression_id","user_id","timestamp","displayed":[{"item":{...},"clicked":b}]}.
Impression impression_from_json(const json& j);
json impression_to_json(const Impression& impression);

}  // namespace feedguard::profile
