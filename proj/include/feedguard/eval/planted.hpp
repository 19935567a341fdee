#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "feedguard/llm/stub_backend.hpp"
#include "feedguard/profile/types.hpp"

namespace feedguard::eval {

/// A synthetic user with known tastes. Every item is about two content
/// features and is written in one style; the user values content features
/// with distinct integer weights, ignores style, and in every impression
/// clicks the item with the highest total weight (generation guarantees a
/// unique maximum).
struct PlantedWorld {
  std::string user_id = "planted-user";
  std::vector<std::string> content;
  std::vector<std::string> styles;
  std::map<std::string, int> weights;
  std::vector<profile::Impression> impressions;

  [[nodiscard]] int utility(const profile::Item& item) const;
  /// Content features in an item's title, in title order.
  [[nodiscard]] std::vector<std::string> content_of(std::string_view title) const;
  /// Style word of a title, empty if none.
  [[nodiscard]] std::string style_of(std::string_view title) const;
};

struct PlantedOptions {
  std::size_t content_features = 8;
  std::size_t items_per_impression = 6;
  std::size_t impressions = 200;
  std::uint64_t seed = 0;
};

PlantedWorld make_planted_world(const PlantedOptions& options);

/// Registers handlers that answer every pipeline prompt the way a careful
/// reader of this world would:
///  - perceive: the profile-aware prompt gets the item's content features as
///    the reason; the generic prompt also cites the item's style;
///  - summary / extract-features: the vocabulary words of the reasons / title;
///  - reflect-merge: never merges;
///  - predict: scores candidates from whatever the profile section offers
///    (band order, clicked-title word counts, or a flat feature list) and
///    breaks ties, or answers without a profile, by request hash.
void install_planted_handlers(llm::StubBackend& backend, std::shared_ptr<const PlantedWorld> world);

}  // namespace feedguard::eval
