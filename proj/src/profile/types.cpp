#include "feedguard/profile/types.hpp"

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"

namespace feedguard::profile {

FeatureExtraction FeatureExtraction::from_features(std::vector<std::string> pos,
                                                   std::vector<std::string> neg) {
  FeatureExtraction fx;
  fx.pos_features = std::move(pos);
  fx.neg_features = std::move(neg);
  fx.ordered_pairs.reserve(fx.pos_features.size() * fx.neg_features.size());
  for (const auto& p : fx.pos_features) {
    for (const auto& n : fx.neg_features) fx.ordered_pairs.emplace_back(p, n);
  }
  return fx;
}

Item item_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::MalformedInput, "item must be an object");
  Item item;
  try {
    item.id = j.at("id").get<std::string>();
    item.title = j.at("title").get<std::string>();
    item.summary = j.value("summary", std::string{});
    if (j.contains("category") && j["category"].is_string()) item.category = j["category"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad item: ") + e.what());
  }
  if (text::trim(item.id).empty()) throw Error(Errc::MalformedInput, "item id is empty");
  if (text::trim(item.title).empty()) throw Error(Errc::MalformedInput, "item " + item.id + " has no title");
  item.raw = j.contains("raw") ? j["raw"] : json(nullptr);
  return item;
}

json item_to_json(const Item& item) {
  json j{{"id", item.id}, {"title", item.title}, {"summary", item.summary}};
  if (item.category) j["category"] = *item.category;
  if (!item.raw.is_null()) j["raw"] = item.raw;
  return j;
}

Impression impression_from_json(const json& j) {
  Impression imp;
  try {
    imp.impression_id = j.at("impression_id").get<std::string>();
    imp.user_id = j.at("user_id").get<std::string>();
    imp.timestamp = j.value("timestamp", Timestamp{0});
    for (const auto& d : j.at("displayed")) {
      imp.displayed.push_back({item_from_json(d.at("item")), d.value("clicked", false)});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad impression: ") + e.what());
  }
  if (imp.impression_id.empty()) throw Error(Errc::MalformedInput, "impression id is empty");
  if (imp.displayed.empty()) throw Error(Errc::MalformedInput, "impression " + imp.impression_id + " shows no items");
  return imp;
}

json impression_to_json(const Impression& impression) {
  json displayed = json::array();
  for (const auto& d : impression.displayed) {
    displayed.push_back({{"item", item_to_json(d.item)}, {"clicked", d.clicked}});
  }
  return {{"impression_id", impression.impression_id},
          {"user_id", impression.user_id},
          {"timestamp", impression.timestamp},
          {"displayed", std::move(displayed)}};
}

}  // namespace feedguard::profile
