#include "feedguard/llm/schema.hpp"

#include "feedguard/common/text.hpp"

namespace feedguard::llm {

namespace {

std::optional<std::string> require_object(const json& j) {
  if (!j.is_object()) return "expected a JSON object";
  return std::nullopt;
}

std::optional<std::string> check_string_list(const json& j, std::string_view field,
                                             bool allow_empty) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_array()) {
    return "field \"" + std::string(field) + "\" must be an array of strings";
  }
  if (!allow_empty && it->empty()) {
    return "field \"" + std::string(field) + "\" must not be empty";
  }
  for (const auto& v : *it) {
    if (!v.is_string() || text::trim(v.get<std::string>()).empty()) {
      return "field \"" + std::string(field) + "\" must hold non-empty strings";
    }
  }
  return std::nullopt;
}

std::optional<std::string> check_nullable_string(const json& j, std::string_view field) {
  const auto it = j.find(field);
  if (it == j.end()) return "missing field \"" + std::string(field) + "\"";
  if (!it->is_null() && !it->is_string()) {
    return "field \"" + std::string(field) + "\" must be a string or null";
  }
  return std::nullopt;
}

}  // namespace

SchemaRegistry SchemaRegistry::builtin() {
  SchemaRegistry r;
  r.add({std::string(schemas::kTopicList), R"({"topics": ["<topic>", ...]})",
         [](const json& j) -> std::optional<std::string> {
           if (auto e = require_object(j)) return e;
           return check_string_list(j, "topics", false);
         }});
  r.add({std::string(schemas::kFilterVerdict), R"({"filter": true|false, "reason": "<short reason>"})",
         [](const json& j) -> std::optional<std::string> {
           if (auto e = require_object(j)) return e;
           if (!j.contains("filter") || !j["filter"].is_boolean()) {
             return "field \"filter\" must be a boolean";
           }
           if (j.contains("reason") && !j["reason"].is_string()) {
             return "field \"reason\" must be a string";
           }
           return std::nullopt;
         }});
  r.add({std::string(schemas::kFeatureList), R"({"features": ["<short feature>", ...]})",
         [](const json& j) -> std::optional<std::string> {
           if (auto e = require_object(j)) return e;
           return check_string_list(j, "features", true);
         }});
  r.add({std::string(schemas::kMergeDecision),
         R"({"merge": true|false, "targets": ["<listed feature>", ...], "merged_feature": "<label>"})",
         [](const json& j) -> std::optional<std::string> {
           if (auto e = require_object(j)) return e;
           if (!j.contains("merge") || !j["merge"].is_boolean()) {
             return "field \"merge\" must be a boolean";
           }
           if (!j["merge"].get<bool>()) return std::nullopt;
           if (auto e = check_string_list(j, "targets", false)) return e;
           if (j.contains("merged_feature") && !j["merged_feature"].is_string()) {
             return "field \"merged_feature\" must be a string";
           }
           return std::nullopt;
         }});
  r.add({std::string(schemas::kFilteringNeed), R"({"need": "<what the user wants to avoid>" | null})",
         [](const json& j) -> std::optional<std::string> {
           if (auto e = require_object(j)) return e;
           return check_nullable_string(j, "need");
         }});
  r.add({std::string(schemas::kRuleRelevance),
         R"({"related_rule_id": "<rule id>" | null, "merged_text": "<updated rule text>" | null})",
         [](const json& j) -> std::optional<std::string> {
           if (auto e = require_object(j)) return e;
           if (auto e = check_nullable_string(j, "related_rule_id")) return e;
           if (j["related_rule_id"].is_string()) {
             if (!j.contains("merged_text") || !j["merged_text"].is_string() ||
                 text::trim(j["merged_text"].get<std::string>()).empty()) {
               return "a related rule needs a non-empty \"merged_text\"";
             }
           }
           return std::nullopt;
         }});
  r.add({std::string(schemas::kPrediction), R"({"index": <candidate index>})",
         [](const json& j) -> std::optional<std::string> {
           if (auto e = require_object(j)) return e;
           if (!j.contains("index") || !j["index"].is_number_integer()) {
             return "field \"index\" must be an integer";
           }
           if (j["index"].get<long long>() < 0) return "field \"index\" must be non-negative";
           return std::nullopt;
         }});
  return r;
}

void SchemaRegistry::add(Schema schema) {
  auto name = schema.name;
  schemas_.insert_or_assign(std::move(name), std::move(schema));
}

const Schema* SchemaRegistry::find(std::string_view name) const {
  const auto it = schemas_.find(name);
  return it == schemas_.end() ? nullptr : &it->second;
}

std::optional<json> extract_json_object(std::string_view text) {
  auto parsed = json::parse(text, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  parsed = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

std::string format_instruction(const Schema& schema) {
  return "Respond with only a JSON object of the form " + schema.format + ".";
}

}  // namespace feedguard::llm
