#include "feedguard/llm/stub_backend.hpp"

#include <algorithm>
#include <fstream>

#include "feedguard/common/error.hpp"
#include "feedguard/common/rng.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/stub_generators.hpp"

namespace feedguard::llm {

namespace {

constexpr double kGroupAnchorWeight = 4.0;

bool rule_fires(const StubRule& rule, const ChatRequest& request, const std::string& digest) {
  if (rule.digest && *rule.digest != digest) return false;
  for (const auto& fragment : rule.contains) {
    const bool found = std::any_of(request.messages.begin(), request.messages.end(),
                                   [&](const ChatMessage& m) { return text::contains(m.text, fragment); });
    if (!found) return false;
  }
  for (const auto& fragment : rule.last_contains) {
    if (!text::contains(request.messages.back().text, fragment)) return false;
  }
  return true;
}

std::string response_text(const json& j) {
  return j.is_string() ? j.get<std::string>() : j.dump();
}

std::vector<std::string> string_list(const json& j, std::string_view field) {
  std::vector<std::string> out;
  if (const auto it = j.find(field); it != j.end()) {
    for (const auto& v : *it) out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

StubBackend::StubBackend(Options options) : options_(options) {
  if (options_.embedding_dimension == 0) {
    throw Error(Errc::InvalidArgument, "embedding dimension must be positive");
  }
}

std::string StubBackend::digest(const ChatRequest& request) {
  json j = json::array();
  for (const auto& m : request.messages) {
    j.push_back({std::string(to_string(m.role)), m.text});
  }
  return text::sha256_hex(j.dump() + "#" + std::to_string(request.seed));
}

std::string StubBackend::chat(const ChatRequest& request) {
  const std::string key = request.script_key.value_or("");
  const auto script = scripts_.find(key);
  if (script != scripts_.end()) {
    const std::string d = digest(request);
    for (const auto& rule : script->second.rules) {
      if (rule_fires(rule, request, d)) return rule.response;
    }
  }
  if (const auto handler = handlers_.find(key); handler != handlers_.end()) {
    return handler->second(request);
  }
  if (script != scripts_.end()) {
    if (script->second.generator) {
      if (auto reply = stub::generate(*script->second.generator, request)) return *reply;
      throw Error(Errc::NoScript, "unknown stub generator " + *script->second.generator);
    }
    if (script->second.fallback) return *script->second.fallback;
  }
  throw Error(Errc::NoScript, "stub has no reply for key \"" + key + "\"");
}

std::vector<double> StubBackend::hash_vector(std::string_view key) const {
  Rng rng(derive_seed(options_.embedding_seed, key));
  std::vector<double> v(options_.embedding_dimension);
  for (auto& x : v) x = rng.uniform01() * 2.0 - 1.0;
  return v;
}

std::vector<double> StubBackend::embed(std::string_view raw) {
  const std::string norm = text::normalize(raw);
  if (norm.empty()) throw Error(Errc::EmptyText, "cannot embed empty text");
  auto v = hash_vector(norm);
  if (const auto it = embedding_anchor_.find(norm); it != embedding_anchor_.end()) {
    const auto anchor = hash_vector("group:" + it->second);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += kGroupAnchorWeight * anchor[i];
  }
  return v;
}

void StubBackend::add_script(StubScript script) {
  auto key = script.key;
  scripts_.insert_or_assign(std::move(key), std::move(script));
}

void StubBackend::set_handler(std::string key, Handler handler) {
  handlers_.insert_or_assign(std::move(key), std::move(handler));
}

void StubBackend::add_embedding_group(const std::vector<std::string>& labels) {
  if (labels.empty()) return;
  const std::string anchor = text::normalize(labels.front());
  for (const auto& label : labels) embedding_anchor_[text::normalize(label)] = anchor;
}

StubScript StubBackend::parse_script(const json& j) {
  StubScript script;
  script.key = j.at("key").get<std::string>();
  if (const auto it = j.find("rules"); it != j.end()) {
    for (const auto& r : *it) {
      StubRule rule;
      rule.contains = string_list(r, "contains");
      rule.last_contains = string_list(r, "last_contains");
      if (r.contains("digest")) rule.digest = r["digest"].get<std::string>();
      rule.response = response_text(r.at("response"));
      script.rules.push_back(std::move(rule));
    }
  }
  if (j.contains("generator")) script.generator = j["generator"].get<std::string>();
  if (j.contains("default")) script.fallback = response_text(j["default"]);
  return script;
}

void StubBackend::load_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::MissingFile, "cannot open stub script " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, "bad stub script " + file.string() + ": " + e.what());
  }
  try {
    if (j.contains("scripts") || j.contains("embedding_groups")) {
      for (const auto& s : j.value("scripts", json::array())) add_script(parse_script(s));
      for (const auto& g : j.value("embedding_groups", json::array())) {
        add_embedding_group(g.get<std::vector<std::string>>());
      }
    } else {
      add_script(parse_script(j));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedInput, "bad stub script " + file.string() + ": " + e.what());
  }
}

void StubBackend::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::MissingFile, "stub script directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) load_file(f);
}

}  // namespace feedguard::llm
