#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "feedguard/llm/backend.hpp"

namespace feedguard::llm {

/// One scripted reply. A rule fires when every `contains` fragment occurs
/// somewhere in the conversation, every `last_contains` fragment occurs in the
/// final message, and `digest` (if set) equals the request digest.
struct StubRule {
  std::vector<std::string> contains;
  std::vector<std::string> last_contains;
  std::optional<std::string> digest;
  std::string response;
};

struct StubScript {
  std::string key;
  std::vector<StubRule> rules;
  /// Built-in generator used when no rule fires (see stub_generators.hpp).
  std::optional<std::string> generator;
  std::optional<std::string> fallback;
};

/// Deterministic backend for tests and benchmarks.
///
/// A reply is a pure function of (script key, message digest, seed): rules are
/// tried in order, then a registered handler, then the script's generator, then
/// its fallback. Anything else is Error(NoScript). Embeddings are seeded hashes
/// of the normalized text; labels registered in one embedding group share an
/// anchor direction so they land close together (cosine ~0.94).
///
/// Configure before use; concurrent chat()/embed() calls are safe once loading
/// is done.
class StubBackend final : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  struct Options {
    std::size_t embedding_dimension = 64;
    std::uint64_t embedding_seed = 0x5eed;
  };

  StubBackend() : StubBackend(Options{}) {}
  explicit StubBackend(Options options);

  [[nodiscard]] std::string id() const override { return "stub"; }
  std::string chat(const ChatRequest& request) override;
  std::vector<double> embed(std::string_view text) override;

  void add_script(StubScript script);
  void set_handler(std::string key, Handler handler);
  void add_embedding_group(const std::vector<std::string>& labels);

  /// Loads every *.json file in a directory, in file-name order.
  void load_directory(const std::filesystem::path& dir);
  /// A file holds one script object, or {"scripts": [...], "embedding_groups": [[...]]}.
  void load_file(const std::filesystem::path& file);

  static StubScript parse_script(const json& j);

  /// SHA-256 over the ordered (role, text) pairs and the seed.
  static std::string digest(const ChatRequest& request);

 private:
  std::vector<double> hash_vector(std::string_view key) const;

  Options options_;
  std::map<std::string, StubScript, std::less<>> scripts_;
  std::map<std::string, Handler, std::less<>> handlers_;
  std::map<std::string, std::string, std::less<>> embedding_anchor_;
};

}  // namespace feedguard::llm
