#include "feedguard/llm/stub_generators.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "feedguard/common/text.hpp"
#include "feedguard/llm/schema.hpp"
#include "feedguard/llm/stub_backend.hpp"

namespace feedguard::llm::stub {

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words{
      "about", "after", "again", "also", "been", "before", "being", "could", "does", "from",
      "have", "here", "into", "just", "like", "more", "most", "much", "only", "other", "over",
      "should", "some", "such", "than", "that", "their", "them", "then", "there", "these",
      "they", "this", "those", "very", "want", "what", "when", "where", "which", "while",
      "with", "would", "your", "content", "related", "containing", "elements", "things",
      "question", "questions", "see", "dont"};
  return words;
}

const ChatMessage* last_user(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == Role::User) return &*it;
  }
  return nullptr;
}

/// The user message that opened the exchange, skipping correction turns.
const ChatMessage* first_user(const ChatRequest& request) {
  for (const auto& m : request.messages) {
    if (m.role == Role::User) return &m;
  }
  return nullptr;
}

std::string uniform_choice(const ChatRequest& request) {
  const ChatMessage* prompt = first_user(request);
  std::size_t k = 0;
  if (prompt != nullptr) {
    static const std::regex candidate(R"(^\[(\d+)\])", std::regex::multiline);
    for (auto it = std::sregex_iterator(prompt->text.begin(), prompt->text.end(), candidate);
         it != std::sregex_iterator(); ++it) {
      ++k;
    }
  }
  if (k == 0) k = 1;
  return json{{"index", request_hash(request) % k}}.dump();
}

std::string word_list(const ChatRequest& request, std::string_view field, std::size_t limit) {
  const ChatMessage* prompt = last_user(request);
  std::vector<std::string> words;
  if (prompt != nullptr) {
    if (auto quoted = first_quoted(prompt->text)) words = content_words(*quoted);
  }
  if (words.size() > limit) words.resize(limit);
  if (words.empty()) words.emplace_back("general");
  return json{{std::string(field), words}}.dump();
}

std::string topic_overlap(const ChatRequest& request) {
  std::vector<std::set<std::string>> topic_sets;
  for (const auto& m : request.messages) {
    if (m.role != Role::Assistant) continue;
    auto parsed = extract_json_object(m.text);
    if (!parsed || !parsed->contains("topics")) continue;
    std::set<std::string> words;
    for (const auto& t : (*parsed)["topics"]) {
      if (!t.is_string()) continue;
      for (auto& w : content_words(t.get<std::string>())) words.insert(std::move(w));
    }
    topic_sets.push_back(std::move(words));
  }
  bool shared = false;
  if (topic_sets.size() >= 2) {
    for (const auto& w : topic_sets[0]) {
      if (topic_sets[1].count(w) != 0) {
        shared = true;
        break;
      }
    }
  }
  return json{{"filter", shared},
              {"reason", shared ? "the question shares topics with the rule"
                                : "no topic of the question matches the rule"}}
      .dump();
}

std::string echo_reasons(const ChatRequest& request) {
  const ChatMessage* prompt = first_user(request);
  const std::string title =
      prompt != nullptr ? first_quoted(prompt->text).value_or("this question") : "this question";
  const bool clicked = prompt != nullptr && !text::contains(prompt->text, "have not interacted");
  return clicked ? "I was drawn to " + text::quote(title) + " because its subject interests me."
                 : "I skipped " + text::quote(title) + " because its subject did not interest me.";
}

std::string echo_need(const ChatRequest& request) {
  const ChatMessage* prompt = last_user(request);
  if (prompt == nullptr) return json{{"need", nullptr}}.dump();
  // The detect-need prompt carries the round as "User: ..." / "Assistant: ..." lines.
  std::string user_line;
  for (const auto& line : text::split(prompt->text, '\n')) {
    if (line.rfind("User: ", 0) == 0) {
      user_line = text::trim(line.substr(6));
      break;
    }
  }
  const std::string lower = text::normalize(user_line);
  if (text::contains(lower, "do not want") || text::contains(lower, "don't want")) {
    return json{{"need", user_line}}.dump();
  }
  return json{{"need", nullptr}}.dump();
}

}  // namespace

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 4 && stopwords().count(current) == 0 &&
        std::find(out.begin(), out.end(), current) == out.end()) {
      out.push_back(current);
    }
    current.clear();
  };
  for (char c : s) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) != 0) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (c != '\'') {
      flush();
    }
  }
  flush();
  return out;
}

std::optional<std::string> first_quoted(std::string_view s) {
  const auto open = s.find('"');
  if (open == std::string_view::npos) return std::nullopt;
  const auto close = s.find('"', open + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(s.substr(open + 1, close - open - 1));
}

std::uint64_t request_hash(const ChatRequest& request) {
  return std::stoull(StubBackend::digest(request).substr(0, 16), nullptr, 16);
}

std::optional<std::string> generate(std::string_view name, const ChatRequest& request) {
  if (name == "uniform_choice") return uniform_choice(request);
  if (name == "title_keywords") return word_list(request, "features", 2);
  if (name == "keyword_topics") return word_list(request, "topics", 3);
  if (name == "topic_overlap") return topic_overlap(request);
  if (name == "echo_reasons") return echo_reasons(request);
  if (name == "echo_need") return echo_need(request);
  if (name == "no_merge") return json{{"merge", false}}.dump();
  if (name == "no_relation") {
    return json{{"related_rule_id", nullptr}, {"merged_text", nullptr}}.dump();
  }
  return std::nullopt;
}

}  // namespace feedguard::llm::stub
