#include "feedguard/eval/planted.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/rng.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/graph/ranking.hpp"
#include "feedguard/llm/prompts.hpp"
#include "feedguard/llm/stub_generators.hpp"

namespace feedguard::eval {

namespace {

using nlohmann::json;

const std::vector<std::string> kContentWords{"astronomy", "cooking", "football", "finance", "gardening", "history",
                                             "music",     "travel",  "chemistry", "painting", "cycling", "poetry"};
const std::vector<std::string> kStyleWords{"interview", "guide", "opinion", "review"};

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const llm::ChatMessage& first_user(const llm::ChatRequest& request) {
  for (const auto& m : request.messages) {
    if (m.role == llm::Role::User) return m;
  }
  throw Error(Errc::NoScript, "request has no user message");
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string with_article(const std::string& word) {
  const bool vowel = !word.empty() && std::string_view("aeiou").find(word[0]) != std::string_view::npos;
  return (vowel ? "an " : "a ") + word;
}

std::string title_of(const std::string& style, const std::string& a, const std::string& b) {
  return fmt::format("{} on {} and {}", capitalized(style), a, b);
}

// Vocabulary words of `text` in order of first appearance.
std::vector<std::string> vocabulary_in(const PlantedWorld& world, std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : tokens(text)) {
    const bool known = std::find(world.content.begin(), world.content.end(), t) != world.content.end() ||
                       std::find(world.styles.begin(), world.styles.end(), t) != world.styles.end();
    if (known && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

std::string perceive(const PlantedWorld& world, const llm::ChatRequest& request) {
  const auto& prompt = first_user(request).text;
  const auto title = llm::stub::first_quoted(prompt).value_or("");
  const bool aware = text::contains(prompt, "preference information");
  const bool clicked = !text::contains(prompt, "have not interacted");
  const auto content = text::join(world.content_of(title), " and ");
  const auto style = world.style_of(title);
  if (aware) {
    return clicked ? "I clicked it because I enjoy reading about " + content + "."
                   : "I skipped it because " + content + " do not interest me.";
  }
  return fmt::format("I {} it because it is {} and it covers {}.", clicked ? "clicked" : "skipped",
                     with_article(style), content);
}

std::string summarize(const PlantedWorld& world, const llm::ChatRequest& request) {
  const auto& prompt = first_user(request).text;
  auto at = prompt.find("provided:");
  auto features = vocabulary_in(world, at == std::string::npos ? prompt : std::string_view(prompt).substr(at));
  return json{{"features", features}}.dump();
}

std::string extract(const PlantedWorld& world, const llm::ChatRequest& request) {
  const auto title = llm::stub::first_quoted(first_user(request).text).value_or("");
  return json{{"features", world.content_of(title)}}.dump();
}

std::string predict(const PlantedWorld& world, const llm::ChatRequest& request) {
  const auto& prompt = first_user(request).text;
  static const std::regex candidate_line(R"(^\[(\d+)\] (.*)$)", std::regex::multiline);
  std::vector<std::string> candidates;
  for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), candidate_line); it != std::sregex_iterator();
       ++it) {
    candidates.push_back((*it)[2].str());
  }
  if (candidates.empty()) throw Error(Errc::NoScript, "prediction prompt lists no candidates");

  std::map<std::string, double> score;
  const auto lines = text::split(prompt, '\n');
  if (text::contains(prompt, "Preference profile of the user:")) {
    std::vector<std::string> order;
    for (const auto& line : lines) {
      for (const auto& band : graph::kBandNames) {
        const auto prefix = std::string(band) + ": ";
        if (line.rfind(prefix, 0) != 0) continue;
        for (const auto& label : text::split(line.substr(prefix.size()), ',')) {
          auto l = text::normalize(label);
          if (!l.empty() && l != "(none)") order.push_back(l);
        }
      }
    }
    const double mid = order.empty() ? 0.0 : (static_cast<double>(order.size()) - 1.0) / 2.0;
    for (std::size_t i = 0; i < order.size(); ++i) score[order[i]] = mid - static_cast<double>(i);
  } else if (text::contains(prompt, "Questions the user clicked before")) {
    for (const auto& line : lines) {
      if (line.rfind("- ", 0) != 0) continue;
      for (const auto& w : vocabulary_in(world, line)) score[w] += 1.0;
    }
  } else if (text::contains(prompt, "Features of questions the user clicked before:")) {
    for (const auto& line : lines) {
      if (!text::contains(line, "Features of questions the user clicked before:")) continue;
      for (const auto& w : vocabulary_in(world, line.substr(line.find(':') + 1))) score[w] = 1.0;
    }
  }

  std::vector<double> totals;
  for (const auto& c : candidates) {
    double total = 0.0;
    for (const auto& w : vocabulary_in(world, c)) {
      if (auto it = score.find(w); it != score.end()) total += it->second;
    }
    totals.push_back(total);
  }
  const double best = *std::max_element(totals.begin(), totals.end());
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    if (totals[i] == best) tied.push_back(i);
  }
  return json{{"index", tied[llm::stub::request_hash(request) % tied.size()]}}.dump();
}

}  // namespace

int PlantedWorld::utility(const profile::Item& item) const {
  int total = 0;
  for (const auto& f : content_of(item.title)) total += weights.at(f);
  return total;
}

std::vector<std::string> PlantedWorld::content_of(std::string_view title) const {
  std::vector<std::string> out;
  for (const auto& t : tokens(title)) {
    if (weights.count(t) && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

std::string PlantedWorld::style_of(std::string_view title) const {
  for (const auto& t : tokens(title)) {
    if (std::find(styles.begin(), styles.end(), t) != styles.end()) return t;
  }
  return {};
}

PlantedWorld make_planted_world(const PlantedOptions& options) {
  if (options.content_features < 3 || options.content_features > kContentWords.size()) {
    throw Error(Errc::InvalidArgument, fmt::format("content_features must be in [3, {}]", kContentWords.size()));
  }
  if (options.items_per_impression < 2) throw Error(Errc::InvalidArgument, "impressions need at least two items");
  const std::size_t n = options.content_features;
  if (options.items_per_impression > n * (n - 1) / 2) {
    throw Error(Errc::InvalidArgument, "more items per impression than distinct feature pairs");
  }

  PlantedWorld world;
  world.content.assign(kContentWords.begin(), kContentWords.begin() + static_cast<std::ptrdiff_t>(n));
  world.styles = kStyleWords;
  Rng rng(derive_seed(options.seed, "planted-world"));
  std::vector<int> ranks(n);
  for (std::size_t i = 0; i < n; ++i) ranks[i] = static_cast<int>(i) + 1;
  rng.shuffle(std::span<int>(ranks));
  for (std::size_t i = 0; i < n; ++i) world.weights[world.content[i]] = ranks[i];

  for (std::size_t imp = 0; imp < options.impressions; ++imp) {
    profile::Impression impression;
    impression.impression_id = fmt::format("P{}", imp + 1);
    impression.user_id = world.user_id;
    impression.timestamp = 1'700'000'000'000 + static_cast<Timestamp>(imp) * 60'000;
    for (;;) {
      impression.displayed.clear();
      std::set<std::pair<std::size_t, std::size_t>> pairs;
      while (impression.displayed.size() < options.items_per_impression) {
        std::size_t a = rng.uniform_index(n);
        std::size_t b = rng.uniform_index(n);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!pairs.insert({a, b}).second) continue;
        const auto& style = world.styles[rng.uniform_index(world.styles.size())];
        profile::Item item;
        item.id = fmt::format("{}-{}", impression.impression_id, impression.displayed.size() + 1);
        item.title = title_of(style, world.content[a], world.content[b]);
        item.summary = capitalized(with_article(style)) + fmt::format(" about {} and {}.", world.content[a], world.content[b]);
        item.raw = {{"features", {world.content[a], world.content[b]}}, {"style", style}};
        impression.displayed.push_back({std::move(item), false});
      }
      std::vector<int> utilities;
      for (const auto& d : impression.displayed) utilities.push_back(world.utility(d.item));
      const auto best = std::max_element(utilities.begin(), utilities.end());
      if (std::count(utilities.begin(), utilities.end(), *best) != 1) continue;
      impression.displayed[static_cast<std::size_t>(best - utilities.begin())].clicked = true;
      break;
    }
    world.impressions.push_back(std::move(impression));
  }
  return world;
}

void install_planted_handlers(llm::StubBackend& backend, std::shared_ptr<const PlantedWorld> world) {
  backend.set_handler(std::string(llm::keys::kPerceive),
                      [world](const llm::ChatRequest& r) { return perceive(*world, r); });
  backend.set_handler(std::string(llm::keys::kSummary),
                      [world](const llm::ChatRequest& r) { return summarize(*world, r); });
  backend.set_handler(std::string(llm::keys::kExtractFeatures),
                      [world](const llm::ChatRequest& r) { return extract(*world, r); });
  backend.set_handler(std::string(llm::keys::kReflectMerge),
                      [](const llm::ChatRequest&) { return json{{"merge", false}}.dump(); });
  backend.set_handler(std::string(llm::keys::kPredict),
                      [world](const llm::ChatRequest& r) { return predict(*world, r); });
}

}  // namespace feedguard::eval
