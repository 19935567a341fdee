#include "feedguard/eval/mind.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"

namespace feedguard::eval {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::ifstream open_required(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "missing " + path.string());
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Timestamp parse_mind_time(std::string_view s) {
  static const std::regex pattern(R"(^\s*(\d{1,2})/(\d{1,2})/(\d{4})\s+(\d{1,2}):(\d{2}):(\d{2})\s*([AaPp][Mm])\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(s.begin(), s.end(), m, pattern)) {
    throw Error(Errc::MalformedInput, fmt::format("bad MIND time \"{}\"", s));
  }
  const int month = std::stoi(m[1].str());
  const int day = std::stoi(m[2].str());
  const int year = std::stoi(m[3].str());
  int hour = std::stoi(m[4].str());
  const int minute = std::stoi(m[5].str());
  const int second = std::stoi(m[6].str());
  const bool pm = m[7].str()[0] == 'P' || m[7].str()[0] == 'p';
  if (hour < 1 || hour > 12 || minute > 59 || second > 59) {
    throw Error(Errc::MalformedInput, fmt::format("bad MIND time \"{}\"", s));
  }
  hour = hour % 12 + (pm ? 12 : 0);
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw Error(Errc::MalformedInput, fmt::format("bad MIND date \"{}\"", s));
  const auto tp = std::chrono::sys_days{ymd} + std::chrono::hours{hour} + std::chrono::minutes{minute} +
                  std::chrono::seconds{second};
  return std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count();
}

MindDataset load_mind(const fs::path& dir) {
  MindDataset ds;
  {
    auto in = open_required(dir / kNewsFile);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      strip_cr(line);
      if (text::trim(line).empty()) continue;
      auto f = split_tabs(line);
      if (f.size() < 4) {
        throw Error(Errc::MalformedInput, fmt::format("{}:{}: expected at least 4 columns", kNewsFile, line_no));
      }
      Item item;
      item.id = f[0];
      item.category = f[1];
      item.title = f[3];
      item.summary = f.size() > 4 ? f[4] : "";
      item.raw = {{"subcategory", f[2]}, {"url", f.size() > 5 ? f[5] : ""}};
      if (item.id.empty()) throw Error(Errc::MalformedInput, fmt::format("{}:{}: empty news id", kNewsFile, line_no));
      ds.news_by_id.insert_or_assign(item.id, std::move(item));
    }
  }

  std::set<std::string> dangling;
  auto in = open_required(dir / kBehaviorsFile);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (text::trim(line).empty()) continue;
    auto f = split_tabs(line);
    if (f.size() < 5) {
      throw Error(Errc::MalformedInput, fmt::format("{}:{}: expected 5 columns", kBehaviorsFile, line_no));
    }
    const auto tokens = text::split(text::trim(f[4]), ' ');
    if (text::trim(f[4]).empty()) {
      spdlog::warn("{}:{}: impression {} lists no items; skipped", kBehaviorsFile, line_no, f[0]);
      ++ds.skipped_rows;
      continue;
    }
    Impression imp;
    imp.impression_id = f[0];
    imp.user_id = f[1];
    imp.timestamp = parse_mind_time(f[2]);
    for (const auto& token : tokens) {
      if (token.empty()) continue;
      const auto dash = token.rfind('-');
      if (dash == std::string::npos || dash == 0 || dash + 2 != token.size() ||
          (token[dash + 1] != '0' && token[dash + 1] != '1')) {
        throw Error(Errc::MalformedInput,
                    fmt::format("{}:{}: bad impression token \"{}\"", kBehaviorsFile, line_no, token));
      }
      const auto id = token.substr(0, dash);
      auto it = ds.news_by_id.find(id);
      if (it == ds.news_by_id.end()) {
        dangling.insert(id);
        continue;
      }
      imp.displayed.push_back({it->second, token[dash + 1] == '1'});
    }
    ds.behaviors.push_back(std::move(imp));
  }
  if (!dangling.empty()) {
    std::vector<std::string> ids(dangling.begin(), dangling.end());
    throw DanglingRefError("behaviors reference unknown news ids: " + text::join(ids, ", "), ids);
  }
  return ds;
}

std::string Bucket::label() const {
  return upper ? fmt::format("[{},{})", lower, *upper) : fmt::format("[{},inf)", lower);
}

std::vector<Bucket> bucket_bounds() {
  std::vector<Bucket> out;
  for (std::uint64_t lo = 0; lo < 100; lo += 10) out.push_back({lo, lo + 10});
  out.push_back({100, std::nullopt});
  return out;
}

std::map<std::string, std::uint64_t> clicks_per_user(const MindDataset& dataset) {
  std::map<std::string, std::uint64_t> clicks;
  for (const auto& imp : dataset.behaviors) {
    auto& c = clicks[imp.user_id];
    for (const auto& d : imp.displayed) c += d.clicked ? 1 : 0;
  }
  return clicks;
}

std::vector<Cohort> bucket_users(const MindDataset& dataset, std::uint64_t quota, std::uint64_t seed) {
  const auto clicks = clicks_per_user(dataset);
  std::vector<Cohort> cohorts;
  Rng rng(derive_seed(seed, "bucket_users"));
  for (const auto& bucket : bucket_bounds()) {
    Cohort cohort;
    cohort.bucket = bucket;
    std::vector<std::string> members;
    for (const auto& [user, n] : clicks) {
      if (bucket.contains(n)) members.push_back(user);
    }
    cohort.population = members.size();
    rng.shuffle(std::span<std::string>(members));
    for (auto& user : members) {
      if (cohort.clicks >= quota) break;
      cohort.clicks += clicks.at(user);
      cohort.users.push_back(std::move(user));
    }
    cohort.shortfall = cohort.clicks < quota;
    if (cohort.shortfall && cohort.population > 0) {
      spdlog::info("bucket {} has only {} clicks across {} users (quota {})", bucket.label(), cohort.clicks,
                   cohort.population, quota);
    }
    cohorts.push_back(std::move(cohort));
  }
  return cohorts;
}

std::vector<Impression> impressions_of(const MindDataset& dataset, const std::string& user_id) {
  std::vector<Impression> out;
  for (const auto& imp : dataset.behaviors) {
    if (imp.user_id == user_id) out.push_back(imp);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Impression& a, const Impression& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::optional<TrialSlate> make_trial(const Impression& impression, std::size_t k, Rng& rng) {
  if (k < 2) throw Error(Errc::InvalidArgument, "a slate needs at least two candidates");
  std::vector<const Item*> clicked;
  std::vector<const Item*> unclicked;
  for (const auto& d : impression.displayed) (d.clicked ? clicked : unclicked).push_back(&d.item);
  if (clicked.empty() || unclicked.size() < k - 1) return std::nullopt;

  const Item* positive = clicked[rng.uniform_index(clicked.size())];
  // Partial Fisher-Yates: the first k-1 slots become a uniform sample.
  for (std::size_t i = 0; i < k - 1; ++i) {
    std::swap(unclicked[i], unclicked[i + rng.uniform_index(unclicked.size() - i)]);
  }
  std::vector<const Item*> slate(unclicked.begin(), unclicked.begin() + static_cast<std::ptrdiff_t>(k - 1));
  slate.push_back(positive);
  rng.shuffle(std::span<const Item*>(slate));

  TrialSlate trial;
  trial.impression_id = impression.impression_id;
  for (std::size_t i = 0; i < slate.size(); ++i) {
    if (slate[i] == positive) trial.pos_index = i;
    trial.candidates.push_back(*slate[i]);
  }
  return trial;
}

}  // namespace feedguard::eval
