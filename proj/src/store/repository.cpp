#include "feedguard/store/repository.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"

namespace feedguard::store {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

[[noreturn]] void throw_write_error(const fs::path& path, int err) {
  throw Error(Errc::StorageFull, fmt::format("cannot write {}: {}", path.string(), std::strerror(err)));
}

void write_all(int fd, const fs::path& path, std::string_view data) {
  while (!data.empty()) {
    auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_write_error(path, errno);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

class Fd {
 public:
  Fd(const fs::path& path, int flags) : fd_(::open(path.c_str(), flags, 0644)) {
    if (fd_ < 0) throw_write_error(path, errno);
  }
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  [[nodiscard]] int get() const { return fd_; }

 private:
  int fd_;
};

struct SnapshotFile {
  std::uint64_t seq = 0;
  fs::path path;
};

std::vector<SnapshotFile> list_snapshots(const fs::path& dir) {
  std::vector<SnapshotFile> out;
  const auto snap_dir = dir / kSnapshotDir;
  if (!fs::is_directory(snap_dir)) return out;
  for (const auto& entry : fs::directory_iterator(snap_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    const auto stem = entry.path().stem().string();
    if (stem.empty() || stem.find_first_not_of("0123456789") != std::string::npos) continue;
    out.push_back({std::stoull(stem), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq > b.seq; });
  return out;
}

}  // namespace

std::vector<Event> read_events(const fs::path& dir, bool* torn_tail, std::uintmax_t* valid_bytes) {
  if (torn_tail) *torn_tail = false;
  if (valid_bytes) *valid_bytes = 0;
  std::vector<Event> events;
  const auto path = dir / kEventsFile;
  if (!fs::exists(path)) return events;
  const auto data = read_file(path);

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < data.size()) {
    ++line_no;
    const auto end = data.find('\n', pos);
    const bool complete = end != std::string::npos;
    const std::string_view line(data.data() + pos, (complete ? end : data.size()) - pos);
    const std::size_t next = complete ? end + 1 : data.size();
    const bool last = next >= data.size();

    std::optional<Event> event;
    std::string problem;
    if (!complete) {
      problem = "line has no terminating newline";
    } else {
      try {
        event = Event::from_json(json::parse(line));
        if (event->seq != events.size() + 1) {
          throw Error(Errc::CorruptLog,
                      fmt::format("{}:{}: seq {} where {} was expected", path.string(), line_no, event->seq,
                                  events.size() + 1));
        }
      } catch (const json::exception& e) {
        problem = e.what();
      } catch (const Error& e) {
        if (e.code() == Errc::CorruptLog) throw;
        problem = e.what();
      }
    }
    if (!problem.empty()) {
      if (!last) {
        throw Error(Errc::CorruptLog, fmt::format("{}:{}: unreadable event: {}", path.string(), line_no, problem));
      }
      spdlog::warn("discarding torn final record of {} (line {}): {}", path.string(), line_no, problem);
      if (torn_tail) *torn_tail = true;
      break;
    }
    events.push_back(std::move(*event));
    pos = next;
    if (valid_bytes) *valid_bytes = pos;
  }
  return events;
}

LoadResult load_state(const fs::path& dir) {
  LoadResult result;
  auto events = read_events(dir, &result.torn_tail, &result.valid_bytes);
  const std::uint64_t log_seq = events.size();

  for (const auto& snap : list_snapshots(dir)) {
    if (snap.seq > log_seq) {
      spdlog::warn("ignoring snapshot {} beyond the end of the log (seq {})", snap.path.string(), log_seq);
      continue;
    }
    try {
      auto j = json::parse(read_file(snap.path));
      auto state = AppState::from_json(j.at("state"));
      if (j.at("up_to_seq").get<std::uint64_t>() != snap.seq || state.last_seq != snap.seq) {
        throw Error(Errc::CorruptLog, "snapshot seq does not match its name");
      }
      result.state = std::move(state);
      result.snapshot_seq = snap.seq;
      break;
    } catch (const std::exception& e) {
      spdlog::warn("ignoring unreadable snapshot {}: {}", snap.path.string(), e.what());
    }
  }

  const std::uint64_t start = result.snapshot_seq.value_or(0);
  for (const auto& event : events) {
    if (event.seq <= start) continue;
    try {
      apply_event(result.state, event);
    } catch (const Error& e) {
      if (e.code() == Errc::CorruptLog) throw;
      throw Error(Errc::CorruptLog, fmt::format("event {} ({}) does not apply: {}", event.seq, event.kind, e.what()));
    }
    ++result.replayed;
  }
  result.last_seq = result.state.last_seq;
  return result;
}

Repository::Repository(fs::path dir, StoreOptions options) : dir_(std::move(dir)), options_(options) {
  std::error_code ec;
  fs::create_directories(dir_ / kSnapshotDir, ec);
  if (ec) throw Error(Errc::StorageFull, fmt::format("cannot create {}: {}", dir_.string(), ec.message()));
  load_info_ = load_state(dir_);
  state_ = load_info_.state;
  if (load_info_.torn_tail) {
    fs::resize_file(dir_ / kEventsFile, load_info_.valid_bytes, ec);
    if (ec) throw Error(Errc::StorageFull, "cannot truncate torn log tail: " + ec.message());
  }
  spdlog::debug("loaded {} at seq {} ({} events replayed)", dir_.string(), state_.last_seq, load_info_.replayed);
}

void Repository::check(std::string_view kind, const json& payload, Timestamp timestamp) const {
  AppState copy = state_;
  apply_event(copy, Event{state_.last_seq + 1, std::string(kind), timestamp, payload});
}

std::uint64_t Repository::commit(std::string_view kind, json payload, Timestamp timestamp) {
  validate_event(kind, payload);
  Event event{state_.last_seq + 1, std::string(kind), timestamp, std::move(payload)};
  AppState next = state_;
  apply_event(next, event);
  append_line(event.to_json().dump() + "\n");
  state_ = std::move(next);
  if (options_.snapshot_interval > 0 && event.seq % options_.snapshot_interval == 0) {
    try {
      write_snapshot();
    } catch (const Error& e) {
      spdlog::warn("snapshot at seq {} skipped: {}", event.seq, e.what());
    }
  }
  return event.seq;
}

void Repository::append_line(const std::string& line) {
  const auto path = dir_ / kEventsFile;
  Fd fd(path, O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC);
  const auto before = ::lseek(fd.get(), 0, SEEK_END);
  try {
    write_all(fd.get(), path, line);
    if (options_.sync && ::fsync(fd.get()) != 0) throw_write_error(path, errno);
  } catch (const Error&) {
    if (before >= 0 && ::ftruncate(fd.get(), before) != 0) {
      spdlog::error("cannot roll back partial append to {}", path.string());
    }
    throw;
  }
}

void Repository::write_snapshot() {
  const auto snap_dir = dir_ / kSnapshotDir;
  const auto final_path = snap_dir / fmt::format("{:05}.json", state_.last_seq);
  const auto tmp_path = snap_dir / fmt::format("{:05}.json.tmp", state_.last_seq);
  const json snapshot{{"up_to_seq", state_.last_seq}, {"state", state_.to_json()}};
  {
    Fd fd(tmp_path, O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC);
    write_all(fd.get(), tmp_path, snapshot.dump());
    if (options_.sync && ::fsync(fd.get()) != 0) throw_write_error(tmp_path, errno);
  }
  std::error_code ec;
  fs::rename(tmp_path, final_path, ec);
  if (ec) throw Error(Errc::StorageFull, "cannot publish snapshot: " + ec.message());
}

fs::path default_data_dir() {
  if (const char* env = std::getenv(std::string(kDataDirEnv).c_str()); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return fs::path("feedguard-data");
}

RecordPage query_records(const AppState& state, const RecordQuery& query) {
  RecordPage page;
  for (const auto& ref : state.records) {
    if (ref.seq < query.from_seq) continue;
    if (query.to_seq && ref.seq > *query.to_seq) continue;
    if (query.rule_id && ref.record.matched_rule_id != *query.rule_id) continue;
    if (page.total >= query.offset && page.rows.size() < query.limit) page.rows.push_back(ref);
    ++page.total;
  }
  return page;
}

std::vector<filter::FilterStats> query_stats(const AppState& state, const std::optional<std::string>& rule_id) {
  std::vector<filter::FilterRecord> records;
  records.reserve(state.records.size());
  for (const auto& ref : state.records) records.push_back(ref.record);
  auto stats = filter::compute_stats(records, state.processed);
  if (rule_id) std::erase_if(stats, [&](const filter::FilterStats& s) { return s.rule_id != *rule_id; });
  return stats;
}

}  // namespace feedguard::store
