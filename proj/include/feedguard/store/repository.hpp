#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "feedguard/store/state.hpp"

namespace feedguard::store {

/// Directory layout:
///   <dir>/events.log              one JSON event per line
///   <dir>/snapshots/NNNNN.json    {"up_to_seq": n, "state": AppState}
///   <dir>/config.json             optional service configuration
inline constexpr std::string_view kEventsFile = "events.log";
inline constexpr std::string_view kSnapshotDir = "snapshots";
inline constexpr std::string_view kConfigFile = "config.json";
/// Environment variable naming the default data directory.
inline constexpr std::string_view kDataDirEnv = "FEEDGUARD_DATA_DIR";

struct StoreOptions {
  std::uint64_t snapshot_interval = 500;
  /// fsync after every append and snapshot.
  bool sync = true;
};

struct LoadResult {
  AppState state;
  std::uint64_t last_seq = 0;
  /// Sequence number of the snapshot the state started from, if any.
  std::optional<std::uint64_t> snapshot_seq;
  std::size_t replayed = 0;
  bool torn_tail = false;
  /// Byte length of the valid prefix of the log.
  std::uintmax_t valid_bytes = 0;
};

/// Reads every complete, valid event. A torn or unreadable final line is
/// dropped with a warning; anything wrong before it throws Error(CorruptLog).
std::vector<Event> read_events(const std::filesystem::path& dir, bool* torn_tail = nullptr,
                               std::uintmax_t* valid_bytes = nullptr);

/// Latest usable snapshot plus replay of the later events. Does not modify
/// the directory. Throws Error(CorruptLog).
LoadResult load_state(const std::filesystem::path& dir);

/// Single writer over a data directory.
class Repository {
 public:
  /// Creates the directory if needed, loads it, and cuts a torn tail off the
  /// log so new events start on a clean line.
  explicit Repository(std::filesystem::path dir, StoreOptions options = {});

  Repository(const Repository&) = delete;
  Repository& operator=(const Repository&) = delete;

  [[nodiscard]] const AppState& state() const noexcept { return state_; }
  [[nodiscard]] std::uint64_t last_seq() const noexcept { return state_.last_seq; }
  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }
  [[nodiscard]] const LoadResult& load_info() const noexcept { return load_info_; }

  /// Validates the payload, appends the event durably, applies it and writes a
  /// snapshot when due. Returns the new seq. Throws Error(SchemaInvalid) with
  /// nothing written, Error(StorageFull) when the write fails.
  std::uint64_t commit(std::string_view kind, json payload, Timestamp timestamp);

  /// Applies the event to a copy of the state without writing anything.
  /// Throws whatever apply_event would.
  void check(std::string_view kind, const json& payload, Timestamp timestamp) const;

  void write_snapshot();

 private:
  void append_line(const std::string& line);

  std::filesystem::path dir_;
  StoreOptions options_;
  AppState state_;
  LoadResult load_info_;
};

/// Default data directory: $FEEDGUARD_DATA_DIR, else ./feedguard-data.
std::filesystem::path default_data_dir();

struct RecordQuery {
  /// Inclusive seq bounds.
  std::uint64_t from_seq = 0;
  std::optional<std::uint64_t> to_seq;
  std::optional<std::string> rule_id;
  std::size_t offset = 0;
  std::size_t limit = 100;
};

struct RecordPage {
  std::vector<needs::RecordRef> rows;
  /// Matching rows before offset/limit.
  std::size_t total = 0;
};

/// Records in seq order (log order within one seq).
RecordPage query_records(const AppState& state, const RecordQuery& query);

/// Per rule-day statistics, optionally for a single rule.
std::vector<filter::FilterStats> query_stats(const AppState& state, const std::optional<std::string>& rule_id);

}  // namespace feedguard::store
