#pragma once

#include <atomic>
#include <cstdint>
#include <string>

namespace feedguard {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() override;
};

/// Logical clock for reproducible runs: every call advances by a fixed step.
class SteppingClock final : public Clock {
 public:
  explicit SteppingClock(Timestamp start, Timestamp step = 1000)
      : next_(start), step_(step) {}

  Timestamp now() override { return next_.fetch_add(step_); }

 private:
  std::atomic<Timestamp> next_;
  Timestamp step_;
};

/// UTC calendar date of a timestamp, formatted YYYY-MM-DD.
std::string day_of(Timestamp ts);

}  // namespace feedguard
