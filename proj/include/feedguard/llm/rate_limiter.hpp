#pragma once

#include <chrono>
#include <mutex>

namespace feedguard::llm {

/// Spaces requests at least 1/rate seconds apart. A rate of 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second = 0.0);

  void acquire();

 private:
  using clock = std::chrono::steady_clock;

  std::chrono::nanoseconds interval_{0};
  clock::time_point next_slot_{};
  std::mutex mutex_;
};

}  // namespace feedguard::llm
