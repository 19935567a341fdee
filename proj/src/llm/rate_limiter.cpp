#include "feedguard/llm/rate_limiter.hpp"

#include <thread>

namespace feedguard::llm {

RateLimiter::RateLimiter(double requests_per_second) {
  if (requests_per_second > 0.0) {
    interval_ = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::duration<double>(1.0 / requests_per_second));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

}  // namespace feedguard::llm
