#include "feedguard/common/clock.hpp"

#include <chrono>

#include <fmt/format.h>

namespace feedguard {

Timestamp SystemClock::now() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string day_of(Timestamp ts) {
  using namespace std::chrono;
  const sys_time<milliseconds> tp{milliseconds{ts}};
  const year_month_day ymd{floor<days>(tp)};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

}  // namespace feedguard
