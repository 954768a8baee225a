#include "dtscr/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace dtscr {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DTSCR_WORKERS")) {
    int value = 0;
    const char* end = env + std::strlen(env);
    const auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc() && ptr == end && value > 0) return value;
  }
  return 1;
}

}  // namespace dtscr
