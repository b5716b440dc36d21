#include "facildyn/parallel.hpp"

#include <cstdlib>
#include <string>

namespace facildyn {

unsigned default_thread_count() noexcept {
  if (const char* env = std::getenv("FDYN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace facildyn
