#include "seqmarkov/parallel.hpp"

#include <cstdlib>
#include <string>

namespace seqmarkov {

unsigned default_thread_count() {
  const char* env = std::getenv("SEQMARKOV_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const unsigned long value = std::stoul(env);
    return value == 0 ? 1u : static_cast<unsigned>(std::min(value, 1024ul));
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace seqmarkov
