#include "concord/error.hpp"

#include "concord/rng.hpp"

namespace concord {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::state: return "state";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::feasibility: return "feasibility";
    case ErrorKind::size: return "size";
    case ErrorKind::io: return "io";
    case ErrorKind::fit: return "fit";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept {
  // FNV-1a over the stream name, mixed into the run seed with splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace concord
