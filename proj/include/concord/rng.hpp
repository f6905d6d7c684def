#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace concord {

using Rng = std::mt19937_64;

/// Derives an independent seed for a named substream ("folds", "learners", ...) of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept;

inline Rng make_rng(std::uint64_t seed, std::string_view stream) { return Rng(derive_seed(seed, stream)); }

}  // namespace concord
