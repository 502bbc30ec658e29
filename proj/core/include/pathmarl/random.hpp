#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace pathmarl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for sub-stream `stream` of `seed`. Pure function, so per-tree or
/// per-agent streams do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b) noexcept;

/// FNV-1a 64 over bytes; stable across platforms (unlike std::hash).
std::uint64_t stable_hash(std::string_view text) noexcept;

/// Uniform real in [0,1) from 53 random bits; avoids implementation-defined
/// std::uniform_real_distribution output.
double uniform01(Rng& rng) noexcept;

/// Uniform integer in [0, n). Lemire-free modulo with rejection; portable.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Standard normal via Box-Muller on uniform01 (portable across stdlibs).
double standard_normal(Rng& rng) noexcept;

/// Fisher-Yates shuffle using uniform_index.
template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace pathmarl
