#pragma once

#include <cstdint>
#include <string_view>

namespace pinnmeta {

// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a of a phase tag such as "meta-tasks" or "fine-tune-init".
std::uint64_t tag_hash(std::string_view tag);

// Stream seed for (master, phase, index):
//   s = splitmix64(master ^ splitmix64(tag_hash(phase) + index))
// Distinct phases or indices give unrelated streams, so adding a phase or
// an arm never shifts the randomness of another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view phase, std::uint64_t index = 0);

} // namespace pinnmeta
