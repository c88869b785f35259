// Copyright 2026 The miadyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIADYN_UTIL_RNG_HPP_
#define MIADYN_UTIL_RNG_HPP_

#include <cstdint>
#include <random>

namespace miadyn {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for stream `stream_id` of purpose `tag` under `master_seed`. The
// result depends only on the three inputs, never on scheduling.
inline std::uint64_t StreamSeed(std::uint64_t master_seed,
                                std::uint64_t stream_id,
                                std::uint64_t tag = 0) {
  return MixBits(MixBits(MixBits(master_seed) ^ stream_id) ^
                 (tag * 0x632be59bd9b4e019ULL));
}

inline Rng MakeStream(std::uint64_t master_seed, std::uint64_t stream_id,
                      std::uint64_t tag = 0) {
  return Rng(StreamSeed(master_seed, stream_id, tag));
}

// Stream tags.
inline constexpr std::uint64_t kTagData = 1;
inline constexpr std::uint64_t kTagMembership = 2;
inline constexpr std::uint64_t kTagTraining = 3;

}  // namespace miadyn

#endif  // MIADYN_UTIL_RNG_HPP_
