// Copyright 2026 The safefall Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAFEFALL_SEED_HPP_
#define SAFEFALL_SEED_HPP_

#include <cstdint>

namespace safefall {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of stream `index` within family `stream` under `master`:
// splitmix64(splitmix64(master + stream) + index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(master + stream) + index);
}

// Stream identifiers used across the code base.
enum SeedStream : std::uint64_t {
  kSeedPolicyInit = 1,
  kSeedEnv = 2,
  kSeedSampling = 3,
  kSeedMinibatch = 4,
  kSeedEval = 5,
  kSeedBench = 6,
};

}  // namespace safefall

#endif  // SAFEFALL_SEED_HPP_
