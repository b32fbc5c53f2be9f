// SPDX-License-Identifier: Apache-2.0
//
// jarve: joint azimuth-range-velocity estimation for OFDM sensing
// Copyright (C) 2026 The jarve authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef JARVE_RANDOM_HPP
#define JARVE_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace jarve
{
    // SplitMix64 finalizer, used to derive independent substream seeds
    inline std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Seed for the substream addressed by (master, k1, k2, ...); order of keys matters
    inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
    {
        std::uint64_t s = splitmix64(master);
        for (auto k : keys)
            s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
        return s;
    }

    using Rng = std::mt19937_64;
}

#endif
