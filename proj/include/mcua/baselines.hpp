// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mcua/model.hpp"
#include "mcua/recover.hpp"

namespace mcua {

// Principle-of-proximity baseline: every user takes as many nearest
// in-coverage mBSs as allowed, then powers are allocated optimally.
Solution pop_ua_pa(const Scenario& scn, const InstanceConfig& cfg, int max_assoc);

struct SampleDraw {
  Solution solution;
  double objective_bps = 0.0;
  bool meets_qos = false;
};

// Uniform resource-feasible samples: the association is uniform over binary
// matrices satisfying row/column coverage and the row cap (rejection with a
// randomized repair fallback), powers are uniform on the per-link box with
// overloaded mBS columns scaled back. QoS is reported per draw, never
// enforced. Deterministic per seed.
void random_feasible(const Scenario& scn, const InstanceConfig& cfg, int count,
                     std::uint64_t seed,
                     const std::function<void(int, const SampleDraw&)>& sink);

std::vector<SampleDraw> random_feasible(const Scenario& scn,
                                        const InstanceConfig& cfg, int count,
                                        std::uint64_t seed);

// Substream derivation for parallel sampling: splitmix64 of
// seed XOR (worker+1)*golden-gamma.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t worker);

}  // namespace mcua
