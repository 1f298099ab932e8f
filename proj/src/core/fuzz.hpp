#pragma once

#include <cstdint>

namespace mg {

struct FuzzStats {
  uint64_t scenarios = 0;
  uint64_t steps = 0;
  uint64_t accesses = 0;
  uint64_t faults = 0;
  uint64_t divergences = 0;          // live pipeline vs oracle
  uint64_t invariantViolations = 0;  // disjointness, residency, label gating
};

// Seeded random scenarios over small states (<= 4 principals, <= 6 guards,
// <= stepsPerScenario steps) driving the kernel surface; every memory access
// is lockstep-compared against the snapshot oracle.
FuzzStats runAccessFuzz(uint64_t seed, int scenarioCount,
                        int stepsPerScenario = 200);

struct CloneFuzzStats {
  uint64_t trees = 0;
  uint64_t clones = 0;
  uint64_t deniedClones = 0;
  uint64_t violations = 0; // child credentials differ from the passed sets
};

// Random clone trees; verifies children hold exactly the passed label and
// capabilities, never more.
CloneFuzzStats runCloneFuzz(uint64_t seed, int treeCount);

} // namespace mg
