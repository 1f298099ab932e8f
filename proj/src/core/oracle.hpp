#pragma once

#include "core/snapshot.hpp"

namespace mg {

struct OracleVerdict {
  bool allowed = false;
  FaultCause cause = FaultCause::PagePerm;
  friend bool operator==(const OracleVerdict&, const OracleVerdict&) = default;
};

// Recomputes an access verdict from a raw state snapshot, first principles
// only: set membership over labels, a page walk, the DACR mode table, and a
// granule compare. Independent of the live access pipeline by construction.
OracleVerdict oracleAccess(const StateSnapshot& state, PrincipalId principal,
                           uint64_t ptr, AccessKind kind);

} // namespace mg
