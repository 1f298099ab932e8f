#pragma once

#include "core/types.hpp"

namespace mg {

struct Principal {
  PrincipalId id = 0;
  Label label;
  CapSet caps;
  std::optional<PrincipalId> parent;
  bool running = true;
  ExitStatus exit; // valid once !running
};

// Thread principals and guard lock ownership. Credential mutation rules live
// in the kernel transaction layer; this is bookkeeping only.
class PrincipalRegistry {
 public:
  PrincipalRegistry() { principals_[0] = Principal{}; }

  Principal* find(PrincipalId id);
  const Principal* find(PrincipalId id) const;
  bool isRunning(PrincipalId id) const {
    auto* p = find(id);
    return p && p->running;
  }

  PrincipalId createChild(PrincipalId parent, Label label, CapSet caps);
  void terminateNormal(PrincipalId id);
  void terminateFault(PrincipalId id, FaultCause cause, uint64_t faultSeq);
  std::optional<ExitStatus> exitStatus(PrincipalId id) const;

  // Guard lock ownership: guard id -> locking principal.
  std::map<GuardId, PrincipalId>& lockedBy() { return lockedBy_; }
  const std::map<GuardId, PrincipalId>& lockedBy() const { return lockedBy_; }

  const std::map<PrincipalId, Principal>& all() const { return principals_; }

 private:
  std::map<PrincipalId, Principal> principals_;
  std::map<GuardId, PrincipalId> lockedBy_;
  PrincipalId next_ = 1;
};

} // namespace mg
