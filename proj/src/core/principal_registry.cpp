#include "core/principal_registry.hpp"

namespace mg {

Principal* PrincipalRegistry::find(PrincipalId id) {
  auto it = principals_.find(id);
  return it == principals_.end() ? nullptr : &it->second;
}

const Principal* PrincipalRegistry::find(PrincipalId id) const {
  auto it = principals_.find(id);
  return it == principals_.end() ? nullptr : &it->second;
}

PrincipalId PrincipalRegistry::createChild(PrincipalId parent, Label label,
                                           CapSet caps) {
  PrincipalId id = next_++;
  Principal p;
  p.id = id;
  p.label = std::move(label);
  p.caps = std::move(caps);
  p.parent = parent;
  principals_[id] = std::move(p);
  return id;
}

void PrincipalRegistry::terminateNormal(PrincipalId id) {
  if (auto* p = find(id); p && p->running) {
    p->running = false;
    p->exit = ExitStatus{};
  }
}

void PrincipalRegistry::terminateFault(PrincipalId id, FaultCause cause,
                                       uint64_t faultSeq) {
  if (auto* p = find(id); p && p->running) {
    p->running = false;
    p->exit = ExitStatus{ExitStatus::Kind::FaultKill, cause, faultSeq};
  }
}

std::optional<ExitStatus> PrincipalRegistry::exitStatus(PrincipalId id) const {
  auto* p = find(id);
  if (!p || p->running) return std::nullopt;
  return p->exit;
}

} // namespace mg
