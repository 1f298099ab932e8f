#include "core/label_core.hpp"

#include <algorithm>

namespace mg {

bool checkFlow(const Label& src, const Label& dst) {
  return std::includes(dst.begin(), dst.end(), src.begin(), src.end());
}

bool validateLabelChange(const Label& current, const Label& target,
                         const CapSet& caps) {
  for (TagId t : target)
    if (!current.count(t) && !caps.hasPlus(t)) return false;
  for (TagId t : current)
    if (!target.count(t) && !caps.hasMinus(t)) return false;
  return true;
}

Result<TagId> TagRegistry::alloc(PrincipalId owner, CapSet& ownerCaps) {
  if (next_ > kMaxTagIdentity)
    return ApiError{ErrorCode::TagSpaceExhausted, "tag identity space consumed"};
  TagId t = next_++;
  owners_[t] = owner;
  ownerCaps.addPlus(t);
  ownerCaps.addMinus(t);
  return t;
}

std::optional<PrincipalId> TagRegistry::ownerOf(TagId t) const {
  auto it = owners_.find(t);
  if (it == owners_.end()) return std::nullopt;
  return it->second;
}

std::optional<PrincipalId> DelegationGraph::grantorFor(PrincipalId grantee,
                                                       TagId tag) const {
  for (const Edge& e : edges_)
    if (e.grantee == grantee && e.tag == tag) return e.grantor;
  return std::nullopt;
}

} // namespace mg
