#pragma once

#include <tuple>

#include "core/types.hpp"

namespace mg {

// Flow rule: information may move from src to dst iff src's tags are a
// subset of dst's.
bool checkFlow(const Label& src, const Label& dst);

// Label change rule: a principal may move from `current` to `target` iff the
// added tags are covered by its plus capabilities and the dropped tags by its
// minus capabilities.
bool validateLabelChange(const Label& current, const Label& target,
                         const CapSet& caps);

// Sequential tag issue. Identities are never reused within a run.
class TagRegistry {
 public:
  // Issues a fresh identity and grants both capabilities to `owner`.
  Result<TagId> alloc(PrincipalId owner, CapSet& ownerCaps);

  bool exists(TagId t) const { return t >= 1 && t < next_; }
  std::optional<PrincipalId> ownerOf(TagId t) const;
  TagId nextIdentity() const { return next_; }

  const std::map<TagId, PrincipalId>& owners() const { return owners_; }

 private:
  TagId next_ = 1;
  std::map<TagId, PrincipalId> owners_;
};

// Acts-for edges, scoped per tag. Edge (grantor, grantee, tag) means the
// grantee may exercise declassification for `tag`.
class DelegationGraph {
 public:
  struct Edge {
    PrincipalId grantor;
    PrincipalId grantee;
    TagId tag;
    friend auto operator<=>(const Edge&, const Edge&) = default;
  };

  bool add(PrincipalId grantor, PrincipalId grantee, TagId tag) {
    return edges_.insert({grantor, grantee, tag}).second;
  }
  bool remove(PrincipalId grantor, PrincipalId grantee, TagId tag) {
    return edges_.erase({grantor, grantee, tag}) > 0;
  }
  bool has(PrincipalId grantor, PrincipalId grantee, TagId tag) const {
    return edges_.count({grantor, grantee, tag}) > 0;
  }
  // Any edge granting `grantee` authority over `tag`, returning the grantor.
  std::optional<PrincipalId> grantorFor(PrincipalId grantee, TagId tag) const;

  const std::set<Edge>& edges() const { return edges_; }
  friend bool operator==(const DelegationGraph&,
                         const DelegationGraph&) = default;

 private:
  std::set<Edge> edges_;
};

} // namespace mg
