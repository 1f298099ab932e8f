#include "core/facade.hpp"

#include <cctype>

namespace mg {

namespace {

ApiError parseErr(const std::string& what) {
  return ApiError{ErrorCode::ParseError, what};
}

Result<uint64_t> wantId(const Arg& a, Value::Kind kind, const char* what) {
  if (a.kind != Arg::Kind::Value) return parseErr(std::string(what) + ": set literal not expected");
  if (a.value.kind != kind && a.value.kind != Value::Kind::Int)
    return parseErr(std::string(what) + ": wrong argument type");
  return a.value.raw;
}

Result<PagePerm> wantPerm(const Arg& a) {
  if (a.kind != Arg::Kind::Value || a.value.kind != Value::Kind::Perm)
    return parseErr("expected a permission");
  return PagePerm(a.value.raw);
}

Result<Label> wantLabel(const Arg& a) {
  if (a.kind != Arg::Kind::LabelSet) return parseErr("expected a label set");
  Label l;
  for (uint32_t t : a.items) l.insert(t);
  return l;
}

Result<std::vector<Capability>> wantCaps(const Arg& a) {
  if (a.kind != Arg::Kind::CapabilitySet)
    return parseErr("expected a capability set");
  std::vector<Capability> caps;
  for (uint32_t enc : a.items) caps.push_back(Capability::decode(enc));
  return caps;
}

Result<Value> liftStatus(const Status& s) {
  if (!isOk(s)) return error(s);
  return Value::unit();
}

} // namespace

Result<Value> dispatch(Kernel& k, PrincipalId caller, const std::string& name,
                       const std::vector<Arg>& args) {
  auto arity = [&](size_t n) { return args.size() == n; };

  if (name == "mg_alloc_tag") {
    if (!arity(0)) return parseErr("mg_alloc_tag()");
    auto r = k.allocTag(caller);
    if (!isOk(r)) return error(r);
    return Value::tag(value(r));
  }
  if (name == "mg_modify_label") {
    if (!arity(1)) return parseErr("mg_modify_label({tags})");
    auto l = wantLabel(args[0]);
    if (!isOk(l)) return error(l);
    return liftStatus(k.modifyLabel(caller, value(l)));
  }
  if (name == "mg_transfer_caps") {
    if (!arity(2)) return parseErr("mg_transfer_caps(principal, {caps})");
    auto dst = wantId(args[0], Value::Kind::Principal, "destination");
    if (!isOk(dst)) return error(dst);
    auto caps = wantCaps(args[1]);
    if (!isOk(caps)) return error(caps);
    return liftStatus(
        k.transferCaps(caller, PrincipalId(value(dst)), value(caps)));
  }
  if (name == "mg_declassify") {
    if (!arity(1)) return parseErr("mg_declassify(tag)");
    auto t = wantId(args[0], Value::Kind::Tag, "tag");
    if (!isOk(t)) return error(t);
    return liftStatus(k.declassify(caller, TagId(value(t))));
  }
  if (name == "mg_grant" || name == "mg_revoke_grant") {
    if (!arity(3)) return parseErr(name + "(p1, p2, tag)");
    auto p1 = wantId(args[0], Value::Kind::Principal, "p1");
    auto p2 = wantId(args[1], Value::Kind::Principal, "p2");
    auto t = wantId(args[2], Value::Kind::Tag, "tag");
    if (!isOk(p1)) return error(p1);
    if (!isOk(p2)) return error(p2);
    if (!isOk(t)) return error(t);
    Status s = name == "mg_grant"
                   ? k.grant(caller, PrincipalId(value(p1)),
                             PrincipalId(value(p2)), TagId(value(t)))
                   : k.revokeGrant(caller, PrincipalId(value(p1)),
                                   PrincipalId(value(p2)), TagId(value(t)));
    return liftStatus(s);
  }
  if (name == "mg_lock" || name == "mg_unlock") {
    if (!arity(1)) return parseErr(name + "(guard)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    if (!isOk(g)) return error(g);
    Status s = name == "mg_lock" ? k.lockGuard(caller, GuardId(value(g)))
                                 : k.unlockGuard(caller, GuardId(value(g)));
    return liftStatus(s);
  }
  if (name == "mg_clone") {
    if (!arity(2)) return parseErr("mg_clone({label}, {caps})");
    auto l = wantLabel(args[0]);
    if (!isOk(l)) return error(l);
    auto caps = wantCaps(args[1]);
    if (!isOk(caps)) return error(caps);
    auto r = k.clonePrincipal(caller, value(l), value(caps));
    if (!isOk(r)) return error(r);
    return Value::principal(value(r));
  }
  if (name == "mg_create") {
    if (args.size() > 1) return parseErr("mg_create([backing])");
    Backing backing = k.config().defaultBacking;
    if (args.size() == 1) {
      if (args[0].kind != Arg::Kind::Value ||
          args[0].value.kind != Value::Kind::Int)
        return parseErr("mg_create backing");
      backing = Backing(args[0].value.raw);
    }
    auto r = k.createGuard(caller, backing);
    if (!isOk(r)) return error(r);
    return Value::guard(value(r));
  }
  if (name == "mg_kill") {
    if (!arity(1)) return parseErr("mg_kill(guard)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    if (!isOk(g)) return error(g);
    return liftStatus(k.destroyGuard(caller, GuardId(value(g))));
  }
  if (name == "mg_malloc") {
    if (!arity(2)) return parseErr("mg_malloc(guard, size)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    auto sz = wantId(args[1], Value::Kind::Int, "size");
    if (!isOk(g)) return error(g);
    if (!isOk(sz)) return error(sz);
    auto r = k.guardAlloc(caller, GuardId(value(g)), uint32_t(value(sz)));
    if (!isOk(r)) return error(r);
    return Value::pointer(value(r));
  }
  if (name == "mg_free") {
    if (!arity(2)) return parseErr("mg_free(guard, ptr)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    auto p = wantId(args[1], Value::Kind::Pointer, "ptr");
    if (!isOk(g)) return error(g);
    if (!isOk(p)) return error(p);
    return liftStatus(k.guardFree(caller, GuardId(value(g)), value(p)));
  }
  if (name == "mg_mprotect") {
    if (!arity(2)) return parseErr("mg_mprotect(guard, perm)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    auto pm = wantPerm(args[1]);
    if (!isOk(g)) return error(g);
    if (!isOk(pm)) return error(pm);
    return liftStatus(
        k.setProtection(caller, GuardId(value(g)), value(pm)));
  }
  if (name == "mg_mmap") {
    if (!arity(3)) return parseErr("mg_mmap(guard, length, perm)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    auto len = wantId(args[1], Value::Kind::Int, "length");
    auto pm = wantPerm(args[2]);
    if (!isOk(g)) return error(g);
    if (!isOk(len)) return error(len);
    if (!isOk(pm)) return error(pm);
    auto r = k.mapPages(caller, GuardId(value(g)), uint32_t(value(len)),
                        value(pm));
    if (!isOk(r)) return error(r);
    return Value::pointer(makePointer(value(r).base, 0));
  }
  if (name == "mg_munmap") {
    if (!arity(1)) return parseErr("mg_munmap(guard)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    if (!isOk(g)) return error(g);
    return liftStatus(k.unmapGuard(caller, GuardId(value(g))));
  }
  if (name == "mg_get") {
    if (!arity(1)) return parseErr("mg_get(guard)");
    auto g = wantId(args[0], Value::Kind::Guard, "guard");
    if (!isOk(g)) return error(g);
    auto r = k.getProtection(GuardId(value(g)));
    if (!isOk(r)) return error(r);
    return Value::perm(value(r));
  }
  if (name == "fork") {
    if (!arity(0)) return parseErr("fork()");
    auto r = k.posixFork(caller);
    if (!isOk(r)) return error(r);
    return Value::principal(value(r));
  }
  if (name == "mmap") {
    if (args.size() == 2) {
      auto len = wantId(args[0], Value::Kind::Int, "length");
      auto pm = wantPerm(args[1]);
      if (!isOk(len)) return error(len);
      if (!isOk(pm)) return error(pm);
      auto r = k.posixMmap(caller, uint32_t(value(len)), value(pm));
      if (!isOk(r)) return error(r);
      return Value::pointer(makePointer(value(r).base, 0));
    }
    if (args.size() == 3) {
      auto addr = wantId(args[0], Value::Kind::Pointer, "address");
      auto len = wantId(args[1], Value::Kind::Int, "length");
      auto pm = wantPerm(args[2]);
      if (!isOk(addr)) return error(addr);
      if (!isOk(len)) return error(len);
      if (!isOk(pm)) return error(pm);
      auto r = k.posixMmapFixed(caller, uint32_t(value(addr)),
                                uint32_t(value(len)), value(pm));
      if (!isOk(r)) return error(r);
      return Value::pointer(makePointer(value(r).base, 0));
    }
    return parseErr("mmap(length, perm) or mmap(addr, length, perm)");
  }
  if (name == "mprotect") {
    if (!arity(3)) return parseErr("mprotect(addr, length, perm)");
    auto addr = wantId(args[0], Value::Kind::Pointer, "address");
    auto len = wantId(args[1], Value::Kind::Int, "length");
    auto pm = wantPerm(args[2]);
    if (!isOk(addr)) return error(addr);
    if (!isOk(len)) return error(len);
    if (!isOk(pm)) return error(pm);
    return liftStatus(k.posixMprotect(caller, uint32_t(value(addr)),
                                      uint32_t(value(len)), value(pm)));
  }
  return parseErr("unknown call: " + name);
}

const std::vector<std::string>& dispatchNames() {
  static const std::vector<std::string> names = {
      "mg_alloc_tag", "mg_modify_label", "mg_transfer_caps", "mg_declassify",
      "mg_grant",     "mg_revoke_grant", "mg_lock",          "mg_unlock",
      "mg_clone",     "mg_create",       "mg_kill",          "mg_malloc",
      "mg_free",      "mg_mprotect",     "mg_mmap",          "mg_munmap",
      "mg_get",       "fork",            "mmap",             "mprotect",
  };
  return names;
}

bool hookIsLabeled(const Kernel& k, PrincipalId p) {
  const Principal* pr = k.principals().find(p);
  return pr && !pr->label.empty();
}

bool hookCheckAllowed(const Kernel& k, PrincipalId src, PrincipalId dst) {
  const Principal* s = k.principals().find(src);
  const Principal* d = k.principals().find(dst);
  if (!s || !d) return false;
  return checkFlow(s->label, d->label);
}

Result<Label> hookParseLabel(const std::string& text) {
  size_t i = 0;
  auto skipWs = [&] {
    while (i < text.size() && std::isspace(uint8_t(text[i]))) i++;
  };
  skipWs();
  if (i >= text.size() || text[i] != '{')
    return ApiError{ErrorCode::ParseError, "label must start with '{'"};
  i++;
  Label out;
  skipWs();
  if (i < text.size() && text[i] == '}') {
    i++;
    skipWs();
    if (i != text.size())
      return ApiError{ErrorCode::ParseError, "trailing characters after label"};
    return out;
  }
  while (true) {
    skipWs();
    size_t start = i;
    while (i < text.size() && std::isdigit(uint8_t(text[i]))) i++;
    if (i == start)
      return ApiError{ErrorCode::ParseError, "expected a tag number"};
    out.insert(TagId(std::stoul(text.substr(start, i - start))));
    skipWs();
    if (i < text.size() && text[i] == ',') {
      i++;
      continue;
    }
    if (i < text.size() && text[i] == '}') {
      i++;
      break;
    }
    return ApiError{ErrorCode::ParseError, "expected ',' or '}'"};
  }
  skipWs();
  if (i != text.size())
    return ApiError{ErrorCode::ParseError, "trailing characters after label"};
  return out;
}

} // namespace mg
