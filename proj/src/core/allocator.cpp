#include "core/allocator.hpp"

#include <algorithm>
#include <cassert>

namespace mg {

void GuardHeap::init(uint32_t length) {
  assert(length % kGranuleSize == 0);
  length_ = length;
  mid_ = (length / 2) & ~(kGranuleSize - 1);
  head_.clear();
  tail_.clear();
  live_.clear();
  if (mid_ > 0) head_.push_back({0, mid_});
  if (length > mid_) tail_.push_back({mid_, length - mid_});
}

std::optional<uint32_t> GuardHeap::takeFirstFit(std::vector<FreeBlock>& list,
                                                uint32_t size) {
  for (size_t i = 0; i < list.size(); ++i) {
    if (list[i].size >= size) {
      uint32_t off = list[i].off;
      list[i].off += size;
      list[i].size -= size;
      if (list[i].size == 0) list.erase(list.begin() + long(i));
      return off;
    }
  }
  return std::nullopt;
}

std::optional<uint32_t> GuardHeap::alloc(uint32_t size) {
  if (size == 0 || !initialized()) return std::nullopt;
  uint32_t want = roundUp(size);
  auto off = takeFirstFit(head_, want);
  if (!off) off = takeFirstFit(tail_, want);
  if (!off) return std::nullopt;
  live_[*off] = want;
  return off;
}

void GuardHeap::insertFree(std::vector<FreeBlock>& list, FreeBlock blk) {
  auto it = std::lower_bound(
      list.begin(), list.end(), blk,
      [](const FreeBlock& a, const FreeBlock& b) { return a.off < b.off; });
  it = list.insert(it, blk);
  // coalesce with successor, then predecessor
  auto next = it + 1;
  if (next != list.end() && it->off + it->size == next->off) {
    it->size += next->size;
    list.erase(next);
  }
  if (it != list.begin()) {
    auto prev = it - 1;
    if (prev->off + prev->size == it->off) {
      prev->size += it->size;
      list.erase(it);
    }
  }
}

std::optional<uint32_t> GuardHeap::free(uint32_t off) {
  auto it = live_.find(off);
  if (it == live_.end()) return std::nullopt;
  uint32_t size = it->second;
  live_.erase(it);
  insertFree(off < mid_ ? head_ : tail_, {off, size});
  return size;
}

std::optional<uint32_t> GuardHeap::liveSize(uint32_t off) const {
  auto it = live_.find(off);
  if (it == live_.end()) return std::nullopt;
  return it->second;
}

uint64_t GuardHeap::liveBytes() const {
  uint64_t n = 0;
  for (auto& [o, s] : live_) n += s;
  return n;
}

uint64_t GuardHeap::freeBytes() const {
  uint64_t n = 0;
  for (auto& b : head_) n += b.size;
  for (auto& b : tail_) n += b.size;
  return n;
}

} // namespace mg
