#pragma once

#include "core/types.hpp"

namespace mg {

// Heap over one guard's mapped range, offsets relative to the range base.
// Two free lists split the range at its midpoint: allocations are served
// first-fit from the head list, then the tail list; frees return a block to
// the list owning its offset. Blocks are 16-byte aligned and sized.
class GuardHeap {
 public:
  struct FreeBlock {
    uint32_t off = 0;
    uint32_t size = 0;
    friend bool operator==(const FreeBlock&, const FreeBlock&) = default;
  };

  void init(uint32_t length);
  void reset() { *this = GuardHeap{}; }
  bool initialized() const { return length_ != 0; }

  // Returns the block offset, or nullopt when no block fits.
  std::optional<uint32_t> alloc(uint32_t size);
  // Returns the freed block size, or nullopt for an unknown/already freed
  // offset.
  std::optional<uint32_t> free(uint32_t off);

  bool isLiveBlock(uint32_t off) const { return live_.count(off) > 0; }
  std::optional<uint32_t> liveSize(uint32_t off) const;
  uint32_t length() const { return length_; }
  uint64_t liveBytes() const;
  uint64_t freeBytes() const;
  const std::map<uint32_t, uint32_t>& liveBlocks() const { return live_; }
  const std::vector<FreeBlock>& headFree() const { return head_; }
  const std::vector<FreeBlock>& tailFree() const { return tail_; }

  static uint32_t roundUp(uint32_t size) {
    return (size + kGranuleSize - 1) & ~(kGranuleSize - 1);
  }

  friend bool operator==(const GuardHeap&, const GuardHeap&) = default;

 private:
  std::optional<uint32_t> takeFirstFit(std::vector<FreeBlock>& list,
                                       uint32_t size);
  void insertFree(std::vector<FreeBlock>& list, FreeBlock blk);

  uint32_t length_ = 0;
  uint32_t mid_ = 0;
  std::vector<FreeBlock> head_; // sorted by offset, coalesced
  std::vector<FreeBlock> tail_;
  std::map<uint32_t, uint32_t> live_; // offset -> size
};

} // namespace mg
