#pragma once

#include "ciflex/segment.hpp"

#include <string>
#include <vector>

namespace ciflex {

// Ordered list of tagged segments. Segment order equals creation order;
// position indices are strictly increasing across segments (gaps are legal
// under the preserve-positions retention mode). Mutation is append/truncate
// only; segment contents are never modified in place.
class KvCache {
public:
    KvCache() = default;

    const std::vector<SegmentPtr>& segments() const { return segments_; }
    std::size_t segment_count() const { return segments_.size(); }
    const Segment& segment(std::size_t i) const { return *segments_[i]; }

    // Total token count across segments.
    int logical_length() const { return logical_length_; }

    // Next position index a backend should assign.
    int next_position() const { return next_position_; }

    bool empty() const { return segments_.empty(); }

    const SegmentPtr& back() const { return segments_.back(); }

    // Appends a finished segment. Enforces |tokens| == |positions|,
    // strictly increasing positions within the segment, and first position
    // >= next_position(). Advances next_position past the segment.
    void append(SegmentPtr segment);

    // Drops all segments after the first `count`, restoring logical length
    // and next position to what they were at that point.
    void truncate_segments(std::size_t count);

    // True if every slot of `prefix` is the same segment object (pointer
    // equality) as this cache's corresponding slot.
    bool has_prefix(const std::vector<SegmentPtr>& prefix) const;

private:
    void recompute_totals();

    std::vector<SegmentPtr> segments_;
    int logical_length_ = 0;
    int next_position_ = 0;
};

// Immutable snapshot of a cache prefix taken when a user query arrives.
// Holds the segment list by reference; no later operation on any derived
// cache can change what a checkpoint sees.
class Checkpoint {
public:
    Checkpoint(std::vector<SegmentPtr> segments, int length, int next_position, int turn)
        : segments_(std::move(segments)),
          length_(length),
          next_position_(next_position),
          turn_(turn) {}

    const std::vector<SegmentPtr>& segments() const { return segments_; }
    int length() const { return length_; }
    int next_position() const { return next_position_; }
    int turn() const { return turn_; }

    // Materializes a cache equal to this checkpoint.
    KvCache to_cache() const;

private:
    std::vector<SegmentPtr> segments_;
    int length_;
    int next_position_;
    int turn_;
};

// Deep value comparison across two caches (kv blocks bit-for-bit).
bool caches_equal(const KvCache& a, const KvCache& b);
bool cache_equals_checkpoint(const KvCache& cache, const Checkpoint& cp);

// Canonical textual dump for debugging and golden-file tests. One line per
// segment: (role, turn, token-count, position-range, kv-present), preceded
// by a header with the cache totals. Field order is stable.
std::string dump_cache(const KvCache& cache);

}  // namespace ciflex
