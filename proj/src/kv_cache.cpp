#include "ciflex/kv_cache.hpp"

#include "ciflex/errors.hpp"

#include <algorithm>
#include <sstream>

namespace ciflex {

void KvCache::append(SegmentPtr segment) {
    if (!segment) {
        throw Error("KvCache::append: null segment");
    }
    const Segment& seg = *segment;
    if (seg.tokens.size() != seg.positions.size()) {
        throw Error("KvCache::append: token/position count mismatch");
    }
    if (seg.tokens.empty()) {
        throw Error("KvCache::append: empty segment");
    }
    for (std::size_t i = 1; i < seg.positions.size(); ++i) {
        if (seg.positions[i] <= seg.positions[i - 1]) {
            throw Error("KvCache::append: positions not strictly increasing");
        }
    }
    if (seg.positions.front() < next_position_) {
        throw Error("KvCache::append: segment positions overlap cache positions");
    }
    logical_length_ += static_cast<int>(seg.tokens.size());
    next_position_ = seg.positions.back() + 1;
    segments_.push_back(std::move(segment));
}

void KvCache::truncate_segments(std::size_t count) {
    if (count > segments_.size()) {
        throw Error("KvCache::truncate_segments: count exceeds segment count");
    }
    segments_.resize(count);
    recompute_totals();
}

bool KvCache::has_prefix(const std::vector<SegmentPtr>& prefix) const {
    if (prefix.size() > segments_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (segments_[i] != prefix[i]) {
            return false;
        }
    }
    return true;
}

void KvCache::recompute_totals() {
    logical_length_ = 0;
    next_position_ = 0;
    for (const auto& seg : segments_) {
        logical_length_ += static_cast<int>(seg->tokens.size());
        next_position_ = seg->positions.back() + 1;
    }
}

KvCache Checkpoint::to_cache() const {
    KvCache cache;
    for (const auto& seg : segments_) {
        cache.append(seg);
    }
    return cache;
}

bool caches_equal(const KvCache& a, const KvCache& b) {
    if (a.segment_count() != b.segment_count() ||
        a.logical_length() != b.logical_length() ||
        a.next_position() != b.next_position()) {
        return false;
    }
    for (std::size_t i = 0; i < a.segment_count(); ++i) {
        if (!segments_equal(a.segment(i), b.segment(i))) {
            return false;
        }
    }
    return true;
}

bool cache_equals_checkpoint(const KvCache& cache, const Checkpoint& cp) {
    if (cache.segment_count() != cp.segments().size() ||
        cache.logical_length() != cp.length()) {
        return false;
    }
    for (std::size_t i = 0; i < cache.segment_count(); ++i) {
        if (!segments_equal(cache.segment(i), *cp.segments()[i])) {
            return false;
        }
    }
    return true;
}

std::string dump_cache(const KvCache& cache) {
    std::ostringstream out;
    out << "kv-cache length=" << cache.logical_length()
        << " next_position=" << cache.next_position()
        << " segments=" << cache.segment_count() << "\n";
    for (const auto& ptr : cache.segments()) {
        const Segment& seg = *ptr;
        out << "  (" << to_string(seg.role)
            << ", turn=" << seg.turn
            << ", tokens=" << seg.tokens.size()
            << ", positions=" << seg.positions.front() << ".." << seg.positions.back()
            << ", kv=" << (seg.kv.has_value() ? "present" : "absent")
            << ")\n";
    }
    return out.str();
}

}  // namespace ciflex
