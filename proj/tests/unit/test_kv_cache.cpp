#include <doctest.h>

#include "ciflex/counting_backend.hpp"
#include "ciflex/errors.hpp"
#include "ciflex/kv_cache.hpp"

using namespace ciflex;

namespace {

SegmentPtr make_segment(SegmentRole role, std::vector<TokenId> tokens,
                        std::vector<int> positions, int turn = 1) {
    auto segment = std::make_shared<Segment>();
    segment->role = role;
    segment->tokens = std::move(tokens);
    segment->positions = std::move(positions);
    segment->turn = turn;
    return segment;
}

}  // namespace

TEST_CASE("append tracks logical length and next position") {
    KvCache cache;
    cache.append(make_segment(SegmentRole::MainInstruction, {1, 2, 3}, {0, 1, 2}, 0));
    cache.append(make_segment(SegmentRole::TurnQuery, {4, 5}, {3, 4}));
    CHECK(cache.logical_length() == 5);
    CHECK(cache.next_position() == 5);
    CHECK(cache.segment_count() == 2);
}

TEST_CASE("append enforces segment invariants") {
    KvCache cache;
    CHECK_THROWS_AS(cache.append(make_segment(SegmentRole::TurnQuery, {1, 2}, {0})),
                    Error);
    CHECK_THROWS_AS(cache.append(make_segment(SegmentRole::TurnQuery, {1, 2}, {1, 1})),
                    Error);
    CHECK_THROWS_AS(cache.append(make_segment(SegmentRole::TurnQuery, {}, {})), Error);
    cache.append(make_segment(SegmentRole::TurnQuery, {1, 2}, {0, 1}));
    // overlapping position indices
    CHECK_THROWS_AS(cache.append(make_segment(SegmentRole::TurnQuery, {3}, {1})), Error);
}

TEST_CASE("positions may contain gaps") {
    KvCache cache;
    cache.append(make_segment(SegmentRole::TurnQuery, {1, 2}, {0, 1}));
    cache.append(make_segment(SegmentRole::SubtaskOutput, {3, 4}, {9, 10}));
    CHECK(cache.next_position() == 11);
    CHECK(cache.logical_length() == 4);
}

TEST_CASE("truncate restores earlier totals") {
    KvCache cache;
    cache.append(make_segment(SegmentRole::TurnQuery, {1, 2}, {0, 1}));
    cache.append(make_segment(SegmentRole::MainAnswer, {3, 4, 5}, {2, 3, 4}));
    cache.truncate_segments(1);
    CHECK(cache.logical_length() == 2);
    CHECK(cache.next_position() == 2);
    CHECK_THROWS_AS(cache.truncate_segments(5), Error);
}

TEST_CASE("prefix detection is by segment identity") {
    KvCache cache;
    auto first = make_segment(SegmentRole::TurnQuery, {1}, {0});
    cache.append(first);
    KvCache other;
    other.append(make_segment(SegmentRole::TurnQuery, {1}, {0}));
    CHECK(cache.has_prefix({first}));
    CHECK_FALSE(other.has_prefix({first}));
}

TEST_CASE("cache dump is a stable golden format") {
    CountingBackend backend;
    KvCache cache;
    backend.prefill(cache, {SegmentRole::MainInstruction,
                            backend.tokenizer().tokenize("follow the main task"), 0});
    backend.prefill(cache, {SegmentRole::TurnQuery,
                            backend.tokenizer().tokenize("what is it"), 1});
    const std::string expected =
        "kv-cache length=7 next_position=7 segments=2\n"
        "  (main-instruction, turn=0, tokens=4, positions=0..3, kv=absent)\n"
        "  (turn-query, turn=1, tokens=3, positions=4..6, kv=absent)\n";
    CHECK(dump_cache(cache) == expected);
}

TEST_CASE("checkpoint materializes an equal cache") {
    KvCache cache;
    cache.append(make_segment(SegmentRole::TurnQuery, {1, 2}, {0, 1}));
    Checkpoint cp(cache.segments(), cache.logical_length(), cache.next_position(), 1);
    CHECK(caches_equal(cp.to_cache(), cache));
    CHECK(cache_equals_checkpoint(cache, cp));
}
