#include <doctest.h>

#include "ciflex/cache_ops.hpp"
#include "ciflex/counting_backend.hpp"
#include "ciflex/errors.hpp"
#include "ciflex/toy_transformer.hpp"

#include <cmath>
#include <random>

using namespace ciflex;

namespace {

// 12-token instruction and 7-token query, the stock example context.
KvCache stock_context(CountingBackend& backend) {
    KvCache cache;
    backend.prefill(cache,
                    {SegmentRole::MainInstruction,
                     backend.tokenizer().tokenize(
                         "one two three four five six seven eight nine ten eleven twelve"),
                     0});
    backend.prefill(cache, {SegmentRole::TurnQuery,
                            backend.tokenizer().tokenize("a b c d e f g"), 1});
    return cache;
}

std::vector<TokenId> words(CountingBackend& backend, int n) {
    std::string text;
    for (int i = 0; i < n; ++i) {
        if (i > 0) text += ' ';
        text += "w" + std::to_string(i);
    }
    return backend.tokenizer().tokenize(text);
}

std::vector<TokenId> bytes(std::mt19937_64& rng, int n) {
    std::vector<TokenId> out(static_cast<std::size_t>(n));
    for (auto& t : out) t = static_cast<TokenId>(rng() % 256);
    return out;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("checkpoint of an empty cache has length zero") {
    KvCache cache;
    const Checkpoint cp = checkpoint(cache, 1);
    CHECK(cp.length() == 0);
    CHECK(cp.segments().empty());
}

TEST_CASE("checkpoint length covers instruction plus query") {
    CountingBackend backend;
    KvCache cache = stock_context(backend);
    const Checkpoint cp = checkpoint(cache, 1);
    CHECK(cp.length() == 19);
    CHECK(cp.turn() == 1);
}

TEST_CASE("checkpoint requires a trailing query for the right turn") {
    CountingBackend backend;
    KvCache cache = stock_context(backend);
    CHECK_THROWS_AS(checkpoint(cache, 2), PreconditionError);
    backend.prefill(cache, {SegmentRole::MainAnswer,
                            backend.tokenizer().tokenize("fine thanks"), 1});
    CHECK_THROWS_AS(checkpoint(cache, 1), PreconditionError);
}

TEST_CASE("branch extends the checkpoint by the instruction only") {
    CountingBackend backend;
    KvCache cache = stock_context(backend);
    const Checkpoint cp = checkpoint(cache, 1);

    KvCache side = branch(cp, {SegmentRole::SubtaskInstruction, words(backend, 9), 1},
                          backend);
    CHECK(side.logical_length() == 28);
    CHECK(side.segment_count() == cp.segments().size() + 1);
    CHECK(side.back()->role == SegmentRole::SubtaskInstruction);

    KvCache empty_side = branch(cp, {SegmentRole::ClassifierInstruction, {}, 1}, backend);
    CHECK(empty_side.logical_length() == 19);
    CHECK(caches_equal(empty_side, cp.to_cache()));

    CHECK_THROWS_AS(branch(cp, {SegmentRole::TurnQuery, words(backend, 2), 1}, backend),
                    RoleError);
}

TEST_CASE("branch matches a from-scratch prefill on the toy model") {
    ToyBackend backend(ToyTransformerConfig{});
    std::mt19937_64 rng(3);
    const auto context = bytes(rng, 40);
    const auto instruction = bytes(rng, 12);

    KvCache cache;
    backend.prefill(cache, {SegmentRole::MainInstruction,
                            {context.begin(), context.end() - 5}, 0});
    backend.prefill(cache, {SegmentRole::TurnQuery, {context.end() - 5, context.end()}, 1});
    const Checkpoint cp = checkpoint(cache, 1);
    KvCache side = branch(cp, {SegmentRole::SubtaskInstruction, instruction, 1}, backend);

    KvCache scratch;
    auto full = context;
    full.insert(full.end(), instruction.begin(), instruction.end());
    backend.prefill(scratch, {SegmentRole::MainInstruction, full, 0});

    CHECK(max_abs_diff(backend.next_logits(side), backend.next_logits(scratch)) <= 1e-5);
}

TEST_CASE("evict restores the checkpoint bit-exactly") {
    ToyBackend backend(ToyTransformerConfig{});
    std::mt19937_64 rng(5);
    KvCache cache;
    backend.prefill(cache, {SegmentRole::MainInstruction, bytes(rng, 20), 0});
    backend.prefill(cache, {SegmentRole::TurnQuery, bytes(rng, 6), 1});
    const Checkpoint cp = checkpoint(cache, 1);

    KvCache side = branch(cp, {SegmentRole::SubtaskInstruction, bytes(rng, 8), 1}, backend);
    CHECK(caches_equal(evict_to_checkpoint(side, cp), cp.to_cache()));

    DecodeRequest request;
    request.role = SegmentRole::SubtaskOutput;
    request.turn = 1;
    request.max_tokens = 6;
    backend.decode(side, request);
    CHECK(caches_equal(evict_to_checkpoint(side, cp), cp.to_cache()));

    KvCache unrelated;
    backend.prefill(unrelated, {SegmentRole::TurnQuery, bytes(rng, 4), 1});
    CHECK_THROWS_AS(evict_to_checkpoint(unrelated, cp), LineageError);
}

TEST_CASE("rollback with nothing retained equals the checkpoint") {
    CountingBackend backend;
    KvCache cache = stock_context(backend);
    const Checkpoint cp = checkpoint(cache, 1);
    KvCache rolled = rollback(cp, nullptr, RetentionMode::PreservePositions, backend);
    CHECK(rolled.logical_length() == 19);
    CHECK(caches_equal(rolled, cp.to_cache()));
}

TEST_CASE("rollback concatenates the retained output") {
    CountingBackend backend;
    ScriptedBehavior scripted;
    scripted.set(1, stage_key::kSubtaskOutput,
                 "o1 o2 o3 o4 o5 o6 o7 o8 o9 o10 o11 o12 o13 o14 o15");
    backend.attach_script(&scripted);

    KvCache cache = stock_context(backend);
    const Checkpoint cp = checkpoint(cache, 1);
    KvCache side = branch(cp, {SegmentRole::SubtaskInstruction, words(backend, 9), 1},
                          backend);
    DecodeRequest request;
    request.role = SegmentRole::SubtaskOutput;
    request.turn = 1;
    request.stage = stage_key::kSubtaskOutput;
    DecodeResult out = backend.decode(side, request);
    REQUIRE(out.token_count == 15);

    SUBCASE("preserve-positions keeps the side-path gap") {
        KvCache rolled = rollback(cp, out.segment, RetentionMode::PreservePositions,
                                  backend);
        CHECK(rolled.logical_length() == 34);
        CHECK(rolled.back()->positions.front() == 28);
        CHECK(rolled.back()->positions.back() == 42);
        CHECK(rolled.next_position() == 43);
    }
    SUBCASE("recompute reassigns contiguous positions") {
        KvCache rolled = rollback(cp, out.segment, RetentionMode::Recompute, backend);
        CHECK(rolled.logical_length() == 34);
        CHECK(rolled.back()->positions.front() == 19);
        CHECK(rolled.back()->positions.back() == 33);
    }
    SUBCASE("role and lineage are enforced") {
        auto wrong_role = std::make_shared<Segment>(*out.segment);
        wrong_role->role = SegmentRole::SubtaskReasoning;
        CHECK_THROWS_AS(
            rollback(cp, wrong_role, RetentionMode::PreservePositions, backend),
            RoleError);
        auto early = std::make_shared<Segment>(*out.segment);
        early->positions.assign(early->tokens.size(), 0);
        for (std::size_t i = 0; i < early->positions.size(); ++i) {
            early->positions[i] = static_cast<int>(i);
        }
        CHECK_THROWS_AS(rollback(cp, early, RetentionMode::PreservePositions, backend),
                        PreconditionError);
    }
}

TEST_CASE("advance_turn appends the answer and prefills only the query") {
    CountingBackend backend;
    ScriptedBehavior scripted;
    scripted.set(1, stage_key::kSubtaskOutput,
                 "o1 o2 o3 o4 o5 o6 o7 o8 o9 o10 o11 o12 o13 o14 o15");
    scripted.set(1, stage_key::kMainAnswer, "a1 a2 a3 a4 a5 a6 a7 a8 a9 a10 a11");
    backend.attach_script(&scripted);

    KvCache cache = stock_context(backend);
    const Checkpoint cp = checkpoint(cache, 1);
    KvCache side = branch(cp, {SegmentRole::SubtaskInstruction, words(backend, 9), 1},
                          backend);
    DecodeRequest output;
    output.role = SegmentRole::SubtaskOutput;
    output.turn = 1;
    output.stage = stage_key::kSubtaskOutput;
    DecodeResult out = backend.decode(side, output);
    KvCache rolled = rollback(cp, out.segment, RetentionMode::PreservePositions, backend);
    REQUIRE(rolled.logical_length() == 34);

    KvCache scratch = backend.fork(rolled);
    DecodeRequest answer;
    answer.role = SegmentRole::MainAnswer;
    answer.turn = 1;
    answer.stage = stage_key::kMainAnswer;
    DecodeResult decoded = backend.decode(scratch, answer);
    REQUIRE(decoded.token_count == 11);

    const std::size_t cost = advance_turn(
        rolled, decoded.segment,
        {SegmentRole::TurnQuery, words(backend, 6), 2}, backend);
    CHECK(cost == 6);
    CHECK(rolled.logical_length() == 51);
    CHECK(rolled.back()->role == SegmentRole::TurnQuery);

    CHECK_THROWS_AS(advance_turn(rolled, decoded.segment,
                                 {SegmentRole::MainAnswer, words(backend, 2), 2}, backend),
                    RoleError);
}

TEST_CASE("advance_turn requires kv on numeric backends") {
    ToyBackend backend(ToyTransformerConfig{});
    std::mt19937_64 rng(7);
    KvCache cache;
    backend.prefill(cache, {SegmentRole::TurnQuery, bytes(rng, 4), 1});
    auto answer = std::make_shared<Segment>();
    answer->role = SegmentRole::MainAnswer;
    answer->tokens = {1, 2};
    answer->positions = {4, 5};
    CHECK_THROWS_AS(
        advance_turn(cache, answer, {SegmentRole::TurnQuery, bytes(rng, 2), 2}, backend),
        PreconditionError);
}

namespace {

// Backend whose prefill always fails, for error-propagation checks.
class FailingBackend final : public ModelBackend {
public:
    std::string name() const override { return "failing"; }
    const Tokenizer& tokenizer() const override { return tokenizer_; }
    bool has_numeric_kv() const override { return false; }
    std::size_t prefill(KvCache&, const SegmentDraft&) override {
        throw std::runtime_error("device lost");
    }
    DecodeResult decode(KvCache&, const DecodeRequest&) override {
        throw std::runtime_error("device lost");
    }

private:
    ByteTokenizer tokenizer_;
};

}  // namespace

TEST_CASE("branch failures carry the branch stage tag") {
    CountingBackend setup;
    KvCache cache = stock_context(setup);
    const Checkpoint cp = checkpoint(cache, 1);
    FailingBackend failing;
    try {
        branch(cp, {SegmentRole::SubtaskInstruction, {1, 2, 3}, 1}, failing);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.stage() == "branch");
        CHECK(std::string(e.what()).find("device lost") != std::string::npos);
    }
}

TEST_CASE("recompute rollback of an empty-instruction branch matches scratch prefill") {
    ToyBackend backend(ToyTransformerConfig{});
    std::mt19937_64 rng(11);
    const auto context = bytes(rng, 48);

    KvCache cache;
    backend.prefill(cache, {SegmentRole::MainInstruction,
                            {context.begin(), context.end() - 4}, 0});
    backend.prefill(cache, {SegmentRole::TurnQuery, {context.end() - 4, context.end()}, 1});
    const Checkpoint cp = checkpoint(cache, 1);

    KvCache side = branch(cp, {SegmentRole::SubtaskInstruction, {}, 1}, backend);
    DecodeRequest request;
    request.role = SegmentRole::SubtaskOutput;
    request.turn = 1;
    request.max_tokens = 8;
    DecodeResult out = backend.decode(side, request);
    KvCache rolled = rollback(cp, out.segment, RetentionMode::Recompute, backend);

    KvCache scratch;
    auto full = context;
    full.insert(full.end(), out.segment->tokens.begin(), out.segment->tokens.end());
    backend.prefill(scratch, {SegmentRole::MainInstruction, full, 0});
    CHECK(max_abs_diff(backend.next_logits(rolled), backend.next_logits(scratch)) <= 1e-5);
}
