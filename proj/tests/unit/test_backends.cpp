#include <doctest.h>

#include "ciflex/counting_backend.hpp"
#include "ciflex/errors.hpp"
#include "ciflex/toy_transformer.hpp"

#include <cstdio>
#include <fstream>
#include <random>

using namespace ciflex;

namespace {

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

TEST_CASE("counting prefill is exact and tagged") {
    CountingBackend backend;
    KvCache cache;
    CHECK(backend.prefill(cache, {SegmentRole::TurnQuery, {}, 1}) == 0);
    CHECK(cache.empty());

    const auto tokens = backend.tokenizer().tokenize("what is it");
    CHECK(backend.prefill(cache, {SegmentRole::TurnQuery, tokens, 1}) == 3);
    CHECK(cache.logical_length() == 3);
    CHECK(cache.back()->role == SegmentRole::TurnQuery);
    CHECK_FALSE(cache.back()->kv.has_value());
    CHECK(backend.ledger().prefill_tokens() == 3);
}

TEST_CASE("counting prefill cost equals the tokenizer count") {
    CountingBackend backend;
    std::mt19937_64 rng(19);
    for (int i = 0; i < 20; ++i) {
        std::string text;
        const int words = static_cast<int>(rng() % 12);
        for (int w = 0; w < words; ++w) {
            text += "word" + std::to_string(rng() % 40) + " ";
        }
        KvCache cache;
        const auto tokens = backend.tokenizer().tokenize(text);
        const std::size_t cost =
            backend.prefill(cache, {SegmentRole::MainAnswer, tokens, 1});
        CHECK(cost == backend.tokenizer().count(text));
    }
}

TEST_CASE("counting decode replays scripted text") {
    CountingBackend backend;
    ScriptedBehavior scripted;
    scripted.set(2, stage_key::kMainAnswer, "The couch is blue.");
    backend.attach_script(&scripted);

    KvCache cache;
    backend.prefill(cache, {SegmentRole::TurnQuery,
                            backend.tokenizer().tokenize("what color is it"), 2});
    DecodeRequest request;
    request.role = SegmentRole::MainAnswer;
    request.turn = 2;
    request.stage = stage_key::kMainAnswer;
    const DecodeResult result = backend.decode(cache, request);
    CHECK(result.text == "The couch is blue.");
    CHECK(result.token_count == 4);
    CHECK(cache.back()->role == SegmentRole::MainAnswer);
    CHECK(backend.ledger().generated_tokens() == 4);
}

TEST_CASE("counting decode errors name the turn and stage") {
    CountingBackend backend;
    ScriptedBehavior scripted;
    backend.attach_script(&scripted);
    KvCache cache;
    backend.prefill(cache, {SegmentRole::TurnQuery, backend.tokenizer().tokenize("hi"), 3});
    DecodeRequest request;
    request.role = SegmentRole::MainAnswer;
    request.turn = 3;
    request.stage = stage_key::kMainAnswer;
    try {
        backend.decode(cache, request);
        FAIL("expected ScriptingError");
    } catch (const ScriptingError& e) {
        CHECK(e.turn() == 3);
        CHECK(e.stage() == stage_key::kMainAnswer);
    }
}

TEST_CASE("decode preconditions and the zero-token case") {
    CountingBackend backend;
    KvCache empty;
    DecodeRequest request;
    request.turn = 1;
    request.stage = stage_key::kMainAnswer;
    CHECK_THROWS_AS(backend.decode(empty, request), PreconditionError);

    KvCache cache;
    backend.prefill(cache, {SegmentRole::TurnQuery, backend.tokenizer().tokenize("q"), 1});
    request.max_tokens = 0;
    const DecodeResult result = backend.decode(cache, request);
    CHECK(result.token_count == 0);
    CHECK(cache.logical_length() == 1);
}

TEST_CASE("scripted defaults fill missing turns") {
    ScriptedBehavior scripted;
    scripted.set_default(stage_key::classifier(SubTaskKind::Math), "No");
    scripted.set(4, stage_key::classifier(SubTaskKind::Math), "Yes");
    CHECK(*scripted.text_for(4, stage_key::classifier(SubTaskKind::Math)) == "Yes");
    CHECK(*scripted.text_for(9, stage_key::classifier(SubTaskKind::Math)) == "No");
    CHECK_FALSE(scripted.text_for(9, stage_key::kMainAnswer).has_value());
}

TEST_CASE("fork isolates the copy from the original") {
    CountingBackend backend;
    KvCache cache;
    backend.prefill(cache, {SegmentRole::TurnQuery,
                            backend.tokenizer().tokenize("a b c"), 1});
    KvCache copy = backend.fork(cache);
    backend.prefill(copy, {SegmentRole::MainAnswer,
                           backend.tokenizer().tokenize("x y z w v"), 1});
    CHECK(cache.logical_length() == 3);
    CHECK(copy.logical_length() == 8);

    KvCache empty_fork = backend.fork(KvCache{});
    CHECK(empty_fork.empty());
}

TEST_CASE("toy backend is seed deterministic") {
    ToyTransformerConfig config;
    config.seed = 42;
    ToyBackend first(config);
    ToyBackend second(config);
    std::mt19937_64 rng(23);
    const auto prompt = bytes(rng, 24);

    KvCache cache_a, cache_b;
    first.prefill(cache_a, {SegmentRole::TurnQuery, prompt, 1});
    second.prefill(cache_b, {SegmentRole::TurnQuery, prompt, 1});
    CHECK(max_abs_diff(first.next_logits(cache_a), second.next_logits(cache_b)) == 0.0);

    DecodeRequest request;
    request.role = SegmentRole::MainAnswer;
    request.turn = 1;
    request.max_tokens = 12;
    const DecodeResult out_a = first.decode(cache_a, request);
    const DecodeResult out_b = second.decode(cache_b, request);
    CHECK(out_a.segment->tokens == out_b.segment->tokens);
    CHECK(out_a.token_count == 12);
}

TEST_CASE("toy fork shares bit-equal kv blocks") {
    ToyBackend backend(ToyTransformerConfig{});
    std::mt19937_64 rng(29);
    KvCache cache;
    backend.prefill(cache, {SegmentRole::TurnQuery, bytes(rng, 10), 1});
    KvCache copy = backend.fork(cache);
    REQUIRE(copy.segment_count() == cache.segment_count());
    for (std::size_t i = 0; i < cache.segment_count(); ++i) {
        CHECK(segments_equal(cache.segment(i), copy.segment(i)));
    }
    backend.prefill(copy, {SegmentRole::MainAnswer, bytes(rng, 5), 1});
    CHECK(cache.logical_length() == 10);
}

TEST_CASE("chunked prefill equals single-shot prefill") {
    ToyBackend backend(ToyTransformerConfig{});
    std::mt19937_64 rng(31);
    const auto stream = bytes(rng, 15);

    KvCache whole;
    backend.prefill(whole, {SegmentRole::TurnQuery, stream, 1});
    KvCache pieces;
    backend.prefill(pieces, {SegmentRole::TurnQuery, {stream.begin(), stream.begin() + 10}, 1});
    backend.prefill(pieces, {SegmentRole::TurnQuery, {stream.begin() + 10, stream.end()}, 1});
    CHECK(max_abs_diff(backend.next_logits(whole), backend.next_logits(pieces)) <= 1e-5);
}

TEST_CASE("toy backend teacher-forces scripted text") {
    ToyTransformerConfig config;
    ToyBackend backend(config);
    ScriptedBehavior scripted;
    scripted.set(1, stage_key::kMainAnswer, "ok!");
    backend.attach_script(&scripted);

    std::mt19937_64 rng(37);
    KvCache cache;
    backend.prefill(cache, {SegmentRole::TurnQuery, bytes(rng, 6), 1});
    DecodeRequest request;
    request.role = SegmentRole::MainAnswer;
    request.turn = 1;
    request.stage = stage_key::kMainAnswer;
    const DecodeResult result = backend.decode(cache, request);
    CHECK(result.text == "ok!");
    CHECK(result.token_count == 3);
    CHECK(cache.back()->kv.has_value());
    CHECK(cache.back()->kv->layers.size() == static_cast<std::size_t>(config.layers));
}

TEST_CASE("toy positions overflow raises an error") {
    ToyTransformerConfig config;
    config.max_position = 8;
    ToyBackend backend(config);
    std::mt19937_64 rng(41);
    KvCache cache;
    CHECK_THROWS_AS(backend.prefill(cache, {SegmentRole::TurnQuery, bytes(rng, 9), 1}),
                    Error);
}

TEST_CASE("absolute sinusoidal positions also chunk cleanly") {
    ToyTransformerConfig config;
    config.position_encoding = PositionEncoding::AbsoluteSinusoidal;
    ToyBackend backend(config);
    std::mt19937_64 rng(43);
    const auto stream = bytes(rng, 20);
    KvCache whole, pieces;
    backend.prefill(whole, {SegmentRole::TurnQuery, stream, 1});
    backend.prefill(pieces, {SegmentRole::TurnQuery, {stream.begin(), stream.begin() + 7}, 1});
    backend.prefill(pieces, {SegmentRole::TurnQuery, {stream.begin() + 7, stream.end()}, 1});
    CHECK(max_abs_diff(backend.next_logits(whole), backend.next_logits(pieces)) <= 1e-5);
}

TEST_CASE("toy config validates and loads from key-value files") {
    ToyTransformerConfig bad;
    bad.model_dim = 62;  // not divisible by 4 heads
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    const std::string path = "toy_config_test.conf";
    {
        std::ofstream out(path);
        out << "# toy model\n"
            << "layers = 3\n"
            << "heads = 2\n"
            << "model_dim = 32\n"
            << "max_position = 128\n"
            << "seed = 7\n"
            << "position_encoding = absolute-sinusoidal\n";
    }
    const ToyTransformerConfig loaded = ToyTransformerConfig::from_file(path);
    std::remove(path.c_str());
    CHECK(loaded.layers == 3);
    CHECK(loaded.heads == 2);
    CHECK(loaded.model_dim == 32);
    CHECK(loaded.max_position == 128);
    CHECK(loaded.seed == 7);
    CHECK(loaded.position_encoding == PositionEncoding::AbsoluteSinusoidal);
}
