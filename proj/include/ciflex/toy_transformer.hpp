#pragma once

#include "ciflex/backend.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ciflex {

enum class PositionEncoding { Rotary, AbsoluteSinusoidal };

std::string_view to_string(PositionEncoding enc);

// Desk-scale decoder-only transformer configuration. Byte-level vocabulary;
// defaults are small enough for sub-second tests.
struct ToyTransformerConfig {
    int layers = 2;
    int heads = 4;
    int model_dim = 64;
    int vocab = 256;
    int max_position = 4096;
    std::uint64_t seed = 42;
    PositionEncoding position_encoding = PositionEncoding::Rotary;

    void validate() const;  // throws ValidationError

    // Plain key-value file: one `key = value` per line, `#` comments.
    // Keys: layers, heads, model_dim, vocab, max_position, seed,
    // position_encoding (rotary | absolute-sinusoidal).
    static ToyTransformerConfig from_file(const std::string& path);
};

// Seeded decoder-only transformer operating directly on segmented caches.
// All weights are drawn once from the config seed; prefill and greedy
// decode are fully deterministic. Tokens attend over every prior cache
// entry; rotary embeddings use the stored position indices, so position
// gaps left by evicted segments behave exactly as stored.
class ToyTransformer {
public:
    explicit ToyTransformer(const ToyTransformerConfig& config);

    const ToyTransformerConfig& config() const { return config_; }

    // Extends `cache` by one segment holding the draft tokens, computing
    // kv blocks token by token (each attending over everything before it).
    // Returns the logits after the final token, or an empty vector for an
    // empty draft.
    std::vector<float> prefill_segment(KvCache& cache, const SegmentDraft& draft) const;

    // Logits for the next token given the current cache state, recomputed
    // from the last cached token without mutating the cache.
    std::vector<float> next_logits(const KvCache& cache) const;

    // Greedy decode of up to max_tokens (ties broken toward the lowest
    // token id), appending one segment. Stops early on `stop`.
    DecodeResult greedy_decode(KvCache& cache, SegmentRole role, int turn,
                               int max_tokens, std::optional<TokenId> stop) const;

    // Appends `tokens` as a decoded segment (teacher forcing): kv blocks are
    // computed exactly as greedy decode would, but the token identities are
    // forced. Used to replay scripted outputs on the numeric backend.
    SegmentPtr forced_decode(KvCache& cache, SegmentRole role, int turn,
                             const std::vector<TokenId>& tokens) const;

private:
    struct LayerWeights {
        std::vector<float> wq, wk, wv, wo;  // [d x d]
        std::vector<float> w1;              // [d x 4d]
        std::vector<float> w2;              // [4d x d]
    };

    // Key/value rows visible to attention, in cache order.
    struct LayerView {
        std::vector<const LayerKv*> blocks;
    };

    std::vector<float> forward_token(TokenId id, int pos,
                                     const std::vector<const SegmentKv*>& prior,
                                     SegmentKv* pending) const;

    static std::vector<const SegmentKv*> collect_kv(const KvCache& cache);

    void check_token(TokenId id) const;
    void check_position(int pos) const;

    ToyTransformerConfig config_;
    int head_dim_;
    std::vector<float> embedding_;            // [vocab x d]
    std::vector<float> unembedding_;          // [d x vocab]
    std::vector<LayerWeights> layer_weights_;
};

// ModelBackend over the toy transformer. Byte-level tokenizer. When
// scripted behavior is attached, decode teacher-forces the scripted text
// (the kv blocks are still real model state); otherwise it free-runs
// greedily.
class ToyBackend final : public ModelBackend {
public:
    explicit ToyBackend(const ToyTransformerConfig& config = {});

    std::string name() const override { return "toy"; }
    const Tokenizer& tokenizer() const override { return tokenizer_; }
    bool has_numeric_kv() const override { return true; }

    std::size_t prefill(KvCache& cache, const SegmentDraft& draft) override;
    DecodeResult decode(KvCache& cache, const DecodeRequest& request) override;

    const ToyTransformer& model() const { return model_; }
    std::vector<float> next_logits(const KvCache& cache) const {
        return model_.next_logits(cache);
    }

private:
    ToyTransformer model_;
    ByteTokenizer tokenizer_;
};

}  // namespace ciflex
