#pragma once

#include "ciflex/backend.hpp"

#include <memory>

namespace ciflex {

// Model stand-in for exact token accounting. Prefill simply tags and counts
// tokens (no kv blocks); decode replays scripted outputs and records their
// token count as generation cost. Deterministic by construction.
class CountingBackend final : public ModelBackend {
public:
    explicit CountingBackend(TokenizerKind tokenizer_kind = TokenizerKind::Whitespace);

    std::string name() const override { return "counting"; }
    const Tokenizer& tokenizer() const override { return *tokenizer_; }
    bool has_numeric_kv() const override { return false; }

    std::size_t prefill(KvCache& cache, const SegmentDraft& draft) override;
    DecodeResult decode(KvCache& cache, const DecodeRequest& request) override;

private:
    std::unique_ptr<Tokenizer> tokenizer_;
};

}  // namespace ciflex
