#include "ciflex/counting_backend.hpp"

#include "ciflex/errors.hpp"

#include <numeric>

namespace ciflex {

namespace stage_key {
std::string classifier(SubTaskKind kind) {
    return "classifier:" + std::string(to_string(kind));
}
}  // namespace stage_key

CountingBackend::CountingBackend(TokenizerKind tokenizer_kind)
    : tokenizer_(make_tokenizer(tokenizer_kind)) {}

std::size_t CountingBackend::prefill(KvCache& cache, const SegmentDraft& draft) {
    if (draft.tokens.empty()) {
        return 0;
    }
    auto segment = std::make_shared<Segment>();
    segment->role = draft.role;
    segment->tokens = draft.tokens;
    segment->turn = draft.turn;
    segment->positions.resize(draft.tokens.size());
    std::iota(segment->positions.begin(), segment->positions.end(), cache.next_position());
    cache.append(std::move(segment));
    ledger_.add_prefill(draft.tokens.size());
    return draft.tokens.size();
}

DecodeResult CountingBackend::decode(KvCache& cache, const DecodeRequest& request) {
    if (cache.empty()) {
        throw PreconditionError("decode: cache is empty");
    }
    if (request.max_tokens == 0) {
        return {};
    }
    if (!scripted_) {
        throw ScriptingError(request.turn, request.stage + " (no script attached)");
    }
    auto text = scripted_->text_for(request.turn, request.stage);
    if (!text) {
        throw ScriptingError(request.turn, request.stage);
    }
    std::vector<TokenId> tokens = tokenizer_->tokenize(*text);
    DecodeResult result;
    result.text = *text;
    result.token_count = tokens.size();
    if (!tokens.empty()) {
        auto segment = std::make_shared<Segment>();
        segment->role = request.role;
        segment->turn = request.turn;
        segment->positions.resize(tokens.size());
        std::iota(segment->positions.begin(), segment->positions.end(), cache.next_position());
        segment->tokens = std::move(tokens);
        result.segment = segment;
        cache.append(std::move(segment));
        ledger_.add_generated(result.token_count);
    }
    return result;
}

}  // namespace ciflex
