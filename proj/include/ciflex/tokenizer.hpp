#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ciflex {

using TokenId = std::int32_t;

// Deterministic text <-> token mapping. Two implementations: whitespace
// word tokens (default cost unit of the counting backend) and byte-level
// tokens (vocabulary of the toy transformer).
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(const std::vector<TokenId>& tokens) const = 0;

    // Token count without materializing ids. Used by the counting oracle.
    virtual std::size_t count(std::string_view text) const = 0;

    virtual std::string name() const = 0;
};

// Splits on runs of whitespace; every distinct word gets an interned id in
// first-seen order, so a given call sequence always yields the same ids.
// detokenize joins with single spaces (original spacing is not preserved).
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<TokenId> tokenize(std::string_view text) const override;
    std::string detokenize(const std::vector<TokenId>& tokens) const override;
    std::size_t count(std::string_view text) const override;
    std::string name() const override { return "whitespace"; }

private:
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, TokenId> ids_;
    mutable std::vector<std::string> words_;
};

// One token per byte; ids are the byte values 0..255. Round-trips exactly.
class ByteTokenizer final : public Tokenizer {
public:
    std::vector<TokenId> tokenize(std::string_view text) const override;
    std::string detokenize(const std::vector<TokenId>& tokens) const override;
    std::size_t count(std::string_view text) const override { return text.size(); }
    std::string name() const override { return "byte"; }
};

enum class TokenizerKind { Whitespace, Byte };

std::unique_ptr<Tokenizer> make_tokenizer(TokenizerKind kind);

}  // namespace ciflex
