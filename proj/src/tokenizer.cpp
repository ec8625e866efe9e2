#include "ciflex/tokenizer.hpp"

#include "ciflex/errors.hpp"

#include <cctype>

namespace ciflex {

namespace {

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i > start) {
            fn(text.substr(start, i - start));
        }
    }
}

}  // namespace

std::vector<TokenId> WhitespaceTokenizer::tokenize(std::string_view text) const {
    std::vector<TokenId> out;
    std::lock_guard<std::mutex> lock(mutex_);
    for_each_word(text, [&](std::string_view word) {
        std::string key(word);
        auto it = ids_.find(key);
        if (it == ids_.end()) {
            TokenId id = static_cast<TokenId>(words_.size());
            it = ids_.emplace(std::move(key), id).first;
            words_.push_back(std::string(word));
        }
        out.push_back(it->second);
    });
    return out;
}

std::string WhitespaceTokenizer::detokenize(const std::vector<TokenId>& tokens) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        TokenId id = tokens[i];
        if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
            throw Error("whitespace tokenizer: unknown token id " + std::to_string(id));
        }
        if (i > 0) {
            out += ' ';
        }
        out += words_[static_cast<std::size_t>(id)];
    }
    return out;
}

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
    std::size_t n = 0;
    for_each_word(text, [&](std::string_view) { ++n; });
    return n;
}

std::vector<TokenId> ByteTokenizer::tokenize(std::string_view text) const {
    std::vector<TokenId> out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        out.push_back(static_cast<TokenId>(c));
    }
    return out;
}

std::string ByteTokenizer::detokenize(const std::vector<TokenId>& tokens) const {
    std::string out;
    out.reserve(tokens.size());
    for (TokenId id : tokens) {
        if (id < 0 || id > 255) {
            throw Error("byte tokenizer: token id out of range: " + std::to_string(id));
        }
        out += static_cast<char>(static_cast<unsigned char>(id));
    }
    return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(TokenizerKind kind) {
    switch (kind) {
        case TokenizerKind::Whitespace: return std::make_unique<WhitespaceTokenizer>();
        case TokenizerKind::Byte: return std::make_unique<ByteTokenizer>();
    }
    throw Error("unknown tokenizer kind");
}

}  // namespace ciflex
