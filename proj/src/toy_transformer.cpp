#include "ciflex/toy_transformer.hpp"

#include "ciflex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace ciflex {

std::string_view to_string(PositionEncoding enc) {
    switch (enc) {
        case PositionEncoding::Rotary: return "rotary";
        case PositionEncoding::AbsoluteSinusoidal: return "absolute-sinusoidal";
    }
    return "unknown";
}

void ToyTransformerConfig::validate() const {
    std::vector<std::string> issues;
    if (layers < 1) issues.push_back("layers: must be >= 1");
    if (heads < 1) issues.push_back("heads: must be >= 1");
    if (model_dim < 1) issues.push_back("model_dim: must be >= 1");
    if (heads >= 1 && model_dim % heads != 0) {
        issues.push_back("model_dim: must be divisible by heads");
    }
    if (model_dim % 2 != 0) issues.push_back("model_dim: must be even");
    if (heads >= 1 && model_dim % heads == 0 && (model_dim / heads) % 2 != 0) {
        issues.push_back("model_dim/heads: head dimension must be even");
    }
    if (vocab < 256) issues.push_back("vocab: must be >= 256 (byte-level)");
    if (max_position < 1) issues.push_back("max_position: must be >= 1");
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
}

ToyTransformerConfig ToyTransformerConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("toy config: cannot open " + path);
    }
    ToyTransformerConfig config;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::string key, eq, value;
        std::istringstream fields(line);
        if (!(fields >> key)) {
            continue;  // blank line
        }
        fields >> eq;
        if (eq == "=") {
            fields >> value;
        } else {
            value = eq;  // `key value` form
        }
        if (value.empty()) {
            throw ValidationError({path + ":" + std::to_string(lineno) +
                                   ": missing value for " + key});
        }
        try {
            if (key == "layers") config.layers = std::stoi(value);
            else if (key == "heads") config.heads = std::stoi(value);
            else if (key == "model_dim") config.model_dim = std::stoi(value);
            else if (key == "vocab") config.vocab = std::stoi(value);
            else if (key == "max_position") config.max_position = std::stoi(value);
            else if (key == "seed") config.seed = std::stoull(value);
            else if (key == "position_encoding") {
                if (value == "rotary") config.position_encoding = PositionEncoding::Rotary;
                else if (value == "absolute-sinusoidal") {
                    config.position_encoding = PositionEncoding::AbsoluteSinusoidal;
                } else {
                    throw ValidationError({path + ": position_encoding must be rotary "
                                           "or absolute-sinusoidal"});
                }
            } else {
                throw ValidationError({path + ": unknown key " + key});
            }
        } catch (const std::invalid_argument&) {
            throw ValidationError({path + ": bad value for " + key + ": " + value});
        }
    }
    config.validate();
    return config;
}

namespace {

void fill_normal(std::vector<float>& w, std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<float> dist(0.0f, 0.02f);
    w.resize(n);
    for (auto& x : w) {
        x = dist(rng);
    }
}

void layer_norm(const std::vector<float>& x, std::vector<float>& out) {
    const std::size_t d = x.size();
    double mean = 0.0;
    for (float v : x) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (float v : x) {
        double c = v - mean;
        var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    out.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = static_cast<float>((x[i] - mean) * inv);
    }
}

// out[j] = sum_i x[i] * w[i * cols + j]
void mat_vec(const std::vector<float>& x, const std::vector<float>& w,
             std::size_t cols, std::vector<float>& out) {
    const std::size_t rows = x.size();
    out.assign(cols, 0.0f);
    for (std::size_t i = 0; i < rows; ++i) {
        const float xi = x[i];
        const float* wrow = &w[i * cols];
        for (std::size_t j = 0; j < cols; ++j) {
            out[j] += xi * wrow[j];
        }
    }
}

float gelu(float x) {
    const float c = 0.7978845608028654f;  // sqrt(2/pi)
    return 0.5f * x * (1.0f + std::tanh(c * (x + 0.044715f * x * x * x)));
}

void apply_rope(float* vec, int head_dim, int pos) {
    for (int i = 0; i < head_dim / 2; ++i) {
        const double theta = std::pow(10000.0, -2.0 * i / head_dim);
        const double angle = pos * theta;
        const float cs = static_cast<float>(std::cos(angle));
        const float sn = static_cast<float>(std::sin(angle));
        const float a = vec[2 * i];
        const float b = vec[2 * i + 1];
        vec[2 * i] = a * cs - b * sn;
        vec[2 * i + 1] = a * sn + b * cs;
    }
}

}  // namespace

ToyTransformer::ToyTransformer(const ToyTransformerConfig& config) : config_(config) {
    config_.validate();
    head_dim_ = config_.model_dim / config_.heads;
    const std::size_t d = static_cast<std::size_t>(config_.model_dim);
    std::mt19937_64 rng(config_.seed);
    fill_normal(embedding_, static_cast<std::size_t>(config_.vocab) * d, rng);
    fill_normal(unembedding_, d * static_cast<std::size_t>(config_.vocab), rng);
    layer_weights_.resize(static_cast<std::size_t>(config_.layers));
    for (auto& lw : layer_weights_) {
        fill_normal(lw.wq, d * d, rng);
        fill_normal(lw.wk, d * d, rng);
        fill_normal(lw.wv, d * d, rng);
        fill_normal(lw.wo, d * d, rng);
        fill_normal(lw.w1, d * 4 * d, rng);
        fill_normal(lw.w2, 4 * d * d, rng);
    }
}

void ToyTransformer::check_token(TokenId id) const {
    if (id < 0 || id >= config_.vocab) {
        throw Error("toy transformer: token id out of vocabulary: " + std::to_string(id));
    }
}

void ToyTransformer::check_position(int pos) const {
    if (pos >= config_.max_position) {
        throw Error("toy transformer: position " + std::to_string(pos) +
                    " overflows max_position " + std::to_string(config_.max_position));
    }
}

std::vector<const SegmentKv*> ToyTransformer::collect_kv(const KvCache& cache) {
    std::vector<const SegmentKv*> out;
    out.reserve(cache.segment_count());
    for (const auto& seg : cache.segments()) {
        if (!seg->kv.has_value()) {
            throw Error("toy transformer: cache segment is missing kv blocks");
        }
        out.push_back(&*seg->kv);
    }
    return out;
}

// One token through the stack. When `pending` is non-null the token's
// key/value rows are appended to it per layer before attention, so the
// token attends to itself; when null, the token's rows are expected to
// already be the last rows of `prior` (logit recomputation path).
std::vector<float> ToyTransformer::forward_token(
    TokenId id, int pos, const std::vector<const SegmentKv*>& prior,
    SegmentKv* pending) const {
    check_token(id);
    check_position(pos);
    const std::size_t d = static_cast<std::size_t>(config_.model_dim);

    std::vector<float> x(d);
    const float* emb = &embedding_[static_cast<std::size_t>(id) * d];
    std::copy(emb, emb + d, x.begin());
    if (config_.position_encoding == PositionEncoding::AbsoluteSinusoidal) {
        for (std::size_t j = 0; j < d; ++j) {
            const double exponent = static_cast<double>(j - (j % 2)) / static_cast<double>(d);
            const double freq = std::pow(10000.0, exponent);
            const double angle = pos / freq;
            x[j] += static_cast<float>((j % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }
    }

    std::vector<float> h, q, k, v, attn, proj, mlp_in, mlp_hidden, mlp_out;
    for (std::size_t l = 0; l < layer_weights_.size(); ++l) {
        const LayerWeights& lw = layer_weights_[l];
        layer_norm(x, h);
        mat_vec(h, lw.wq, d, q);
        mat_vec(h, lw.wk, d, k);
        mat_vec(h, lw.wv, d, v);
        if (config_.position_encoding == PositionEncoding::Rotary) {
            for (int head = 0; head < config_.heads; ++head) {
                apply_rope(&q[static_cast<std::size_t>(head) * head_dim_], head_dim_, pos);
                apply_rope(&k[static_cast<std::size_t>(head) * head_dim_], head_dim_, pos);
            }
        }
        if (pending) {
            LayerKv& block = pending->layers[l];
            block.keys.insert(block.keys.end(), k.begin(), k.end());
            block.values.insert(block.values.end(), v.begin(), v.end());
        }

        // Gather the attention span: prior segments, then pending rows.
        std::vector<const LayerKv*> blocks;
        blocks.reserve(prior.size() + 1);
        for (const SegmentKv* seg : prior) {
            blocks.push_back(&seg->layers[l]);
        }
        if (pending) {
            blocks.push_back(&pending->layers[l]);
        }

        std::size_t total_rows = 0;
        for (const LayerKv* block : blocks) {
            total_rows += block->keys.size() / d;
        }

        attn.assign(d, 0.0f);
        const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
        std::vector<double> scores(total_rows);
        std::vector<double> weights(total_rows);
        for (int head = 0; head < config_.heads; ++head) {
            const std::size_t offset = static_cast<std::size_t>(head) * head_dim_;
            std::size_t row = 0;
            double max_score = -1e30;
            for (const LayerKv* block : blocks) {
                const std::size_t rows = block->keys.size() / d;
                for (std::size_t r = 0; r < rows; ++r, ++row) {
                    const float* krow = &block->keys[r * d + offset];
                    double s = 0.0;
                    for (int j = 0; j < head_dim_; ++j) {
                        s += static_cast<double>(q[offset + j]) * krow[j];
                    }
                    s *= scale;
                    scores[row] = s;
                    max_score = std::max(max_score, s);
                }
            }
            double denom = 0.0;
            for (std::size_t r = 0; r < total_rows; ++r) {
                weights[r] = std::exp(scores[r] - max_score);
                denom += weights[r];
            }
            row = 0;
            std::vector<double> acc(static_cast<std::size_t>(head_dim_), 0.0);
            for (const LayerKv* block : blocks) {
                const std::size_t rows = block->values.size() / d;
                for (std::size_t r = 0; r < rows; ++r, ++row) {
                    const float* vrow = &block->values[r * d + offset];
                    const double w = weights[row] / denom;
                    for (int j = 0; j < head_dim_; ++j) {
                        acc[j] += w * vrow[j];
                    }
                }
            }
            for (int j = 0; j < head_dim_; ++j) {
                attn[offset + j] = static_cast<float>(acc[j]);
            }
        }

        mat_vec(attn, lw.wo, d, proj);
        for (std::size_t j = 0; j < d; ++j) {
            x[j] += proj[j];
        }

        layer_norm(x, mlp_in);
        mat_vec(mlp_in, lw.w1, 4 * d, mlp_hidden);
        for (auto& hval : mlp_hidden) {
            hval = gelu(hval);
        }
        mat_vec(mlp_hidden, lw.w2, d, mlp_out);
        for (std::size_t j = 0; j < d; ++j) {
            x[j] += mlp_out[j];
        }
    }

    layer_norm(x, h);
    std::vector<float> logits;
    mat_vec(h, unembedding_, static_cast<std::size_t>(config_.vocab), logits);
    return logits;
}

std::vector<float> ToyTransformer::prefill_segment(KvCache& cache,
                                                   const SegmentDraft& draft) const {
    if (draft.tokens.empty()) {
        return {};
    }
    auto prior = collect_kv(cache);
    SegmentKv pending;
    pending.layers.resize(layer_weights_.size());

    std::vector<float> logits;
    std::vector<int> positions(draft.tokens.size());
    std::iota(positions.begin(), positions.end(), cache.next_position());
    for (std::size_t i = 0; i < draft.tokens.size(); ++i) {
        logits = forward_token(draft.tokens[i], positions[i], prior, &pending);
    }

    auto segment = std::make_shared<Segment>();
    segment->role = draft.role;
    segment->turn = draft.turn;
    segment->tokens = draft.tokens;
    segment->positions = std::move(positions);
    segment->kv = std::move(pending);
    cache.append(std::move(segment));
    return logits;
}

std::vector<float> ToyTransformer::next_logits(const KvCache& cache) const {
    if (cache.empty()) {
        throw PreconditionError("next_logits: cache is empty");
    }
    auto prior = collect_kv(cache);
    const Segment& last = *cache.back();
    return forward_token(last.tokens.back(), last.positions.back(), prior, nullptr);
}

DecodeResult ToyTransformer::greedy_decode(KvCache& cache, SegmentRole role, int turn,
                                           int max_tokens,
                                           std::optional<TokenId> stop) const {
    if (cache.empty()) {
        throw PreconditionError("decode: cache is empty");
    }
    if (max_tokens <= 0) {
        return {};
    }
    auto prior = collect_kv(cache);
    SegmentKv pending;
    pending.layers.resize(layer_weights_.size());

    std::vector<TokenId> tokens;
    std::vector<int> positions;
    std::vector<float> logits = next_logits(cache);
    int pos = cache.next_position();
    while (static_cast<int>(tokens.size()) < max_tokens) {
        const auto best = std::max_element(logits.begin(), logits.end());
        const TokenId tok = static_cast<TokenId>(best - logits.begin());
        if (stop && tok == *stop) {
            break;
        }
        logits = forward_token(tok, pos, prior, &pending);
        tokens.push_back(tok);
        positions.push_back(pos);
        ++pos;
    }
    DecodeResult result;
    if (tokens.empty()) {
        return result;
    }
    auto segment = std::make_shared<Segment>();
    segment->role = role;
    segment->turn = turn;
    segment->tokens = tokens;
    segment->positions = std::move(positions);
    segment->kv = std::move(pending);
    result.segment = segment;
    result.token_count = tokens.size();
    ByteTokenizer bytes;
    result.text = bytes.detokenize(tokens);
    cache.append(std::move(segment));
    return result;
}

SegmentPtr ToyTransformer::forced_decode(KvCache& cache, SegmentRole role, int turn,
                                         const std::vector<TokenId>& tokens) const {
    if (cache.empty()) {
        throw PreconditionError("decode: cache is empty");
    }
    if (tokens.empty()) {
        return nullptr;
    }
    auto prior = collect_kv(cache);
    SegmentKv pending;
    pending.layers.resize(layer_weights_.size());
    std::vector<int> positions(tokens.size());
    std::iota(positions.begin(), positions.end(), cache.next_position());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        forward_token(tokens[i], positions[i], prior, &pending);
    }
    auto segment = std::make_shared<Segment>();
    segment->role = role;
    segment->turn = turn;
    segment->tokens = tokens;
    segment->positions = std::move(positions);
    segment->kv = std::move(pending);
    cache.append(segment);
    return segment;
}

ToyBackend::ToyBackend(const ToyTransformerConfig& config) : model_(config) {}

std::size_t ToyBackend::prefill(KvCache& cache, const SegmentDraft& draft) {
    if (draft.tokens.empty()) {
        return 0;
    }
    model_.prefill_segment(cache, draft);
    ledger_.add_prefill(draft.tokens.size());
    return draft.tokens.size();
}

DecodeResult ToyBackend::decode(KvCache& cache, const DecodeRequest& request) {
    if (cache.empty()) {
        throw PreconditionError("decode: cache is empty");
    }
    if (request.max_tokens == 0) {
        return {};
    }
    if (scripted_) {
        auto text = scripted_->text_for(request.turn, request.stage);
        if (!text) {
            throw ScriptingError(request.turn, request.stage);
        }
        std::vector<TokenId> tokens = tokenizer_.tokenize(*text);
        DecodeResult result;
        result.text = *text;
        result.token_count = tokens.size();
        if (!tokens.empty()) {
            result.segment = model_.forced_decode(cache, request.role, request.turn, tokens);
            ledger_.add_generated(tokens.size());
        }
        return result;
    }
    DecodeResult result =
        model_.greedy_decode(cache, request.role, request.turn, request.max_tokens, request.stop);
    ledger_.add_generated(result.token_count);
    return result;
}

}  // namespace ciflex
