#pragma once

#include "ciflex/kv_cache.hpp"
#include "ciflex/subtask.hpp"
#include "ciflex/tokenizer.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

namespace ciflex {

struct Capabilities {
    bool supports_fork = true;
    bool supports_suffix_evict = true;
};

// Running totals of tokens processed by a backend, for cost-exactness
// checks. Per-stage attribution happens in the orchestrator.
class CostLedger {
public:
    void add_prefill(std::size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        prefill_ += n;
    }
    void add_generated(std::size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        generated_ += n;
    }
    std::size_t prefill_tokens() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return prefill_;
    }
    std::size_t generated_tokens() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return generated_;
    }
    void reset() {
        std::lock_guard<std::mutex> lock(mutex_);
        prefill_ = 0;
        generated_ = 0;
    }

private:
    mutable std::mutex mutex_;
    std::size_t prefill_ = 0;
    std::size_t generated_ = 0;
};

// Stage keys for scripted decoding.
namespace stage_key {
std::string classifier(SubTaskKind kind);
inline constexpr const char* kMultichoice = "multichoice";
inline constexpr const char* kSubtaskReasoning = "subtask_reasoning";
inline constexpr const char* kSubtaskOutput = "subtask_output";
inline constexpr const char* kMainAnswer = "main_answer";
}  // namespace stage_key

// Scripted decode outputs, keyed by (turn, stage key). A stage may also
// declare a turn-independent default.
class ScriptedBehavior {
public:
    void set(int turn, const std::string& stage, std::string text) {
        entries_[{turn, stage}] = std::move(text);
    }
    void set_default(const std::string& stage, std::string text) {
        defaults_[stage] = std::move(text);
    }
    std::optional<std::string> text_for(int turn, const std::string& stage) const {
        auto it = entries_.find({turn, stage});
        if (it != entries_.end()) {
            return it->second;
        }
        auto dit = defaults_.find(stage);
        if (dit != defaults_.end()) {
            return dit->second;
        }
        return std::nullopt;
    }

private:
    std::map<std::pair<int, std::string>, std::string> entries_;
    std::map<std::string, std::string> defaults_;
};

struct DecodeRequest {
    SegmentRole role = SegmentRole::MainAnswer;
    int turn = 0;
    std::string stage;            // scripted lookup key
    int max_tokens = 64;          // free-running cap; scripted text overrides
    std::optional<TokenId> stop;  // free-running stop token
};

struct DecodeResult {
    std::string text;
    std::size_t token_count = 0;
    SegmentPtr segment;  // null when zero tokens were produced
};

// Contract every model implementation satisfies. Prefill and decode are
// deterministic given identical inputs and seed; prefill extends a cache by
// exactly the supplied token count. Backends hold no per-call state beyond
// the caches passed in (plus the cost ledger), so calls on disjoint caches
// are safe to run concurrently.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual std::string name() const = 0;
    virtual const Tokenizer& tokenizer() const = 0;
    virtual Capabilities capabilities() const { return {}; }

    // True when segments carry numeric key/value blocks.
    virtual bool has_numeric_kv() const = 0;

    // Extends the cache by one segment holding the draft's tokens. Returns
    // the number of tokens processed (the prefill cost). An empty draft is
    // a no-op costing zero.
    virtual std::size_t prefill(KvCache& cache, const SegmentDraft& draft) = 0;

    // Greedy, deterministic generation; every emitted token appends one
    // cache entry. When scripted behavior is attached and has an entry for
    // (request.turn, request.stage), the scripted text is emitted instead
    // (teacher-forced on numeric backends).
    virtual DecodeResult decode(KvCache& cache, const DecodeRequest& request) = 0;

    // Independent cache sharing no mutable state with the original.
    // Segments are immutable, so sharing them by pointer is safe.
    virtual KvCache fork(const KvCache& cache) { return cache; }

    CostLedger& ledger() { return ledger_; }
    const CostLedger& ledger() const { return ledger_; }

    void attach_script(const ScriptedBehavior* scripted) { scripted_ = scripted; }
    const ScriptedBehavior* scripted() const { return scripted_; }

protected:
    CostLedger ledger_;
    const ScriptedBehavior* scripted_ = nullptr;
};

}  // namespace ciflex
