#pragma once

#include "ciflex/script.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace ciflex {

// Inclusive token-length range sampled per generated text.
struct LengthRange {
    int min = 1;
    int max = 1;

    static LengthRange fixed(int n) { return {n, n}; }
};

// Recipe for a synthetic conversation: turn mix, token-length distributions,
// and a seed. Generated text is pseudo-random word filler of the sampled
// lengths; instructions come rendered from the template registry unless
// `instruction_len` is set, in which case they are filler too (useful for
// controlled-length experiments).
struct SyntheticProfile {
    std::string name = "custom";
    int turn_count = 8;
    std::map<SubTaskKind, double> mix;  // includes None; ratios sum to 1
    std::uint64_t seed = 1;

    LengthRange query_len{8, 14};
    LengthRange answer_len{20, 30};
    LengthRange passage_len{60, 90};
    LengthRange reasoning_len{40, 60};
    LengthRange rewrite_output_len{10, 16};
    LengthRange task_output_len{6, 12};
    LengthRange summary_output_len{20, 30};
    LengthRange instruction_len{0, 0};  // 0 = use template-rendered instructions

    void validate() const;  // throws ProfileError / ValidationError

    // Plain key-value file: `key = value`, ranges as `min..max`, mix entries
    // as `mix.<kind> = ratio`.
    static SyntheticProfile from_file(const std::string& path);
};

// The bundled profiles.
SyntheticProfile paper_like_22_profile();
SyntheticProfile minimal_profile();

// Named built-in lookup ("paper-like-22", "minimal"); nullopt if unknown.
std::optional<SyntheticProfile> builtin_profile(const std::string& name);

// Deterministic for a given profile+seed. Guarantees: scripted verdicts are
// consistent with gold labels (priority argmax selects gold), chat-summary
// turns appear only after a run of casual turns, and the result passes
// validate_script.
ConversationScript generate_synthetic(const SyntheticProfile& profile);

}  // namespace ciflex
