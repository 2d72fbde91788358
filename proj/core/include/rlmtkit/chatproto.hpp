#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "rlmtkit/vocab.hpp"

namespace rlmtkit {

/// Which prompt/completion wire format a policy is trained under.
/// warmstart-* kinds render the bare conversation turn (the format was
/// taught by SFT); zero-* kinds prepend the fixed instruction prefix.
enum class TemplateKind {
    WarmstartThink,
    WarmstartPlain,
    ZeroThink,
    ZeroPlain,
};

const char* template_kind_name(TemplateKind kind);
TemplateKind template_kind_from_name(std::string_view name);
bool is_thinking_kind(TemplateKind kind);

/// Model output split into its thought and response segments.
/// well_formed is false when the kind's required tags are absent or
/// misordered; in that case thought is absent and response carries the raw
/// text so downstream reward code always has something to score.
struct ParsedOutput {
    std::optional<std::string> thought;
    std::string response;
    bool well_formed = false;
};

namespace chatproto {

/// Instruction appended to each user prompt when sampling teacher
/// demonstrations. Kept for corpus tooling.
extern const char* const kTeacherFormatInstruction;

/// Output format the warm-started thinking models are trained to emit.
extern const char* const kWarmstartThinkOutputFormat;

/// Conversation prefix for prompted (zero) thinking models. Contains the
/// "...user text..." placeholder the user query substitutes into.
extern const char* const kZeroThinkTemplate;

/// Conversation prefix for prompted (zero) non-thinking models.
extern const char* const kZeroPlainTemplate;

/// Renders the prompt text a policy is conditioned on. zero-* kinds wrap
/// the query in <query>...</query> inside the fixed prefix; warmstart-*
/// kinds return the query unchanged. Throws InvalidInput on an empty query.
std::string render_prompt(TemplateKind kind, std::string_view user_query);

/// Splits a full generated completion into thought/response. Never throws:
/// RL rollouts must tolerate garbage, so malformed output is signaled via
/// well_formed=false. Tag matching is first-occurrence, case-sensitive,
/// no nesting; segment whitespace is trimmed.
ParsedOutput parse_output(TemplateKind kind, std::string_view raw);

/// The response segment only; what reward sources are allowed to see.
std::string strip_thought(const ParsedOutput& parsed);

/// Token counts of (thought, response) under the policy vocabulary.
/// Thought count is 0 when the thought is absent.
std::pair<int, int> segment_lengths(const ParsedOutput& parsed, const Vocab& vocab);

/// Builds the completion text an SFT demonstration targets, matching what
/// parse_output expects for the kind (think/response tags as applicable).
std::string render_completion(TemplateKind kind, std::string_view thought,
                              std::string_view response);

}  // namespace chatproto
}  // namespace rlmtkit
