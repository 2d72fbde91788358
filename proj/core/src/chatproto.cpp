#include "rlmtkit/chatproto.hpp"

#include <array>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {

const char* template_kind_name(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::WarmstartThink: return "warmstart-think";
        case TemplateKind::WarmstartPlain: return "warmstart-plain";
        case TemplateKind::ZeroThink: return "zero-think";
        case TemplateKind::ZeroPlain: return "zero-plain";
    }
    return "warmstart-plain";
}

TemplateKind template_kind_from_name(std::string_view name) {
    if (name == "warmstart-think") return TemplateKind::WarmstartThink;
    if (name == "warmstart-plain") return TemplateKind::WarmstartPlain;
    if (name == "zero-think") return TemplateKind::ZeroThink;
    if (name == "zero-plain") return TemplateKind::ZeroPlain;
    throw InvalidInput("unknown template kind: " + std::string(name));
}

bool is_thinking_kind(TemplateKind kind) {
    return kind == TemplateKind::WarmstartThink || kind == TemplateKind::ZeroThink;
}

namespace chatproto {

const char* const kTeacherFormatInstruction =
    "FORMAT: First showcase a detailed planning phase where you plan your response "
    "within <think>...</think> tags. Then produce the actual response within "
    "<response>...</response> tags. The content within the <think>...</think> tags "
    "should *not* refer to the fact that a planning phase was prompted - they should "
    "refer to the user prompt only.";

const char* const kWarmstartThinkOutputFormat =
    "<think> Some thinking here </think>\n"
    "Response here";

const char* const kZeroThinkTemplate =
    "A conversation between User and Assistant. Following the User's query, the "
    "Assistant first plans a response, and then provides the response. The internal "
    "reasoning process is enclosed within <think> </think> tags and the response is "
    "enclosed within <response> </response> tags, i.e., in the format <think> "
    "reasoning process here </think> <response> response here </response>.\n"
    "\n"
    "User: <query> ...user text... </query>\n"
    "Assistant:";

const char* const kZeroPlainTemplate =
    "A conversation between User and Assistant. The user asks a question, and the "
    "assistant provides the user with a response. The response is enclosed within "
    "<response> </response> tags, i.e., <response> response here </response>.\n"
    "\n"
    "User: <query> ...user text... </query>\n"
    "Assistant:";

namespace {

constexpr std::string_view kQueryPlaceholder = "...user text...";
constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kResponseOpen = "<response>";
constexpr std::string_view kResponseClose = "</response>";

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    size_t b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string substitute_query(const char* tmpl, std::string_view query) {
    std::string out(tmpl);
    size_t pos = out.find(kQueryPlaceholder);
    out.replace(pos, kQueryPlaceholder.size(), query);
    return out;
}

ParsedOutput malformed(std::string_view raw) {
    ParsedOutput p;
    p.thought = std::nullopt;
    p.response = std::string(trim(raw));
    p.well_formed = false;
    return p;
}

/// First-occurrence positions of a tag pair; returns false unless the open
/// tag occurs strictly before the close tag.
bool find_pair(std::string_view raw, std::string_view open, std::string_view close,
               size_t& open_pos, size_t& close_pos) {
    open_pos = raw.find(open);
    close_pos = raw.find(close);
    return open_pos != std::string_view::npos && close_pos != std::string_view::npos &&
           open_pos < close_pos;
}

}  // namespace

std::string render_prompt(TemplateKind kind, std::string_view user_query) {
    if (user_query.empty()) throw InvalidInput("render_prompt: empty user query");
    switch (kind) {
        case TemplateKind::WarmstartThink:
        case TemplateKind::WarmstartPlain:
            return std::string(user_query);
        case TemplateKind::ZeroThink:
            return substitute_query(kZeroThinkTemplate, user_query);
        case TemplateKind::ZeroPlain:
            return substitute_query(kZeroPlainTemplate, user_query);
    }
    throw InvalidInput("render_prompt: unknown template kind");
}

ParsedOutput parse_output(TemplateKind kind, std::string_view raw) {
    ParsedOutput p;
    switch (kind) {
        case TemplateKind::WarmstartPlain: {
            p.thought = std::nullopt;
            p.response = std::string(trim(raw));
            p.well_formed = true;
            return p;
        }
        case TemplateKind::WarmstartThink: {
            size_t to, tc;
            if (!find_pair(raw, kThinkOpen, kThinkClose, to, tc)) return malformed(raw);
            p.thought = std::string(trim(raw.substr(to + kThinkOpen.size(),
                                                    tc - to - kThinkOpen.size())));
            p.response = std::string(trim(raw.substr(tc + kThinkClose.size())));
            p.well_formed = true;
            return p;
        }
        case TemplateKind::ZeroThink: {
            size_t to, tc, ro, rc;
            if (!find_pair(raw, kThinkOpen, kThinkClose, to, tc)) return malformed(raw);
            if (!find_pair(raw, kResponseOpen, kResponseClose, ro, rc)) return malformed(raw);
            if (ro < tc) return malformed(raw);  // response block must follow the thought
            p.thought = std::string(trim(raw.substr(to + kThinkOpen.size(),
                                                    tc - to - kThinkOpen.size())));
            p.response = std::string(trim(raw.substr(ro + kResponseOpen.size(),
                                                     rc - ro - kResponseOpen.size())));
            p.well_formed = true;
            return p;
        }
        case TemplateKind::ZeroPlain: {
            size_t ro, rc;
            if (!find_pair(raw, kResponseOpen, kResponseClose, ro, rc)) return malformed(raw);
            p.thought = std::nullopt;
            p.response = std::string(trim(raw.substr(ro + kResponseOpen.size(),
                                                     rc - ro - kResponseOpen.size())));
            p.well_formed = true;
            return p;
        }
    }
    return malformed(raw);
}

std::string strip_thought(const ParsedOutput& parsed) { return parsed.response; }

std::pair<int, int> segment_lengths(const ParsedOutput& parsed, const Vocab& vocab) {
    int thought_tokens = 0;
    if (parsed.thought.has_value())
        thought_tokens = static_cast<int>(vocab.encode(*parsed.thought).size());
    int response_tokens = static_cast<int>(vocab.encode(parsed.response).size());
    return {thought_tokens, response_tokens};
}

std::string render_completion(TemplateKind kind, std::string_view thought,
                              std::string_view response) {
    std::string out;
    switch (kind) {
        case TemplateKind::WarmstartPlain:
            return std::string(response);
        case TemplateKind::WarmstartThink:
            out = "<think> ";
            out += thought;
            out += " </think>\n";
            out += response;
            return out;
        case TemplateKind::ZeroThink:
            out = "<think> ";
            out += thought;
            out += " </think> <response> ";
            out += response;
            out += " </response>";
            return out;
        case TemplateKind::ZeroPlain:
            out = "<response> ";
            out += response;
            out += " </response>";
            return out;
    }
    return out;
}

}  // namespace chatproto
}  // namespace rlmtkit
