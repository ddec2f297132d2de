#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memvqa/annotation.hpp"
#include "memvqa/dataset.hpp"

namespace memvqa {

enum class PromptTask { VanillaVQA, DirectMemoryGen, IndirectMemoryGen, MemoryAugmentedVQA };

std::string_view to_string(PromptTask task);
PromptTask parse_prompt_task(std::string_view name);

/// Version tag of the compiled-in template set.
std::string_view template_version();
/// Raw template text with `{question}`, `{hints}` and `{memory}` placeholders.
std::string_view template_text(PromptTask task);

inline constexpr std::string_view kEndMarker = "<|end|>";

struct PromptInputs {
    std::optional<std::string> question;
    std::vector<IndirectMemoryEntry> memory;  // selected indirect memory
    std::optional<HintSet> hints;             // direct memory hints for the question
};

struct PromptBundle {
    PromptTask task = PromptTask::VanillaVQA;
    std::string rendered_text;  // user turn followed by the opening assistant marker
    FrameKey image_ref;
};

/// Renders a prompt byte-exactly. VanillaVQA and DirectMemoryGen need a question;
/// MemoryAugmentedVQA needs a question and hints. Throws RenderError otherwise.
PromptBundle render_prompt(PromptTask task, const PromptInputs& inputs, FrameKey image_ref = {});

/// The assistant turn a model is trained to produce: `<target><|end|>`.
std::string render_target(std::string_view target);

struct HintParse {
    HintSet hints;
    bool malformed = false;  // empty input, empty labels, text after the bracket, ...
    bool lenient = false;    // no bracket found; the trimmed line became a single hint
};

/// Parses `[label, label, ...]`, ignoring surrounding text and a trailing `<|end|>`.
/// `[NULL]` yields the null sentinel. Never throws.
HintParse parse_hint_list(std::string_view text);

struct MemoryParse {
    std::vector<IndirectMemoryEntry> entries;
    std::size_t skipped_lines = 0;
};

/// One `<question?> [hints]` per line; non-conforming lines are skipped and counted,
/// blank lines ignored. Never throws.
MemoryParse parse_indirect_memory(std::string_view text);

/// Strips a trailing `<|end|>` marker and surrounding whitespace.
std::string strip_end_marker(std::string_view text);

}  // namespace memvqa
