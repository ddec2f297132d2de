#include "memvqa/prompting.hpp"

#include "memvqa/error.hpp"
#include "memvqa/text.hpp"
#include "templates_embedded.hpp"

namespace memvqa {

std::string_view to_string(PromptTask task) {
    switch (task) {
        case PromptTask::VanillaVQA: return "vqa";
        case PromptTask::DirectMemoryGen: return "dm";
        case PromptTask::IndirectMemoryGen: return "im";
        case PromptTask::MemoryAugmentedVQA: return "mvqa";
    }
    return "unknown";
}

PromptTask parse_prompt_task(std::string_view name) {
    const auto key = text::to_lower_ascii(name);
    if (key == "vqa") return PromptTask::VanillaVQA;
    if (key == "dm") return PromptTask::DirectMemoryGen;
    if (key == "im") return PromptTask::IndirectMemoryGen;
    if (key == "mvqa") return PromptTask::MemoryAugmentedVQA;
    throw ConfigError("unknown prompt task '" + std::string(name) + "'");
}

std::string_view template_version() {
    return detail::kTemplateVersion;
}

std::string_view template_text(PromptTask task) {
    switch (task) {
        case PromptTask::VanillaVQA: return detail::kTemplate_vanilla_vqa;
        case PromptTask::DirectMemoryGen: return detail::kTemplate_direct_memory;
        case PromptTask::IndirectMemoryGen: return detail::kTemplate_indirect_memory;
        case PromptTask::MemoryAugmentedVQA: return detail::kTemplate_memory_vqa;
    }
    return {};
}

namespace {

struct Slots {
    const std::string* question = nullptr;
    const std::string* hints = nullptr;
    const std::string* memory = nullptr;
};

// Single pass: substituted text is never rescanned for placeholders.
std::string fill(std::string_view tmpl, const Slots& slots, PromptTask task) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                const auto name = tmpl.substr(i + 1, close - i - 1);
                const std::string* value = nullptr;
                bool known = true;
                if (name == "question") value = slots.question;
                else if (name == "hints") value = slots.hints;
                else if (name == "memory") value = slots.memory;
                else known = false;
                if (known) {
                    if (value == nullptr) {
                        throw RenderError(std::string(to_string(task)) + " prompt requires '" + std::string(name) + "'");
                    }
                    out += *value;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

}  // namespace

PromptBundle render_prompt(PromptTask task, const PromptInputs& inputs, FrameKey image_ref) {
    std::string hints;
    std::string memory;
    Slots slots;
    if (inputs.question) slots.question = &*inputs.question;
    if (inputs.hints) {
        hints = inputs.hints->serialize();
        slots.hints = &hints;
    }
    if (task == PromptTask::MemoryAugmentedVQA) {
        for (const auto& entry : inputs.memory) {
            memory += entry.serialize();
            memory.push_back('\n');
        }
        slots.memory = &memory;
    }
    PromptBundle bundle;
    bundle.task = task;
    bundle.rendered_text = fill(template_text(task), slots, task);
    bundle.image_ref = std::move(image_ref);
    return bundle;
}

std::string render_target(std::string_view target) {
    std::string out(target);
    out += kEndMarker;
    return out;
}

std::string strip_end_marker(std::string_view text) {
    const auto pos = text.find(kEndMarker);
    if (pos != std::string_view::npos) text = text.substr(0, pos);
    return text::trim(text);
}

HintParse parse_hint_list(std::string_view text) {
    HintParse result;
    const auto s = strip_end_marker(text);
    if (s.empty()) {
        result.malformed = true;
        return result;
    }
    const auto open = s.find('[');
    if (open == std::string::npos) {
        const auto newline = s.find('\n');
        result.hints = HintSet({text::trim(s.substr(0, newline))});
        result.lenient = true;
        result.malformed = true;
        return result;
    }
    auto close = s.find(']', open);
    if (close == std::string::npos) {
        result.malformed = true;
        close = s.size();
    }
    const auto content = text::trim(std::string_view(s).substr(open + 1, close - open - 1));
    if (content == "NULL") {
        result.hints = HintSet::null_sentinel();
        return result;
    }
    if (content.empty()) return result;
    for (const auto& part : text::split(content, ',')) {
        auto label = text::trim(part);
        if (label.empty()) {
            result.malformed = true;
            continue;
        }
        if (!result.hints.push_back(std::move(label))) result.malformed = true;
    }
    return result;
}

MemoryParse parse_indirect_memory(std::string_view text) {
    MemoryParse result;
    const auto body = strip_end_marker(text);
    for (const auto& raw : text::split(body, '\n')) {
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        const auto open = line.find('[');
        if (open == std::string::npos || line.find(']', open) == std::string::npos) {
            ++result.skipped_lines;
            continue;
        }
        auto question = text::trim(std::string_view(line).substr(0, open));
        if (question.empty() || question.back() != '?') {
            ++result.skipped_lines;
            continue;
        }
        auto hints = parse_hint_list(std::string_view(line).substr(open));
        if (hints.malformed) {
            ++result.skipped_lines;
            continue;
        }
        result.entries.push_back({std::move(question), std::move(hints.hints)});
    }
    return result;
}

}  // namespace memvqa
