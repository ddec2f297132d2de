#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memvqa/dataset.hpp"

namespace memvqa {

/// Trim and collapse whitespace; case is preserved. Used as the key for question statistics.
std::string normalize_question(std::string_view question);

/// Ordered, duplicate-free candidate answers. A null hint set stands for the `[NULL]`
/// sentinel used when hint generation is skipped for a question.
class HintSet {
public:
    HintSet() = default;
    /// Drops duplicates, keeping first occurrences.
    explicit HintSet(std::vector<std::string> hints);

    static HintSet null_sentinel();

    const std::vector<std::string>& hints() const noexcept { return hints_; }
    std::size_t size() const noexcept { return hints_.size(); }
    bool empty() const noexcept { return hints_.empty(); }
    bool is_null() const noexcept { return null_; }
    bool contains(std::string_view label) const;

    /// Returns false (and leaves the set unchanged) if the label is already present.
    bool push_back(std::string label);

    /// `[h1, h2]`, or `[NULL]` for the sentinel.
    std::string serialize() const;

    bool operator==(const HintSet&) const = default;

private:
    std::vector<std::string> hints_;
    bool null_ = false;
};

/// A question paired with its hints. Direct and indirect memory share this shape.
struct MemoryEntry {
    std::string question;
    HintSet hints;

    /// `<question> [h1, h2]`
    std::string serialize() const;
    bool operator==(const MemoryEntry&) const = default;
};

using DirectMemory = MemoryEntry;
using IndirectMemoryEntry = MemoryEntry;

/// Per-question answer counts over a training split.
class AnswerFrequencyTable {
public:
    void add(std::string_view question, std::string_view answer);

    bool contains(std::string_view question) const;
    /// Number of samples asking this question; 0 when unseen.
    std::size_t question_frequency(std::string_view question) const;
    /// Distinct answers seen for the question.
    std::size_t distinct_answers(std::string_view question) const;
    /// Answers sorted by count descending, ties by label ascending.
    std::vector<std::pair<std::string, std::size_t>> ranked_answers(std::string_view question) const;

    const std::map<std::string, std::map<std::string, std::size_t>>& counts() const noexcept { return counts_; }
    bool empty() const noexcept { return counts_.empty(); }

private:
    std::map<std::string, std::map<std::string, std::size_t>> counts_;
    std::map<std::string, std::size_t> totals_;
};

AnswerFrequencyTable build_frequency_table(const SampleSet& train);

/// Top K-1 candidates by frequency, then the gold answer. When gold is already among them the
/// next frequent candidate is added instead, so the set holds min(K, distinct candidates) labels.
/// Without gold the K most frequent candidates are returned.
/// Throws AnnotationError if K == 0, or the question is unseen and no gold answer is given.
HintSet annotate_direct_memory(std::string_view question, const std::optional<std::string>& gold,
                               const AnswerFrequencyTable& table, std::size_t k);

/// Which annotation stages a sample takes part in.
struct ExclusionFlags {
    bool skip_direct_memory = false;  // binary Cholec80 question: DM is the `[NULL]` sentinel
    bool skip_memory_vqa = false;     // Cholec80 question with a single observed answer
};

ExclusionFlags annotation_exclusions(const Sample& sample, const AnswerFrequencyTable& table);

/// Per-sample exclusion flags for a whole split, aligned with `samples`.
std::vector<ExclusionFlags> apply_annotation_exclusions(const SampleSet& samples,
                                                        const AnswerFrequencyTable& table);

/// Per-frame indirect memory, ordered by global question frequency (descending, ties by question).
class IndirectMemoryStore {
public:
    void set(const FrameKey& frame, std::vector<IndirectMemoryEntry> entries);
    /// nullptr when the frame has no record (distinct from a frame with zero entries).
    const std::vector<IndirectMemoryEntry>* find(const FrameKey& frame) const;

    const std::map<FrameKey, std::vector<IndirectMemoryEntry>>& frames() const noexcept { return frames_; }
    std::size_t total_entries() const;

    /// One entry per line, the layout a model is trained to emit.
    static std::string serialize_entries(const std::vector<IndirectMemoryEntry>& entries);

    /// JSONL: `{"video":..., "frame":..., "im":[{"q":..., "hints":[...]}]}` per frame, in key order.
    void write_jsonl(std::ostream& out) const;
    static IndirectMemoryStore read_jsonl(std::istream& in, const std::string& source_name = "<stream>");
    static IndirectMemoryStore read_jsonl(const std::filesystem::path& path);

    bool operator==(const IndirectMemoryStore&) const = default;

private:
    std::map<FrameKey, std::vector<IndirectMemoryEntry>> frames_;
};

/// Keeps each frame's QA pairs whose question occurs at least `n` times in training, converts
/// answers to hints with annotate_direct_memory (binary Cholec80 questions keep just the gold
/// answer), and orders entries by question frequency.
IndirectMemoryStore annotate_indirect_memory(const SampleSet& samples, const AnswerFrequencyTable& table,
                                             std::size_t n, std::size_t k);

/// Annotated direct memory of every sample, keyed by frame and normalized question.
class DirectMemoryAnnotations {
public:
    void set(const FrameKey& frame, std::string_view question, HintSet hints);
    const HintSet* find(const FrameKey& frame, std::string_view question) const;
    std::size_t size() const noexcept { return entries_.size(); }

    /// JSONL: `{"video":..., "frame":..., "question":..., "hints":[...], "null":bool}`.
    void write_jsonl(std::ostream& out) const;
    static DirectMemoryAnnotations read_jsonl(std::istream& in, const std::string& source_name = "<stream>");
    static DirectMemoryAnnotations read_jsonl(const std::filesystem::path& path);

    bool operator==(const DirectMemoryAnnotations&) const = default;

private:
    std::map<std::pair<FrameKey, std::string>, HintSet> entries_;
};

/// Gold-including hint sets for every sample of `samples`, `[NULL]` for DM-excluded questions.
DirectMemoryAnnotations annotate_direct_memories(const SampleSet& samples, const AnswerFrequencyTable& table,
                                                 std::size_t k);

}  // namespace memvqa
