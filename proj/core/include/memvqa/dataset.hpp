#pragma once

#include <cstddef>
#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memvqa {

enum class DatasetId { EndoVis18, EndoVis17, Cholec80 };
enum class Split { Train, Test };

/// Canonical lowercase names: "endovis18", "endovis17", "cholec80".
std::string_view to_string(DatasetId id);
std::string_view to_string(Split split);
/// Throws ConfigError on unknown names. Accepts "EndoVis-18", "endovis18", "EndoVis18", ...
DatasetId parse_dataset_id(std::string_view name);
Split parse_split(std::string_view name);

struct FrameKey {
    std::string video;
    std::string frame;

    auto operator<=>(const FrameKey&) const = default;
    bool operator==(const FrameKey&) const = default;
};

std::string to_string(const FrameKey& key);

struct Sample {
    DatasetId dataset = DatasetId::EndoVis18;
    std::string video;
    std::string frame;
    std::string image;  // relative to the dataset root
    std::string question;
    std::string answer;

    FrameKey frame_key() const { return {video, frame}; }
    bool operator==(const Sample&) const = default;
};

/// Samples of one split in ingestion order, indexed by frame.
class SampleSet {
public:
    SampleSet() = default;
    explicit SampleSet(Split split) : split_(split) {}

    /// Validates uniqueness of (dataset, video, frame, question); throws RecordError on duplicates.
    void add(Sample sample);

    Split split() const noexcept { return split_; }
    const std::vector<Sample>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }

    /// Frames in order of first appearance.
    const std::vector<FrameKey>& frames() const noexcept { return frame_order_; }
    /// Indices of the samples belonging to a frame; empty when the frame is unknown.
    const std::vector<std::size_t>& frame_samples(const FrameKey& key) const;
    const std::map<FrameKey, std::vector<std::size_t>>& frame_index() const noexcept { return frame_index_; }

    /// Appends every sample of `other` (same split). Duplicates are rejected as in add().
    void append(const SampleSet& other);

    bool operator==(const SampleSet& other) const {
        return split_ == other.split_ && samples_ == other.samples_;
    }

private:
    Split split_ = Split::Train;
    std::vector<Sample> samples_;
    std::vector<FrameKey> frame_order_;
    std::map<FrameKey, std::vector<std::size_t>> frame_index_;
};

/// Closed label set of a dataset, with the normalization used for matching answers.
class LabelVocab {
public:
    static const LabelVocab& for_dataset(DatasetId id);

    LabelVocab(DatasetId id, std::vector<std::string> labels);

    DatasetId dataset() const noexcept { return dataset_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }

    /// trim, ASCII casefold, '_' -> ' ', collapse internal whitespace.
    static std::string normalize(std::string_view text);

    /// Index of the label `text` normalizes to, or nullopt. No fuzzy matching.
    std::optional<std::size_t> find(std::string_view text) const;

private:
    DatasetId dataset_;
    std::vector<std::string> labels_;
    std::map<std::string, std::size_t> normalized_;
};

enum class QuestionType { Action, Location, Binary, Count, Unknown };

std::string_view to_string(QuestionType type);

struct QuestionTypeRule {
    std::string prefix;  // matched case-insensitively against the trimmed question
    QuestionType type;
};

/// Prefix rules applied in order; first match wins.
const std::vector<QuestionTypeRule>& question_type_rules(DatasetId id);

QuestionType classify_question(std::string_view question, DatasetId id);

struct DatasetStats {
    std::size_t n_videos = 0;
    std::size_t n_frames = 0;
    std::size_t n_qa = 0;
    std::size_t n_questions = 0;  // distinct question texts
    std::size_t n_labels = 0;     // distinct gold labels observed
    double qa_per_frame = 0.0;
    std::optional<double> mem_per_frame;  // present only when memory annotations were supplied
    double answers_per_question = 0.0;    // mean number of distinct answers per distinct question
    std::map<QuestionType, std::size_t> per_type;
};

class IndirectMemoryStore;

DatasetStats compute_stats(const SampleSet& set, const IndirectMemoryStore* memory = nullptr);

// Normalized interchange format: one JSON object per line with the fields
// dataset, split, video, frame, image, question, answer.
void write_samples_jsonl(const SampleSet& set, std::ostream& out);
void write_samples_jsonl(const SampleSet& set, const std::filesystem::path& path);
/// Throws RecordError (with line) for malformed records and LabelError for answers outside the vocabulary.
SampleSet read_samples_jsonl(std::istream& in, const std::string& source_name = "<stream>");
SampleSet read_samples_jsonl(const std::filesystem::path& path);

}  // namespace memvqa
