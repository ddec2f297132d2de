#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "memvqa/dataset.hpp"
#include "memvqa/pipeline.hpp"

namespace memvqa {

/// Label index, or nullopt for answers outside the vocabulary ("Unmatched").
std::optional<std::size_t> normalize_answer(std::string_view text, const LabelVocab& vocab);

/// Rows are gold labels, columns predicted labels plus a trailing Unmatched column.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_labels);

    void add(std::size_t gold, std::optional<std::size_t> predicted);

    std::size_t n_labels() const noexcept { return n_labels_; }
    std::size_t at(std::size_t gold, std::size_t predicted) const { return counts_[gold * (n_labels_ + 1) + predicted]; }
    std::size_t unmatched(std::size_t gold) const { return at(gold, n_labels_); }
    std::size_t total() const noexcept { return total_; }
    std::size_t trace() const;
    std::size_t support(std::size_t label) const;
    std::size_t predicted_count(std::size_t label) const;

private:
    std::size_t n_labels_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricTuple {
    std::size_t count = 0;
    double accuracy = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
};

/// Accuracy is trace/total. Macro averages run over the classes present in gold; weighted-F1
/// weights per-class F1 by gold support. Unmatched answers count as false negatives only.
MetricTuple score_matrix(const ConfusionMatrix& matrix, std::vector<ClassScores>* per_class = nullptr);

struct ErrorCauses {
    std::size_t wrong_dm = 0;   // gold absent from the generated hints
    std::size_t wrong_im = 0;   // gold in hints, answer copied from selected indirect memory
    std::size_t other = 0;
    bool operator==(const ErrorCauses&) const = default;
};

enum class ErrorCause { None, WrongDirectMemory, WrongIndirectMemory, Other };

/// Diagnostic tag for one prediction. Correct predictions are untagged.
ErrorCause classify_error(const Prediction& prediction, const LabelVocab& vocab);
ErrorCauses classify_errors(const std::vector<Prediction>& predictions, const LabelVocab& vocab);

struct MetricsReport {
    DatasetId dataset = DatasetId::EndoVis18;
    MetricTuple overall;
    std::map<QuestionType, MetricTuple> per_type;
    std::vector<ClassScores> per_class;  // aligned with the vocabulary
    std::size_t unmatched_count = 0;
    std::size_t failed_count = 0;        // predictions carrying a pipeline error
    std::size_t malformed_count = 0;
    ErrorCauses error_causes;

    nlohmann::json to_json(const LabelVocab& vocab) const;
    void print_table(std::ostream& out, const LabelVocab& vocab) const;
    /// Per-question-type bar chart data: `type,count,accuracy,macro_recall,macro_f1,weighted_f1`.
    void write_type_csv(std::ostream& out) const;
};

/// Throws EvalError on an empty prediction set or a gold answer outside the vocabulary.
MetricsReport evaluate(const std::vector<Prediction>& predictions, const LabelVocab& vocab);

}  // namespace memvqa
