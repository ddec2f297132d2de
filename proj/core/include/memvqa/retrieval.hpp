#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memvqa/annotation.hpp"

namespace memvqa {

/// Lowercase, then split on runs of non-alphanumeric characters.
std::vector<std::string> tokenize(std::string_view text);

/// Sparse vector with strictly increasing indices.
class SparseVector {
public:
    SparseVector() = default;
    /// Entries must already be sorted by index with no duplicates.
    explicit SparseVector(std::vector<std::pair<std::uint32_t, double>> entries);

    const std::vector<std::pair<std::uint32_t, double>>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    double norm() const;
    double dot(const SparseVector& other) const;

private:
    std::vector<std::pair<std::uint32_t, double>> entries_;
};

/// Smoothed TF-IDF: tf = raw count, idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1,
/// vectors L2-normalized. Tokens outside the fitted vocabulary are ignored.
class TfidfModel {
public:
    /// Throws FitError on an empty corpus.
    static TfidfModel fit(const std::vector<std::string>& corpus);

    /// Vocabulary indices follow lexicographic token order.
    const std::map<std::string, std::uint32_t>& vocabulary() const noexcept { return vocabulary_; }
    const std::vector<double>& idf() const noexcept { return idf_; }
    std::size_t document_count() const noexcept { return n_docs_; }

    SparseVector transform(std::string_view text) const;

private:
    std::map<std::string, std::uint32_t> vocabulary_;
    std::vector<double> idf_;
    std::size_t n_docs_ = 0;
};

/// Cosine similarity clamped to [0, 1]; 0 when either vector is zero.
double cosine(const SparseVector& a, const SparseVector& b);

/// Scores are compared after rounding to this quantum so that mathematically tied
/// entries keep their stored order regardless of floating-point summation order.
inline constexpr double kScoreQuantum = 1e-9;

struct SelectedEntry {
    std::size_t index = 0;  // position in the frame's entry list
    double score = 0.0;
};

/// Top-M indirect memory for a query. Fits a TfidfModel on the query plus the frame's entry
/// questions, ranks entries by cosine similarity (ties keep stored order) and drops entries whose
/// normalized question equals the query when `exclude_exact` is set.
std::vector<SelectedEntry> select_indirect_memory(std::string_view query,
                                                  const std::vector<IndirectMemoryEntry>& entries,
                                                  std::size_t m, bool exclude_exact = true);

/// True when two questions are the same after whitespace normalization and ASCII casefolding.
bool same_question(std::string_view a, std::string_view b);

}  // namespace memvqa
