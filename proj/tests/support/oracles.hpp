#pragma once

// Straightforward reimplementations used to cross-check the library. They favour obviousness
// over speed and share no code with it.

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace memvqa::oracle {

/// Hint rule from raw answer counts: sort by (count desc, label asc), take K-1, add gold,
/// backfill when gold was already taken.
std::vector<std::string> hints(const std::map<std::string, int>& counts, const std::string& gold, std::size_t k);

std::vector<std::string> words(const std::string& s);

/// Dense smoothed TF-IDF over a small corpus.
struct DenseTfidf {
    std::vector<std::string> vocab;
    std::vector<double> idf;

    explicit DenseTfidf(const std::vector<std::string>& docs);
    std::vector<double> vec(const std::string& doc) const;
    static double cosine(const std::vector<double>& a, const std::vector<double>& b);
};

/// Word-sequence identity, the oracle's notion of "same question".
bool same_words(const std::string& a, const std::string& b);

struct Scores {
    double accuracy = 0, macro_recall = 0, macro_f1 = 0, weighted_f1 = 0;
};

/// Scores over (gold, predicted) label pairs; an empty prediction never matches.
Scores brute_scores(const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace memvqa::oracle
