#include "memvqa/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

SparseVector::SparseVector(std::vector<std::pair<std::uint32_t, double>> entries) : entries_(std::move(entries)) {}

double SparseVector::norm() const {
    double sum = 0.0;
    for (const auto& [i, w] : entries_) sum += w * w;
    return std::sqrt(sum);
}

double SparseVector::dot(const SparseVector& other) const {
    double sum = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            sum += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return sum;
}

TfidfModel TfidfModel::fit(const std::vector<std::string>& corpus) {
    if (corpus.empty()) throw FitError("cannot fit TF-IDF on an empty corpus");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
        const auto tokens = tokenize(doc);
        for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) ++df[t];
    }
    TfidfModel model;
    model.n_docs_ = corpus.size();
    model.idf_.reserve(df.size());
    const double n = static_cast<double>(corpus.size());
    for (const auto& [token, count] : df) {
        model.vocabulary_.emplace(token, static_cast<std::uint32_t>(model.idf_.size()));
        model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return model;
}

SparseVector TfidfModel::transform(std::string_view text) const {
    std::map<std::uint32_t, double> counts;
    for (const auto& t : tokenize(text)) {
        const auto it = vocabulary_.find(t);
        if (it != vocabulary_.end()) counts[it->second] += 1.0;
    }
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(counts.size());
    double sum = 0.0;
    for (const auto& [idx, tf] : counts) {
        const double w = tf * idf_[idx];
        entries.emplace_back(idx, w);
        sum += w * w;
    }
    if (sum > 0.0) {
        const double inv = 1.0 / std::sqrt(sum);
        for (auto& e : entries) e.second *= inv;
    }
    return SparseVector(std::move(entries));
}

double cosine(const SparseVector& a, const SparseVector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / (na * nb), 0.0, 1.0);
}

bool same_question(std::string_view a, std::string_view b) {
    return text::to_lower_ascii(normalize_question(a)) == text::to_lower_ascii(normalize_question(b));
}

std::vector<SelectedEntry> select_indirect_memory(std::string_view query,
                                                  const std::vector<IndirectMemoryEntry>& entries, std::size_t m,
                                                  bool exclude_exact) {
    std::vector<SelectedEntry> selected;
    if (m == 0 || entries.empty()) return selected;

    std::vector<std::string> corpus;
    corpus.reserve(entries.size() + 1);
    corpus.emplace_back(query);
    for (const auto& e : entries) corpus.push_back(e.question);
    const auto model = TfidfModel::fit(corpus);
    const auto query_vec = model.transform(query);

    struct Ranked {
        long long key;
        SelectedEntry entry;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (exclude_exact && same_question(entries[i].question, query)) continue;
        const double score = cosine(query_vec, model.transform(entries[i].question));
        ranked.push_back({std::llround(score / kScoreQuantum), {i, score}});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.key > b.key; });
    const std::size_t take = std::min(m, ranked.size());
    selected.reserve(take);
    for (std::size_t i = 0; i < take; ++i) selected.push_back(ranked[i].entry);
    return selected;
}

}  // namespace memvqa
