#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "memvqa/error.hpp"
#include "oracles.hpp"
#include "memvqa/retrieval.hpp"

using namespace memvqa;

namespace {

std::vector<IndirectMemoryEntry> entries_of(const std::vector<std::string>& qs) {
    std::vector<IndirectMemoryEntry> out;
    for (const auto& q : qs) out.push_back({q, HintSet({"x"})});
    return out;
}

}  // namespace

TEST(Tokenize, LowercaseNonAlnumSplit) {
    EXPECT_EQ(tokenize("Where is Bipolar_Forceps located?"),
              (std::vector<std::string>{"where", "is", "bipolar", "forceps", "located"}));
    EXPECT_TRUE(tokenize("?!").empty());
}

TEST(Tfidf, SingleDocument) {
    const auto model = TfidfModel::fit({"a b c"});
    for (double v : model.idf()) EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_NEAR(model.transform("a b c").norm(), 1.0, 1e-12);
}

TEST(Tfidf, RareTermsWeighMore) {
    const auto model = TfidfModel::fit({"a b", "a c"});
    const auto& vocab = model.vocabulary();
    EXPECT_LT(model.idf()[vocab.at("a")], model.idf()[vocab.at("b")]);
    EXPECT_DOUBLE_EQ(model.idf()[vocab.at("a")], 1.0);
    EXPECT_DOUBLE_EQ(model.idf()[vocab.at("b")], std::log(3.0 / 2.0) + 1.0);
    EXPECT_THROW(TfidfModel::fit({}), FitError);
}

TEST(Tfidf, VocabularyIsDistinctTokens) {
    const std::vector<std::string> corpus{"What is the state of suction?", "Where is suction located?",
                                          "What organ is being operated?"};
    // what is the state of suction where located organ being operated
    EXPECT_EQ(TfidfModel::fit(corpus).vocabulary().size(), 11u);
}

TEST(Cosine, IdentityOrthogonalAndOracle) {
    const auto model = TfidfModel::fit({"a b", "c d", "a c e"});
    const auto v = model.transform("a b");
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-12);
    EXPECT_EQ(cosine(model.transform("a b"), model.transform("c d")), 0.0);
    EXPECT_EQ(cosine(v, model.transform("zzz")), 0.0);

    const oracle::DenseTfidf dense({"a b", "c d", "a c e"});
    EXPECT_NEAR(cosine(model.transform("a c e"), model.transform("a b")),
                oracle::DenseTfidf::cosine(dense.vec("a c e"), dense.vec("a b")), 1e-12);
}

TEST(Selection, PairedInstrumentQuestions) {
    const auto entries = entries_of({"What is the state of bipolar forceps?", "Where is monopolar curved scissors located?"});
    const auto sel = select_indirect_memory("Where is bipolar forceps located?", entries, 3);
    ASSERT_EQ(sel.size(), 2u);
    std::set<std::size_t> got{sel[0].index, sel[1].index};
    EXPECT_EQ(got, (std::set<std::size_t>{0, 1}));
    EXPECT_TRUE(select_indirect_memory("Where is bipolar forceps located?", entries, 0).empty());
}

TEST(Selection, ExactMatchExcluded) {
    const auto entries = entries_of({"Where is suction located?", "What is the state of suction?",
                                     "What organ is being operated?"});
    const auto sel = select_indirect_memory("  where is SUCTION located? ", entries, 1);
    ASSERT_EQ(sel.size(), 1u);
    EXPECT_EQ(sel[0].index, 1u);
    const auto with = select_indirect_memory("Where is suction located?", entries, 1, false);
    EXPECT_EQ(with[0].index, 0u);
}

TEST(Selection, TiesKeepStoredOrder) {
    const auto entries = entries_of({"x y", "x z", "x w"});
    const auto sel = select_indirect_memory("x", entries, 3);
    ASSERT_EQ(sel.size(), 3u);
    EXPECT_EQ(sel[0].index, 0u);
    EXPECT_EQ(sel[1].index, 1u);
    EXPECT_EQ(sel[2].index, 2u);
}

TEST(Selection, RandomizedAgainstDenseOracle) {
    const std::vector<std::string> words{"what", "is", "the", "state", "of", "where", "located", "suction",
                                         "forceps", "bipolar", "organ", "how", "many", "tools"};
    std::mt19937_64 rng(7);
    auto random_question = [&] {
        std::string q;
        const std::size_t len = 1 + rng() % 6;
        for (std::size_t i = 0; i < len; ++i) q += (i ? " " : "") + words[rng() % words.size()];
        return q + "?";
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 10;
        std::vector<std::string> qs;
        for (std::size_t i = 0; i < n; ++i) qs.push_back(random_question());
        std::string query = random_question();
        if (rng() % 4 == 0) query = qs[rng() % n];
        const std::size_t m = rng() % 5;

        const auto sel = select_indirect_memory(query, entries_of(qs), m);

        std::vector<std::string> docs{query};
        docs.insert(docs.end(), qs.begin(), qs.end());
        const oracle::DenseTfidf dense(docs);
        const auto qv = dense.vec(query);
        std::vector<double> scores;
        std::vector<bool> eligible;
        for (const auto& q : qs) {
            scores.push_back(oracle::DenseTfidf::cosine(qv, dense.vec(q)));
            eligible.push_back(!oracle::same_words(q, query));
        }
        const auto n_eligible = static_cast<std::size_t>(std::count(eligible.begin(), eligible.end(), true));
        ASSERT_EQ(sel.size(), std::min(m, n_eligible)) << "trial " << trial;

        std::set<std::size_t> chosen;
        for (std::size_t i = 0; i < sel.size(); ++i) {
            const auto& s = sel[i];
            ASSERT_TRUE(eligible[s.index]) << "leaked query into selection, trial " << trial;
            ASSERT_NEAR(s.score, scores[s.index], 1e-12);
            if (i > 0) {
                ASSERT_LE(s.score, sel[i - 1].score + 1e-9);
                if (std::abs(s.score - sel[i - 1].score) < 1e-10) {
                    ASSERT_GT(s.index, sel[i - 1].index);
                }
            }
            chosen.insert(s.index);
        }
        if (!sel.empty()) {
            for (std::size_t j = 0; j < qs.size(); ++j) {
                if (!eligible[j] || chosen.count(j)) continue;
                ASSERT_LE(scores[j], sel.back().score + 1e-9) << "better entry skipped, trial " << trial;
                if (std::abs(scores[j] - sel.back().score) < 1e-10) {
                    ASSERT_GT(j, sel.back().index);
                }
            }
        }
    }
}
