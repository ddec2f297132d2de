#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "fixture.hpp"
#include "oracles.hpp"
#include "memvqa/annotation.hpp"
#include "memvqa/error.hpp"

using namespace memvqa;

namespace {

AnswerFrequencyTable table_of(const std::string& q, const std::vector<std::pair<std::string, int>>& counts) {
    AnswerFrequencyTable t;
    for (const auto& [label, n] : counts) {
        for (int i = 0; i < n; ++i) t.add(q, label);
    }
    return t;
}

std::vector<std::string> hints_of(const HintSet& h) { return h.hints(); }

}  // namespace

TEST(FrequencyTable, HandCount) {
    SampleSet set(Split::Train);
    set.add({DatasetId::EndoVis18, "v", "1", "", "Qa", "x"});
    set.add({DatasetId::EndoVis18, "v", "2", "", "Qa", "x"});
    set.add({DatasetId::EndoVis18, "v", "3", "", "Qa", "y"});
    const auto t = build_frequency_table(set);
    EXPECT_EQ(t.counts().at("Qa"), (std::map<std::string, std::size_t>{{"x", 2}, {"y", 1}}));
    EXPECT_EQ(t.question_frequency("  Qa "), 3u);
    EXPECT_TRUE(build_frequency_table(SampleSet(Split::Train)).empty());
}

TEST(DirectMemory, GoldOutsideTopCandidates) {
    const auto t = table_of("Q", {{"Idle", 10}, {"Grasping", 3}});
    EXPECT_EQ(hints_of(annotate_direct_memory("Q", std::string("Tissue Manipulation"), t, 2)),
              (std::vector<std::string>{"Idle", "Tissue Manipulation"}));
}

TEST(DirectMemory, SingleCandidate) {
    const auto t = table_of("Q", {{"x", 5}});
    EXPECT_EQ(hints_of(annotate_direct_memory("Q", std::string("x"), t, 2)), (std::vector<std::string>{"x"}));
}

TEST(DirectMemory, GoldAlreadyTopBackfills) {
    const auto t = table_of("Q", {{"x", 5}, {"y", 3}, {"z", 1}});
    EXPECT_EQ(hints_of(annotate_direct_memory("Q", std::string("x"), t, 2)), (std::vector<std::string>{"x", "y"}));
}

TEST(DirectMemory, NoGoldAndUnseen) {
    const auto t = table_of("Q", {{"x", 5}, {"y", 3}, {"z", 1}});
    EXPECT_EQ(hints_of(annotate_direct_memory("Q", std::nullopt, t, 2)), (std::vector<std::string>{"x", "y"}));
    EXPECT_THROW(annotate_direct_memory("Other?", std::nullopt, t, 2), AnnotationError);
    EXPECT_EQ(hints_of(annotate_direct_memory("Other?", std::string("w"), t, 2)), (std::vector<std::string>{"w"}));
    EXPECT_THROW(annotate_direct_memory("Q", std::string("x"), t, 0), AnnotationError);
}

TEST(DirectMemory, TiesBreakLexicographically) {
    const auto t = table_of("Q", {{"b", 2}, {"a", 2}, {"c", 2}});
    EXPECT_EQ(hints_of(annotate_direct_memory("Q", std::string("c"), t, 3)),
              (std::vector<std::string>{"a", "b", "c"}));
}

TEST(DirectMemory, RandomizedAgainstOracle) {
    std::mt19937_64 rng(42);
    const std::vector<std::string> labels{"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 1000; ++trial) {
        std::map<std::string, int> counts;
        AnswerFrequencyTable t;
        const int n = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            const auto& label = labels[std::min(rng() % labels.size(), rng() % labels.size())];
            ++counts[label];
            t.add("Q", label);
        }
        const std::size_t k = 1 + rng() % 4;
        const std::string gold = labels[rng() % labels.size()];
        const auto hints = annotate_direct_memory("Q", gold, t, k);
        ASSERT_EQ(hints_of(hints), oracle::hints(counts, gold, k)) << "trial " << trial;
        ASSERT_TRUE(hints.contains(gold));
        ASSERT_LE(hints.size(), k);
    }
}

TEST(Exclusions, CholecBinaryAndSingleAnswer) {
    AnswerFrequencyTable t;
    t.add("Is irrigator used in calot triangle dissection?", "no");
    t.add("Is irrigator used in calot triangle dissection?", "yes");
    t.add("Is this a laparoscopic image?", "yes");
    t.add("Is this a laparoscopic image?", "yes");
    const auto binary = annotation_exclusions(
        {DatasetId::Cholec80, "v", "f", "", "Is irrigator used in calot triangle dissection?", "no"}, t);
    EXPECT_TRUE(binary.skip_direct_memory);
    EXPECT_FALSE(binary.skip_memory_vqa);
    const auto single =
        annotation_exclusions({DatasetId::Cholec80, "v", "f", "", "Is this a laparoscopic image?", "yes"}, t);
    EXPECT_TRUE(single.skip_memory_vqa);

    AnswerFrequencyTable ev;
    ev.add("What organ is being operated?", "kidney");
    const auto e = annotation_exclusions(
        {DatasetId::EndoVis18, "v", "f", "", "What organ is being operated?", "kidney"}, ev);
    EXPECT_FALSE(e.skip_direct_memory);
    EXPECT_FALSE(e.skip_memory_vqa);
}

TEST(HintSet, SerializeAndNull) {
    EXPECT_EQ(HintSet({"Idle", "Tissue Manipulation", "Idle"}).serialize(), "[Idle, Tissue Manipulation]");
    EXPECT_EQ(HintSet::null_sentinel().serialize(), "[NULL]");
    EXPECT_EQ(HintSet().serialize(), "[]");
    EXPECT_EQ((MemoryEntry{"Where is suction located?", HintSet({"left-top"})}).serialize(),
              "Where is suction located? [left-top]");
}

TEST(IndirectMemory, FrequencyFilterAndOrder) {
    SampleSet train(Split::Train);
    // question frequencies: A 8, B 6, C 1 (scaled-down 800/600/100 with N=5)
    for (int i = 0; i < 8; ++i) train.add({DatasetId::EndoVis18, "v", std::to_string(i), "", "Question A?", "Idle"});
    for (int i = 0; i < 6; ++i) train.add({DatasetId::EndoVis18, "v", std::to_string(i), "", "Question B?", "left-top"});
    train.add({DatasetId::EndoVis18, "v", "0", "", "Question C?", "kidney"});
    const auto t = build_frequency_table(train);
    const auto store = annotate_indirect_memory(train, t, 5, 2);
    const auto* f0 = store.find({"v", "0"});
    ASSERT_NE(f0, nullptr);
    ASSERT_EQ(f0->size(), 2u);
    EXPECT_EQ((*f0)[0].question, "Question A?");
    EXPECT_EQ((*f0)[1].question, "Question B?");
    EXPECT_TRUE((*f0)[0].hints.contains("Idle"));

    const auto none = annotate_indirect_memory(train, t, 100, 2);
    ASSERT_NE(none.find({"v", "0"}), nullptr);
    EXPECT_TRUE(none.find({"v", "0"})->empty());
    EXPECT_EQ(none.find({"v", "missing"}), nullptr);
}

TEST(IndirectMemory, CholecBinaryKeepsGoldOnly) {
    const auto train = fixture::make_fixture({DatasetId::Cholec80, 3, 6, 5}, Split::Train);
    const auto t = build_frequency_table(train);
    const auto store = annotate_indirect_memory(train, t, 1, 2);
    std::size_t binary = 0;
    for (const auto& [frame, entries] : store.frames()) {
        for (const auto& e : entries) {
            if (classify_question(e.question, DatasetId::Cholec80) == QuestionType::Binary) {
                ++binary;
                EXPECT_EQ(e.hints.size(), 1u) << e.serialize();
            }
        }
    }
    EXPECT_GT(binary, 0u);
}

TEST(IndirectMemory, JsonlRoundTrip) {
    const auto train = fixture::make_fixture({DatasetId::EndoVis18, 3, 6, 9}, Split::Train);
    const auto t = build_frequency_table(train);
    const auto store = annotate_indirect_memory(train, t, 3, 2);
    std::stringstream buf;
    store.write_jsonl(buf);
    const auto first = buf.str();
    const auto back = IndirectMemoryStore::read_jsonl(buf);
    EXPECT_EQ(back, store);
    std::stringstream again;
    back.write_jsonl(again);
    EXPECT_EQ(again.str(), first);
}

TEST(DirectMemoryAnnotations, NullForBinaryAndRoundTrip) {
    const auto train = fixture::make_fixture({DatasetId::Cholec80, 2, 5, 3}, Split::Train);
    const auto t = build_frequency_table(train);
    const auto dm = annotate_direct_memories(train, t, 2);
    EXPECT_EQ(dm.size(), train.size());
    for (const auto& s : train.samples()) {
        const auto* h = dm.find(s.frame_key(), s.question);
        ASSERT_NE(h, nullptr);
        if (classify_question(s.question, s.dataset) == QuestionType::Binary) {
            EXPECT_TRUE(h->is_null());
        } else {
            EXPECT_TRUE(h->contains(s.answer));
        }
    }
    std::stringstream buf;
    dm.write_jsonl(buf);
    EXPECT_EQ(DirectMemoryAnnotations::read_jsonl(buf), dm);
}
