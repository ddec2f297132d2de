#include <random>

#include <benchmark/benchmark.h>

#include "memvqa/annotation.hpp"
#include "memvqa/metrics.hpp"
#include "memvqa/pipeline.hpp"
#include "memvqa/retrieval.hpp"

using namespace memvqa;

namespace {

const std::vector<std::string> kInstruments{"bipolar forceps", "prograsp forceps", "large needle driver",
                                            "monopolar curved scissors", "ultrasound probe", "suction",
                                            "clip applier", "stapler"};

std::vector<IndirectMemoryEntry> frame_entries(std::size_t n) {
    std::vector<IndirectMemoryEntry> entries;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tool = kInstruments[i % kInstruments.size()];
        entries.push_back({i % 2 ? "Where is " + tool + " located?" : "What is the state of " + tool + "?",
                           HintSet({"Idle", "Grasping"})});
    }
    return entries;
}

SampleSet synthetic_train(std::size_t frames) {
    std::mt19937_64 rng(3);
    const std::vector<std::string> states{"Idle", "Grasping", "Retraction", "Tissue Manipulation", "Cutting"};
    SampleSet set(Split::Train);
    for (std::size_t f = 0; f < frames; ++f) {
        for (const auto& tool : kInstruments) {
            if (rng() % 2) continue;
            set.add({DatasetId::EndoVis18, "seq_" + std::to_string(f / 100), "frame" + std::to_string(f), "",
                     "What is the state of " + tool + "?", states[std::min(rng() % 5, rng() % 5)]});
        }
    }
    return set;
}

void BM_SelectIndirectMemory(benchmark::State& state) {
    const auto entries = frame_entries(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(select_indirect_memory("What is the state of suction?", entries, 3));
    }
}
BENCHMARK(BM_SelectIndirectMemory)->Arg(4)->Arg(10)->Arg(32);

void BM_AnnotateDirectMemories(benchmark::State& state) {
    const auto train = synthetic_train(static_cast<std::size_t>(state.range(0)));
    const auto table = build_frequency_table(train);
    for (auto _ : state) benchmark::DoNotOptimize(annotate_direct_memories(train, table, 2));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(train.size()));
}
BENCHMARK(BM_AnnotateDirectMemories)->Arg(200)->Arg(2000);

void BM_Evaluate(benchmark::State& state) {
    const auto& vocab = LabelVocab::for_dataset(DatasetId::EndoVis18);
    std::mt19937_64 rng(11);
    std::vector<Prediction> predictions(static_cast<std::size_t>(state.range(0)));
    for (auto& p : predictions) {
        p.sample = {DatasetId::EndoVis18, "v", "f", "", "What is the state of suction?",
                    vocab.labels()[rng() % vocab.size()]};
        p.answer_text = vocab.labels()[rng() % vocab.size()] + "<|end|>";
    }
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(predictions, vocab));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
