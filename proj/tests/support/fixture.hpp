#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "memvqa/annotation.hpp"
#include "memvqa/dataset.hpp"
#include "memvqa/scripted_backend.hpp"

namespace memvqa::fixture {

struct FixtureOptions {
    DatasetId dataset = DatasetId::EndoVis18;
    std::size_t videos = 3;
    std::size_t frames_per_video = 6;
    std::uint64_t seed = 1;
};

/// Synthetic split with surgical-looking questions and skewed answer distributions.
/// Train and test use disjoint video ids. EndoVis-like frames ask about the organ and
/// 2-4 instruments (state and location); Cholec80-like frames ask count, phase, tool-use
/// binary questions and one question whose answer is always "yes".
SampleSet make_fixture(const FixtureOptions& options, Split split);

/// Everything needed to run the pipeline against the annotation-replaying mock.
struct OracleBundle {
    SampleSet train;
    SampleSet test;
    AnswerFrequencyTable table;
    IndirectMemoryStore store;  // memory for the test frames, built from training statistics
    DirectMemoryAnnotations dm;
    MockScript script;
};

/// `n` and `k` as in annotation; memory covers the test split.
OracleBundle make_oracle(const FixtureOptions& options, std::size_t n = 3, std::size_t k = 2);

/// Writes `set` in the dataset's native layout under `root` (QA text files plus small
/// placeholder image files).
void write_native_layout(const SampleSet& set, const std::filesystem::path& root);

/// Fresh, empty directory below the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);

}  // namespace memvqa::fixture
