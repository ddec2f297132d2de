#include <gtest/gtest.h>

#include "fixture.hpp"
#include "memvqa/error.hpp"
#include "memvqa/prompting.hpp"

using namespace memvqa;

namespace {

std::string golden(const std::string& name) {
    return fixture::read_file(std::filesystem::path(MEMVQA_TEST_DATA_DIR) / "golden" / name);
}

PromptInputs question_only(std::string q) {
    PromptInputs in;
    in.question = std::move(q);
    return in;
}

}  // namespace

TEST(Render, GoldenFiles) {
    EXPECT_EQ(render_prompt(PromptTask::VanillaVQA, question_only("Where is bipolar forceps located?")).rendered_text,
              golden("vqa.txt"));
    EXPECT_EQ(
        render_prompt(PromptTask::DirectMemoryGen, question_only("What is the state of prograsp forceps?")).rendered_text,
        golden("dm.txt"));
    EXPECT_EQ(render_prompt(PromptTask::IndirectMemoryGen, {}).rendered_text, golden("im.txt"));

    PromptInputs in = question_only("What is the state of prograsp forceps?");
    in.memory = {{"Where is prograsp forceps located?", HintSet({"left-top", "right-top"})},
                 {"What is the state of bipolar forceps?", HintSet({"Idle", "Tissue Manipulation"})}};
    in.hints = HintSet({"Idle", "Tissue Manipulation"});
    EXPECT_EQ(render_prompt(PromptTask::MemoryAugmentedVQA, in).rendered_text, golden("mvqa.txt"));

    PromptInputs empty = question_only("Is irrigator used in calot triangle dissection?");
    empty.hints = HintSet::null_sentinel();
    EXPECT_EQ(render_prompt(PromptTask::MemoryAugmentedVQA, empty).rendered_text, golden("mvqa_empty_memory.txt"));
}

TEST(Render, DirectMemoryUserTurnEnding) {
    const auto p = render_prompt(PromptTask::DirectMemoryGen, question_only("What is the state of prograsp forceps?"));
    EXPECT_NE(p.rendered_text.find("forceps? Generate some hints for the answer.<|end|>"), std::string::npos);
}

TEST(Render, MissingSlotsAndPlaceholderText) {
    EXPECT_THROW(render_prompt(PromptTask::VanillaVQA, {}), RenderError);
    PromptInputs no_hints = question_only("Q?");
    EXPECT_THROW(render_prompt(PromptTask::MemoryAugmentedVQA, no_hints), RenderError);
    // placeholders inside values are not expanded again
    const auto p = render_prompt(PromptTask::VanillaVQA, question_only("What is {question}?"));
    EXPECT_NE(p.rendered_text.find("What is {question}?<|end|>"), std::string::npos);
}

TEST(Render, TargetAndTaskNames) {
    EXPECT_EQ(render_target("[Idle]"), "[Idle]<|end|>");
    for (auto t : {PromptTask::VanillaVQA, PromptTask::DirectMemoryGen, PromptTask::IndirectMemoryGen,
                   PromptTask::MemoryAugmentedVQA}) {
        EXPECT_EQ(parse_prompt_task(to_string(t)), t);
    }
    EXPECT_FALSE(template_version().empty());
}

TEST(HintParsing, Cases) {
    const auto a = parse_hint_list("[Idle, Tissue Manipulation]");
    EXPECT_FALSE(a.malformed);
    EXPECT_EQ(a.hints.hints(), (std::vector<std::string>{"Idle", "Tissue Manipulation"}));

    const auto null = parse_hint_list("[NULL]<|end|>");
    EXPECT_TRUE(null.hints.is_null());
    EXPECT_TRUE(null.hints.empty());
    EXPECT_FALSE(null.malformed);

    const auto empty = parse_hint_list("");
    EXPECT_TRUE(empty.hints.empty());
    EXPECT_TRUE(empty.malformed);

    const auto bare = parse_hint_list("Idle\nsomething else");
    EXPECT_TRUE(bare.lenient);
    EXPECT_EQ(bare.hints.hints(), (std::vector<std::string>{"Idle"}));

    EXPECT_TRUE(parse_hint_list("[Idle, Grasping").malformed);
    EXPECT_TRUE(parse_hint_list("[Idle, , Grasping]").malformed);
    EXPECT_TRUE(parse_hint_list("[Idle, Idle]").malformed);
    EXPECT_FALSE(parse_hint_list("[]").malformed);
}

TEST(MemoryParsing, Cases) {
    const auto two = parse_indirect_memory(
        "Where is prograsp forceps located? [left-top, right-top]\n"
        "What is the state of bipolar forceps? [Idle, Tissue Manipulation]");
    ASSERT_EQ(two.entries.size(), 2u);
    EXPECT_EQ(two.skipped_lines, 0u);
    EXPECT_EQ(two.entries[1].question, "What is the state of bipolar forceps?");
    EXPECT_EQ(two.entries[1].hints.hints(), (std::vector<std::string>{"Idle", "Tissue Manipulation"}));

    EXPECT_TRUE(parse_indirect_memory("").entries.empty());

    const auto skipped = parse_indirect_memory("Where is suction located? [left-top]\nno question mark [Idle]\n");
    EXPECT_EQ(skipped.entries.size(), 1u);
    EXPECT_EQ(skipped.skipped_lines, 1u);
    EXPECT_EQ(parse_indirect_memory("Where is it? left-top").skipped_lines, 1u);
}

TEST(MemoryParsing, SerializeParseRoundTrip) {
    const std::vector<IndirectMemoryEntry> entries{{"Where is suction located?", HintSet({"left-top"})},
                                                   {"What is the state of suction?", HintSet({"Suction", "Idle"})}};
    const auto parsed = parse_indirect_memory(render_target(IndirectMemoryStore::serialize_entries(entries)));
    EXPECT_EQ(parsed.entries, entries);
}

TEST(StripEndMarker, CutsAtFirstMarker) {
    EXPECT_EQ(strip_end_marker("  Idle <|end|> trailing<|end|>"), "Idle");
    EXPECT_EQ(strip_end_marker("Idle"), "Idle");
}
