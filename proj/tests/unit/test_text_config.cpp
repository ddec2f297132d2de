#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "memvqa/config.hpp"
#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

using namespace memvqa;

TEST(Text, WhitespaceAndCase) {
    EXPECT_EQ(text::trim("  a b \t\n"), "a b");
    EXPECT_EQ(text::collapse_whitespace("  a \t b\n\nc "), "a b c");
    EXPECT_EQ(text::to_lower_ascii("AbC-1"), "abc-1");
    EXPECT_TRUE(text::starts_with_icase("where is it", "Where is"));
    EXPECT_FALSE(text::starts_with_icase("Wh", "Where"));
}

TEST(Text, NaturalOrder) {
    EXPECT_TRUE(text::natural_less("frame2", "frame10"));
    EXPECT_FALSE(text::natural_less("frame10", "frame2"));
    EXPECT_TRUE(text::natural_less("seq_1", "seq_2"));
    EXPECT_TRUE(text::natural_less("a", "b"));
}

TEST(Text, Base64KnownVectors) {
    EXPECT_EQ(text::base64_encode(""), "");
    EXPECT_EQ(text::base64_encode("f"), "Zg==");
    EXPECT_EQ(text::base64_encode("fo"), "Zm8=");
    EXPECT_EQ(text::base64_encode("foo"), "Zm9v");
    EXPECT_EQ(text::base64_encode("foobar"), "Zm9vYmFy");
}

TEST(Text, Fnv1aKnownVectors) {
    EXPECT_EQ(text::fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(text::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(text::hex64(0xabcULL), "0000000000000abc");
}

TEST(KeyValues, ParseCommentsAndErrors) {
    std::istringstream in("# comment\n\n k = 3 \nout=dir/x\n");
    const auto kv = KeyValues::parse(in);
    EXPECT_EQ(kv.get("k"), "3");
    EXPECT_EQ(kv.get("out"), "dir/x");
    std::istringstream bad("k 3\n");
    EXPECT_THROW(KeyValues::parse(bad), RecordError);
}

TEST(RunConfig, DefaultsPerDataset) {
    const auto ev = RunConfig::defaults_for(DatasetId::EndoVis18);
    EXPECT_EQ(ev.k, 2u);
    EXPECT_EQ(ev.m, 3u);
    EXPECT_EQ(ev.n, 500u);
    EXPECT_EQ(ev.dm_decoding.max_new_tokens, 12u);
    EXPECT_EQ(ev.im_decoding.max_new_tokens, 160u);
    EXPECT_EQ(ev.im_decoding.beam_width, 3u);
    EXPECT_EQ(RunConfig::defaults_for(DatasetId::EndoVis17).m, 3u);
    const auto ch = RunConfig::defaults_for(DatasetId::Cholec80);
    EXPECT_EQ(ch.m, 1u);
    EXPECT_EQ(ch.dm_decoding.max_new_tokens, 16u);
}

TEST(RunConfig, ApplyRoundTripAndValidate) {
    auto c = RunConfig::defaults_for(DatasetId::EndoVis18);
    KeyValues kv;
    kv.set("k", "4");
    kv.set("m", "0");
    kv.set("parallelism", "8");
    kv.set("failure_threshold", "0.1");
    kv.set("unrelated.key", "ignored");
    c.apply(kv);
    EXPECT_EQ(c.k, 4u);
    EXPECT_EQ(c.m, 0u);
    EXPECT_EQ(c.parallelism, 8u);

    RunConfig copy;
    copy.apply(c.to_key_values());
    EXPECT_EQ(copy.to_key_values().values(), c.to_key_values().values());

    KeyValues bad;
    bad.set("k", "two");
    EXPECT_THROW(c.apply(bad), ConfigError);
    c.k = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, SwitchingDatasetResetsDependentDefaults) {
    RunConfig c;
    KeyValues kv;
    kv.set("dataset", "cholec80");
    c.apply(kv);
    EXPECT_EQ(c.m, 1u);
    kv.set("m", "2");
    c.apply(kv);
    EXPECT_EQ(c.m, 2u);
}

TEST(RunConfig, EnvironmentOverrides) {
    KeyValues keys;
    keys.set("k", "");
    keys.set("endovis18.root", "");
    ::setenv("MEMVQA_K", "5", 1);
    ::setenv("MEMVQA_ENDOVIS18_ROOT", "/data/ev18", 1);
    const auto env = environment_overrides(keys);
    ::unsetenv("MEMVQA_K");
    ::unsetenv("MEMVQA_ENDOVIS18_ROOT");
    EXPECT_EQ(env.get("k"), "5");
    EXPECT_EQ(env.get("endovis18.root"), "/data/ev18");
}
