#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "longcast/prompt.hpp"
#include "longcast/rng.hpp"

using namespace longcast;

namespace {

Demographics demo_73() {
    Demographics d;
    d.age_years = 73.5;
    d.sex = Sex::female;
    d.apoe4_count = 1;
    d.education_years = 16.0;
    return d;
}

}  // namespace

TEST(Prompt, RenderContainsExpectedPieces) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto text = render_prompt(demo_73(), {0.5, nan, 1.0}, {true, false, true}, {0, 6, 12}, "CDRSB", 12);
    EXPECT_NE(text.find("73"), std::string::npos) << text;
    EXPECT_NE(text.find("female"), std::string::npos);
    EXPECT_NE(text.find("1 APOE4"), std::string::npos);
    EXPECT_NE(text.find("CDR-SB"), std::string::npos);
    EXPECT_NE(text.find("12"), std::string::npos);
    EXPECT_NE(text.find("0, 12"), std::string::npos);  // observed timeline only
    EXPECT_NE(text.find("increasing"), std::string::npos);
}

TEST(Prompt, ConstantSeriesIsStable) {
    const auto text = render_prompt(demo_73(), {2.0, 2.0}, {true, true}, {0, 6}, "CDRSB", 12);
    EXPECT_NE(text.find("stable"), std::string::npos);
    const auto down = render_prompt(demo_73(), {2.0, 1.0}, {true, true}, {0, 6}, "CDRSB", 12);
    EXPECT_NE(down.find("decreasing"), std::string::npos);
}

TEST(Prompt, MissingApoeRendersUnknown) {
    Demographics d = demo_73();
    d.apoe4_count.reset();
    const auto text = render_prompt(d, {1.0}, {true}, {0}, "CDRSB", 12);
    EXPECT_NE(text.find("APOE4 status unknown"), std::string::npos);
}

TEST(Prompt, RenderIsPure) {
    const auto a = render_prompt(demo_73(), {0.5, 1.5}, {true, true}, {0, 6}, "TOTAL13", 18);
    const auto b = render_prompt(demo_73(), {0.5, 1.5}, {true, true}, {0, 6}, "TOTAL13", 18);
    EXPECT_EQ(a, b);
}

TEST(Prompt, NoUnobservedValueAppears) {
    // the masked 777.25 must not leak into the text
    const auto text =
        render_prompt(demo_73(), {0.5, 777.25, 1.0}, {true, false, true}, {0, 6, 12}, "CDRSB", 18);
    EXPECT_EQ(text.find("777"), std::string::npos) << text;
    EXPECT_EQ(text.find("nan"), std::string::npos);
    EXPECT_EQ(text.find("6,"), std::string::npos);  // masked month not in timeline
}

TEST(Prompt, TokenizeKnownWordsAndUnk) {
    auto vocab = default_vocab(512);
    auto ids = tokenize("forecast CDR-SB", vocab);
    ASSERT_EQ(ids.size(), 4u);  // forecast, cdr, -, sb
    for (std::size_t id : ids) EXPECT_NE(id, vocab.unk_id());
    auto unk = tokenize("zzqx", vocab);
    ASSERT_EQ(unk.size(), 1u);
    EXPECT_EQ(unk[0], vocab.unk_id());
}

TEST(Prompt, EmptyTextTokenizesEmpty) {
    auto vocab = default_vocab(512);
    EXPECT_TRUE(tokenize("", vocab).empty());
}

TEST(Prompt, TokenizeDetokenizeRoundTrip) {
    auto vocab = default_vocab(512);
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::size_t> ids;
        for (int k = 0; k < 12; ++k) ids.push_back(1 + rng.below(vocab.size() - 1));
        EXPECT_EQ(tokenize(detokenize(ids, vocab), vocab), ids);
    }
}

TEST(Prompt, VocabFileRoundTrip) {
    auto vocab = default_vocab(300);
    const auto path = std::string("/tmp/longcast_vocab_test.txt");
    save_vocab(vocab, path);
    auto loaded = load_vocab(path);
    EXPECT_EQ(loaded.tokens, vocab.tokens);
}

TEST(Prompt, PromptRenderedWithDefaultVocabHasFewUnks) {
    auto vocab = default_vocab(512);
    const auto text = render_prompt(demo_73(), {0.5, 1.0}, {true, true}, {0, 6}, "CDRSB", 12);
    auto ids = tokenize(text, vocab);
    std::size_t unks = 0;
    for (auto id : ids) unks += id == vocab.unk_id() ? 1 : 0;
    EXPECT_EQ(unks, 0u) << text;
}

TEST(Prompt, BudgetTruncatesTimelineFirstKeepsInstruction) {
    auto vocab = default_vocab(512);
    Demographics d = demo_73();
    std::vector<double> series(7);
    std::vector<bool> mask(7, true);
    std::vector<int> months(kVisitMonths.begin(), kVisitMonths.end());
    for (std::size_t i = 0; i < 7; ++i) series[i] = 0.5 * static_cast<double>(i);

    auto full = build_prompt_ids(d, series, mask, months, "CDRSB", 48, vocab, 1000);
    auto budget = build_prompt_ids(d, series, mask, months, "CDRSB", 48, vocab, full.size() - 4);
    EXPECT_LE(budget.size(), full.size() - 4);

    // the task instruction is the template tail; it must survive verbatim
    const auto instr = tokenize("Task: forecast the CDR-SB score at the visit 48 months after baseline.", vocab);
    ASSERT_GE(budget.size(), instr.size());
    std::vector<std::size_t> tail(budget.end() - static_cast<std::ptrdiff_t>(instr.size()), budget.end());
    EXPECT_EQ(tail, instr);
}

TEST(Prompt, EmbedPromptLookup) {
    auto e = TensorT<float>::from({4, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    auto p = embed_prompt<float>({2}, e);
    ASSERT_EQ(p.shape(), (std::vector<std::size_t>{1, 3}));
    EXPECT_FLOAT_EQ(p.data()[0], 6);
    EXPECT_FLOAT_EQ(p.data()[1], 7);
    EXPECT_FLOAT_EQ(p.data()[2], 8);

    auto two = embed_prompt<float>({1, 1}, e);
    EXPECT_EQ(two.rows(), 2u);
    for (int j = 0; j < 3; ++j) EXPECT_FLOAT_EQ(two.data()[j], two.data()[3 + j]);

    auto empty = embed_prompt<float>({}, e);
    EXPECT_EQ(empty.rows(), 0u);
    EXPECT_EQ(empty.numel(), 0u);

    EXPECT_THROW(embed_prompt<float>({4}, e), BoundsError);
}
