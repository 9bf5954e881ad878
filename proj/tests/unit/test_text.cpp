#include <gtest/gtest.h>

#include <random>
#include <string>

#include "ctxengine/embed.hpp"
#include "ctxengine/text.hpp"

using namespace ctxengine;

TEST(TokenCount, Examples) {
    EXPECT_EQ(token_count(""), 0u);
    // fn, main, (, )
    EXPECT_EQ(token_count("fn main()"), 4u);
    // x, =, 1
    EXPECT_EQ(token_count("x=1"), 3u);
    EXPECT_EQ(token_count("   \n\t "), 0u);
    EXPECT_EQ(token_count("a_b1 += c->d"), 7u);
}

TEST(TokenCount, MultibyteRunsAreWords) {
    // two word runs containing multi-byte characters, then '.'
    EXPECT_EQ(token_count("na\xc3\xafve caf\xc3\xa9."), 3u);
}

TEST(TokenCount, AdditiveOverSpaceJoin) {
    std::mt19937_64 rng(11);
    const std::string alphabet = "ab_9 (){}.,;=+-\n\t";
    for (int trial = 0; trial < 2000; ++trial) {
        std::string a;
        std::string b;
        for (std::size_t i = rng() % 20; i > 0; --i) a += alphabet[rng() % alphabet.size()];
        for (std::size_t i = rng() % 20; i > 0; --i) b += alphabet[rng() % alphabet.size()];
        ASSERT_EQ(token_count(a + " " + b), token_count(a) + token_count(b)) << "a=" << a << " b=" << b;
    }
}

TEST(IndexTerms, LowercasedWordsOnly) {
    const auto terms = index_terms("Foo(bar) + BAZ_1");
    EXPECT_EQ(terms, (std::vector<std::string>{"foo", "bar", "baz_1"}));
    EXPECT_EQ(unique_terms("b a B a"), (std::vector<std::string>{"a", "b"}));
}

TEST(Utf8, Validation) {
    EXPECT_TRUE(is_valid_utf8("plain"));
    EXPECT_TRUE(is_valid_utf8("\xe2\x82\xac"));
    EXPECT_FALSE(is_valid_utf8("\xc3"));
    EXPECT_FALSE(is_valid_utf8("\xc0\xaf"));        // overlong
    EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));    // surrogate
    EXPECT_FALSE(is_valid_utf8("\xf4\x90\x80\x80"));  // > U+10FFFF
}

TEST(SplitLines, TrailingNewline) {
    EXPECT_EQ(split_lines("a\nb\n").size(), 2u);
    EXPECT_EQ(split_lines("a\nb").size(), 2u);
    EXPECT_EQ(split_lines("a\r\n\nb").size(), 3u);
    EXPECT_EQ(split_lines("a\r\n\nb")[0], "a");
    EXPECT_TRUE(split_lines("").empty());
}

TEST(Language, ByExtension) {
    EXPECT_EQ(language_for_path("src/a.py"), LanguageFamily::python_like);
    EXPECT_EQ(language_for_path("src/a.cpp"), LanguageFamily::c_like);
    EXPECT_EQ(language_for_path("README.md"), LanguageFamily::plain_text);
    EXPECT_EQ(kind_for_path("README.md"), ItemKind::doc);
    EXPECT_EQ(kind_for_path("src/a.rs"), ItemKind::code);
}

namespace {
double cosine(const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}
}  // namespace

TEST(Embed, SelfSimilarityAndZero) {
    for (const char* t : {"x", "open file read", "def foo(a, b): return a", "\xc3\xa9t\xc3\xa9"}) {
        EXPECT_NEAR(cosine(embed(t), embed(t)), 1.0, 1e-6) << t;
    }
    EXPECT_TRUE(is_zero(embed("")));
    EXPECT_TRUE(is_zero(embed("  \n ")));
}

TEST(Embed, RelatedTextIsCloser) {
    const auto q = embed("open file read");
    EXPECT_GT(cosine(q, embed("read a file")), cosine(q, embed("matrix multiply")));
}

TEST(Embed, CaseInsensitiveWords) { EXPECT_EQ(embed("Read File"), embed("read file")); }
