#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "h2lit/porter_stemmer.hpp"
#include "h2lit/text.hpp"
#include "h2lit/wordcloud.hpp"
#include "support/oracles.hpp"

using namespace h2lit;

namespace {

std::vector<std::string> surfaces(const std::vector<text::Token>& ts) {
    std::vector<std::string> out;
    for (const auto& t : ts) out.push_back(t.surface);
    return out;
}

} // namespace

TEST(Tokenize, KeepsIntraWordHyphensAndDropsPunctuation) {
    EXPECT_EQ(surfaces(text::tokenize("Catalyst-Coated Membranes.")),
              (std::vector<std::string>{"catalyst-coated", "membranes"}));
    EXPECT_EQ(surfaces(text::tokenize("the PEM stack")), (std::vector<std::string>{"the", "pem", "stack"}));
    EXPECT_TRUE(text::tokenize("").empty());
}

TEST(Tokenize, EdgeHyphensAreNotPartOfWords) {
    EXPECT_EQ(surfaces(text::tokenize("-pem- --- a--b")), (std::vector<std::string>{"pem", "a", "b"}));
}

TEST(Tokenize, SpansPointIntoRaw) {
    const std::string raw = "  Low-cost, PEM (stack)! 5$/kg";
    for (const auto& t : text::tokenize(raw)) {
        ASSERT_LE(t.span.end, raw.size());
        ASSERT_LT(t.span.start, t.span.end);
        EXPECT_EQ(text::to_lower(raw.substr(t.span.start, t.span.end - t.span.start)), t.surface);
    }
}

TEST(Tokenize, RejoinIsIdempotentOnNormalizedTerms) {
    const text::Pipeline p;
    for (const auto& doc : oracle::search_fixture(9, 20)) {
        for (const auto& page : doc.pages) {
            std::vector<std::string> first, second;
            std::string joined;
            for (const auto& t : p.run(page.raw)) {
                if (t.is_stopword) continue;
                first.push_back(t.normalized);
                joined += t.normalized + " ";
            }
            for (const auto& t : p.run(joined)) {
                if (!t.is_stopword) second.push_back(t.normalized);
            }
            std::sort(first.begin(), first.end());
            std::sort(second.begin(), second.end());
            EXPECT_EQ(first, second) << page.raw;
        }
    }
}

TEST(Stopwords, FlagsButKeepsTokens) {
    const auto& stop = text::default_stoplist();
    auto tokens = text::remove_stopwords(text::tokenize("the pem"), stop);
    ASSERT_EQ(tokens.size(), 2u);
    EXPECT_TRUE(tokens[0].is_stopword);
    EXPECT_EQ(surfaces(text::survivors(tokens)), (std::vector<std::string>{"pem"}));
    EXPECT_TRUE(text::survivors(text::remove_stopwords(text::tokenize("an an"), stop)).empty());
    EXPECT_TRUE(text::remove_stopwords({}, stop).empty());
}

TEST(Stopwords, SpansUnchanged) {
    const auto before = text::tokenize("The cost of the PEM stack is high");
    const auto after = text::remove_stopwords(before, text::default_stoplist());
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_EQ(before[i].span.start, after[i].span.start);
        EXPECT_EQ(before[i].span.end, after[i].span.end);
        EXPECT_EQ(before[i].surface, after[i].surface);
    }
}

TEST(Normalize, LexiconThenPorter) {
    const auto& lemmas = text::default_lemmas();
    EXPECT_EQ(text::normalize_token("better", lemmas), "good");
    EXPECT_EQ(text::normalize_token("x", lemmas), "x");
    EXPECT_EQ(text::normalize_token("membranes", lemmas), "membran");
    EXPECT_EQ(text::normalize_token("catalyst-coated", lemmas), "catalyst-coat");
    EXPECT_EQ(text::normalize_token("h2-rich", lemmas), "h2-rich");
}

TEST(Normalize, NonEmptyForEverySurvivor) {
    const text::Pipeline p;
    for (const auto& doc : oracle::search_fixture(5, 30)) {
        for (const auto& page : doc.pages) {
            for (const auto& t : p.run(page.raw)) {
                if (!t.is_stopword) {
                    EXPECT_FALSE(t.normalized.empty()) << t.surface;
                }
            }
        }
    }
    EXPECT_EQ(text::normalize_token("s", text::default_lemmas()), "s");
}

TEST(Porter, MatchesReferenceTable) {
    std::ifstream in(oracle::test_data_path("porter_reference.txt"));
    ASSERT_TRUE(in) << "missing porter_reference.txt";
    std::string line;
    std::size_t checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string word, stem;
        ss >> word >> stem;
        EXPECT_EQ(porter::stem(word), stem) << word;
        ++checked;
    }
    EXPECT_GT(checked, 2000u);
}

TEST(WordCloud, FontSizeTable) {
    const std::int64_t ts[] = {1, 2, 6, 11};
    const int expect[] = {1, 4, 20, 40};
    for (int i = 0; i < 4; ++i) EXPECT_EQ(text::font_size(ts[i], 40, 1, 11), expect[i]);
}

TEST(WordCloud, SortedAndBounded) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        text::TermCounts counts;
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) counts["t" + std::to_string(i)] = static_cast<std::int64_t>(rng() % 50);
        const int f_max = 1 + static_cast<int>(rng() % 60);
        const auto cloud = text::word_cloud(counts, f_max);
        ASSERT_EQ(cloud.size(), counts.size());
        std::int64_t t_min = counts.begin()->second, t_max = t_min;
        for (const auto& [t, c] : counts) {
            t_min = std::min(t_min, c);
            t_max = std::max(t_max, c);
        }
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            EXPECT_GE(cloud[i].font_size, 1);
            EXPECT_LE(cloud[i].font_size, f_max);
            if (i) {
                EXPECT_GE(cloud[i - 1].count, cloud[i].count);
            }
            // Floating-point reference of the formula.
            const int ref = t_max == t_min ? f_max
                            : cloud[i].count > t_min
                                ? static_cast<int>(std::ceil(static_cast<double>(f_max) * (cloud[i].count - t_min) /
                                                             static_cast<double>(t_max - t_min) - 1e-12))
                                : 1;
            EXPECT_EQ(cloud[i].font_size, ref);
        }
    }
}

TEST(WordCloud, DegenerateAndErrors) {
    const auto cloud = text::word_cloud({{"a", 3}, {"b", 3}}, 40);
    for (const auto& t : cloud) EXPECT_EQ(t.font_size, 40);
    EXPECT_THROW(text::word_cloud({{"a", 1}}, 0), std::invalid_argument);
    EXPECT_THROW(text::word_cloud({{"a", -1}}, 10), std::invalid_argument);
    EXPECT_TRUE(text::word_cloud({}, 10).empty());
}
