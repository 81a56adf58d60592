#pragma once

// Tokenization, stop-word flagging and token normalization.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "h2lit/porter_stemmer.hpp"

namespace h2lit::text {

/// Byte offsets [start, end) into the raw page text.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
    std::string surface;    // lowercased slice of the raw text
    std::string normalized; // lemma or stem; equals surface until normalized
    bool is_stopword = false;
    Span span;
};

using Stoplist = std::unordered_set<std::string>;
using LemmaLexicon = std::unordered_map<std::string, std::string>;

namespace detail {

// Bytes >= 0x80 belong to words so UTF-8 sequences are never split.
inline bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline bool is_alpha_word(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

} // namespace detail

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), detail::ascii_lower);
    return out;
}

/// Splits on every non-alphanumeric byte except a hyphen with word bytes on both
/// sides. Surfaces are lowercased; spans point into `raw`.
inline std::vector<Token> tokenize(std::string_view raw) {
    std::vector<Token> tokens;
    const std::size_t n = raw.size();
    auto word = [&](std::size_t i) { return i < n && detail::is_word_byte(static_cast<unsigned char>(raw[i])); };

    std::size_t i = 0;
    while (i < n) {
        if (!word(i)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < n) {
            if (word(i)) {
                ++i;
            } else if (raw[i] == '-' && word(i + 1)) {
                i += 2;
            } else {
                break;
            }
        }
        Token t;
        t.surface = to_lower(raw.substr(start, i - start));
        t.normalized = t.surface;
        t.span = {start, i};
        tokens.push_back(std::move(t));
    }
    return tokens;
}

inline const Stoplist& default_stoplist() {
    static const Stoplist list = [] {
        static constexpr std::array words{
            "a",       "about",   "above",   "after",   "again",   "against", "all",     "also",
            "am",      "an",      "and",     "any",     "are",     "as",      "at",      "be",
            "because", "been",    "before",  "being",   "below",   "between", "both",    "but",
            "by",      "can",     "could",   "did",     "do",      "does",    "doing",   "down",
            "during",  "each",    "et",      "etc",     "few",     "for",     "from",    "further",
            "had",     "has",     "have",    "having",  "he",      "her",     "here",    "hers",
            "herself", "him",     "himself", "his",     "how",     "however", "i",       "if",
            "in",      "into",    "is",      "it",      "its",     "itself",  "just",    "may",
            "me",      "might",   "more",    "most",    "must",    "my",      "myself",  "no",
            "nor",     "not",     "now",     "of",      "off",     "on",      "once",    "only",
            "or",      "other",   "our",     "ours",    "out",     "over",    "own",     "s",
            "same",    "she",     "should",  "so",      "some",    "such",    "t",       "than",
            "that",    "the",     "their",   "theirs",  "them",    "then",    "there",   "these",
            "they",    "this",    "those",   "through", "thus",    "to",      "too",     "under",
            "until",   "up",      "upon",    "us",      "very",    "via",     "was",     "we",
            "were",    "what",    "when",    "where",   "which",   "while",   "who",     "whom",
            "why",     "will",    "with",    "within",  "would",   "you",     "your",    "yours",
        };
        return Stoplist(words.begin(), words.end());
    }();
    return list;
}

/// Irregular forms mapped to their base word. Lookup happens before stemming.
inline const LemmaLexicon& default_lemmas() {
    static const LemmaLexicon lexicon = [] {
        static constexpr std::pair<const char*, const char*> entries[] = {
            {"better", "good"},       {"best", "good"},          {"worse", "bad"},
            {"worst", "bad"},         {"less", "little"},        {"least", "little"},
            {"further", "far"},       {"farther", "far"},        {"furthest", "far"},
            {"farthest", "far"},      {"elder", "old"},          {"eldest", "old"},
            {"is", "be"},             {"are", "be"},             {"was", "be"},
            {"were", "be"},           {"been", "be"},            {"am", "be"},
            {"being", "be"},          {"has", "have"},           {"had", "have"},
            {"does", "do"},           {"did", "do"},             {"done", "do"},
            {"went", "go"},           {"gone", "go"},            {"goes", "go"},
            {"made", "make"},         {"took", "take"},          {"taken", "take"},
            {"gave", "give"},         {"given", "give"},         {"got", "get"},
            {"gotten", "get"},        {"came", "come"},          {"saw", "see"},
            {"seen", "see"},          {"knew", "know"},          {"known", "know"},
            {"found", "find"},        {"thought", "think"},      {"brought", "bring"},
            {"bought", "buy"},        {"built", "build"},        {"began", "begin"},
            {"begun", "begin"},       {"ran", "run"},            {"led", "lead"},
            {"held", "hold"},         {"kept", "keep"},          {"left", "leave"},
            {"lost", "lose"},         {"meant", "mean"},         {"paid", "pay"},
            {"said", "say"},          {"sent", "send"},          {"spent", "spend"},
            {"stood", "stand"},       {"told", "tell"},          {"understood", "understand"},
            {"won", "win"},           {"wrote", "write"},        {"written", "write"},
            {"chose", "choose"},      {"chosen", "choose"},      {"drew", "draw"},
            {"drawn", "draw"},        {"fell", "fall"},          {"fallen", "fall"},
            {"grew", "grow"},         {"grown", "grow"},         {"rose", "rise"},
            {"risen", "rise"},        {"shown", "show"},         {"froze", "freeze"},
            {"frozen", "freeze"},     {"bore", "bear"},          {"borne", "bear"},
            {"fed", "feed"},          {"felt", "feel"},          {"fought", "fight"},
            {"sought", "seek"},       {"taught", "teach"},       {"caught", "catch"},
            {"children", "child"},    {"men", "man"},            {"women", "woman"},
            {"feet", "foot"},         {"teeth", "tooth"},        {"mice", "mouse"},
            {"geese", "goose"},       {"people", "person"},      {"analyses", "analysis"},
            {"hypotheses", "hypothesis"}, {"theses", "thesis"},  {"syntheses", "synthesis"},
            {"criteria", "criterion"}, {"phenomena", "phenomenon"}, {"indices", "index"},
            {"matrices", "matrix"},   {"vertices", "vertex"},    {"spectra", "spectrum"},
            {"media", "medium"},      {"nuclei", "nucleus"},     {"radii", "radius"},
            {"formulae", "formula"},  {"appendices", "appendix"},
        };
        LemmaLexicon lex;
        for (const auto& [form, lemma] : entries) lex.emplace(form, lemma);
        return lex;
    }();
    return lexicon;
}

/// Lexicon lookup, otherwise Porter stemming of each alphabetic hyphen-separated
/// part. Parts containing digits or non-ASCII bytes pass through unchanged.
inline std::string normalize_token(std::string_view surface, const LemmaLexicon& lemmas) {
    if (auto it = lemmas.find(std::string(surface)); it != lemmas.end()) {
        return it->second;
    }
    std::string out;
    out.reserve(surface.size());
    std::size_t pos = 0;
    while (true) {
        const std::size_t dash = surface.find('-', pos);
        const std::string_view part = surface.substr(pos, dash == std::string_view::npos ? dash : dash - pos);
        out += detail::is_alpha_word(part) ? porter::stem(part) : std::string(part);
        if (dash == std::string_view::npos) break;
        out += '-';
        pos = dash + 1;
    }
    return out;
}

/// Flags tokens whose current normalized form is in `stoplist`. The list keeps
/// every token so spans stay available for display.
inline std::vector<Token> remove_stopwords(std::vector<Token> tokens, const Stoplist& stoplist) {
    for (auto& t : tokens) {
        t.is_stopword = stoplist.contains(t.normalized);
    }
    return tokens;
}

inline std::vector<Token> survivors(const std::vector<Token>& tokens) {
    std::vector<Token> out;
    std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out), [](const Token& t) { return !t.is_stopword; });
    return out;
}

/// The preprocessing chain shared by indexing, topic modeling and query parsing.
struct Pipeline {
    Stoplist stoplist = default_stoplist();
    LemmaLexicon lemmas = default_lemmas();

    /// tokenize -> flag stop words on the lowercased surface -> normalize survivors
    std::vector<Token> run(std::string_view raw) const {
        auto tokens = remove_stopwords(tokenize(raw), stoplist);
        for (auto& t : tokens) {
            if (!t.is_stopword) t.normalized = normalize_token(t.surface, lemmas);
        }
        return tokens;
    }
};

} // namespace h2lit::text
