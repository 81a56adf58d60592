#pragma once

// Entity recognition over document pages: ontology gazetteers, an organization
// gazetteer and a rule-based currency recognizer.

#include <algorithm>
#include <cstddef>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "h2lit/corpus.hpp"
#include "h2lit/ontology.hpp"
#include "h2lit/text.hpp"

namespace h2lit::extract {

enum class Source { Gazetteer, Organization, Currency };

inline const char* to_string(Source s) {
    switch (s) {
    case Source::Gazetteer: return "GAZETTEER";
    case Source::Organization: return "ORGANIZATION";
    case Source::Currency: return "CURRENCY";
    }
    return "?";
}

struct EntityMention {
    std::string doc_id;
    int page_no = 1;
    text::Span span;
    std::string surface;   // raw text under span
    std::string canonical; // lexicon entry, or normalized amount for currency
    Source source = Source::Gazetteer;
    std::string ontology; // set for Gazetteer mentions only

    friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// Mentions plus the names of the ontologies they were extracted with.
struct MentionSet {
    std::vector<EntityMention> mentions;
    std::set<std::string> ontologies;
};

/// One matchable word: a token, or one hyphen-separated part of it.
struct Word {
    std::string key;
    text::Span span;
};

/// Plural folding used on both sides of a match: a bare trailing 's' is dropped.
inline std::string match_key(std::string_view lower_word) {
    if (lower_word.size() > 1 && lower_word.back() == 's') lower_word.remove_suffix(1);
    return std::string(lower_word);
}

inline std::vector<Word> match_words(const std::vector<text::Token>& tokens) {
    std::vector<Word> words;
    for (const auto& t : tokens) {
        std::size_t pos = 0;
        while (pos <= t.surface.size()) {
            auto dash = t.surface.find('-', pos);
            if (dash == std::string::npos) dash = t.surface.size();
            if (dash > pos) {
                words.push_back({match_key(std::string_view(t.surface).substr(pos, dash - pos)),
                                 {t.span.start + pos, t.span.start + dash}});
            }
            pos = dash + 1;
        }
    }
    return words;
}

inline std::string phrase_key(std::string_view phrase) {
    std::string key;
    for (const auto& w : match_words(text::tokenize(phrase))) {
        if (!key.empty()) key += ' ';
        key += w.key;
    }
    return key;
}

/// A matching window before overlap resolution: words [first, first + length).
struct Window {
    std::size_t first = 0;
    std::size_t length = 0;
    std::string canonical;
};

/// Among overlapping windows the longest wins, then the leftmost.
inline std::vector<Window> select_non_overlapping(std::vector<Window> windows, std::size_t word_count) {
    std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) {
        if (a.length != b.length) return a.length > b.length;
        return a.first < b.first;
    });
    std::vector<bool> taken(word_count, false);
    std::vector<Window> chosen;
    for (auto& w : windows) {
        const auto begin = taken.begin() + static_cast<std::ptrdiff_t>(w.first);
        const auto end = begin + static_cast<std::ptrdiff_t>(w.length);
        if (std::any_of(begin, end, [](bool b) { return b; })) continue;
        std::fill(begin, end, true);
        chosen.push_back(std::move(w));
    }
    std::sort(chosen.begin(), chosen.end(), [](const Window& a, const Window& b) { return a.first < b.first; });
    return chosen;
}

/// Dictionary matcher over phrase keys.
class Gazetteer {
public:
    Gazetteer() = default;

    explicit Gazetteer(const std::set<std::string>& lexicon) {
        // std::set iterates in order, so the smallest canonical wins a shared key.
        for (const auto& phrase : lexicon) {
            auto key = phrase_key(phrase);
            if (key.empty()) continue;
            max_words_ = std::max<std::size_t>(max_words_, 1 + std::count(key.begin(), key.end(), ' '));
            by_key_.emplace(std::move(key), phrase);
        }
    }

    bool empty() const noexcept { return by_key_.empty(); }

    /// Every window whose key is in the lexicon.
    std::vector<Window> windows(const std::vector<Word>& words) const {
        std::vector<Window> out;
        for (std::size_t i = 0; i < words.size(); ++i) {
            std::string key;
            for (std::size_t len = 1; len <= max_words_ && i + len <= words.size(); ++len) {
                if (len > 1) key += ' ';
                key += words[i + len - 1].key;
                if (auto it = by_key_.find(key); it != by_key_.end()) out.push_back({i, len, it->second});
            }
        }
        return out;
    }

    std::vector<EntityMention> match(const corpus::PageText& page, std::string_view doc_id, Source source,
                                     std::string_view ontology_name) const {
        const auto tokens = page.tokens.empty() ? text::tokenize(page.raw) : page.tokens;
        const auto words = match_words(tokens);
        std::vector<EntityMention> out;
        for (const auto& w : select_non_overlapping(windows(words), words.size())) {
            const text::Span span{words[w.first].span.start, words[w.first + w.length - 1].span.end};
            out.push_back({std::string(doc_id), page.page_no, span, page.raw.substr(span.start, span.end - span.start),
                           w.canonical, source,
                           source == Source::Gazetteer ? std::string(ontology_name) : std::string()});
        }
        return out;
    }

private:
    std::unordered_map<std::string, std::string> by_key_;
    std::size_t max_words_ = 0;
};

inline std::vector<EntityMention> gazetteer_match(const corpus::PageText& page, const std::set<std::string>& lexicon,
                                                  std::string_view ontology_name, std::string_view doc_id = {}) {
    return Gazetteer(lexicon).match(page, doc_id, Source::Gazetteer, ontology_name);
}

inline std::vector<EntityMention> recognize_organization(const corpus::PageText& page,
                                                         const std::set<std::string>& org_lexicon,
                                                         std::string_view doc_id = {}) {
    return Gazetteer(org_lexicon).match(page, doc_id, Source::Organization, {});
}

inline const std::set<std::string>& default_organizations() {
    static const std::set<std::string> orgs{
        "department of energy",
        "doe",
        "national renewable energy laboratory",
        "nrel",
        "argonne national laboratory",
        "idaho national laboratory",
        "international energy agency",
        "iea",
        "nasa",
        "elsevier",
        "springer",
        "journal of hydrogen",
        "international journal of hydrogen energy",
        "journal of power sources",
        "applied energy",
        "energy conversion and management",
        "electrochimica acta",
        "journal of the electrochemical society",
        "renewable and sustainable energy reviews",
        "siemens",
        "nel hydrogen",
        "itm power",
        "plug power",
    };
    return orgs;
}

namespace detail {

inline const std::regex& currency_pattern() {
    // Symbol amounts ($500, $ 2.5 billion, $5/kg), trailing symbols (5$/kg),
    // ISO-coded amounts (USD 300, 300 EUR) and bare currency names.
    static const std::regex re(
        R"((?:us)?\$\s?\d+(?:[.,]\d+)*(?:\s?(?:million|billion|trillion))?(?:\s?/\s?[a-z]+)?)"
        R"(|(?:€|£|¥)\s?\d+(?:[.,]\d+)*(?:\s?(?:million|billion|trillion))?(?:\s?/\s?[a-z]+)?)"
        R"(|\d+(?:[.,]\d+)*\s?(?:\$|€|£|¥)(?:\s?/\s?[a-z]+)?)"
        R"(|\b(?:usd|eur|jpy|gbp|cny|chf|cad|aud|inr|krw)\s?\d+(?:[.,]\d+)*)"
        R"(|\d+(?:[.,]\d+)*\s?(?:usd|eur|jpy|gbp|cny|chf|cad|aud|inr|krw)\b)"
        R"(|\b(?:dollars?|yen|euros?|yuan|renminbi|rupees?|francs?|sterling)\b)",
        std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    return re;
}

} // namespace detail

inline std::vector<EntityMention> recognize_currency(const corpus::PageText& page, std::string_view doc_id = {}) {
    std::vector<EntityMention> out;
    const auto& raw = page.raw;
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), detail::currency_pattern());
         it != std::sregex_iterator(); ++it) {
        const auto start = static_cast<std::size_t>(it->position());
        const auto len = static_cast<std::size_t>(it->length());
        std::string surface = raw.substr(start, len);
        std::string canonical;
        for (char c : text::to_lower(surface)) {
            if (c != ' ') canonical += c;
        }
        out.push_back({std::string(doc_id), page.page_no, {start, start + len}, std::move(surface),
                       std::move(canonical), Source::Currency, {}});
    }
    return out;
}

/// An ontology's lexicon under its name, ready for matching.
struct NamedGazetteer {
    std::string name;
    Gazetteer gazetteer;
};

inline std::vector<NamedGazetteer> gazetteers(const std::vector<ontology::Ontology>& ontologies) {
    std::vector<NamedGazetteer> out;
    for (const auto& o : ontologies) out.push_back({o.name, Gazetteer(ontology::lexicon(o))});
    return out;
}

/// Runs every recognizer over every page. Mentions are ordered by document,
/// page, source, then position.
inline MentionSet extract_corpus(const corpus::Corpus& docs, const std::vector<ontology::Ontology>& ontologies,
                                 const std::set<std::string>& org_lexicon) {
    MentionSet result;
    const auto named = gazetteers(ontologies);
    const Gazetteer orgs(org_lexicon);
    for (const auto& o : ontologies) result.ontologies.insert(o.name);

    for (const auto& doc : docs) {
        for (const auto& page : doc.pages) {
            for (const auto& g : named) {
                auto m = g.gazetteer.match(page, doc.id, Source::Gazetteer, g.name);
                result.mentions.insert(result.mentions.end(), m.begin(), m.end());
            }
            auto org = orgs.match(page, doc.id, Source::Organization, {});
            result.mentions.insert(result.mentions.end(), org.begin(), org.end());
            auto cur = recognize_currency(page, doc.id);
            result.mentions.insert(result.mentions.end(), cur.begin(), cur.end());
        }
    }
    return result;
}

struct ExtractionReport {
    std::string scope;
    std::size_t papers_matched = 0;
    std::size_t entities_matched = 0;
    std::vector<std::pair<std::string, std::size_t>> top_entities;
};

/// Distinct papers, total mentions, and the most frequent canonicals (ties
/// alphabetical). `limit` 0 keeps every entity.
inline ExtractionReport extraction_report(const std::vector<EntityMention>& mentions, std::string scope,
                                          std::size_t limit = 10) {
    ExtractionReport report;
    report.scope = std::move(scope);
    std::set<std::string> papers;
    std::map<std::string, std::size_t> freq;
    for (const auto& m : mentions) {
        papers.insert(m.doc_id);
        ++freq[m.canonical];
    }
    report.papers_matched = papers.size();
    report.entities_matched = mentions.size();
    report.top_entities.assign(freq.begin(), freq.end());
    std::stable_sort(report.top_entities.begin(), report.top_entities.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (limit != 0 && report.top_entities.size() > limit) report.top_entities.resize(limit);
    return report;
}

inline nlohmann::json to_json(const EntityMention& m) {
    nlohmann::json j{{"doc_id", m.doc_id},       {"page_no", m.page_no},     {"start", m.span.start},
                     {"end", m.span.end},         {"surface", m.surface},     {"canonical", m.canonical},
                     {"source", to_string(m.source)}};
    j["ontology"] = m.ontology.empty() ? nlohmann::json(nullptr) : nlohmann::json(m.ontology);
    return j;
}

inline nlohmann::json to_json(const ExtractionReport& r) {
    auto top = nlohmann::json::array();
    for (const auto& [canonical, count] : r.top_entities) top.push_back({{"entity", canonical}, {"count", count}});
    return {{"scope", r.scope},
            {"papers_matched", r.papers_matched},
            {"entities_matched", r.entities_matched},
            {"top_entities", std::move(top)}};
}

} // namespace h2lit::extract
