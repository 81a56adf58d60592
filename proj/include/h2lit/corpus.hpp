#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "h2lit/error.hpp"
#include "h2lit/text.hpp"
#include "h2lit/wordcloud.hpp"

namespace h2lit::corpus {

struct PageText {
    int page_no = 1;
    std::string raw;
    std::vector<text::Token> tokens;
};

struct Document {
    std::string id;
    std::string title;
    std::vector<std::string> authors;
    int year = 2000;
    std::string venue;
    std::string url;
    std::int64_t citation_count = 0;
    std::optional<std::pair<int, int>> citation_span;
    std::vector<PageText> pages;
};

using Corpus = std::vector<Document>;

namespace detail {

template <typename T>
T required(const nlohmann::json& rec, const char* field, std::size_t line) {
    auto it = rec.find(field);
    if (it == rec.end() || it->is_null()) {
        throw ParseError(fmt::format("missing field {} at line {}", field, line), line);
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(fmt::format("field {} has the wrong type at line {}", field, line), line);
    }
}

inline Document parse_record(const nlohmann::json& rec, std::size_t line) {
    if (!rec.is_object()) throw ParseError(fmt::format("record at line {} is not an object", line), line);

    Document doc;
    doc.id = required<std::string>(rec, "id", line);
    doc.title = required<std::string>(rec, "title", line);
    doc.authors = required<std::vector<std::string>>(rec, "authors", line);
    doc.year = required<int>(rec, "year", line);
    doc.venue = required<std::string>(rec, "venue", line);
    doc.url = required<std::string>(rec, "url", line);
    doc.citation_count = required<std::int64_t>(rec, "citations", line);
    const auto pages = required<std::vector<std::string>>(rec, "pages", line);

    if (doc.id.empty()) throw ParseError(fmt::format("empty id at line {}", line), line);
    if (doc.year < 1900 || doc.year > 2100) {
        throw ParseError(fmt::format("year {} out of range [1900, 2100] at line {}", doc.year, line), line);
    }
    if (doc.citation_count < 0) throw ParseError(fmt::format("negative citations at line {}", line), line);
    if (pages.empty()) throw ParseError(fmt::format("no pages at line {}", line), line);

    if (auto it = rec.find("citation_span"); it != rec.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() || !(*it)[1].is_number_integer()) {
            throw ParseError(fmt::format("citation_span must be [start, end] at line {}", line), line);
        }
        doc.citation_span = std::pair{(*it)[0].get<int>(), (*it)[1].get<int>()};
    }

    int page_no = 1;
    for (const auto& raw : pages) {
        doc.pages.push_back({page_no++, raw, {}});
    }
    return doc;
}

} // namespace detail

/// Reads line-delimited JSON records. Blank lines are skipped; a repeated id is an error.
inline Corpus parse_corpus(std::istream& in) {
    Corpus docs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(fmt::format("malformed record at line {}: {}", line_no, e.what()), line_no);
        }
        auto doc = detail::parse_record(rec, line_no);
        if (!seen.insert(doc.id).second) {
            throw ParseError(fmt::format("duplicate id {} at line {}", doc.id, line_no), line_no);
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open corpus file {}", path));
    return parse_corpus(in);
}

inline nlohmann::json to_json(const Document& doc) {
    nlohmann::json j{{"id", doc.id},         {"title", doc.title}, {"authors", doc.authors},
                     {"year", doc.year},     {"venue", doc.venue}, {"url", doc.url},
                     {"citations", doc.citation_count}};
    if (doc.citation_span) j["citation_span"] = {doc.citation_span->first, doc.citation_span->second};
    auto pages = nlohmann::json::array();
    for (const auto& p : doc.pages) pages.push_back(p.raw);
    j["pages"] = std::move(pages);
    return j;
}

/// Runs the pipeline over every page, filling `tokens`.
inline void preprocess(Corpus& docs, const text::Pipeline& pipeline) {
    for (auto& doc : docs) {
        for (auto& page : doc.pages) page.tokens = pipeline.run(page.raw);
    }
}

/// Counts of non-stopword normalized terms over the given documents.
inline text::TermCounts term_counts(const Document& doc) {
    text::TermCounts counts;
    for (const auto& page : doc.pages) {
        for (const auto& t : page.tokens) {
            if (!t.is_stopword) ++counts[t.normalized];
        }
    }
    return counts;
}

inline const Document* find(const Corpus& docs, const std::string& id) {
    for (const auto& d : docs) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

} // namespace h2lit::corpus
