#pragma once

// Subject-predicate-object ontology: CSV authoring format, Turtle and RDF/XML
// serialization, and the concept lexicon used for entity matching.
//
// Concepts and predicates are lowercase words separated by single spaces. Each
// maps to an IRI local name by replacing spaces with underscores. A name that
// would not map back to itself (underscores, punctuation other than '-') is
// rejected at parse time, which also rules out two names sharing a local name.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "h2lit/error.hpp"

namespace h2lit::ontology {

struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct Ontology {
    std::string name = "custom";
    std::set<Triple> triples;
    std::size_t duplicate_count = 0; // duplicate lines collapsed while parsing

    std::set<std::string> concepts() const {
        std::set<std::string> out;
        for (const auto& t : triples) {
            out.insert(t.subject);
            out.insert(t.object);
        }
        return out;
    }

    std::set<std::string> predicates() const {
        std::set<std::string> out;
        for (const auto& t : triples) out.insert(t.predicate);
        return out;
    }

    friend bool operator==(const Ontology& a, const Ontology& b) { return a.triples == b.triples; }
};

inline std::string slug(std::string_view id) {
    std::string out;
    for (char c : id) {
        const auto u = static_cast<unsigned char>(c);
        if (c == ' ') {
            out += '_';
        } else if (std::isalnum(u) || c == '-' || c == '_') {
            out += static_cast<char>(std::tolower(u));
        }
    }
    return out;
}

inline std::string unslug(std::string_view local) {
    std::string out(local);
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Lowercases and collapses internal whitespace runs to one space.
inline std::string canonical_id(std::string_view cell) {
    std::string out;
    bool space = false;
    for (char c : trim(cell)) {
        if (c == ' ' || c == '\t') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

inline void check_representable(const std::string& id, std::size_t line) {
    const auto s = slug(id);
    if (s.empty() || unslug(s) != id) {
        throw ParseError(fmt::format("line {}: '{}' cannot be written as an IRI local name", line, id), line);
    }
}

inline bool is_absolute_iri(std::string_view iri) {
    const auto colon = iri.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    if (!std::isalpha(static_cast<unsigned char>(iri[0]))) return false;
    for (std::size_t i = 1; i < colon; ++i) {
        const char c = iri[i];
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
    }
    return std::none_of(iri.begin(), iri.end(), [](char c) {
        return c == ' ' || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' || c == '\\' ||
               c == '^' || c == '`' || static_cast<unsigned char>(c) < 0x20;
    });
}

inline void require_iri(std::string_view iri) {
    if (!is_absolute_iri(iri)) throw std::invalid_argument(fmt::format("not an absolute IRI: '{}'", iri));
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

/// Parses `subject,predicate,object` lines. Blank lines and lines starting with
/// '#' are skipped; cells are trimmed and lowercased.
inline Ontology parse_csv(std::string_view text, std::string name = "custom") {
    Ontology o;
    o.name = std::move(name);
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;

        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            const auto comma = trimmed.find(',', pos);
            cells.push_back(detail::canonical_id(std::string_view(trimmed).substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cells.size() != 3) {
            throw ParseError(fmt::format("line {}: expected 3 cells, got {}", line_no, cells.size()), line_no);
        }
        for (const auto& c : cells) {
            if (c.empty()) throw ParseError(fmt::format("line {}: empty cell", line_no), line_no);
            detail::check_representable(c, line_no);
        }
        if (!std::isalpha(static_cast<unsigned char>(cells[1].front()))) {
            throw ParseError(fmt::format("line {}: predicate '{}' must start with a letter", line_no, cells[1]),
                             line_no);
        }
        if (cells[0] == cells[2]) {
            throw ParseError(fmt::format("line {}: '{}' relates to itself", line_no, cells[0]), line_no);
        }
        if (!o.triples.insert({cells[0], cells[1], cells[2]}).second) ++o.duplicate_count;
    }
    return o;
}

inline std::string to_csv(const Ontology& o) {
    std::string out;
    for (const auto& t : o.triples) out += fmt::format("{},{},{}\n", t.subject, t.predicate, t.object);
    return out;
}

/// One `@prefix h2:` header followed by one statement per triple, sorted.
inline std::string to_turtle(const Ontology& o, std::string_view prefix_uri) {
    detail::require_iri(prefix_uri);
    std::vector<std::string> lines;
    lines.reserve(o.triples.size());
    for (const auto& t : o.triples) {
        lines.push_back(fmt::format("h2:{} h2:{} h2:{} .", slug(t.subject), slug(t.predicate), slug(t.object)));
    }
    std::sort(lines.begin(), lines.end());

    std::string out = fmt::format("@prefix h2: <{}> .\n", prefix_uri);
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

/// Parses the Turtle subset written by to_turtle: `@prefix p: <iri> .` lines,
/// comments, and `p:s p:p p:o .` statements, one per line.
inline Ontology parse_turtle(std::string_view text, std::string name = "custom") {
    Ontology o;
    o.name = std::move(name);
    std::map<std::string, std::string> prefixes;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;

    auto malformed = [&](std::string_view why) {
        return ParseError(fmt::format("line {}: malformed statement ({})", line_no, why), line_no);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;

        std::istringstream words(trimmed);
        std::vector<std::string> parts;
        for (std::string w; words >> w;) parts.push_back(w);

        if (parts.front() == "@prefix") {
            if (parts.size() != 4 || parts[3] != "." || parts[1].empty() || parts[1].back() != ':' ||
                parts[2].size() < 2 || parts[2].front() != '<' || parts[2].back() != '>') {
                throw malformed("bad @prefix directive");
            }
            prefixes[parts[1].substr(0, parts[1].size() - 1)] = parts[2].substr(1, parts[2].size() - 2);
            continue;
        }
        if (parts.size() != 4 || parts[3] != ".") throw malformed("expected 'subject predicate object .'");

        std::string ids[3];
        for (int i = 0; i < 3; ++i) {
            const auto& term = parts[static_cast<std::size_t>(i)];
            const auto colon = term.find(':');
            if (colon == std::string::npos) throw malformed(fmt::format("'{}' is not a prefixed name", term));
            const auto pfx = term.substr(0, colon);
            if (!prefixes.contains(pfx)) {
                throw ParseError(fmt::format("line {}: unknown prefix '{}'", line_no, pfx), line_no);
            }
            const auto local = term.substr(colon + 1);
            ids[i] = unslug(local);
            if (local.empty() || slug(local) != local || detail::canonical_id(ids[i]) != ids[i]) {
                throw malformed(fmt::format("bad local name '{}'", local));
            }
        }
        o.triples.insert({ids[0], ids[1], ids[2]});
    }
    return o;
}

/// RDF/XML with one rdf:Description per subject and one property element per triple.
inline std::string to_rdfxml(const Ontology& o, std::string_view prefix_uri) {
    detail::require_iri(prefix_uri);
    const auto base = detail::xml_escape(prefix_uri);

    std::map<std::string, std::vector<std::string>> by_subject;
    for (const auto& t : o.triples) {
        by_subject[slug(t.subject)].push_back(
            fmt::format("    <h2:{} rdf:resource=\"{}{}\"/>\n", slug(t.predicate), base, slug(t.object)));
    }

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += fmt::format("<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" xmlns:h2=\"{}\">\n", base);
    for (auto& [subject, props] : by_subject) {
        std::sort(props.begin(), props.end());
        out += fmt::format("  <rdf:Description rdf:about=\"{}{}\">\n", base, subject);
        for (const auto& p : props) out += p;
        out += "  </rdf:Description>\n";
    }
    out += "</rdf:RDF>\n";
    return out;
}

/// Every concept id, multi-word phrases intact.
inline std::set<std::string> lexicon(const Ontology& o) { return o.concepts(); }

} // namespace h2lit::ontology
