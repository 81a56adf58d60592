#pragma once

// Boolean and phrase search over a positional inverted index, TF-IDF
// relevancy, and assembly of the full search response.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "h2lit/corpus.hpp"
#include "h2lit/error.hpp"
#include "h2lit/extract.hpp"
#include "h2lit/kgraph.hpp"
#include "h2lit/text.hpp"
#include "h2lit/wordcloud.hpp"

namespace h2lit::search {

enum class Mode { Or, And, Phrase };

inline Mode parse_mode(std::string_view s) {
    const auto m = text::to_lower(s);
    if (m == "or") return Mode::Or;
    if (m == "and") return Mode::And;
    if (m == "phrase") return Mode::Phrase;
    throw QueryError(fmt::format("unknown search mode '{}'", s));
}

/// One query word after the corpus pipeline. Stop words only survive inside
/// phrases, where they hold a position.
struct QueryWord {
    std::string surface;
    std::string term;
    bool stop = false;

    friend bool operator==(const QueryWord&, const QueryWord&) = default;
};

struct Query {
    enum class Kind { Or, And, Not, Phrase, Term };

    Kind kind = Kind::Term;
    std::vector<Query> children; // Or, And, Not (exactly one)
    std::vector<QueryWord> words; // Term (exactly one), Phrase

    static Query term(QueryWord w) { return {Kind::Term, {}, {std::move(w)}}; }
    static Query phrase(std::vector<QueryWord> ws) { return {Kind::Phrase, {}, std::move(ws)}; }
    static Query any(std::vector<Query> cs) { return {Kind::Or, std::move(cs), {}}; }
    static Query all(std::vector<Query> cs) { return {Kind::And, std::move(cs), {}}; }
    static Query negate(Query c) { return {Kind::Not, {std::move(c)}, {}}; }

    friend bool operator==(const Query&, const Query&) = default;
};

/// Compact rendering, e.g. And(membran, Not(alkalin)) or Phrase(balanc, _, plant).
inline std::string to_string(const Query& q) {
    auto join_children = [&](const char* name) {
        std::string out = std::string(name) + "(";
        for (std::size_t i = 0; i < q.children.size(); ++i) out += (i ? ", " : "") + to_string(q.children[i]);
        return out + ")";
    };
    switch (q.kind) {
    case Query::Kind::Or: return join_children("Or");
    case Query::Kind::And: return join_children("And");
    case Query::Kind::Not: return join_children("Not");
    case Query::Kind::Term: return q.words.front().term;
    case Query::Kind::Phrase: {
        std::string out = "Phrase(";
        for (std::size_t i = 0; i < q.words.size(); ++i) out += (i ? ", " : "") + (q.words[i].stop ? "_" : q.words[i].term);
        return out + ")";
    }
    }
    return {};
}

namespace detail {

inline std::vector<QueryWord> words_of(std::string_view chunk, const text::Pipeline& pipeline) {
    std::vector<QueryWord> out;
    for (auto& t : pipeline.run(chunk)) out.push_back({t.surface, t.normalized, t.is_stopword});
    return out;
}

// Phrase node from words, leading/trailing stop words dropped; nullopt when no content word is left.
inline std::optional<Query> phrase_node(std::vector<QueryWord> ws) {
    while (!ws.empty() && ws.front().stop) ws.erase(ws.begin());
    while (!ws.empty() && ws.back().stop) ws.pop_back();
    if (ws.empty()) return std::nullopt;
    return Query::phrase(std::move(ws));
}

// Unquoted chunk: a single content word is a Term, several words act as a phrase.
inline std::optional<Query> chunk_node(std::vector<QueryWord> ws) {
    if (ws.size() == 1) {
        if (ws.front().stop) return std::nullopt;
        return Query::term(std::move(ws.front()));
    }
    return phrase_node(std::move(ws));
}

struct Chunk {
    std::string text;
    bool quoted = false;
    bool negated = false;
};

inline std::vector<Chunk> split_chunks(std::string_view q) {
    if (std::count(q.begin(), q.end(), '"') % 2 != 0) throw QueryError("unbalanced quote in query");
    std::vector<Chunk> chunks;
    std::size_t i = 0;
    auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (i < q.size()) {
        if (space(q[i])) {
            ++i;
            continue;
        }
        Chunk c;
        if (q[i] == '-' && i + 1 < q.size() && !space(q[i + 1])) {
            c.negated = true;
            ++i;
        }
        if (q[i] == '"') {
            const auto close = q.find('"', i + 1);
            c.text = std::string(q.substr(i + 1, close - i - 1));
            c.quoted = true;
            i = close + 1;
        } else {
            const auto start = i;
            while (i < q.size() && !space(q[i]) && q[i] != '"') ++i;
            c.text = std::string(q.substr(start, i - start));
        }
        chunks.push_back(std::move(c));
    }
    return chunks;
}

} // namespace detail

/// Whitespace-separated words joined by the mode's connective; quoted spans are
/// phrases in every mode; `-word` / `-"phrase"` exclude. Exclusions always sit
/// under an And next to the positive part of the query.
inline Query parse_query(std::string_view text, Mode mode, const text::Pipeline& pipeline) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw QueryError("empty query");

    std::vector<Query> positive, negative;
    std::vector<QueryWord> phrase_words; // Phrase mode: unquoted words in order
    for (auto& chunk : detail::split_chunks(text)) {
        auto ws = detail::words_of(chunk.text, pipeline);
        if (mode == Mode::Phrase && !chunk.quoted && !chunk.negated) {
            phrase_words.insert(phrase_words.end(), ws.begin(), ws.end());
            continue;
        }
        auto node = chunk.quoted ? detail::phrase_node(std::move(ws)) : detail::chunk_node(std::move(ws));
        if (!node) continue;
        (chunk.negated ? negative : positive).push_back(std::move(*node));
    }
    if (auto p = detail::phrase_node(std::move(phrase_words))) positive.insert(positive.begin(), std::move(*p));

    if (positive.empty() && negative.empty()) throw QueryError("query has no searchable terms");

    std::vector<Query> conjuncts;
    if (mode == Mode::Or && positive.size() > 1) {
        conjuncts.push_back(Query::any(std::move(positive)));
    } else {
        conjuncts = std::move(positive);
    }
    for (auto& n : negative) conjuncts.push_back(Query::negate(std::move(n)));
    if (conjuncts.size() == 1 && conjuncts.front().kind != Query::Kind::Not) return std::move(conjuncts.front());
    return Query::all(std::move(conjuncts));
}

struct Posting {
    std::uint32_t doc = 0;
    int page_no = 1;
    std::vector<std::uint32_t> positions; // token offsets within the page, stop words counted
};

struct DocInfo {
    std::string id;
    std::string title;
    int year = 0;
};

class Index {
public:
    std::vector<DocInfo> docs;

    std::size_t size() const { return docs.size(); }

    const std::vector<Posting>* postings(const std::string& term) const {
        auto it = postings_.find(term);
        return it == postings_.end() ? nullptr : &it->second;
    }

    std::size_t document_frequency(const std::string& term) const {
        const auto* ps = postings(term);
        if (!ps) return 0;
        std::set<std::uint32_t> d;
        for (const auto& p : *ps) d.insert(p.doc);
        return d.size();
    }

    std::size_t term_frequency(const std::string& term, std::uint32_t doc) const {
        const auto* ps = postings(term);
        if (!ps) return 0;
        std::size_t tf = 0;
        for (const auto& p : *ps) {
            if (p.doc == doc) tf += p.positions.size();
        }
        return tf;
    }

    std::optional<std::uint32_t> doc_index(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t vocabulary_size() const { return postings_.size(); }

    /// Indexes the non-stopword normalized tokens of a preprocessed corpus.
    static Index build(const corpus::Corpus& corpus) {
        Index idx;
        for (const auto& doc : corpus) {
            const auto d = static_cast<std::uint32_t>(idx.docs.size());
            idx.by_id_.emplace(doc.id, d);
            idx.docs.push_back({doc.id, doc.title, doc.year});
            for (const auto& page : doc.pages) {
                for (std::size_t i = 0; i < page.tokens.size(); ++i) {
                    const auto& t = page.tokens[i];
                    if (t.is_stopword) continue;
                    auto& list = idx.postings_[t.normalized];
                    if (list.empty() || list.back().doc != d || list.back().page_no != page.page_no) {
                        list.push_back({d, page.page_no, {}});
                    }
                    list.back().positions.push_back(static_cast<std::uint32_t>(i));
                }
            }
        }
        return idx;
    }

private:
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
};

inline Index build_index(const corpus::Corpus& corpus) { return Index::build(corpus); }

using DocMask = std::vector<bool>;

namespace detail {

inline const Posting* find_posting(const std::vector<Posting>& list, std::uint32_t doc, int page) {
    auto it = std::lower_bound(list.begin(), list.end(), std::pair{doc, page}, [](const Posting& p, const auto& key) {
        return std::pair{p.doc, p.page_no} < key;
    });
    if (it == list.end() || it->doc != doc || it->page_no != page) return nullptr;
    return &*it;
}

inline DocMask match_words(const Index& index, const std::vector<QueryWord>& words) {
    DocMask out(index.size(), false);
    std::size_t anchor = 0;
    while (anchor < words.size() && words[anchor].stop) ++anchor;
    if (anchor == words.size()) return out;

    const auto* first = index.postings(words[anchor].term);
    if (!first) return out;
    std::vector<const std::vector<Posting>*> lists(words.size(), nullptr);
    for (std::size_t j = 0; j < words.size(); ++j) {
        if (words[j].stop) continue;
        lists[j] = index.postings(words[j].term);
        if (!lists[j]) return out;
    }

    for (const auto& p : *first) {
        if (out[p.doc]) continue;
        for (auto pos : p.positions) {
            if (pos < anchor) continue;
            const std::uint32_t start = pos - static_cast<std::uint32_t>(anchor);
            bool ok = true;
            for (std::size_t j = 0; j < words.size() && ok; ++j) {
                if (words[j].stop || j == anchor) continue;
                const auto* q = find_posting(*lists[j], p.doc, p.page_no);
                ok = q && std::binary_search(q->positions.begin(), q->positions.end(),
                                             start + static_cast<std::uint32_t>(j));
            }
            if (ok) {
                out[p.doc] = true;
                break;
            }
        }
    }
    return out;
}

inline DocMask eval(const Query& q, const Index& index, const DocMask& scope) {
    DocMask out(index.size(), false);
    switch (q.kind) {
    case Query::Kind::Term:
    case Query::Kind::Phrase: {
        out = match_words(index, q.words);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] && scope[i];
        return out;
    }
    case Query::Kind::Or:
        for (const auto& c : q.children) {
            const auto m = eval(c, index, scope);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] || m[i];
        }
        return out;
    case Query::Kind::And: {
        out = scope;
        for (const auto& c : q.children) out = eval(c, index, out);
        return out;
    }
    case Query::Kind::Not: {
        const auto m = eval(q.children.front(), index, scope);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = scope[i] && !m[i];
        return out;
    }
    }
    return out;
}

} // namespace detail

/// A query is anchored when its result is bounded by the postings of some
/// positive term: Term and Phrase are, Not is not, And needs one anchored
/// child, Or needs all of them.
inline bool anchored(const Query& q) {
    switch (q.kind) {
    case Query::Kind::Term:
    case Query::Kind::Phrase: return true;
    case Query::Kind::Not: return false;
    case Query::Kind::And:
        return std::any_of(q.children.begin(), q.children.end(), [](const Query& c) { return anchored(c); });
    case Query::Kind::Or:
        return !q.children.empty() &&
               std::all_of(q.children.begin(), q.children.end(), [](const Query& c) { return anchored(c); });
    }
    return false;
}

/// Set semantics over the corpus: Or is union, And intersection, Not the
/// complement within the enclosing scope, Phrase positional adjacency.
/// Unanchored queries (pure negation) match nothing.
inline DocMask evaluate_mask(const Query& q, const Index& index) {
    if (!anchored(q)) return DocMask(index.size(), false);
    return detail::eval(q, index, DocMask(index.size(), true));
}

inline std::set<std::string> evaluate(const Query& q, const Index& index) {
    std::set<std::string> out;
    const auto mask = evaluate_mask(q, index);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) out.insert(index.docs[i].id);
    }
    return out;
}

/// Content terms that appear outside any Not.
inline std::set<std::string> positive_terms(const Query& q) {
    std::set<std::string> out;
    if (q.kind == Query::Kind::Not) return out;
    for (const auto& w : q.words) {
        if (!w.stop) out.insert(w.term);
    }
    for (const auto& c : q.children) {
        auto sub = positive_terms(c);
        out.insert(sub.begin(), sub.end());
    }
    return out;
}

struct RankOptions {
    /// Weight of TF-IDF in the blend with PageRank. At exactly 1 the raw
    /// TF-IDF score is reported; otherwise both parts are max-normalized over
    /// the ranked set before blending.
    double lambda = 1.0;
    std::map<std::string, double> pagerank; // paper id -> score
};

struct Ranked {
    std::string doc_id;
    double score = 0.0;
};

/// score(d) = sum over positive terms t of tf(t, d) * ln(N / df(t)); ties by
/// year descending, then title, then id.
inline std::vector<Ranked> tfidf_rank(const std::set<std::string>& docs, const Query& q, const Index& index,
                                      const RankOptions& options = {}) {
    std::vector<Ranked> out;
    if (docs.empty()) return out;
    const auto terms = positive_terms(q);
    const double n = static_cast<double>(index.size());
    std::map<std::string, double> idf;
    for (const auto& t : terms) {
        const auto df = index.document_frequency(t);
        idf[t] = df == 0 ? 0.0 : std::log(n / static_cast<double>(df));
    }

    std::vector<std::uint32_t> ids;
    for (const auto& id : docs) {
        const auto d = index.doc_index(id);
        if (!d) throw QueryError(fmt::format("document '{}' is not in the index", id));
        ids.push_back(*d);
        double s = 0.0;
        for (const auto& t : terms) s += static_cast<double>(index.term_frequency(t, *d)) * idf[t];
        out.push_back({id, s});
    }

    if (options.lambda != 1.0) {
        double max_tfidf = 0.0, max_pr = 0.0;
        std::vector<double> pr(out.size(), 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (auto it = options.pagerank.find(out[i].doc_id); it != options.pagerank.end()) pr[i] = it->second;
            max_tfidf = std::max(max_tfidf, out[i].score);
            max_pr = std::max(max_pr, pr[i]);
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double t = max_tfidf > 0.0 ? out[i].score / max_tfidf : 0.0;
            const double p = max_pr > 0.0 ? pr[i] / max_pr : 0.0;
            out[i].score = options.lambda * t + (1.0 - options.lambda) * p;
        }
    }

    std::vector<std::size_t> order(out.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (out[a].score != out[b].score) return out[a].score > out[b].score;
        const auto& da = index.docs[ids[a]];
        const auto& db = index.docs[ids[b]];
        if (da.year != db.year) return da.year > db.year;
        if (da.title != db.title) return da.title < db.title;
        return da.id < db.id;
    });
    std::vector<Ranked> sorted;
    sorted.reserve(out.size());
    for (auto i : order) sorted.push_back(out[i]);
    return sorted;
}

struct DatedDoc {
    std::string doc_id;
    std::string title;
    int year = 0;
};

/// Year descending, ties by title then id.
inline std::vector<DatedDoc> by_date(const std::set<std::string>& docs, const Index& index) {
    std::vector<DatedDoc> out;
    for (const auto& id : docs) {
        const auto& info = index.docs[index.doc_index(id).value()];
        out.push_back({info.id, info.title, info.year});
    }
    std::sort(out.begin(), out.end(), [](const DatedDoc& a, const DatedDoc& b) {
        if (a.year != b.year) return a.year > b.year;
        if (a.title != b.title) return a.title < b.title;
        return a.doc_id < b.doc_id;
    });
    return out;
}

/// Matched paper nodes, every node pointing at them, and the edges among those nodes.
inline kg::KnowledgeGraph induced_subgraph(const kg::KnowledgeGraph& g, const std::set<std::string>& doc_ids) {
    std::set<std::size_t> papers;
    for (const auto& id : doc_ids) {
        if (const auto* n = g.find(kg::paper_node_id(id))) papers.insert(g.index_of(n->id));
    }
    std::map<std::string, kg::Node> nodes;
    std::map<std::pair<std::string, std::string>, std::size_t> edges;
    for (auto p : papers) nodes.emplace(g.nodes[p].id, g.nodes[p]);
    for (const auto& e : g.edges) {
        if (!papers.contains(e.to)) continue;
        nodes.emplace(g.nodes[e.from].id, g.nodes[e.from]);
        edges[{g.nodes[e.from].id, g.nodes[e.to].id}] = e.display_count;
    }
    return kg::KnowledgeGraph::assemble(g.config, nodes, edges);
}

/// Everything a search response is computed from; all members describe the
/// same corpus snapshot.
struct SearchContext {
    SearchContext(const corpus::Corpus& c, const text::Pipeline& p, const Index& i, const extract::MentionSet& m,
                  const kg::KnowledgeGraph* g = nullptr)
        : corpus(c), pipeline(p), index(i), mentions(m), graph(g) {}

    const corpus::Corpus& corpus;
    const text::Pipeline& pipeline;
    const Index& index;
    const extract::MentionSet& mentions;
    const kg::KnowledgeGraph* graph = nullptr;
    RankOptions rank;
    int font_max = 40;
    std::size_t cloud_terms = 50;
    std::size_t top_entities = 10;
};

struct SearchResponse {
    std::string query;
    Query ast;
    std::vector<Ranked> by_relevancy;
    std::vector<DatedDoc> by_date;
    extract::ExtractionReport entities;
    std::vector<text::TermStats> wordcloud;
    kg::KnowledgeGraph subgraph;
};

inline text::TermCounts matched_term_counts(const corpus::Corpus& corpus, const std::set<std::string>& docs) {
    text::TermCounts counts;
    for (const auto& doc : corpus) {
        if (!docs.contains(doc.id)) continue;
        for (const auto& [term, c] : corpus::term_counts(doc)) counts[term] += c;
    }
    return counts;
}

inline SearchResponse respond(std::string_view query, Mode mode, const SearchContext& ctx) {
    SearchResponse r;
    r.query = std::string(query);
    r.ast = parse_query(query, mode, ctx.pipeline);
    const auto matched = evaluate(r.ast, ctx.index);

    r.by_relevancy = tfidf_rank(matched, r.ast, ctx.index, ctx.rank);
    r.by_date = by_date(matched, ctx.index);

    std::vector<extract::EntityMention> in_scope;
    for (const auto& m : ctx.mentions.mentions) {
        if (matched.contains(m.doc_id)) in_scope.push_back(m);
    }
    r.entities = extract::extraction_report(in_scope, r.query, ctx.top_entities);

    r.wordcloud = text::word_cloud(matched_term_counts(ctx.corpus, matched), ctx.font_max);
    if (ctx.cloud_terms != 0 && r.wordcloud.size() > ctx.cloud_terms) r.wordcloud.resize(ctx.cloud_terms);

    if (ctx.graph) r.subgraph = induced_subgraph(*ctx.graph, matched);
    return r;
}

inline nlohmann::json to_json(const SearchResponse& r) {
    auto rel = nlohmann::json::array();
    for (const auto& x : r.by_relevancy) rel.push_back({{"id", x.doc_id}, {"score", x.score}});
    auto dated = nlohmann::json::array();
    for (const auto& x : r.by_date) dated.push_back({{"id", x.doc_id}, {"title", x.title}, {"year", x.year}});
    auto cloud = nlohmann::json::array();
    for (const auto& t : r.wordcloud) cloud.push_back({{"term", t.term}, {"count", t.count}, {"size", t.font_size}});
    auto sub = kg::to_json(r.subgraph);
    sub.erase("config");
    return {{"query", r.query},       {"parsed", to_string(r.ast)}, {"by_relevancy", std::move(rel)},
            {"by_date", std::move(dated)}, {"entities", extract::to_json(r.entities)},
            {"wordcloud", std::move(cloud)}, {"subgraph", std::move(sub)}};
}

} // namespace h2lit::search
