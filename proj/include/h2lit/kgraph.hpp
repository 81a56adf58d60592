#pragma once

// Knowledge graphs over papers, ontology entities and metadata values, and
// PageRank scoring of the paper nodes.
//
// Edge convention: every non-paper node points at the papers it describes, so
// papers are sinks and entity/metadata nodes have no in-edges.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
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

namespace h2lit::kg {

enum class NodeKind { Paper, Entity, MetaValue };

inline const char* to_string(NodeKind k) {
    switch (k) {
    case NodeKind::Paper: return "PAPER";
    case NodeKind::Entity: return "ENTITY";
    case NodeKind::MetaValue: return "METAVALUE";
    }
    return "?";
}

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Paper;
    std::string label;
};

/// Unit-weight directed edge between node indices. `display_count` is the
/// number of mentions behind an entity edge (1 for metadata edges); it is
/// display metadata and never enters scoring.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    std::size_t display_count = 1;

    static constexpr double weight = 1.0;
};

inline constexpr std::string_view kDomainScience = "domain-science";
inline constexpr std::string_view kDomainCost = "domain-cost";

struct GraphConfig {
    bool use_metadata = false;
    std::vector<std::string> ontologies; // kept sorted and unique

    bool empty() const { return !use_metadata && ontologies.empty(); }

    /// Short form used on the command line and in the API: "meta", "science",
    /// "cost", joined with '+', e.g. "meta+science+cost".
    std::string name() const {
        std::vector<std::string> parts;
        if (use_metadata) parts.emplace_back("meta");
        for (const auto& o : ontologies) {
            if (o == kDomainScience) parts.emplace_back("science");
            else if (o == kDomainCost) parts.emplace_back("cost");
            else parts.push_back(o);
        }
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "+" : "") + parts[i];
        return out;
    }

    friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

/// Accepts "meta", "science", "cost" or full ontology names, separated by ',' or '+'.
inline GraphConfig parse_config(std::string_view spec) {
    GraphConfig cfg;
    std::set<std::string> onts;
    std::string part;
    auto flush = [&] {
        if (part.empty()) return;
        if (part == "meta" || part == "metadata") cfg.use_metadata = true;
        else if (part == "science" || part == kDomainScience) onts.emplace(kDomainScience);
        else if (part == "cost" || part == kDomainCost) onts.emplace(kDomainCost);
        else throw ConfigError(fmt::format("unknown graph source '{}'", part));
        part.clear();
    };
    for (char c : spec) {
        if (c == ',' || c == '+') flush();
        else if (c != ' ') part += c;
    }
    flush();
    cfg.ontologies.assign(onts.begin(), onts.end());
    if (cfg.empty()) throw ConfigError(fmt::format("graph config '{}' enables no source", spec));
    return cfg;
}

/// The five source combinations compared for paper ranking.
inline std::vector<GraphConfig> standard_configs() {
    return {
        {true, {}},
        {false, {std::string(kDomainScience)}},
        {false, {std::string(kDomainCost)}},
        {false, {std::string(kDomainCost), std::string(kDomainScience)}},
        {true, {std::string(kDomainCost), std::string(kDomainScience)}},
    };
}

inline std::string citation_bucket(std::int64_t citations) {
    if (citations <= 0) return "0";
    if (citations < 10) return "1-9";
    return "10+";
}

class KnowledgeGraph {
public:
    GraphConfig config;
    std::vector<Node> nodes;
    std::vector<Edge> edges; // sorted by (from, to)

    std::size_t size() const { return nodes.size(); }

    const Node* find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &nodes[it->second];
    }

    std::size_t index_of(const std::string& id) const { return index_.at(id); }

    std::vector<std::size_t> out_degree() const {
        std::vector<std::size_t> deg(nodes.size(), 0);
        for (const auto& e : edges) ++deg[e.from];
        return deg;
    }

    /// Builds node/edge vectors from id-keyed maps; both come out sorted by id.
    static KnowledgeGraph assemble(GraphConfig config, const std::map<std::string, Node>& nodes,
                                   const std::map<std::pair<std::string, std::string>, std::size_t>& edges) {
        KnowledgeGraph g;
        g.config = std::move(config);
        for (const auto& [id, node] : nodes) {
            g.index_.emplace(id, g.nodes.size());
            g.nodes.push_back(node);
        }
        for (const auto& [key, count] : edges) g.edges.push_back({g.index_.at(key.first), g.index_.at(key.second), count});
        std::sort(g.edges.begin(), g.edges.end(),
                  [](const Edge& a, const Edge& b) { return std::pair{a.from, a.to} < std::pair{b.from, b.to}; });
        return g;
    }

private:
    std::unordered_map<std::string, std::size_t> index_;
};

inline std::string paper_node_id(const std::string& doc_id) { return "paper:" + doc_id; }

/// One PAPER node per document; metadata nodes (year, authors, venue, citation
/// bucket) when enabled; one ENTITY node per distinct canonical per enabled
/// ontology, pointing at every paper that mentions it.
inline KnowledgeGraph build_graph(const corpus::Corpus& docs, const extract::MentionSet& mentions,
                                  const GraphConfig& config) {
    if (config.empty()) throw ConfigError("graph config enables no source");
    for (const auto& o : config.ontologies) {
        if (!mentions.ontologies.contains(o)) {
            throw ConfigError(fmt::format("ontology '{}' was not used for extraction", o));
        }
    }

    std::map<std::string, Node> nodes;
    std::map<std::pair<std::string, std::string>, std::size_t> edges;
    std::set<std::string> doc_ids;

    auto link = [&](const std::string& from_id, NodeKind kind, const std::string& label, const std::string& paper) {
        nodes.try_emplace(from_id, Node{from_id, kind, label});
        ++edges[{from_id, paper}];
    };

    for (const auto& doc : docs) {
        const auto pid = paper_node_id(doc.id);
        doc_ids.insert(doc.id);
        nodes.try_emplace(pid, Node{pid, NodeKind::Paper, doc.title});
        if (!config.use_metadata) continue;

        auto meta = [&](const std::string& field, const std::string& value) {
            if (value.empty()) return;
            const auto label = field + ":" + value;
            link("meta:" + label, NodeKind::MetaValue, label, pid);
        };
        meta("year", std::to_string(doc.year));
        for (const auto& a : std::set<std::string>(doc.authors.begin(), doc.authors.end())) meta("author", a);
        meta("venue", doc.venue);
        meta("citations-bucket", citation_bucket(doc.citation_count));
    }

    const std::set<std::string> enabled(config.ontologies.begin(), config.ontologies.end());
    for (const auto& m : mentions.mentions) {
        if (m.source != extract::Source::Gazetteer || !enabled.contains(m.ontology)) continue;
        if (!doc_ids.contains(m.doc_id)) {
            throw ConfigError(fmt::format("mention refers to unknown document '{}'", m.doc_id));
        }
        link("entity:" + m.ontology + ":" + m.canonical, NodeKind::Entity, m.canonical, paper_node_id(m.doc_id));
    }
    return KnowledgeGraph::assemble(config, nodes, edges);
}

struct PaperScore {
    std::string doc_id;
    std::string title;
    double score = 0.0;
};

struct ScoreTable {
    GraphConfig config;
    double gamma = 0.85;
    std::size_t iterations = 0;
    std::vector<double> node_scores; // aligned with the graph's nodes
    std::vector<PaperScore> papers;  // in node order

    std::map<std::string, double> scores() const {
        std::map<std::string, double> out;
        for (const auto& p : papers) out.emplace(p.doc_id, p.score);
        return out;
    }
};

/// Power iteration of PR(v) = (1 - gamma)/N + gamma * sum_{u->v} PR(u)/outdeg(u)
/// from the uniform vector until the L-infinity change is <= tol. Mass reaching
/// sinks is not redistributed.
inline ScoreTable pagerank(const KnowledgeGraph& g, double gamma = 0.85, double tol = 1e-10,
                           std::size_t max_iter = 1000) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError(fmt::format("gamma must be in (0, 1), got {}", gamma));
    if (!(tol > 0.0)) throw DomainError("tol must be > 0");

    ScoreTable table;
    table.config = g.config;
    table.gamma = gamma;
    const std::size_t n = g.size();
    if (n == 0) return table;

    const auto deg = g.out_degree();
    const double teleport = (1.0 - gamma) / static_cast<double>(n);
    std::vector<double> pr(n, 1.0 / static_cast<double>(n)), next(n);

    double delta = 0.0;
    bool converged = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (const auto& e : g.edges) next[e.to] += pr[e.from] / static_cast<double>(deg[e.from]);
        delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            next[v] = teleport + gamma * next[v];
            delta = std::max(delta, std::abs(next[v] - pr[v]));
        }
        std::swap(pr, next);
        table.iterations = it + 1;
        if (delta <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError(fmt::format("pagerank did not converge in {} iterations (change {})", max_iter, delta),
                               pr, delta);
    }

    table.node_scores = pr;
    for (std::size_t v = 0; v < n; ++v) {
        const auto& node = g.nodes[v];
        if (node.kind == NodeKind::Paper) table.papers.push_back({node.id.substr(6), node.label, pr[v]});
    }
    return table;
}

/// Descending score, ties by ascending title then id.
inline std::vector<PaperScore> rank_papers(const ScoreTable& table) {
    auto out = table.papers;
    std::sort(out.begin(), out.end(), [](const PaperScore& a, const PaperScore& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.title != b.title) return a.title < b.title;
        return a.doc_id < b.doc_id;
    });
    return out;
}

struct SweepResult {
    GraphConfig config;
    KnowledgeGraph graph;
    ScoreTable table;
    std::vector<PaperScore> ranking;
};

inline std::vector<SweepResult> config_sweep(const corpus::Corpus& docs, const extract::MentionSet& mentions,
                                             const std::vector<GraphConfig>& configs, double gamma = 0.85,
                                             double tol = 1e-10) {
    std::vector<SweepResult> out;
    for (const auto& cfg : configs) {
        auto graph = build_graph(docs, mentions, cfg);
        auto table = pagerank(graph, gamma, tol);
        auto ranking = rank_papers(table);
        out.push_back({cfg, std::move(graph), std::move(table), std::move(ranking)});
    }
    return out;
}

inline nlohmann::json node_json(const Node& n) {
    return {{"id", n.id}, {"kind", to_string(n.kind)}, {"label", n.label}};
}

inline nlohmann::json edge_json(const KnowledgeGraph& g, const Edge& e) {
    return {{"from", g.nodes[e.from].id}, {"to", g.nodes[e.to].id}, {"weight", Edge::weight},
            {"count", e.display_count}};
}

/// Line-delimited node and edge records.
inline std::string export_records(const KnowledgeGraph& g) {
    std::ostringstream out;
    for (const auto& n : g.nodes) {
        auto j = node_json(n);
        j["type"] = "node";
        out << j.dump() << '\n';
    }
    for (const auto& e : g.edges) {
        auto j = edge_json(g, e);
        j["type"] = "edge";
        out << j.dump() << '\n';
    }
    return out.str();
}

inline nlohmann::json to_json(const KnowledgeGraph& g) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : g.nodes) nodes.push_back(node_json(n));
    auto edges = nlohmann::json::array();
    for (const auto& e : g.edges) edges.push_back(edge_json(g, e));
    return {{"config", g.config.name()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

inline nlohmann::json to_json(const std::vector<PaperScore>& ranking) {
    auto out = nlohmann::json::array();
    for (const auto& p : ranking) out.push_back({{"id", p.doc_id}, {"title", p.title}, {"score", p.score}});
    return out;
}

} // namespace h2lit::kg
