// Command-line front end: ingestion, ontology conversion, extraction, topics,
// graph building and ranking, search, cost simulation and the HTTP server.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "h2lit/corpus.hpp"
#include "h2lit/costsim.hpp"
#include "h2lit/error.hpp"
#include "h2lit/extract.hpp"
#include "h2lit/http.hpp"
#include "h2lit/kgraph.hpp"
#include "h2lit/ontology.hpp"
#include "h2lit/search.hpp"
#include "h2lit/service.hpp"
#include "h2lit/text.hpp"
#include "h2lit/topics.hpp"

namespace {

using namespace h2lit;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path));
    out << content;
}

text::Stoplist load_stoplist(const std::string& path) {
    text::Stoplist out;
    std::istringstream in(read_file(path));
    for (std::string w; in >> w;) {
        if (w.front() != '#') out.insert(text::to_lower(w));
    }
    return out;
}

// Shared corpus and ontology options.
struct Inputs {
    std::string corpus;
    std::string stoplist;
    std::vector<std::string> ontologies; // name=path or path

    void add(CLI::App* app, bool with_ontologies = true) {
        app->add_option("--corpus", corpus, "Line-delimited corpus file")->required()->check(CLI::ExistingFile);
        app->add_option("--stoplist", stoplist, "Stop-word file, one word per line")->check(CLI::ExistingFile);
        if (with_ontologies) {
            app->add_option("--ontology", ontologies,
                            "Ontology CSV as name=path or path (default: the shipped domain-science and domain-cost)");
        }
    }

    text::Pipeline pipeline() const {
        text::Pipeline p;
        if (!stoplist.empty()) p.stoplist = load_stoplist(stoplist);
        return p;
    }

    corpus::Corpus load() const {
        auto docs = corpus::load_corpus(corpus);
        corpus::preprocess(docs, pipeline());
        return docs;
    }

    std::map<std::string, ontology::Ontology> load_ontologies() const {
        std::vector<std::string> specs = ontologies;
        if (specs.empty()) {
            for (auto name : {kg::kDomainScience, kg::kDomainCost}) {
                specs.push_back(fmt::format("{}={}/ontologies/{}.csv", name, H2LIT_DATA_DIR, name));
            }
        }
        std::map<std::string, ontology::Ontology> out;
        for (const auto& spec : specs) {
            std::string name, path;
            if (const auto eq = spec.find('='); eq != std::string::npos) {
                name = spec.substr(0, eq);
                path = spec.substr(eq + 1);
            } else {
                path = spec;
                name = std::filesystem::path(spec).stem().string();
            }
            auto o = ontology::parse_csv(read_file(path), name);
            if (o.duplicate_count) std::cerr << fmt::format("{}: {} duplicate triples collapsed\n", path, o.duplicate_count);
            out.insert_or_assign(name, std::move(o));
        }
        return out;
    }

    std::vector<ontology::Ontology> ontology_list() const {
        std::vector<ontology::Ontology> out;
        for (auto& [name, o] : load_ontologies()) out.push_back(o);
        return out;
    }
};

std::pair<std::size_t, std::size_t> parse_k_range(const std::string& s) {
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const auto k = std::stoul(s);
            return {k, k};
        }
        return {std::stoul(s.substr(0, dots)), std::stoul(s.substr(dots + 2))};
    } catch (const std::logic_error&) {
        throw ConfigError(fmt::format("bad K range '{}', expected like 2..12", s));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Literature knowledge-graph engine for hydrogen-production papers"};
    app.require_subcommand(1);

    // ingest
    Inputs ingest_in;
    auto* ingest = app.add_subcommand("ingest", "Load and preprocess a corpus, print a summary");
    ingest_in.add(ingest, false);

    // ontology convert
    auto* ont = app.add_subcommand("ontology", "Ontology tools");
    ont->require_subcommand(1);
    auto* convert = ont->add_subcommand("convert", "Convert an ontology CSV to Turtle or RDF/XML");
    std::string conv_in, conv_format = "ttl", conv_prefix = "http://example.org/h2#", conv_out;
    convert->add_option("--in", conv_in, "Ontology CSV")->required()->check(CLI::ExistingFile);
    convert->add_option("--format", conv_format, "ttl or rdfxml")->check(CLI::IsMember({"ttl", "rdfxml"}));
    convert->add_option("--prefix", conv_prefix, "Namespace IRI");
    convert->add_option("--out", conv_out, "Output file (default stdout)");

    // extract
    Inputs extract_in;
    bool extract_report = false;
    auto* extract_cmd = app.add_subcommand("extract", "Recognize entities; print mentions as JSON lines");
    extract_in.add(extract_cmd);
    extract_cmd->add_flag("--report", extract_report, "Print the corpus-level extraction report instead");

    // topics
    Inputs topics_in;
    std::string k_range = "2..12", granularity = "doc";
    std::uint64_t topic_seed = 1;
    std::size_t topic_iters = 500;
    auto* topics_cmd = app.add_subcommand("topics", "Perplexity sweep over K with elbow selection");
    topics_in.add(topics_cmd, false);
    topics_cmd->add_option("--k-range", k_range, "K range, e.g. 2..12");
    topics_cmd->add_option("--granularity", granularity, "doc or page")->check(CLI::IsMember({"doc", "page"}));
    topics_cmd->add_option("--seed", topic_seed, "Sampler seed");
    topics_cmd->add_option("--iterations", topic_iters, "Gibbs sweeps per model");

    // kg build / kg rank
    auto* kg_cmd = app.add_subcommand("kg", "Knowledge graph tools");
    kg_cmd->require_subcommand(1);
    Inputs kg_build_in, kg_rank_in;
    std::string build_config = "meta,science,cost", rank_config = "meta,science,cost", build_out;
    double gamma = 0.85, tol = 1e-10;
    bool rank_json = false;
    auto* kg_build = kg_cmd->add_subcommand("build", "Build a graph and export node/edge JSON lines");
    kg_build_in.add(kg_build);
    kg_build->add_option("--config", build_config, "Sources: meta, science, cost joined by ','");
    kg_build->add_option("--out", build_out, "Output file (default stdout)");
    auto* kg_rank = kg_cmd->add_subcommand("rank", "Rank papers by PageRank");
    kg_rank_in.add(kg_rank);
    kg_rank->add_option("--config", rank_config, "Sources: meta, science, cost joined by ','");
    kg_rank->add_option("--gamma", gamma, "Damping factor");
    kg_rank->add_option("--tol", tol, "L-infinity stopping tolerance");
    kg_rank->add_flag("--json", rank_json, "Print JSON");

    // search
    Inputs search_in;
    std::string query, mode = "or";
    bool search_json = false;
    auto* search_cmd = app.add_subcommand("search", "Boolean/phrase search");
    search_in.add(search_cmd);
    search_cmd->add_option("--q", query, "Query text")->required();
    search_cmd->add_option("--mode", mode, "or, and or phrase");
    search_cmd->add_flag("--json", search_json, "Print the full response as JSON");

    // simulate
    std::string model_path = std::string(H2LIT_DATA_DIR) + "/models/default_model.json";
    std::vector<std::string> levers;
    int horizon = 10, lag = 0;
    bool sim_json = false;
    auto* sim = app.add_subcommand("simulate", "Cost trajectory under a funding schedule");
    sim->add_option("--config", model_path, "Cost model JSON")->check(CLI::ExistingFile);
    sim->add_option("--invest", levers, "component:year=amount, repeatable");
    sim->add_option("--horizon", horizon, "Years simulated after year 0");
    sim->add_option("--lag", lag, "Years before funding takes effect");
    sim->add_flag("--json", sim_json, "Print JSON");

    // serve
    Inputs serve_in;
    int port = service::port_from_env();
    std::string host = "127.0.0.1";
    std::string serve_k = "2..8";
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve_in.add(serve);
    serve->add_option("--port", port, "Listen port (default $H2LIT_PORT or 8080)");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--k-range", serve_k, "Topic K range fitted at startup");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            const auto docs = ingest_in.load();
            std::size_t pages = 0, tokens = 0, stop = 0;
            for (const auto& d : docs) {
                pages += d.pages.size();
                for (const auto& p : d.pages) {
                    tokens += p.tokens.size();
                    for (const auto& t : p.tokens) stop += t.is_stopword ? 1 : 0;
                }
            }
            nlohmann::json j{{"documents", docs.size()}, {"pages", pages}, {"tokens", tokens}, {"stopwords", stop}};
            std::cout << j.dump(2) << '\n';
        } else if (convert->parsed()) {
            const auto o = ontology::parse_csv(read_file(conv_in), std::filesystem::path(conv_in).stem().string());
            write_output(conv_out, conv_format == "ttl" ? ontology::to_turtle(o, conv_prefix)
                                                         : ontology::to_rdfxml(o, conv_prefix));
        } else if (extract_cmd->parsed()) {
            const auto docs = extract_in.load();
            const auto mentions =
                extract::extract_corpus(docs, extract_in.ontology_list(), extract::default_organizations());
            if (extract_report) {
                std::cout << extract::to_json(extract::extraction_report(mentions.mentions, "corpus")).dump(2) << '\n';
            } else {
                for (const auto& m : mentions.mentions) std::cout << extract::to_json(m).dump() << '\n';
            }
        } else if (topics_cmd->parsed()) {
            const auto docs = topics_in.load();
            const auto [k_min, k_max] = parse_k_range(k_range);
            const auto g = granularity == "doc" ? topics::Granularity::Document : topics::Granularity::Page;
            const auto views = topics::granularity_views(docs);
            for (const auto& w : views.warnings) std::cerr << "warning: " << w << '\n';
            topics::LdaParams base;
            base.seed = topic_seed;
            base.iterations = topic_iters;
            const auto sweep = topics::perplexity_sweep(views.bags(g), g, k_min, k_max, base);
            std::cout << fmt::format("{:>4}  {:>12}\n", "K", "perplexity");
            for (const auto& [k, p] : sweep.curve.points) {
                std::cout << fmt::format("{:>4}  {:>12.4f}{}\n", k, p, k == sweep.elbow ? "  <- elbow" : "");
            }
            const auto k_show = sweep.elbow ? sweep.elbow : k_min;
            const auto* model = sweep.model_for(k_show);
            std::cout << fmt::format("\ntop words at K={}\n", k_show);
            for (std::size_t t = 0; t < model->topics; ++t) {
                std::string words;
                for (const auto& [w, p] : model->top_words(t, 10)) words += (words.empty() ? "" : " ") + w;
                std::cout << fmt::format("{:>3}  {}\n", t, words);
            }
        } else if (kg_build->parsed() || kg_rank->parsed()) {
            const auto& in = kg_build->parsed() ? kg_build_in : kg_rank_in;
            const auto docs = in.load();
            const auto mentions = extract::extract_corpus(docs, in.ontology_list(), extract::default_organizations());
            const auto cfg = kg::parse_config(kg_build->parsed() ? build_config : rank_config);
            const auto g = kg::build_graph(docs, mentions, cfg);
            if (kg_build->parsed()) {
                write_output(build_out, kg::export_records(g));
            } else {
                const auto ranking = kg::rank_papers(kg::pagerank(g, gamma, tol));
                if (rank_json) {
                    std::cout << kg::to_json(ranking).dump(2) << '\n';
                } else {
                    std::size_t i = 0;
                    for (const auto& p : ranking) {
                        std::cout << fmt::format("{:>3}  {:.9f}  {:<8}  {}\n", ++i, p.score, p.doc_id, p.title);
                    }
                }
            }
        } else if (search_cmd->parsed()) {
            const auto docs = search_in.load();
            const auto pipeline = search_in.pipeline();
            const auto mentions =
                extract::extract_corpus(docs, search_in.ontology_list(), extract::default_organizations());
            const auto index = search::build_index(docs);
            kg::GraphConfig cfg{true, {}};
            for (const auto& o : mentions.ontologies) {
                if (o == kg::kDomainScience || o == kg::kDomainCost) cfg.ontologies.push_back(o);
            }
            const auto g = kg::build_graph(docs, mentions, cfg);
            search::SearchContext ctx{docs, pipeline, index, mentions, &g};
            const auto r = search::respond(query, search::parse_mode(mode), ctx);
            if (search_json) {
                std::cout << search::to_json(r).dump(2) << '\n';
            } else {
                std::cout << fmt::format("{} -> {} papers\n", search::to_string(r.ast), r.by_relevancy.size());
                for (const auto& x : r.by_relevancy) {
                    const auto* d = corpus::find(docs, x.doc_id);
                    std::cout << fmt::format("  {:>8.4f}  {:<8}  {} ({})\n", x.score, x.doc_id, d->title, d->year);
                }
            }
        } else if (sim->parsed()) {
            const auto model = cost::load_model(model_path);
            cost::CostScenario s;
            s.baseline_price = model.baseline_price;
            s.horizon = horizon;
            s.lag = lag;
            for (const auto& l : levers) {
                const auto [key, amount] = cost::parse_lever(l);
                s.investments[key] += amount;
            }
            const auto t = cost::simulate(s, model.components);
            if (sim_json) {
                std::cout << cost::to_json(t).dump(2) << '\n';
            } else {
                for (const auto& [year, price] : t.prices) std::cout << fmt::format("{:>4}  {:.4f} $/kg\n", year, price);
                std::cout << (t.goal_met_year ? fmt::format("goal of {} $/kg met in year {}\n", cost::kGoalPrice,
                                                            *t.goal_met_year)
                                              : fmt::format("goal of {} $/kg not met\n", cost::kGoalPrice));
            }
        } else if (serve->parsed()) {
            service::SnapshotInputs inputs;
            inputs.corpus = corpus::load_corpus(serve_in.corpus);
            inputs.pipeline = serve_in.pipeline();
            inputs.ontologies = serve_in.load_ontologies();
            const auto [k_min, k_max] = parse_k_range(serve_k);
            inputs.topics.k_min = k_min;
            inputs.topics.k_max = k_max;
            service::Service svc(std::move(inputs));
            httplib::Server server;
            service::mount(server, svc);
            std::cerr << fmt::format("listening on {}:{} (snapshot version {})\n", host, port,
                                     svc.snapshot()->version);
            if (!server.listen(host, port)) throw Error(fmt::format("cannot listen on {}:{}", host, port));
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
