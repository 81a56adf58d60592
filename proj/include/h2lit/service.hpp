#pragma once

// Versioned corpus snapshots and the request handlers of the HTTP API.
//
// Handlers are pure reads of one snapshot. POST /ontology validates its body
// synchronously and queues a rebuild; a single worker builds the new snapshot
// off to the side and swaps it in under the lock, so readers always see
// either the old or the new version, never a partial one.

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "h2lit/corpus.hpp"
#include "h2lit/costsim.hpp"
#include "h2lit/error.hpp"
#include "h2lit/extract.hpp"
#include "h2lit/kgraph.hpp"
#include "h2lit/ontology.hpp"
#include "h2lit/search.hpp"
#include "h2lit/text.hpp"
#include "h2lit/topics.hpp"

namespace h2lit::service {

struct TopicSettings {
    bool enabled = true;
    std::size_t k_min = 2;
    std::size_t k_max = 8;
    std::size_t iterations = 200;
    std::uint64_t seed = 1;
};

/// Everything a snapshot is derived from.
struct SnapshotInputs {
    corpus::Corpus corpus;
    text::Pipeline pipeline;
    std::map<std::string, ontology::Ontology> ontologies; // by name
    std::set<std::string> organizations = extract::default_organizations();
    cost::CostModel cost_model = cost::default_model();
    TopicSettings topics;
    double gamma = 0.85;
    double lambda = 1.0;
};

struct Snapshot {
    std::uint64_t version = 0;
    SnapshotInputs inputs; // corpus preprocessed
    extract::MentionSet mentions;
    search::Index index;
    std::map<std::string, kg::SweepResult> graphs; // by config name
    std::string search_config;                     // graph used for search subgraphs and blending
    std::map<topics::Granularity, topics::TopicSweep> topics;
    std::vector<std::string> warnings;

    const kg::SweepResult* graph(const std::string& config_name) const {
        auto it = graphs.find(config_name);
        return it == graphs.end() ? nullptr : &it->second;
    }

    search::SearchContext search_context(const kg::KnowledgeGraph* g = nullptr) const {
        search::SearchContext ctx{inputs.corpus, inputs.pipeline, index, mentions};
        const auto* sweep = graph(search_config);
        ctx.graph = g ? g : (sweep ? &sweep->graph : nullptr);
        ctx.rank.lambda = inputs.lambda;
        if (sweep) ctx.rank.pagerank = sweep->table.scores();
        return ctx;
    }
};

/// Every source combination whose ontologies are loaded, keyed by config name.
inline std::vector<kg::GraphConfig> available_configs(const std::map<std::string, ontology::Ontology>& ontologies) {
    std::vector<std::string> known;
    for (auto name : {kg::kDomainCost, kg::kDomainScience}) {
        if (ontologies.contains(std::string(name))) known.emplace_back(name);
    }
    std::vector<kg::GraphConfig> out;
    for (int meta = 0; meta < 2; ++meta) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << known.size()); ++mask) {
            kg::GraphConfig cfg;
            cfg.use_metadata = meta == 1;
            for (std::size_t i = 0; i < known.size(); ++i) {
                if (mask & (std::size_t{1} << i)) cfg.ontologies.push_back(known[i]);
            }
            if (!cfg.empty()) out.push_back(std::move(cfg));
        }
    }
    return out;
}

inline std::shared_ptr<const Snapshot> build_snapshot(SnapshotInputs inputs, std::uint64_t version) {
    auto s = std::make_shared<Snapshot>();
    s->version = version;
    s->inputs = std::move(inputs);
    auto& in = s->inputs;
    corpus::preprocess(in.corpus, in.pipeline);

    std::vector<ontology::Ontology> onts;
    for (const auto& [name, o] : in.ontologies) onts.push_back(o);
    s->mentions = extract::extract_corpus(in.corpus, onts, in.organizations);
    s->index = search::build_index(in.corpus);

    const auto configs = available_configs(in.ontologies);
    for (auto& r : kg::config_sweep(in.corpus, s->mentions, configs, in.gamma)) {
        const auto name = r.config.name();
        s->graphs.emplace(name, std::move(r));
    }
    // The widest configuration is the last one enumerated.
    if (!configs.empty()) s->search_config = configs.back().name();

    if (in.topics.enabled) {
        const auto views = topics::granularity_views(in.corpus);
        s->warnings = views.warnings;
        topics::LdaParams base;
        base.iterations = in.topics.iterations;
        base.seed = in.topics.seed;
        for (auto g : {topics::Granularity::Document, topics::Granularity::Page}) {
            const auto& bags = views.bags(g);
            if (bags.empty()) {
                s->warnings.push_back(fmt::format("no {} bags, topics not fitted", topics::to_string(g)));
                continue;
            }
            s->topics.emplace(g, topics::perplexity_sweep(bags, g, in.topics.k_min, in.topics.k_max, base));
        }
    }
    return s;
}

struct Response {
    int status = 200;
    nlohmann::json body;
};

inline Response api_error(int status, std::string_view code, const std::string& message,
                          nlohmann::json detail = nlohmann::json::object()) {
    return {status, {{"error", {{"code", code}, {"message", message}, {"detail", std::move(detail)}}}}};
}

using Params = std::map<std::string, std::string>;

namespace detail {

inline std::optional<std::string> param(const Params& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end()) return std::nullopt;
    return it->second;
}

inline Response search(const Snapshot& s, const Params& p) {
    const auto q = param(p, "q").value_or("");
    try {
        const auto mode = search::parse_mode(param(p, "mode").value_or("or"));
        const kg::KnowledgeGraph* g = nullptr;
        if (auto cfg = param(p, "config")) {
            const auto* sweep = s.graph(kg::parse_config(*cfg).name());
            if (!sweep) return api_error(400, "INVALID_CONFIG", fmt::format("graph config '{}' is not built", *cfg));
            g = &sweep->graph;
        }
        return {200, search::to_json(search::respond(q, mode, s.search_context(g)))};
    } catch (const QueryError& e) {
        return api_error(400, "BAD_QUERY", e.what(), {{"q", q}});
    } catch (const ConfigError& e) {
        return api_error(400, "INVALID_CONFIG", e.what());
    }
}

inline const kg::SweepResult* resolve_config(const Snapshot& s, const Params& p, Response& err) {
    const auto cfg = param(p, "config");
    if (!cfg) {
        err = api_error(400, "INVALID_CONFIG", "missing config parameter");
        return nullptr;
    }
    try {
        const auto name = kg::parse_config(*cfg).name();
        if (const auto* sweep = s.graph(name)) return sweep;
        err = api_error(400, "INVALID_CONFIG", fmt::format("graph config '{}' is not built", name),
                        {{"config", *cfg}});
    } catch (const ConfigError& e) {
        err = api_error(400, "INVALID_CONFIG", e.what(), {{"config", *cfg}});
    }
    return nullptr;
}

inline Response graph(const Snapshot& s, const Params& p) {
    Response err;
    const auto* sweep = resolve_config(s, p, err);
    if (!sweep) return err;
    const auto q = param(p, "q");
    if (!q) return {200, kg::to_json(sweep->graph)};
    try {
        const auto mode = search::parse_mode(param(p, "mode").value_or("or"));
        const auto ast = search::parse_query(*q, mode, s.inputs.pipeline);
        return {200, kg::to_json(search::induced_subgraph(sweep->graph, search::evaluate(ast, s.index)))};
    } catch (const QueryError& e) {
        return api_error(400, "BAD_QUERY", e.what(), {{"q", *q}});
    }
}

inline Response rank(const Snapshot& s, const Params& p) {
    Response err;
    const auto* sweep = resolve_config(s, p, err);
    if (!sweep) return err;
    return {200,
            {{"config", sweep->config.name()},
             {"gamma", sweep->table.gamma},
             {"iterations", sweep->table.iterations},
             {"papers", kg::to_json(sweep->ranking)}}};
}

inline Response topics(const Snapshot& s, const Params& p) {
    const auto gname = param(p, "granularity").value_or("doc");
    topics::Granularity g;
    if (gname == "doc" || gname == "document") g = topics::Granularity::Document;
    else if (gname == "page") g = topics::Granularity::Page;
    else return api_error(400, "BAD_QUERY", fmt::format("unknown granularity '{}'", gname));

    auto it = s.topics.find(g);
    if (it == s.topics.end()) {
        return api_error(404, "NOT_FOUND", fmt::format("no topic models fitted at {} granularity", gname));
    }
    const auto& sweep = it->second;

    std::size_t k = sweep.elbow ? sweep.elbow : sweep.curve.points.front().first;
    if (auto kp = param(p, "k")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoll(*kp, &used);
            if (used != kp->size() || v < 1) throw std::invalid_argument("k");
            k = static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
            return api_error(400, "BAD_QUERY", fmt::format("k must be a positive integer, got '{}'", *kp));
        }
    }
    const auto* model = sweep.model_for(k);
    if (!model) {
        return api_error(404, "NOT_FOUND", fmt::format("no model fitted for k={}", k),
                         {{"k_min", sweep.curve.points.front().first}, {"k_max", sweep.curve.points.back().first}});
    }

    auto curve = nlohmann::json::array();
    for (const auto& [ck, perp] : sweep.curve.points) curve.push_back({{"k", ck}, {"perplexity", perp}});
    auto table = nlohmann::json::array();
    for (std::size_t t = 0; t < model->topics; ++t) {
        auto words = nlohmann::json::array();
        for (const auto& [term, w] : model->top_words(t, 10)) words.push_back({{"term", term}, {"weight", w}});
        table.push_back({{"topic", t}, {"words", std::move(words)}});
    }
    return {200,
            {{"granularity", topics::to_string(g)},
             {"k", k},
             {"elbow", sweep.elbow ? nlohmann::json(sweep.elbow) : nlohmann::json(nullptr)},
             {"curve", std::move(curve)},
             {"topics", std::move(table)}}};
}

inline Response simulate(const Snapshot& s, const std::string& body) {
    try {
        const auto j = nlohmann::json::parse(body);
        if (!j.is_object()) return api_error(400, "INVALID_CONFIG", "scenario must be a JSON object");
        auto model = s.inputs.cost_model;
        if (j.contains("components")) {
            nlohmann::json m{{"baseline_price", model.baseline_price}, {"components", j.at("components")}};
            model = cost::model_from_json(m);
        }
        const auto scenario = cost::scenario_from_json(j, model.baseline_price);
        const auto t = cost::simulate(scenario, model.components);
        auto out = cost::to_json(t);
        out["baseline_price"] = scenario.baseline_price;
        out["horizon"] = scenario.horizon;
        out["lag"] = scenario.lag;
        return {200, std::move(out)};
    } catch (const nlohmann::json::parse_error& e) {
        return api_error(400, "INVALID_CONFIG", fmt::format("body is not JSON: {}", e.what()));
    } catch (const ConfigError& e) {
        return api_error(400, "INVALID_CONFIG", e.what());
    }
}

inline Response model(const Snapshot& s) {
    auto j = cost::to_json(s.inputs.cost_model);
    for (auto& c : j["components"]) c["related_query"] = cost::related_query(s.inputs.cost_model, c["name"]);
    return {200, std::move(j)};
}

} // namespace detail

/// Owns the current snapshot and the rebuild worker.
class Service {
public:
    explicit Service(SnapshotInputs inputs)
        : pending_(inputs), current_(build_snapshot(std::move(inputs), 1)), next_version_(2) {
        worker_ = std::thread([this] { run(); });
    }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    ~Service() {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        worker_.join();
    }

    std::shared_ptr<const Snapshot> snapshot() const {
        std::lock_guard lock(mu_);
        return current_;
    }

    /// Called on the worker with the finished snapshot just before it is
    /// published. Tests use it to hold a rebuild open.
    void set_before_swap(std::function<void(const Snapshot&)> hook) {
        std::lock_guard lock(mu_);
        before_swap_ = std::move(hook);
    }

    /// Blocks until every queued rebuild has finished.
    void wait_idle() {
        std::unique_lock lock(mu_);
        idle_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
    }

    Response handle(std::string_view method, std::string_view path, const Params& params,
                    const std::string& body = {}) {
        if (method == "POST" && path == "/ontology") return post_ontology(params, body);

        const auto snap = snapshot();
        try {
            if (method == "GET" && path == "/search") return detail::search(*snap, params);
            if (method == "GET" && path == "/graph") return detail::graph(*snap, params);
            if (method == "GET" && path == "/rank") return detail::rank(*snap, params);
            if (method == "GET" && path == "/topics") return detail::topics(*snap, params);
            if (method == "GET" && path == "/model") return detail::model(*snap);
            if (method == "GET" && path == "/version") return version_response(*snap);
            if (method == "POST" && path == "/simulate") return detail::simulate(*snap, body);
        } catch (const std::exception& e) {
            return api_error(500, "BUILD_FAILED", e.what());
        }
        return api_error(404, "NOT_FOUND", fmt::format("no route {} {}", method, path));
    }

private:
    struct Job {
        std::uint64_t version;
        std::string name;
        ontology::Ontology ontology;
    };

    Response version_response(const Snapshot& snap) {
        std::lock_guard lock(mu_);
        nlohmann::json j{{"version", snap.version}, {"pending", queue_.size() + (busy_ ? 1 : 0)}};
        j["last_error"] = last_error_.empty() ? nlohmann::json(nullptr) : nlohmann::json(last_error_);
        return {200, std::move(j)};
    }

    Response post_ontology(const Params& params, const std::string& body) {
        const auto name = detail::param(params, "name").value_or(std::string(kg::kDomainScience));
        if (name != kg::kDomainScience && name != kg::kDomainCost) {
            return api_error(400, "INVALID_CONFIG",
                             fmt::format("ontology name must be '{}' or '{}'", kg::kDomainScience, kg::kDomainCost),
                             {{"name", name}});
        }
        ontology::Ontology o;
        try {
            o = ontology::parse_csv(body, name);
        } catch (const ParseError& e) {
            return api_error(400, "BUILD_FAILED", e.what(), {{"line", e.line()}});
        }
        const auto duplicates = o.duplicate_count;
        std::uint64_t v;
        {
            std::lock_guard lock(mu_);
            v = next_version_++;
            queue_.push_back({v, name, std::move(o)});
        }
        cv_.notify_all();
        auto warnings = nlohmann::json::array();
        if (duplicates) warnings.push_back(fmt::format("{} duplicate triples collapsed", duplicates));
        return {202, {{"version", v}, {"status", "queued"}, {"duplicates", duplicates}, {"warnings", warnings}}};
    }

    void run() {
        std::unique_lock lock(mu_);
        while (true) {
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (stop_) return;
            auto job = std::move(queue_.front());
            queue_.pop_front();
            busy_ = true;
            pending_.ontologies[job.name] = job.ontology;
            auto inputs = pending_;
            auto hook = before_swap_;
            lock.unlock();

            std::shared_ptr<const Snapshot> next;
            std::string error;
            try {
                next = build_snapshot(std::move(inputs), job.version);
                if (hook) hook(*next);
            } catch (const std::exception& e) {
                error = fmt::format("rebuild {} failed: {}", job.version, e.what());
            }

            lock.lock();
            if (next) current_ = std::move(next);
            last_error_ = error;
            busy_ = false;
            idle_cv_.notify_all();
        }
    }

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    SnapshotInputs pending_; // inputs with every queued ontology change applied
    std::shared_ptr<const Snapshot> current_;
    std::uint64_t next_version_;
    std::deque<Job> queue_;
    bool busy_ = false;
    bool stop_ = false;
    std::string last_error_;
    std::function<void(const Snapshot&)> before_swap_;
    std::thread worker_;
};

} // namespace h2lit::service
