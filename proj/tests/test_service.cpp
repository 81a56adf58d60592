#include <chrono>
#include <future>
#include <thread>

#include <gtest/gtest.h>

#include "h2lit/http.hpp"
#include "support/oracles.hpp"

using namespace h2lit;
using service::Params;
using service::Service;

namespace {

service::SnapshotInputs flip_inputs() {
    service::SnapshotInputs in;
    in.corpus = corpus::load_corpus(oracle::data_path("fixtures/ranking_flip.jsonl"));
    for (const char* name : {"domain-science", "domain-cost"}) {
        in.ontologies.emplace(name, ontology::parse_csv(oracle::read_file(oracle::data_path(
                                                            std::string("ontologies/") + name + ".csv")),
                                                        name));
    }
    in.topics.k_min = 1;
    in.topics.k_max = 3;
    in.topics.iterations = 30;
    return in;
}

void expect_error(const service::Response& r, int status, const std::string& code) {
    EXPECT_EQ(r.status, status) << r.body.dump();
    ASSERT_TRUE(r.body.contains("error")) << r.body.dump();
    const auto& e = r.body["error"];
    EXPECT_EQ(e["code"], code);
    EXPECT_TRUE(e["message"].is_string());
    EXPECT_FALSE(e["message"].get<std::string>().empty());
    EXPECT_TRUE(e["detail"].is_object());
}

class ServiceTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() { svc = new Service(flip_inputs()); }
    static void TearDownTestSuite() {
        delete svc;
        svc = nullptr;
    }
    static Service* svc;
};

Service* ServiceTest::svc = nullptr;

} // namespace

TEST_F(ServiceTest, SearchSchema) {
    const auto r = svc->handle("GET", "/search", {{"q", "membrane cost"}, {"mode", "or"}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const auto& j = r.body;
    EXPECT_EQ(j["query"], "membrane cost");
    EXPECT_TRUE(j["parsed"].is_string());
    ASSERT_TRUE(j["by_relevancy"].is_array());
    ASSERT_FALSE(j["by_relevancy"].empty());
    for (const auto& x : j["by_relevancy"]) {
        EXPECT_TRUE(x["id"].is_string());
        EXPECT_TRUE(x["score"].is_number());
    }
    EXPECT_EQ(j["by_date"].size(), j["by_relevancy"].size());
    for (const auto& x : j["by_date"]) {
        EXPECT_TRUE(x["title"].is_string());
        EXPECT_TRUE(x["year"].is_number_integer());
    }
    EXPECT_TRUE(j["entities"].is_object());
    for (const auto& w : j["wordcloud"]) {
        EXPECT_TRUE(w["term"].is_string());
        EXPECT_GE(w["size"].get<int>(), 1);
        EXPECT_LE(w["size"].get<int>(), 40);
    }
    EXPECT_TRUE(j["subgraph"]["nodes"].is_array());
    EXPECT_TRUE(j["subgraph"]["edges"].is_array());
}

TEST_F(ServiceTest, SearchErrors) {
    expect_error(svc->handle("GET", "/search", {{"q", "\"open"}}), 400, "BAD_QUERY");
    expect_error(svc->handle("GET", "/search", {}), 400, "BAD_QUERY");
    expect_error(svc->handle("GET", "/search", {{"q", "stack"}, {"mode", "fuzzy"}}), 400, "BAD_QUERY");
    expect_error(svc->handle("GET", "/search", {{"q", "stack"}, {"config", "nope"}}), 400, "INVALID_CONFIG");
    expect_error(svc->handle("GET", "/nowhere", {}), 404, "NOT_FOUND");
    expect_error(svc->handle("DELETE", "/search", {}), 404, "NOT_FOUND");
}

TEST_F(ServiceTest, GraphAndRank) {
    const auto g = svc->handle("GET", "/graph", {{"config", "meta"}});
    ASSERT_EQ(g.status, 200);
    EXPECT_EQ(g.body["config"], "meta");
    EXPECT_FALSE(g.body["nodes"].empty());
    const auto sub = svc->handle("GET", "/graph", {{"config", "science"}, {"q", "membrane"}});
    ASSERT_EQ(sub.status, 200);
    EXPECT_LE(sub.body["nodes"].size(), svc->handle("GET", "/graph", {{"config", "science"}}).body["nodes"].size());
    expect_error(svc->handle("GET", "/graph", {}), 400, "INVALID_CONFIG");
    expect_error(svc->handle("GET", "/graph", {{"config", "meta"}, {"q", ""}}), 400, "BAD_QUERY");

    const auto meta = svc->handle("GET", "/rank", {{"config", "meta"}});
    const auto sci = svc->handle("GET", "/rank", {{"config", "science"}});
    ASSERT_EQ(meta.status, 200);
    ASSERT_EQ(sci.status, 200);
    EXPECT_EQ(meta.body["gamma"], 0.85);
    EXPECT_GT(meta.body["iterations"].get<int>(), 0);
    ASSERT_EQ(meta.body["papers"].size(), 6u);
    EXPECT_EQ(meta.body["papers"][0]["id"], "A");
    EXPECT_EQ(sci.body["papers"][0]["id"], "B");
    expect_error(svc->handle("GET", "/rank", {{"config", "meta,bogus"}}), 400, "INVALID_CONFIG");
}

TEST_F(ServiceTest, Topics) {
    for (const char* g : {"doc", "page"}) {
        const auto r = svc->handle("GET", "/topics", {{"granularity", g}});
        ASSERT_EQ(r.status, 200) << r.body.dump();
        EXPECT_EQ(r.body["curve"].size(), 3u);
        EXPECT_EQ(r.body["topics"].size(), r.body["k"].get<std::size_t>());
        for (const auto& t : r.body["topics"]) EXPECT_FALSE(t["words"].empty());
    }
    const auto k2 = svc->handle("GET", "/topics", {{"granularity", "page"}, {"k", "2"}});
    ASSERT_EQ(k2.status, 200);
    EXPECT_EQ(k2.body["topics"].size(), 2u);
    expect_error(svc->handle("GET", "/topics", {{"granularity", "chapter"}}), 400, "BAD_QUERY");
    expect_error(svc->handle("GET", "/topics", {{"k", "x"}}), 400, "BAD_QUERY");
    expect_error(svc->handle("GET", "/topics", {{"k", "9"}}), 404, "NOT_FOUND");
}

TEST_F(ServiceTest, SimulateAndModel) {
    const auto r = svc->handle("POST", "/simulate", {},
                               R"({"horizon":5,"investments":[{"component":"membrane","year":0,"amount":1}]})");
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body["prices"].size(), 6u);
    EXPECT_EQ(r.body["goal_price"], 1.0);
    EXPECT_TRUE(r.body["goal_met_year"].is_null());
    EXPECT_LT(r.body["prices"][0]["price"].get<double>(), 5.0);

    const auto custom = svc->handle(
        "POST", "/simulate", {},
        R"({"components":[{"name":"x","share":1,"k":0.2,"floor":0.01}],"investments":[{"component":"x","year":0,"amount":1}]})");
    ASSERT_EQ(custom.status, 200) << custom.body.dump();
    EXPECT_NEAR(custom.body["prices"][3]["price"].get<double>(), 5.0 * std::exp(-0.2), 1e-9);

    expect_error(svc->handle("POST", "/simulate", {}, "{not json"), 400, "INVALID_CONFIG");
    expect_error(svc->handle("POST", "/simulate", {}, R"({"investments":[{"component":"ghost","year":0,"amount":1}]})"),
                 400, "INVALID_CONFIG");
    expect_error(svc->handle("POST", "/simulate", {}, R"({"components":[{"name":"x","share":0.5,"k":0.2,"floor":0.5}]})"),
                 400, "INVALID_CONFIG");

    const auto m = svc->handle("GET", "/model", {});
    ASSERT_EQ(m.status, 200);
    EXPECT_EQ(m.body["baseline_price"], 5.0);
    for (const auto& c : m.body["components"]) EXPECT_TRUE(c["related_query"].is_string());
}

TEST(Service, OntologyUploadErrors) {
    Service svc(flip_inputs());
    const auto bad = svc.handle("POST", "/ontology", {{"name", "domain-science"}}, "a,b,c\nonly,two\n");
    expect_error(bad, 400, "BUILD_FAILED");
    EXPECT_EQ(bad.body["error"]["detail"]["line"], 2);
    expect_error(svc.handle("POST", "/ontology", {{"name", "other"}}, "a,b,c\n"), 400, "INVALID_CONFIG");
    EXPECT_EQ(svc.handle("GET", "/version", {}).body["version"], 1);
}

TEST(Service, RebuildServesOldSnapshotUntilSwap) {
    Service svc(flip_inputs());
    std::promise<void> entered, release;
    auto release_f = release.get_future().share();
    svc.set_before_swap([&](const service::Snapshot&) {
        entered.set_value();
        release_f.wait();
    });
    const auto before = svc.handle("GET", "/search", {{"q", "stack"}}).body;

    const auto up = svc.handle("POST", "/ontology", {{"name", "domain-science"}},
                               "stack,composed of,membrane\nstack,composed of,membrane\nquartz,is a,mineral\n");
    ASSERT_EQ(up.status, 202) << up.body.dump();
    EXPECT_EQ(up.body["version"], 2);
    EXPECT_EQ(up.body["status"], "queued");
    EXPECT_EQ(up.body["duplicates"], 1);
    EXPECT_EQ(up.body["warnings"].size(), 1u);

    ASSERT_EQ(entered.get_future().wait_for(std::chrono::seconds(60)), std::future_status::ready);
    // The new snapshot is built but held: queries still see version 1.
    const auto v = svc.handle("GET", "/version", {}).body;
    EXPECT_EQ(v["version"], 1);
    EXPECT_EQ(v["pending"], 1);
    EXPECT_EQ(svc.handle("GET", "/search", {{"q", "stack"}}).body, before);
    EXPECT_EQ(svc.snapshot()->version, 1u);

    release.set_value();
    svc.wait_idle();
    const auto after = svc.handle("GET", "/version", {}).body;
    EXPECT_EQ(after["version"], 2);
    EXPECT_EQ(after["pending"], 0);
    EXPECT_TRUE(after["last_error"].is_null());
    EXPECT_TRUE(ontology::lexicon(svc.snapshot()->inputs.ontologies.at("domain-science")).contains("quartz"));
}

TEST(Service, QueuedVersionsAreSequential) {
    Service svc(flip_inputs());
    const auto a = svc.handle("POST", "/ontology", {{"name", "domain-cost"}}, "capital cost,part of,cost\n");
    const auto b = svc.handle("POST", "/ontology", {{"name", "domain-cost"}}, "operating cost,part of,cost\n");
    EXPECT_EQ(a.body["version"], 2);
    EXPECT_EQ(b.body["version"], 3);
    svc.wait_idle();
    EXPECT_EQ(svc.snapshot()->version, 3u);
    // Last upload wins for a given name.
    EXPECT_TRUE(ontology::lexicon(svc.snapshot()->inputs.ontologies.at("domain-cost")).contains("operating cost"));
}

TEST(Http, LiveRoundTrip) {
    Service svc(flip_inputs());
    httplib::Server server;
    service::mount(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto r = client.Get("/search?q=membrane&mode=and");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(nlohmann::json::parse(r->body), svc.handle("GET", "/search", {{"q", "membrane"}, {"mode", "and"}}).body);

    r = client.Get("/search?q=%22open");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(nlohmann::json::parse(r->body)["error"]["code"], "BAD_QUERY");

    r = client.Post("/simulate", R"({"horizon":2})", "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(nlohmann::json::parse(r->body)["prices"].size(), 3u);

    r = client.Get("/missing");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(nlohmann::json::parse(r->body)["error"]["code"], "NOT_FOUND");

    server.stop();
    t.join();
}

TEST(Http, PortFromEnvironment) {
    ::unsetenv("H2LIT_PORT");
    EXPECT_EQ(service::port_from_env(), 8080);
    ::setenv("H2LIT_PORT", "9123", 1);
    EXPECT_EQ(service::port_from_env(), 9123);
    ::setenv("H2LIT_PORT", "junk", 1);
    EXPECT_EQ(service::port_from_env(), 8080);
    ::unsetenv("H2LIT_PORT");
}
