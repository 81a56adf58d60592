#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "h2lit/costsim.hpp"
#include "support/oracles.hpp"

using namespace h2lit;

namespace {

std::vector<cost::CostComponent> single(double k = 0.2, double floor = 0.01) {
    return {{"only", 1.0, k, floor, "only"}};
}

cost::CostScenario invest(std::vector<std::tuple<std::string, int, double>> levers, int horizon = 10) {
    cost::CostScenario s;
    s.horizon = horizon;
    for (auto& [c, y, a] : levers) s.investments[{c, y}] += a;
    return s;
}

// Random valid model: shares from normalized positive draws, one zero-share slot.
std::vector<cost::CostComponent> random_components(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 2 + rng() % 5;
    std::vector<cost::CostComponent> out;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = i == 0 ? 0.0 : 0.05 + u(rng);
        out.push_back({"c" + std::to_string(i), w, 0.5 * u(rng), 0.05 + 0.95 * u(rng), "x"});
        total += w;
    }
    for (auto& c : out) c.share /= total;
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < out.size(); ++i) s += out[i].share;
    out.back().share = 1.0 - s;
    return out;
}

cost::CostScenario random_scenario(std::mt19937_64& rng, const std::vector<cost::CostComponent>& comps) {
    std::uniform_real_distribution<double> amount(0.0, 3.0);
    cost::CostScenario s;
    s.horizon = 1 + static_cast<int>(rng() % 15);
    s.lag = static_cast<int>(rng() % 3);
    const auto n = rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
        s.investments[{comps[rng() % comps.size()].name, static_cast<int>(rng() % 12)}] += amount(rng);
    }
    return s;
}

} // namespace

TEST(Model, DefaultSharesAndSplit) {
    const auto m = cost::default_model();
    EXPECT_NO_THROW(cost::validate(m));
    double total = 0.0;
    for (const auto& c : m.components) total += c.share;
    EXPECT_NEAR(total, 1.0, 1e-12);
    ASSERT_NE(m.find("balance-of-plant"), nullptr);
    EXPECT_EQ(m.find("balance-of-plant")->share, 0.55);
    EXPECT_NEAR(1.0 - m.find("balance-of-plant")->share, 0.45, 1e-12);
    EXPECT_EQ(m.baseline_price, 5.0);
}

TEST(Model, JsonRoundTripAndShippedFile) {
    const auto m = cost::default_model();
    const auto back = cost::model_from_json(cost::to_json(m));
    EXPECT_EQ(cost::to_json(back), cost::to_json(m));
    const auto shipped = cost::load_model(oracle::data_path("models/default_model.json"));
    EXPECT_EQ(cost::to_json(shipped), cost::to_json(m));
    EXPECT_THROW(cost::load_model(oracle::data_path("models/does-not-exist.json")), ConfigError);
}

TEST(Model, ValidationErrors) {
    EXPECT_THROW(cost::validate(std::vector<cost::CostComponent>{}), ConfigError);
    EXPECT_THROW(cost::validate(std::vector<cost::CostComponent>{{"a", 0.5, 0.1, 0.5, ""}}), ConfigError);
    EXPECT_THROW(cost::validate(std::vector<cost::CostComponent>{{"a", 1.0, -0.1, 0.5, ""}}), ConfigError);
    EXPECT_THROW(cost::validate(std::vector<cost::CostComponent>{{"a", 1.0, 0.1, 0.0, ""}}), ConfigError);
    EXPECT_THROW(cost::validate(std::vector<cost::CostComponent>{{"a", 1.0, 0.1, 1.5, ""}}), ConfigError);
    EXPECT_THROW(cost::validate(std::vector<cost::CostComponent>{{"a", 0.5, 0.1, 0.5, ""}, {"a", 0.5, 0.1, 0.5, ""}}),
                 ConfigError);
    EXPECT_THROW(cost::validate(std::vector<cost::CostComponent>{{"a", 1.2, 0.1, 0.5, ""}, {"b", -0.2, 0.1, 0.5, ""}}),
                 ConfigError);
    auto m = cost::default_model();
    m.baseline_price = 0.0;
    EXPECT_THROW(cost::validate(m), ConfigError);
    EXPECT_THROW(cost::model_from_json(nlohmann::json::parse(R"({"components":[{"share":1}]})")), ConfigError);

    const auto comps = single();
    EXPECT_THROW(cost::simulate(invest({{"ghost", 0, 1.0}}), comps), ConfigError);
    EXPECT_THROW(cost::simulate(invest({{"only", 0, -1.0}}), comps), ConfigError);
    EXPECT_THROW(cost::simulate(invest({{"only", -1, 1.0}}), comps), ConfigError);
    EXPECT_THROW(cost::simulate(invest({}, 0), comps), ConfigError);
    auto lagged = invest({});
    lagged.lag = -1;
    EXPECT_THROW(cost::simulate(lagged, comps), ConfigError);
}

TEST(Simulate, ZeroInvestmentIsFlat) {
    const auto m = cost::default_model();
    const auto t = cost::simulate(invest({}), m.components);
    ASSERT_EQ(t.prices.size(), 11u);
    for (const auto& [y, p] : t.prices) EXPECT_NEAR(p, 5.0, 1e-12);
    EXPECT_FALSE(t.goal_met_year.has_value());
}

TEST(Simulate, SingleLeverClosedForm) {
    const auto t = cost::simulate(invest({{"only", 0, 1.0}}), single());
    for (const auto& [y, p] : t.prices) EXPECT_NEAR(p, 5.0 * std::exp(-0.2), 1e-9);
    const auto late = cost::simulate(invest({{"only", 3, 1.0}}), single());
    EXPECT_NEAR(late.prices[2].second, 5.0, 1e-12);
    EXPECT_NEAR(late.prices[3].second, 5.0 * std::exp(-0.2), 1e-9);
    auto lagged = invest({{"only", 3, 1.0}});
    lagged.lag = 2;
    const auto l = cost::simulate(lagged, single());
    EXPECT_NEAR(l.prices[4].second, 5.0, 1e-12);
    EXPECT_NEAR(l.prices[5].second, 5.0 * std::exp(-0.2), 1e-9);
    // The floor caps the effect of a huge investment.
    const auto capped = cost::simulate(invest({{"only", 0, 1e6}}), single(0.2, 0.3));
    EXPECT_NEAR(capped.prices[0].second, 1.5, 1e-12);
}

TEST(Simulate, ZeroShareComponentIsInert) {
    std::vector<cost::CostComponent> comps{{"a", 0.6, 0.2, 0.1, ""}, {"b", 0.4, 0.1, 0.1, ""}, {"z", 0.0, 0.9, 0.1, ""}};
    const auto base = invest({{"a", 1, 2.0}, {"b", 0, 1.0}});
    auto more = base;
    more.investments[{"z", 0}] = 100.0;
    const auto x = cost::simulate(base, comps);
    const auto y = cost::simulate(more, comps);
    for (std::size_t i = 0; i < x.prices.size(); ++i) EXPECT_EQ(x.prices[i].second, y.prices[i].second);
}

TEST(Simulate, AllZeroRatesAreFlat) {
    auto comps = cost::default_model().components;
    for (auto& c : comps) c.k = 0.0;
    auto s = invest({{"membrane", 0, 50.0}, {"balance-of-plant", 2, 10.0}});
    for (const auto& [y, p] : cost::simulate(s, comps).prices) EXPECT_NEAR(p, 5.0, 1e-12);
}

TEST(Simulate, MonotoneAndBoundedOnRandomScenarios) {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 100; ++t) {
        const auto comps = random_components(rng);
        ASSERT_NO_THROW(cost::validate(comps));
        const auto s = random_scenario(rng, comps);
        const auto traj = cost::simulate(s, comps);
        ASSERT_EQ(traj.prices.size(), static_cast<std::size_t>(s.horizon) + 1);
        double bound = 0.0;
        for (const auto& c : comps) bound += c.share * c.floor;
        bound *= s.baseline_price;
        for (std::size_t i = 0; i < traj.prices.size(); ++i) {
            EXPECT_GE(traj.prices[i].second, bound - 1e-12);
            EXPECT_LE(traj.prices[i].second, s.baseline_price + 1e-12);
            if (i) {
                EXPECT_LE(traj.prices[i].second, traj.prices[i - 1].second + 1e-12);
            }
        }
        // More money never raises the price.
        auto richer = s;
        richer.investments[{comps[rng() % comps.size()].name, static_cast<int>(rng() % 5)}] += 1.0;
        const auto r = cost::simulate(richer, comps);
        for (std::size_t i = 0; i < r.prices.size(); ++i) EXPECT_LE(r.prices[i].second, traj.prices[i].second + 1e-12);
    }
}

TEST(Simulate, ComponentOrderDoesNotMatter) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
        auto comps = random_components(rng);
        const auto s = random_scenario(rng, comps);
        const auto a = cost::simulate(s, comps);
        std::shuffle(comps.begin(), comps.end(), rng);
        const auto b = cost::simulate(s, comps);
        for (std::size_t i = 0; i < a.prices.size(); ++i) EXPECT_NEAR(a.prices[i].second, b.prices[i].second, 1e-12);
        EXPECT_EQ(a.goal_met_year, b.goal_met_year);
    }
}

TEST(GoalCheck, FirstYearAtOrBelowGoal) {
    // 5 e^{-0.2 * 8.1} = 0.99 < 1, reached only once the year-7 tranche lands.
    const auto t = cost::simulate(invest({{"only", 7, 8.1}}), single());
    ASSERT_TRUE(t.goal_met_year.has_value());
    EXPECT_EQ(*t.goal_met_year, 7);
    EXPECT_EQ(cost::goal_check(t), 7);

    // Landing exactly on the goal counts.
    const auto exact = cost::simulate(invest({{"only", 10, 1e9}}), single(1.0, 0.2));
    EXPECT_EQ(exact.prices[10].second, 1.0);
    EXPECT_EQ(exact.goal_met_year, 10);

    cost::Trajectory manual;
    manual.prices = {{0, 3.0}, {1, 1.0 + 1e-12}, {2, 1.0}};
    EXPECT_EQ(cost::goal_check(manual), 2);
    manual.prices.pop_back();
    EXPECT_FALSE(cost::goal_check(manual).has_value());
}

TEST(Levers, ParseAndScenarioJson) {
    const auto [key, amount] = cost::parse_lever("membrane:3=1.5");
    EXPECT_EQ(key.first, "membrane");
    EXPECT_EQ(key.second, 3);
    EXPECT_EQ(amount, 1.5);
    EXPECT_EQ(cost::parse_lever("a:b:0=2").first.first, "a:b");
    for (const char* bad : {"membrane", "membrane:=1", "membrane:1=", ":1=1", "membrane:x=1", "membrane:1=2z"}) {
        EXPECT_THROW(cost::parse_lever(bad), ConfigError) << bad;
    }
    const auto s = cost::scenario_from_json(
        nlohmann::json::parse(R"({"horizon":4,"investments":[{"component":"m","year":1,"amount":2},
                                                              {"component":"m","year":1,"amount":0.5}]})"),
        7.0);
    EXPECT_EQ(s.baseline_price, 7.0);
    EXPECT_EQ(s.horizon, 4);
    EXPECT_EQ(s.investments.at({"m", 1}), 2.5);
    EXPECT_THROW(cost::scenario_from_json(nlohmann::json::parse(R"({"investments":[{"year":1}]})"), 5.0), ConfigError);

    const auto j = cost::to_json(cost::simulate(invest({{"only", 7, 8.1}}), single()));
    EXPECT_EQ(j["prices"].size(), 11u);
    EXPECT_EQ(j["goal_price"], 1.0);
    EXPECT_EQ(j["goal_met_year"], 7);
    EXPECT_TRUE(cost::to_json(cost::simulate(invest({}), single()))["goal_met_year"].is_null());
}

TEST(Related, EqualsDirectSearch) {
    const text::Pipeline p;
    auto docs = corpus::load_corpus(oracle::data_path("fixtures/ranking_flip.jsonl"));
    corpus::preprocess(docs, p);
    const auto idx = search::build_index(docs);
    extract::MentionSet ms;
    search::SearchContext ctx{docs, p, idx, ms};
    const auto m = cost::default_model();
    std::size_t hits = 0;
    for (const auto& c : m.components) {
        const auto q = search::parse_query(c.query_terms + " cost", search::Mode::And, p);
        const auto direct = search::tfidf_rank(search::evaluate(q, idx), q, idx);
        const auto rel = cost::related_papers(m, c.name, ctx);
        ASSERT_EQ(rel.size(), direct.size()) << c.name;
        for (std::size_t i = 0; i < rel.size(); ++i) {
            EXPECT_EQ(rel[i].doc_id, direct[i].doc_id);
            EXPECT_EQ(rel[i].score, direct[i].score);
        }
        hits += rel.size();
    }
    EXPECT_GT(hits, 0u);
    EXPECT_EQ(cost::related_query(m, "membrane"), "membrane cost");
    EXPECT_THROW(cost::related_papers(m, "unobtainium", ctx), QueryError);
}
