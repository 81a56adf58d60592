#pragma once

// Funding-lever cost model: investments in system components lower their cost
// multipliers along an exponential learning curve, bounded below by a floor.
//
//   price(y) = baseline * sum_c share_c * max(floor_c, exp(-k_c * CumInv_c(y - lag)))

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "h2lit/error.hpp"
#include "h2lit/search.hpp"

namespace h2lit::cost {

inline constexpr double kGoalPrice = 1.0; // $/kg
inline constexpr double kShareTolerance = 1e-9;

struct CostComponent {
    std::string name;
    double share = 0.0;       // fraction of system $/kg
    double k = 0.0;           // cost reduction rate per funding unit
    double floor = 1.0;       // minimum multiplier, in (0, 1]
    std::string query_terms;  // literature search words for the component
};

struct CostModel {
    double baseline_price = 5.0; // $/kg
    std::vector<CostComponent> components;

    const CostComponent* find(const std::string& name) const {
        auto it = std::find_if(components.begin(), components.end(),
                               [&](const CostComponent& c) { return c.name == name; });
        return it == components.end() ? nullptr : &*it;
    }
};

/// Balance of plant 55 %, stack 45 % split over its components. Elasticities
/// and floors are illustrative.
inline CostModel default_model() {
    return {5.0,
            {
                {"balance-of-plant", 0.55, 0.08, 0.50, "balance of plant"},
                {"membrane", 0.08, 0.20, 0.40, "membrane"},
                {"platinum-loading", 0.10, 0.25, 0.30, "platinum loading"},
                {"titanium-ptl", 0.08, 0.15, 0.50, "titanium"},
                {"gold-coating", 0.04, 0.30, 0.30, "gold coating"},
                {"bipolar-plate", 0.06, 0.15, 0.50, "bipolar plate"},
                {"balance-of-stack", 0.09, 0.10, 0.60, "stack"},
            }};
}

inline void validate(const std::vector<CostComponent>& components) {
    if (components.empty()) throw ConfigError("cost model has no components");
    std::set<std::string> names;
    double total = 0.0;
    for (const auto& c : components) {
        if (c.name.empty()) throw ConfigError("component with empty name");
        if (!names.insert(c.name).second) throw ConfigError(fmt::format("duplicate component '{}'", c.name));
        if (!std::isfinite(c.share) || c.share < 0.0) {
            throw ConfigError(fmt::format("component '{}': share must be >= 0, got {}", c.name, c.share));
        }
        if (!std::isfinite(c.k) || c.k < 0.0) {
            throw ConfigError(fmt::format("component '{}': k must be >= 0, got {}", c.name, c.k));
        }
        if (!(c.floor > 0.0 && c.floor <= 1.0)) {
            throw ConfigError(fmt::format("component '{}': floor must be in (0, 1], got {}", c.name, c.floor));
        }
        total += c.share;
    }
    if (std::abs(total - 1.0) > kShareTolerance) {
        throw ConfigError(fmt::format("component shares sum to {}, expected 1", total));
    }
}

inline void validate(const CostModel& m) {
    if (!std::isfinite(m.baseline_price) || m.baseline_price <= 0.0) {
        throw ConfigError(fmt::format("baseline_price must be > 0, got {}", m.baseline_price));
    }
    validate(m.components);
}

/// {"baseline_price": 5, "components": [{"name", "share", "k", "floor", "query"?}]}
inline CostModel model_from_json(const nlohmann::json& j) {
    CostModel m;
    try {
        m.baseline_price = j.value("baseline_price", 5.0);
        for (const auto& c : j.at("components")) {
            const auto name = c.at("name").get<std::string>();
            m.components.push_back({name, c.at("share").get<double>(), c.at("k").get<double>(),
                                    c.value("floor", 1.0), c.value("query", name)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("bad cost model: {}", e.what()));
    }
    validate(m);
    return m;
}

inline nlohmann::json to_json(const CostModel& m) {
    auto comps = nlohmann::json::array();
    for (const auto& c : m.components) {
        comps.push_back({{"name", c.name}, {"share", c.share}, {"k", c.k}, {"floor", c.floor}, {"query", c.query_terms}});
    }
    return {{"baseline_price", m.baseline_price}, {"components", std::move(comps)}};
}

inline CostModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open cost model '{}'", path));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path, e.what()));
    }
    return model_from_json(j);
}

struct CostScenario {
    double baseline_price = 5.0;
    int horizon = 10;
    int lag = 0;
    std::map<std::pair<std::string, int>, double> investments; // (component, year) -> funding units
};

struct Trajectory {
    std::vector<std::pair<int, double>> prices; // (year, $/kg), years 0..horizon
    std::optional<int> goal_met_year;
};

inline void validate(const CostScenario& s, const std::vector<CostComponent>& components) {
    validate(components);
    if (!std::isfinite(s.baseline_price) || s.baseline_price <= 0.0) {
        throw ConfigError(fmt::format("baseline_price must be > 0, got {}", s.baseline_price));
    }
    if (s.horizon < 1) throw ConfigError(fmt::format("horizon must be >= 1, got {}", s.horizon));
    if (s.lag < 0) throw ConfigError(fmt::format("lag must be >= 0, got {}", s.lag));
    std::set<std::string> names;
    for (const auto& c : components) names.insert(c.name);
    for (const auto& [key, amount] : s.investments) {
        if (!names.contains(key.first)) throw ConfigError(fmt::format("unknown component '{}'", key.first));
        if (key.second < 0) throw ConfigError(fmt::format("investment year must be >= 0, got {}", key.second));
        if (!std::isfinite(amount) || amount < 0.0) {
            throw ConfigError(fmt::format("funding for '{}' in year {} must be >= 0, got {}", key.first, key.second,
                                          amount));
        }
    }
}

/// First year at or below the goal price.
inline std::optional<int> goal_check(const Trajectory& t, double goal = kGoalPrice) {
    for (const auto& [year, price] : t.prices) {
        if (price <= goal) return year;
    }
    return std::nullopt;
}

inline Trajectory simulate(const CostScenario& s, const std::vector<CostComponent>& components) {
    validate(s, components);
    Trajectory t;
    for (int y = 0; y <= s.horizon; ++y) {
        const int effective = y - s.lag;
        double price = 0.0;
        for (const auto& c : components) {
            double cum = 0.0;
            for (const auto& [key, amount] : s.investments) {
                if (key.first == c.name && key.second <= effective) cum += amount;
            }
            price += c.share * std::max(c.floor, std::exp(-c.k * cum));
        }
        t.prices.emplace_back(y, s.baseline_price * price);
    }
    t.goal_met_year = goal_check(t);
    return t;
}

/// Parses a lever like "membrane:0=1.5" (component:year=amount).
inline std::pair<std::pair<std::string, int>, double> parse_lever(const std::string& lever) {
    const auto colon = lever.rfind(':');
    const auto eq = lever.find('=', colon == std::string::npos ? 0 : colon);
    if (colon == std::string::npos || eq == std::string::npos || colon == 0) {
        throw ConfigError(fmt::format("bad lever '{}', expected component:year=amount", lever));
    }
    try {
        std::size_t used = 0;
        const auto year_text = lever.substr(colon + 1, eq - colon - 1);
        const int year = std::stoi(year_text, &used);
        if (used != year_text.size()) throw std::invalid_argument("year");
        const auto amount_text = lever.substr(eq + 1);
        const double amount = std::stod(amount_text, &used);
        if (used != amount_text.size()) throw std::invalid_argument("amount");
        return {{lever.substr(0, colon), year}, amount};
    } catch (const std::logic_error&) {
        throw ConfigError(fmt::format("bad lever '{}', expected component:year=amount", lever));
    }
}

/// {"baseline_price"?, "horizon"?, "lag"?, "investments": [{"component", "year", "amount"}]}
inline CostScenario scenario_from_json(const nlohmann::json& j, double default_baseline) {
    CostScenario s;
    try {
        s.baseline_price = j.value("baseline_price", default_baseline);
        s.horizon = j.value("horizon", 10);
        s.lag = j.value("lag", 0);
        if (j.contains("investments")) {
            for (const auto& inv : j.at("investments")) {
                s.investments[{inv.at("component").get<std::string>(), inv.at("year").get<int>()}] +=
                    inv.at("amount").get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("bad scenario: {}", e.what()));
    }
    return s;
}

inline nlohmann::json to_json(const Trajectory& t) {
    auto prices = nlohmann::json::array();
    for (const auto& [year, price] : t.prices) prices.push_back({{"year", year}, {"price", price}});
    return {{"prices", std::move(prices)},
            {"goal_price", kGoalPrice},
            {"goal_met_year", t.goal_met_year ? nlohmann::json(*t.goal_met_year) : nlohmann::json(nullptr)}};
}

/// The literature query behind a component: its search words plus "cost", AND mode.
inline std::string related_query(const CostModel& model, const std::string& component) {
    const auto* c = model.find(component);
    if (!c) throw QueryError(fmt::format("unknown component '{}'", component));
    return c->query_terms + " cost";
}

inline std::vector<search::Ranked> related_papers(const CostModel& model, const std::string& component,
                                                  const search::SearchContext& ctx) {
    const auto q = search::parse_query(related_query(model, component), search::Mode::And, ctx.pipeline);
    return search::tfidf_rank(search::evaluate(q, ctx.index), q, ctx.index, ctx.rank);
}

} // namespace h2lit::cost
