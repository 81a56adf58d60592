#pragma once

// httplib binding of Service::handle.

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "h2lit/service.hpp"

namespace h2lit::service {

inline constexpr int kDefaultPort = 8080;

/// H2LIT_PORT when set and valid, otherwise `fallback`.
inline int port_from_env(int fallback = kDefaultPort) {
    if (const char* v = std::getenv("H2LIT_PORT")) {
        try {
            const int p = std::stoi(v);
            if (p > 0 && p < 65536) return p;
        } catch (const std::logic_error&) {
        }
    }
    return fallback;
}

inline void mount(httplib::Server& server, Service& service) {
    auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
        Params params;
        for (const auto& [k, v] : req.params) params.emplace(k, v);
        const auto r = service.handle(req.method, req.path, params, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
        res.set_header("Access-Control-Allow-Origin", "*");
    };
    for (const char* path : {"/search", "/graph", "/rank", "/topics", "/version", "/model"}) server.Get(path, dispatch);
    for (const char* path : {"/ontology", "/simulate"}) server.Post(path, dispatch);
    // Unrouted requests still answer with an error payload.
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        const auto code = res.status == 404 ? "NOT_FOUND" : "BAD_QUERY";
        res.set_content(api_error(res.status, code, fmt::format("{} {}", req.method, req.path)).body.dump(),
                        "application/json");
    });
}

} // namespace h2lit::service
