#pragma once

#include <string>

#include <httplib.h>

#include "mmrl/io.hpp"
#include "mmrl/session.hpp"

namespace mmrl {

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

inline json query_view(const Session& s, const Dataset& dataset) {
    json view = {{"session", s.id()},
                 {"phase", to_string(s.phase())},
                 {"step", s.answered()},
                 {"progress",
                  {{"answered", s.answered()},
                   {"total", s.total()},
                   {"n_active", s.config().n_active},
                   {"n_eval", s.config().n_eval}}}};
    if (s.pending()) {
        json items = json::array();
        for (auto i : s.pending()->items) {
            const auto& t = dataset[i];
            json meta = json::object();
            for (const auto& [k, v] : t.meta) meta[k] = v;
            items.push_back({{"id", t.id}, {"features", t.features}, {"meta", meta}});
        }
        view["query"] = {{"items", items}};
    } else {
        view["query"] = nullptr;
    }
    return view;
}

}  // namespace detail

// HTTP+JSON surface for live ranking sessions:
//   POST /sessions                      create (body: optional session config overrides)
//   GET  /sessions/{id}/query           pending query with trajectory metadata
//   POST /sessions/{id}/response        {"ranking": [ids], "step"?: n}
//   GET  /sessions/{id}/estimate        MLE parameters and held-out log-likelihood
// 404 unknown session, 409 ranking/query mismatch or stale step, 410 session done.
inline void register_routes(httplib::Server& server, SessionStore& store) {
    using detail::send_error;
    using detail::send_json;

    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
        json body = json::object();
        if (!req.body.empty()) {
            body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body must be a JSON object");
        }
        try {
            const auto id = store.create(body);
            auto entry = store.find(id);
            std::lock_guard lock(entry->mutex);
            send_json(res, 201, detail::query_view(*entry->session, store.dataset()));
        } catch (const InvalidInput& e) {
            send_error(res, 400, e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, e.what());
        }
    });

    server.Get("/sessions", [&store](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"sessions", store.ids()}});
    });

    server.Get(R"(/sessions/([^/]+)/query)", [&store](const httplib::Request& req, httplib::Response& res) {
        auto entry = store.find(req.matches[1]);
        if (!entry) return send_error(res, 404, "unknown session");
        std::lock_guard lock(entry->mutex);
        const auto& s = *entry->session;
        if (s.phase() == Phase::done) return send_json(res, 410, detail::query_view(s, store.dataset()));
        send_json(res, 200, detail::query_view(s, store.dataset()));
    });

    server.Post(R"(/sessions/([^/]+)/response)", [&store](const httplib::Request& req, httplib::Response& res) {
        auto entry = store.find(req.matches[1]);
        if (!entry) return send_error(res, 404, "unknown session");
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("ranking") || !body["ranking"].is_array())
            return send_error(res, 400, "body must be {\"ranking\": [ids]}");

        std::lock_guard lock(entry->mutex);
        auto& s = *entry->session;
        if (s.phase() == Phase::done) return send_error(res, 410, "session is done");
        RankingResponse response;
        std::optional<std::size_t> step;
        try {
            for (const auto& id : body["ranking"]) {
                const auto name = id.get<std::string>();
                if (!store.dataset().contains(name)) return send_error(res, 409, "ranking does not match the pending query");
                response.ranking.push_back(store.dataset().index_of(name));
            }
            if (body.contains("step")) step = body["step"].get<std::size_t>();
        } catch (const json::exception&) {
            return send_error(res, 400, "ranking must be a list of trajectory ids");
        }
        switch (store.submit(*entry, response, step)) {
            case SubmitStatus::mismatch:
                return send_error(res, 409, "ranking does not match the pending query");
            case SubmitStatus::done: return send_error(res, 410, "session is done");
            case SubmitStatus::accepted: break;
        }
        json view = detail::query_view(s, store.dataset());
        view["accepted"] = true;
        send_json(res, 200, view);
    });

    server.Get(R"(/sessions/([^/]+)/estimate)", [&store](const httplib::Request& req, httplib::Response& res) {
        auto entry = store.find(req.matches[1]);
        if (!entry) return send_error(res, 404, "unknown session");
        std::lock_guard lock(entry->mutex);
        const auto& s = *entry->session;
        const auto est = s.estimate();
        auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        send_json(res, 200,
                  {{"session", s.id()},
                   {"phase", to_string(s.phase())},
                   {"observations", s.log().size()},
                   {"mle", params_to_json(est.mle)},
                   {"eval_answered", est.eval_answered},
                   {"holdout_loglik", opt(est.holdout_loglik)},
                   {"holdout_loglik_mle", opt(est.holdout_loglik_mle)}});
    });
}

}  // namespace mmrl
