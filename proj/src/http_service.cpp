#include "mdeval/http_service.hpp"

#include <httplib.h>

namespace mdeval {

int http_status_for(Errc code) {
    switch (code) {
        case Errc::UnknownAnnotator:
        case Errc::UnknownTask: return 404;
        case Errc::DuplicateSubmission: return 409;
        case Errc::InvalidDecision: return 422;
        case Errc::ParseError: return 400;
        default: return 500;
    }
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
    reply(res, http_status_for(e.code()), {{"error", errc_name(e.code())}, {"reason", e.what()}});
}

std::vector<std::string> string_list(const json& body, const char* key) {
    if (!body.contains(key)) return {};
    const auto& v = body.at(key);
    if (!v.is_array()) throw Error(Errc::ParseError, std::string(key) + " must be an array");
    std::vector<std::string> out;
    for (const auto& s : v) {
        if (!s.is_string()) throw Error(Errc::ParseError, std::string(key) + " must hold strings");
        out.push_back(s.get<std::string>());
    }
    return out;
}

}  // namespace

HttpService::HttpService(SessionService& service, HttpServiceConfig config)
    : service_(service), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpService::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

void HttpService::run() { server_->listen_after_bind(); }

void HttpService::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

void HttpService::install_routes() {
    auto& srv = *server_;
    const std::string token = config_.token;
    srv.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
        if (token.empty() || req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("X-Experiment-Token") == token) return httplib::Server::HandlerResponse::Unhandled;
        reply(res, 401, {{"error", "Unauthorized"}});
        return httplib::Server::HandlerResponse::Handled;
    });

    srv.Get("/api/config", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, {{"title", config_.title}, {"closed", service_.closed()}});
    });

    srv.Get("/api/universe", [this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& t : service_.universe().tickers()) list.push_back({{"code", t.code}, {"name", t.name}});
        reply(res, 200, list);
    });

    srv.Get(R"(/api/annotators/([^/]+)/next-task)", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto task = service_.next_task(req.matches[1]);
            reply(res, 200, task ? to_json(*task) : json{{"done", true}});
        } catch (const Error& e) {
            reply_error(res, e);
        }
    });

    srv.Post(R"(/api/annotators/([^/]+)/tasks/([^/]+)/decisions)",
             [this](const httplib::Request& req, httplib::Response& res) {
                 try {
                     json body;
                     try {
                         body = json::parse(req.body);
                     } catch (const json::exception&) {
                         throw Error(Errc::ParseError, "body is not JSON");
                     }
                     if (!body.is_object()) throw Error(Errc::ParseError, "body must be an object");
                     std::string remark;
                     if (body.contains("remark")) {
                         if (!body.at("remark").is_string()) throw Error(Errc::ParseError, "remark must be a string");
                         remark = body.at("remark").get<std::string>();
                     }
                     const std::string task_id = req.matches[2];
                     service_.submit(req.matches[1], task_id, string_list(body, "buys"), string_list(body, "sells"),
                                     std::move(remark));
                     reply(res, 200, {{"accepted", true}, {"task_id", task_id}});
                 } catch (const Error& e) {
                     reply_error(res, e);
                 }
             });

    srv.Get(R"(/api/annotators/([^/]+)/progress)", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            reply(res, 200, to_json(service_.progress(req.matches[1])));
        } catch (const Error& e) {
            reply_error(res, e);
        }
    });

    srv.Get("/api/leaderboard", [this](const httplib::Request&, httplib::Response& res) {
        if (!service_.closed()) {
            reply(res, 403, {{"error", "Forbidden"}, {"reason", "leaderboard opens after the experiment closes"}});
            return;
        }
        reply(res, 200, to_json(service_.leaderboard()));
    });

    srv.Post(R"(/api/admin/annotators/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            service_.register_annotator(req.matches[1]);
            reply(res, 200, {{"registered", std::string(req.matches[1])}});
        } catch (const Error& e) {
            reply_error(res, e);
        }
    });

    srv.Post("/api/admin/close", [this](const httplib::Request&, httplib::Response& res) {
        service_.close();
        reply(res, 200, {{"closed", true}});
    });
}

}  // namespace mdeval
