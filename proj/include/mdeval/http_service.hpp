#pragma once

#include <memory>
#include <string>

#include "mdeval/session_service.hpp"

namespace httplib {
class Server;
}

namespace mdeval {

struct HttpServiceConfig {
    std::string title = "Market digest decision study";
    std::string token;  // when set, every /api request needs X-Experiment-Token
};

// JSON-over-HTTP front end for a SessionService:
//   GET  /api/config
//   GET  /api/universe
//   GET  /api/annotators/{id}/next-task
//   POST /api/annotators/{id}/tasks/{task_id}/decisions
//   GET  /api/annotators/{id}/progress
//   GET  /api/leaderboard                 (403 until closed)
//   POST /api/admin/annotators/{id}       (register)
//   POST /api/admin/close
class HttpService {
public:
    HttpService(SessionService& service, HttpServiceConfig config);
    ~HttpService();

    // Binds an ephemeral port on `host` and returns it; then call run().
    int bind_any_port(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    // Blocks until stop().
    void run();
    void stop();

private:
    void install_routes();

    SessionService& service_;
    HttpServiceConfig config_;
    std::unique_ptr<httplib::Server> server_;
};

// HTTP status for a service error.
int http_status_for(Errc code);

}  // namespace mdeval
