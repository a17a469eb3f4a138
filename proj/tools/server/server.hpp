#pragma once

#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "cjt/error.hpp"
#include "cjt/manager.hpp"

namespace httplib {
class Server;
}

namespace cjt {

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 binds an ephemeral port.
  int port = 8080;
  /// Directory served at / when set (the built UI bundle).
  std::string static_dir;
  /// Relative CSV paths in posted graph documents resolve here.
  std::string data_dir = ".";
  /// Groups per answer returned over the wire; 0 keeps all.
  std::size_t answer_limit = 0;
};

/// HTTP status for an error code: 404 unknown ids, 409 conflicts, 500
/// internal failures, 400 otherwise.
int http_status(ErrorCode code);
nlohmann::json error_body(ErrorCode code, const std::string& message);

/// JSON facade over a Manager.
class Server {
 public:
  Server(Manager& manager, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and returns the port; throws kIo when binding fails.
  int bind();
  /// Serves until stop(); bind() first.
  void listen();
  /// bind() plus listen() on a background thread.
  int start();
  void stop();

  int port() const { return port_; }

 private:
  void routes();

  Manager& manager_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace cjt
