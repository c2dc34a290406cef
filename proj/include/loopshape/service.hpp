#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "loopshape/session.hpp"

namespace httplib {
class Server;
}

namespace loopshape::service {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Sessions keyed by id. Each entry carries its own lock; the revision
/// counts committed mutations.
class SessionStore {
 public:
  struct Entry {
    std::mutex mu;
    session::Session doc;
    std::uint64_t revision = 0;
  };

  std::string create(session::Session doc);
  std::shared_ptr<Entry> find(const std::string& id) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
  std::uint64_t next_id_ = 1;
};

/// Routes /api/v1 requests. Pure function of (store state, request); usable
/// without a socket.
class Api {
 public:
  Response handle(const Request& req);
  SessionStore& store() { return store_; }

 private:
  SessionStore store_;
};

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8731;
};

/// LOOPSHAPE_BIND ("host", "host:port" or ":port") over the loopback default.
BindAddress default_bind();
BindAddress parse_bind(const std::string& spec, BindAddress base = {});

/// httplib front end over an Api.
class Server {
 public:
  explicit Server(Api& api);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bind and serve on a background thread. port 0 picks a free port.
  /// Returns the bound port, or -1 on failure.
  int start(const std::string& host, int port);
  /// Bind and serve on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  Api& api_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
};

}  // namespace loopshape::service
