#pragma once

// HTTP facade over sessions. handle() is the whole routing table and can be
// driven in-process; listen() binds it to a socket.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace hierion::api {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ServerOptions {
  std::size_t page_size = 500;
  // Served under /static when set.
  std::optional<std::filesystem::path> static_dir;
};

class Server {
 public:
  explicit Server(ServerOptions opts = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // `target` is the request path with an optional query string.
  Response handle(const std::string& method, const std::string& target, const std::string& body);

  // Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds to a free port and returns it, or -1.
  int bind_any(const std::string& host);
  // Serves on a socket bound by bind_any; blocks until stop().
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hierion::api
