#pragma once

// Newline-delimited TCP plumbing shared by the gateway and backend services.

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

namespace privloc::net {

struct Reply {
  std::string line;     // sent back followed by '\n'; empty means no reply
  bool close = false;   // close the connection after sending
};

using LineHandler = std::function<Reply(std::string_view line)>;

// "tcp://host:port" or "host:port". Throws Error(invalid_argument).
std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint);

// One thread per connection; lines on a connection are handled in order.
class LineServer {
 public:
  // Binds immediately so port conflicts fail fast (Error(unavailable)).
  // port 0 picks an ephemeral port.
  LineServer(const std::string& host, std::uint16_t port, LineHandler handler,
             std::size_t max_line = 1 << 22);
  ~LineServer();
  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  std::uint16_t port() const { return port_; }

  // Reply sent when a client exceeds max_line without a newline; the
  // connection is then closed.
  void set_overflow_reply(std::string line) { overflow_reply_ = std::move(line); }

  void start();  // accept loop on a background thread
  void run();    // accept loop on the calling thread, returns after stop()
  void stop();

 private:
  void accept_loop();
  void serve(int fd);

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  LineHandler handler_;
  std::size_t max_line_;
  std::string overflow_reply_;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> acceptor_running_{false};  // run() in progress
  std::thread acceptor_;
  std::mutex conns_mu_;
  std::list<std::pair<int, std::thread>> conns_;
};

class LineConnection {
 public:
  LineConnection() = default;
  ~LineConnection();
  LineConnection(LineConnection&& o) noexcept;
  LineConnection& operator=(LineConnection&& o) noexcept;

  // Throws Error(unavailable) if the peer cannot be reached.
  static LineConnection connect(const std::string& host, std::uint16_t port,
                                int timeout_ms = 5000);

  bool open() const { return fd_ >= 0; }
  void send_line(std::string_view line);  // appends '\n'
  // nullopt on orderly EOF; throws Error(unavailable) on timeout or reset.
  std::optional<std::string> read_line(int timeout_ms = 30000);
  void close();

 private:
  int fd_ = -1;
  std::string buf_;
};

}  // namespace privloc::net
