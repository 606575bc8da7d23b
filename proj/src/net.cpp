#include "privloc/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <charconv>
#include <cstring>

#include "privloc/error.hpp"

namespace privloc::net {

namespace {

constexpr int kPollMs = 100;

[[noreturn]] void unavailable(const std::string& what) {
  throw Error(ErrorCode::unavailable, what + ": " + std::strerror(errno));
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr)
    throw Error(ErrorCode::unavailable, "cannot resolve '" + host + "': " + gai_strerror(rc));
  sockaddr_in addr;
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view ep) {
  if (ep.starts_with("tcp://")) ep.remove_prefix(6);
  const auto colon = ep.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw Error(ErrorCode::invalid_argument, "endpoint must be host:port, got '" + std::string(ep) + "'");
  unsigned port = 0;
  const auto digits = ep.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port == 0 || port > 65535)
    throw Error(ErrorCode::invalid_argument, "bad port in endpoint '" + std::string(ep) + "'");
  return {std::string(ep.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

// ---- server -----------------------------------------------------------------

LineServer::LineServer(const std::string& host, std::uint16_t port, LineHandler handler,
                       std::size_t max_line)
    : handler_(std::move(handler)), max_line_(max_line) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) unavailable("socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve(host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 512) < 0) {
    const int saved = errno;
    ::close(listen_fd_);
    errno = saved;
    unavailable("cannot listen on " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

LineServer::~LineServer() {
  stop();
  while (acceptor_running_) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void LineServer::start() { acceptor_ = std::thread([this] { accept_loop(); }); }

void LineServer::run() {
  acceptor_running_ = true;
  accept_loop();
  acceptor_running_ = false;
}

void LineServer::stop() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  // run() may still be polling on another thread; it exits within one poll
  // interval and never touches the socket after seeing stopping_.
  if (listen_fd_ >= 0 && !acceptor_running_) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::list<std::pair<int, std::thread>> conns;
  {
    std::lock_guard lock(conns_mu_);
    for (auto& [fd, _] : conns_) ::shutdown(fd, SHUT_RDWR);
    conns.swap(conns_);
  }
  for (auto& [fd, t] : conns)
    if (t.joinable()) t.join();
}

void LineServer::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, kPollMs);
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(conns_mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    conns_.emplace_back(fd, std::thread([this, fd] { serve(fd); }));
  }
}

void LineServer::serve(int fd) {
  std::string buf;
  char chunk[16384];
  bool open = true;
  while (open && !stopping_) {
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, kPollMs);
    if (rc == 0) continue;
    if (rc < 0 && errno == EINTR) continue;
    const ssize_t n = rc < 0 ? -1 : ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buf.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; open && (nl = buf.find('\n', start)) != std::string::npos;
         start = nl + 1) {
      std::string_view line(buf.data() + start, nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      Reply r = handler_(line);
      if (!r.line.empty()) {
        r.line.push_back('\n');
        if (!write_all(fd, r.line)) open = false;
      }
      if (r.close) open = false;
    }
    buf.erase(0, start);
    if (open && buf.size() > max_line_) {
      if (!overflow_reply_.empty()) write_all(fd, overflow_reply_ + "\n");
      open = false;
    }
  }
  ::shutdown(fd, SHUT_RDWR);
  std::lock_guard lock(conns_mu_);
  // Detach our own thread handle unless stop() already took the list.
  for (auto it = conns_.begin(); it != conns_.end(); ++it) {
    if (it->first == fd) {
      it->second.detach();
      conns_.erase(it);
      break;
    }
  }
  ::close(fd);
}

// ---- client -----------------------------------------------------------------

LineConnection::~LineConnection() { close(); }

LineConnection::LineConnection(LineConnection&& o) noexcept
    : fd_(std::exchange(o.fd_, -1)), buf_(std::move(o.buf_)) {}

LineConnection& LineConnection::operator=(LineConnection&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = std::exchange(o.fd_, -1);
    buf_ = std::move(o.buf_);
  }
  return *this;
}

LineConnection LineConnection::connect(const std::string& host, std::uint16_t port,
                                       int timeout_ms) {
  sockaddr_in addr = resolve(host, port);
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0);
  if (fd < 0) unavailable("socket");
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  if (rc < 0 && errno == EINPROGRESS) {
    pollfd p{fd, POLLOUT, 0};
    rc = ::poll(&p, 1, timeout_ms);
    int err = 0;
    socklen_t len = sizeof err;
    if (rc == 1) ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc != 1 || err != 0) {
      errno = rc == 1 ? err : ETIMEDOUT;
      rc = -1;
    } else {
      rc = 0;
    }
  }
  if (rc < 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    unavailable("cannot connect to " + host + ":" + std::to_string(port));
  }
  ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) & ~O_NONBLOCK);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  LineConnection c;
  c.fd_ = fd;
  return c;
}

void LineConnection::send_line(std::string_view line) {
  if (fd_ < 0) throw Error(ErrorCode::unavailable, "connection is closed");
  std::string out(line);
  out.push_back('\n');
  if (!write_all(fd_, out)) unavailable("send failed");
}

std::optional<std::string> LineConnection::read_line(int timeout_ms) {
  if (fd_ < 0) throw Error(ErrorCode::unavailable, "connection is closed");
  char chunk[16384];
  for (;;) {
    if (auto nl = buf_.find('\n'); nl != std::string::npos) {
      std::string line = buf_.substr(0, nl);
      buf_.erase(0, nl + 1);
      return line;
    }
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, timeout_ms);
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) throw Error(ErrorCode::unavailable, "timed out waiting for reply");
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EINTR) continue;
      unavailable("recv failed");
    }
    buf_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineConnection::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buf_.clear();
}

}  // namespace privloc::net
