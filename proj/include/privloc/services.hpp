#pragma once

// Long-running TCP services assembled from configuration.

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

#include "privloc/backend.hpp"
#include "privloc/gateway.hpp"
#include "privloc/log.hpp"
#include "privloc/net.hpp"

namespace privloc {

struct BackendConfig {
  SystemParams params;   // slot width is params.ope_range
  std::string host = "127.0.0.1";
  std::uint16_t port = 7401;
  IndexKind index = IndexKind::grid;
  std::string data_dir;
  std::string auth;
  bool verify = false;
  LogLevel log_level = LogLevel::info;
};

// Reads "params" and the "backend" object; PRIVLOC_PORT overrides the port.
BackendConfig backend_config_from_json(const nlohmann::json& j, bool use_env = true);

class BackendServer {
 public:
  // Replays data_dir and binds; throws Error(unavailable) on a port conflict.
  explicit BackendServer(const BackendConfig& cfg);
  ~BackendServer();

  std::uint16_t port() const { return server_->port(); }
  BackendService& service() { return *service_; }
  void start();
  void stop();

 private:
  BackendConfig cfg_;
  Logger log_;
  std::unique_ptr<BackendService> service_;
  std::unique_ptr<net::LineServer> server_;
};

class GatewayServer {
 public:
  // Loads keys from cfg.keys_path and binds; backends are dialed lazily.
  explicit GatewayServer(const GatewayConfig& cfg);
  ~GatewayServer();

  std::uint16_t port() const { return server_->port(); }
  Gateway& gateway() { return *gateway_; }
  void start();
  // Stops accepting, uploads pending subscriptions, drains notifications.
  void stop();

 private:
  void ticker();

  GatewayConfig cfg_;
  Logger log_;
  std::shared_ptr<TcpNotifier> notifier_;
  std::unique_ptr<Gateway> gateway_;
  std::unique_ptr<net::LineServer> server_;
  std::thread ticker_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
};

}  // namespace privloc
