#include "privloc/services.hpp"

#include <cstdlib>

#include "privloc/backend_client.hpp"
#include "privloc/error.hpp"
#include "privloc/keys.hpp"

namespace privloc {

BackendConfig backend_config_from_json(const nlohmann::json& j, bool use_env) {
  BackendConfig c;
  if (!j.is_object() && !j.is_null()) throw Error(ErrorCode::config, "config: expected an object");
  try {
    if (j.is_object() && j.contains("params")) from_json(j.at("params"), c.params);
    if (j.is_object() && j.contains("backend")) {
      const auto& b = j.at("backend");
      if (!b.is_object()) throw Error(ErrorCode::config, "backend: expected an object");
      if (b.contains("host")) c.host = b.at("host").get<std::string>();
      if (b.contains("port")) c.port = b.at("port").get<std::uint16_t>();
      if (b.contains("index")) c.index = parse_index_kind(b.at("index").get<std::string>());
      if (b.contains("data_dir")) c.data_dir = b.at("data_dir").get<std::string>();
      if (b.contains("auth")) c.auth = b.at("auth").get<std::string>();
      if (b.contains("verify")) c.verify = b.at("verify").get<bool>();
      if (b.contains("log_level")) c.log_level = parse_log_level(b.at("log_level").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("backend: ") + e.what());
  }
  if (use_env) {
    if (const char* port = std::getenv("PRIVLOC_PORT")) {
      char* end = nullptr;
      const long v = std::strtol(port, &end, 10);
      if (*port == '\0' || *end != '\0' || v < 0 || v > 65535)
        throw Error(ErrorCode::config, "PRIVLOC_PORT: not a port number");
      c.port = static_cast<std::uint16_t>(v);
    }
  }
  c.params.validate();
  return c;
}

// ---- backend ----------------------------------------------------------------

BackendServer::BackendServer(const BackendConfig& cfg) : cfg_(cfg), log_(cfg.log_level) {
  BackendOptions bo;
  bo.slot_width = cfg.params.ope_range;
  bo.index = cfg.index;
  bo.data_dir = cfg.data_dir;
  bo.auth = cfg.auth;
  bo.verify = cfg.verify;
  service_ = std::make_unique<BackendService>(bo);
  auto* svc = service_.get();
  server_ = std::make_unique<net::LineServer>(cfg.host, cfg.port,
                                              [svc](std::string_view l) { return svc->handle(l); });
  server_->set_overflow_reply(
      wire::encode(wire::make_error(0, error_code_name(ErrorCode::protocol), "line too long")));
}

BackendServer::~BackendServer() { stop(); }

void BackendServer::start() {
  server_->start();
  log_.event(LogLevel::info, "backend_listening",
             {{"port", port()}, {"parts", service_->index().size()}});
}

void BackendServer::stop() {
  if (!server_) return;
  server_->stop();
}

// ---- gateway ----------------------------------------------------------------

GatewayServer::GatewayServer(const GatewayConfig& cfg) : cfg_(cfg), log_(cfg.log_level) {
  const KeySet keys = load_keys(cfg.keys_path);
  Gateway::Backends backends;
  for (std::size_t i = 0; i < kBackends; ++i) {
    const auto [host, port] = net::parse_endpoint(cfg.backends[i]);
    backends[i] = std::make_shared<WireBackend>(tcp_transport(host, port), cfg.backend_auth);
  }
  notifier_ = std::make_shared<TcpNotifier>(&log_);
  GatewayOptions go;
  go.params = cfg.params;
  go.routing = cfg.routing;
  go.auth = cfg.auth;
  go.seed = cfg.seed;
  if (cfg.flush_deadline_ms) go.flush_deadline = std::chrono::milliseconds(*cfg.flush_deadline_ms);
  gateway_ = std::make_unique<Gateway>(go, keys, backends, notifier_, &log_);
  auto* gw = gateway_.get();
  server_ = std::make_unique<net::LineServer>(cfg.host, cfg.port,
                                              [gw](std::string_view l) { return gw->handle(l); });
  server_->set_overflow_reply(
      wire::encode(wire::make_error(0, error_code_name(ErrorCode::protocol), "line too long")));
}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
  server_->start();
  if (cfg_.flush_deadline_ms) ticker_ = std::thread([this] { ticker(); });
  log_.event(LogLevel::info, "gateway_listening", {{"port", port()}});
}

void GatewayServer::ticker() {
  const auto period = std::chrono::milliseconds(std::max<std::int64_t>(10, *cfg_.flush_deadline_ms / 4));
  std::unique_lock lock(mu_);
  while (!cv_.wait_for(lock, period, [this] { return stopping_; })) {
    lock.unlock();
    try {
      gateway_->tick();
    } catch (const Error& e) {
      log_.event(LogLevel::warn, "deadline_flush_failed", {{"code", error_code_name(e.code())}});
    }
    lock.lock();
  }
}

void GatewayServer::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (ticker_.joinable()) ticker_.join();
  server_->stop();
  try {
    const auto n = gateway_->flush();
    if (n > 0) log_.event(LogLevel::info, "shutdown_flush", {{"uploaded", n}});
  } catch (const Error& e) {
    log_.event(LogLevel::error, "shutdown_flush_failed", {{"code", error_code_name(e.code())}});
  }
  notifier_->drain();
}

}  // namespace privloc
