#include "privloc/privloc.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "privloc/error.hpp"
#include "privloc/keys.hpp"
#include "privloc/reports.hpp"
#include "privloc/services.hpp"
#include "privloc/system.hpp"

using namespace privloc;
using json = nlohmann::json;

struct privloc_system {
  std::unique_ptr<InProcessSystem> sys;
};

struct privloc_gateway_server {
  std::unique_ptr<GatewayServer> server;
};

struct privloc_backend_server {
  std::unique_ptr<BackendServer> server;
};

namespace {

thread_local std::string last_error;

privloc_status fail(privloc_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

// Runs f, mapping exceptions to status codes.
template <class F>
privloc_status guarded(F&& f) {
  try {
    f();
    return PRIVLOC_OK;
  } catch (const Error& e) {
    return fail(static_cast<privloc_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(PRIVLOC_E_CONFIG, std::string("json: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(PRIVLOC_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PRIVLOC_E_INTERNAL, e.what());
  } catch (...) {
    return fail(PRIVLOC_E_INTERNAL, "unknown failure");
  }
}

json parse_config(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::config, "config: not valid JSON");
  if (!j.is_object()) throw Error(ErrorCode::config, "config: expected an object");
  return j;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* privloc_version(void) { return "0.1.0"; }

const char* privloc_status_name(privloc_status s) {
  if (s == PRIVLOC_OK) return "ok";
  if (s < PRIVLOC_E_INVALID_ARGUMENT || s > PRIVLOC_E_UNAUTHORIZED) return "unknown";
  return error_code_name(static_cast<ErrorCode>(s));
}

const char* privloc_last_error(void) { return last_error.c_str(); }

void privloc_string_free(char* s) { std::free(s); }

privloc_status privloc_keygen(uint32_t lambda_bits, const char* path) {
  return guarded([&] {
    require(path, "path");
    SystemParams p;
    p.lambda = lambda_bits;
    p.validate();
    setup_keys(p, path);
  });
}

// ---- system -----------------------------------------------------------------

privloc_status privloc_system_new(const char* config_json, privloc_system** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const json cfg = parse_config(config_json);
    SystemParams p;
    if (cfg.contains("params")) from_json(cfg.at("params"), p);
    p.validate();
    InProcessOptions opts;
    if (cfg.contains("seed")) opts.seed = cfg.at("seed").get<std::uint64_t>();
    if (cfg.contains("routing")) opts.routing = parse_routing(cfg.at("routing").get<std::string>());
    if (cfg.contains("index")) opts.index = parse_index_kind(cfg.at("index").get<std::string>());
    if (cfg.contains("mode")) {
      const auto m = cfg.at("mode").get<std::string>();
      if (m == "local") opts.mode = BackendMode::local;
      else if (m == "loopback") opts.mode = BackendMode::loopback;
      else throw Error(ErrorCode::config, "mode: expected local or loopback");
    }
    const KeySet keys = cfg.contains("keys") ? load_keys(cfg.at("keys").get<std::string>())
                                             : KeySet::generate(p.lambda);
    auto h = std::make_unique<privloc_system>();
    h->sys = std::make_unique<InProcessSystem>(p, keys, opts);
    *out = h.release();
  });
}

void privloc_system_free(privloc_system* sys) { delete sys; }

privloc_status privloc_system_subscribe(privloc_system* sys, const char* sub_id, int64_t sw_x,
                                        int64_t sw_y, int64_t ne_x, int64_t ne_y,
                                        const char* callback) {
  return guarded([&] {
    require(sys, "sys");
    require(sub_id, "sub_id");
    sys->sys->gateway().subscribe({sub_id, {{sw_x, sw_y}, {ne_x, ne_y}}, callback ? callback : ""});
  });
}

privloc_status privloc_system_unsubscribe(privloc_system* sys, const char* sub_id) {
  return guarded([&] {
    require(sys, "sys");
    require(sub_id, "sub_id");
    sys->sys->gateway().unsubscribe(sub_id);
  });
}

privloc_status privloc_system_publish(privloc_system* sys, const char* node_id, int64_t x0,
                                      int64_t y0, int64_t x1, int64_t y1, int64_t ts,
                                      char** notifications_json) {
  return guarded([&] {
    require(sys, "sys");
    require(node_id, "node_id");
    if (notifications_json) *notifications_json = nullptr;
    const auto notes = sys->sys->gateway().publish({node_id, {x0, y0}, {x1, y1}, ts});
    if (notifications_json) {
      json arr = json::array();
      for (const auto& n : notes) arr.push_back({{"sub_id", n.sub_id}, {"node_id", n.node_id}, {"ts", n.ts}});
      *notifications_json = dup(arr.dump());
    }
  });
}

privloc_status privloc_system_flush(privloc_system* sys, size_t* uploaded) {
  return guarded([&] {
    require(sys, "sys");
    const auto n = sys->sys->gateway().flush();
    if (uploaded) *uploaded = n;
  });
}

privloc_status privloc_system_stats(privloc_system* sys, char** stats_json) {
  return guarded([&] {
    require(sys, "sys");
    require(stats_json, "stats_json");
    const auto s = sys->sys->gateway().stats();
    *stats_json = dup(json{{"queries", s.queries},
                           {"uploads", s.uploads},
                           {"parts_stored", s.parts_stored},
                           {"publishes", s.publishes},
                           {"rejected_publishes", s.rejected_publishes},
                           {"notifications", s.notifications},
                           {"subscriptions", s.subscriptions},
                           {"pending", s.pending}}
                          .dump());
  });
}

// ---- services ---------------------------------------------------------------

privloc_status privloc_gateway_server_new(const char* config_json, privloc_gateway_server** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<privloc_gateway_server>();
    h->server = std::make_unique<GatewayServer>(gateway_config_from_json(parse_config(config_json)));
    *out = h.release();
  });
}

uint16_t privloc_gateway_server_port(const privloc_gateway_server* s) {
  return s ? s->server->port() : 0;
}

privloc_status privloc_gateway_server_start(privloc_gateway_server* s) {
  return guarded([&] {
    require(s, "server");
    s->server->start();
  });
}

void privloc_gateway_server_stop(privloc_gateway_server* s) {
  if (s) guarded([&] { s->server->stop(); });
}

void privloc_gateway_server_free(privloc_gateway_server* s) {
  if (s) guarded([&] { s->server.reset(); });
  delete s;
}

privloc_status privloc_backend_server_new(const char* config_json, privloc_backend_server** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<privloc_backend_server>();
    h->server = std::make_unique<BackendServer>(backend_config_from_json(parse_config(config_json)));
    *out = h.release();
  });
}

uint16_t privloc_backend_server_port(const privloc_backend_server* s) {
  return s ? s->server->port() : 0;
}

privloc_status privloc_backend_server_start(privloc_backend_server* s) {
  return guarded([&] {
    require(s, "server");
    s->server->start();
  });
}

void privloc_backend_server_stop(privloc_backend_server* s) {
  if (s) guarded([&] { s->server->stop(); });
}

void privloc_backend_server_free(privloc_backend_server* s) {
  if (s) guarded([&] { s->server.reset(); });
  delete s;
}

// ---- reports ----------------------------------------------------------------

privloc_status privloc_run_report(const char* kind, const char* request_json, char** result_json) {
  return guarded([&] {
    require(kind, "kind");
    require(result_json, "result_json");
    *result_json = nullptr;
    *result_json = dup(run_report(kind, parse_config(request_json)).dump(2));
  });
}

}  // extern "C"
