// privloc: command-line front end over the C API.

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <pthread.h>
#include <string>
#include <vector>

#include "privloc/privloc.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Failure {
  privloc_status status;
  std::string message;
};

void check(privloc_status s) {
  if (s != PRIVLOC_OK) throw Failure{s, privloc_last_error()};
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Failure{PRIVLOC_E_CONFIG, "config: cannot read " + path};
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Failure{PRIVLOC_E_CONFIG, "config: " + path + " is not a JSON object"};
  return j;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw Failure{PRIVLOC_E_IO, "cannot write " + path.string()};
}

json run_report(const std::string& kind, const json& request) {
  char* out = nullptr;
  check(privloc_run_report(kind.c_str(), request.dump().c_str(), &out));
  json j = json::parse(out);
  privloc_string_free(out);
  return j;
}

// Blocks SIGINT/SIGTERM on every thread started after this call and waits
// for one of them.
class SignalWaiter {
 public:
  SignalWaiter() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, nullptr);
  }
  int wait() {
    int sig = 0;
    sigwait(&set_, &sig);
    return sig;
  }

 private:
  sigset_t set_;
};

// A flag value only when it was given on the command line.
template <class T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;
  bool given() const { return opt && opt->count() > 0; }
};

template <class T>
void overlay(json& j, const char* key, const Flag<T>& f) {
  if (f.given()) j[key] = f.value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privloc: location-private geofencing gateway, backends and analysis tools"};
  app.require_subcommand(1);

  std::string config_path;
  if (const char* env = std::getenv("PRIVLOC_CONFIG")) config_path = env;
  app.add_option("--config", config_path, "JSON config file (default: $PRIVLOC_CONFIG)");
  Flag<std::uint64_t> seed;
  seed.opt = app.add_option("--seed", seed.value, "Seed for workload and simulation randomness");
  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for report files");

  // keygen
  auto* keygen = app.add_subcommand("keygen", "Write three fresh keys as hex lines");
  std::uint32_t lambda = 128;
  std::string key_out;
  keygen->add_option("--lambda", lambda, "Key length in bits");
  keygen->add_option("--out", key_out, "Key file (default: $PRIVLOC_KEYS or keys.hex)");

  // gateway
  auto* gateway = app.add_subcommand("gateway", "Run the trusted gateway until SIGINT/SIGTERM");
  Flag<std::string> gw_host, gw_keys, gw_auth, gw_backend_auth, gw_routing, gw_log;
  Flag<int> gw_port;
  Flag<std::int64_t> gw_deadline;
  Flag<std::vector<std::string>> gw_backends;
  gw_host.opt = gateway->add_option("--host", gw_host.value, "Listen address");
  gw_port.opt = gateway->add_option("--port", gw_port.value, "Listen port")->check(CLI::Range(0, 65535));
  gw_keys.opt = gateway->add_option("--keys", gw_keys.value, "Key file");
  gw_backends.opt = gateway->add_option("--backends", gw_backends.value, "Three backend endpoints tcp://host:port")
                        ->expected(3)
                        ->delimiter(',');
  gw_auth.opt = gateway->add_option("--auth", gw_auth.value, "Client bearer token");
  gw_backend_auth.opt = gateway->add_option("--backend-auth", gw_backend_auth.value, "Token sent to backends");
  gw_deadline.opt = gateway->add_option("--flush-deadline-ms", gw_deadline.value, "Upload pending subscriptions after this long");
  gw_routing.opt = gateway->add_option("--routing", gw_routing.value, "balanced or first_fit");
  gw_log.opt = gateway->add_option("--log-level", gw_log.value, "debug, info, warn, error or off");

  // backend
  auto* backend = app.add_subcommand("backend", "Run one untrusted backend until SIGINT/SIGTERM");
  Flag<std::string> bk_host, bk_index, bk_data, bk_auth, bk_log;
  Flag<int> bk_port;
  Flag<bool> bk_verify;
  bk_host.opt = backend->add_option("--host", bk_host.value, "Listen address");
  bk_port.opt = backend->add_option("--port", bk_port.value, "Listen port")->check(CLI::Range(0, 65535));
  bk_index.opt = backend->add_option("--index", bk_index.value, "grid or rtree");
  bk_data.opt = backend->add_option("--data-dir", bk_data.value, "Append-only log directory");
  bk_auth.opt = backend->add_option("--auth", bk_auth.value, "Expected bearer token");
  bk_verify.opt = backend->add_flag("--verify", bk_verify.value, "Check every query against a linear scan");
  bk_log.opt = backend->add_option("--log-level", bk_log.value, "debug, info, warn, error or off");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a mixed workload as JSON lines");
  Flag<std::size_t> sim_clients, sim_events;
  Flag<std::string> sim_ratio, sim_mode;
  Flag<double> sim_rate;
  std::string sim_out = "workload.jsonl";
  sim_clients.opt = simulate->add_option("--clients", sim_clients.value, "Clients (1..256)");
  sim_events.opt = simulate->add_option("--events", sim_events.value, "Total events");
  sim_ratio.opt = simulate->add_option("--ratio", sim_ratio.value, "publish:subscribe, e.g. 19:1");
  sim_mode.opt = simulate->add_option("--mode", sim_mode.value, "closed or open");
  sim_rate.opt = simulate->add_option("--rate-hz", sim_rate.value, "Open-loop arrival rate per client");
  simulate->add_option("--out", sim_out, "Output file (relative paths go under --out-dir)");

  // bench
  auto* bench = app.add_subcommand("bench", "Closed-loop latency/throughput curves");
  Flag<std::vector<std::size_t>> bn_clients;
  Flag<std::string> bn_ratio, bn_target, bn_auth;
  Flag<std::size_t> bn_reps, bn_ops;
  bn_clients.opt = bench->add_option("--clients", bn_clients.value, "Client counts, e.g. 1,2,4")->delimiter(',');
  bn_ratio.opt = bench->add_option("--ratio", bn_ratio.value, "publish:subscribe");
  bn_reps.opt = bench->add_option("--repetitions", bn_reps.value, "Runs per point");
  bn_ops.opt = bench->add_option("--ops", bn_ops.value, "Operations per run");
  bn_target.opt = bench->add_option("--target", bn_target.value, "inprocess, loopback or tcp://host:port");
  bn_auth.opt = bench->add_option("--auth", bn_auth.value, "Bearer token for a tcp target");

  // priv-game
  auto* game = app.add_subcommand("priv-game", "Trajectory-linking game against one backend transcript");
  Flag<std::size_t> gm_trials, gm_nodes, gm_subs, gm_len, gm_round;
  Flag<std::string> gm_dist;
  bool gm_crippled = false, gm_blind = false;
  gm_trials.opt = game->add_option("--trials", gm_trials.value, "Trials (>= 100)");
  gm_nodes.opt = game->add_option("--nodes", gm_nodes.value, "Simulated nodes");
  gm_subs.opt = game->add_option("--subscriptions", gm_subs.value, "Simulated subscriptions");
  gm_len.opt = game->add_option("--trace-length", gm_len.value, "Challenge length in rounds");
  gm_round.opt = game->add_option("--compromise-round", gm_round.value, "Rounds before compromise");
  gm_dist.opt = game->add_option("--distinguisher", gm_dist.value, "Distinguisher name");
  game->add_flag("--crippled", gm_crippled, "Disable the tile permutation (power check)");
  game->add_flag("--no-compromise", gm_blind, "Adversary observes no backend");

  // blowup
  auto* blowup = app.add_subcommand("blowup", "Parts per subscription across the three tilings");
  Flag<std::size_t> bl_count;
  Flag<double> bl_ratio;
  Flag<std::int64_t> bl_side;
  bl_count.opt = blowup->add_option("--count", bl_count.value, "Subscriptions");
  bl_ratio.opt = blowup->add_option("--side-ratio", bl_ratio.value, "Side as a fraction of tile_len");
  bl_side.opt = blowup->add_option("--side", bl_side.value, "Side in map units (overrides --side-ratio)");

  // fidelity
  auto* fidelity = app.add_subcommand("fidelity", "Encrypted vs plaintext crossing decisions");
  Flag<std::size_t> fd_moves, fd_fences;
  Flag<std::int64_t> fd_side;
  Flag<std::vector<std::string>> fd_modes;
  fd_moves.opt = fidelity->add_option("--moves", fd_moves.value, "Movements");
  fd_fences.opt = fidelity->add_option("--geofences", fd_fences.value, "Geofences");
  fd_side.opt = fidelity->add_option("--side", fd_side.value, "Geofence side");
  fd_modes.opt = fidelity->add_option("--modes", fd_modes.value, "OPE modes, e.g. affine,piecewise")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const json config = load_config(config_path);
    const fs::path outdir(out_dir);
    // Report requests: config-file section, shared params, then flags.
    auto request = [&](const char* section) {
      json r = config.contains(section) ? config.at(section) : json::object();
      if (config.contains("params") && !r.contains("params")) r["params"] = config.at("params");
      if (!seed.given() && config.contains("seed") && !r.contains("seed")) r["seed"] = config.at("seed");
      overlay(r, "seed", seed);
      return r;
    };

    if (*keygen) {
      if (key_out.empty()) {
        const char* env = std::getenv("PRIVLOC_KEYS");
        key_out = env ? env : "keys.hex";
      }
      check(privloc_keygen(lambda, key_out.c_str()));
      std::cout << "wrote 3 keys of " << lambda << " bits to " << key_out << "\n";
    } else if (*gateway) {
      json c = config;
      c.erase("backend");
      overlay(c, "host", gw_host);
      overlay(c, "port", gw_port);
      overlay(c, "keys", gw_keys);
      overlay(c, "backends", gw_backends);
      overlay(c, "auth", gw_auth);
      overlay(c, "backend_auth", gw_backend_auth);
      overlay(c, "flush_deadline_ms", gw_deadline);
      overlay(c, "routing", gw_routing);
      overlay(c, "log_level", gw_log);
      overlay(c, "seed", seed);
      // The library reads these after the JSON; a flag must still win.
      if (gw_port.given()) unsetenv("PRIVLOC_PORT");
      if (gw_keys.given()) unsetenv("PRIVLOC_KEYS");
      SignalWaiter signals;
      privloc_gateway_server* s = nullptr;
      check(privloc_gateway_server_new(c.dump().c_str(), &s));
      check(privloc_gateway_server_start(s));
      std::cout << "gateway listening on port " << privloc_gateway_server_port(s) << std::endl;
      signals.wait();
      privloc_gateway_server_stop(s);
      privloc_gateway_server_free(s);
    } else if (*backend) {
      json c = {{"backend", config.value("backend", json::object())}};
      if (config.contains("params")) c["params"] = config.at("params");
      json& b = c["backend"];
      overlay(b, "host", bk_host);
      overlay(b, "port", bk_port);
      overlay(b, "index", bk_index);
      overlay(b, "data_dir", bk_data);
      overlay(b, "auth", bk_auth);
      overlay(b, "verify", bk_verify);
      overlay(b, "log_level", bk_log);
      if (bk_port.given()) unsetenv("PRIVLOC_PORT");
      SignalWaiter signals;
      privloc_backend_server* s = nullptr;
      check(privloc_backend_server_new(c.dump().c_str(), &s));
      check(privloc_backend_server_start(s));
      std::cout << "backend listening on port " << privloc_backend_server_port(s) << std::endl;
      signals.wait();
      privloc_backend_server_stop(s);
      privloc_backend_server_free(s);
    } else if (*simulate) {
      json r = request("simulate");
      overlay(r, "clients", sim_clients);
      overlay(r, "events", sim_events);
      overlay(r, "ratio", sim_ratio);
      overlay(r, "mode", sim_mode);
      overlay(r, "rate_hz", sim_rate);
      json res = run_report("simulate", r);
      const fs::path path = fs::path(sim_out).is_absolute() ? fs::path(sim_out) : outdir / sim_out;
      write_file(path, res["jsonl"].get<std::string>());
      res.erase("jsonl");
      res["out"] = path.string();
      std::cout << res.dump(2) << "\n";
    } else if (*bench) {
      json r = request("bench");
      overlay(r, "clients", bn_clients);
      overlay(r, "ratio", bn_ratio);
      overlay(r, "repetitions", bn_reps);
      overlay(r, "ops", bn_ops);
      overlay(r, "target", bn_target);
      overlay(r, "auth", bn_auth);
      json res = run_report("bench", r);
      write_file(outdir / "bench.csv", res["csv"].get<std::string>());
      write_file(outdir / "bench_plot.dat", res["plot"].get<std::string>());
      res.erase("csv");
      res.erase("plot");
      write_file(outdir / "bench.json", res.dump(2) + "\n");
      std::cout << "wrote " << (outdir / "bench.csv").string() << ", bench_plot.dat, bench.json\n";
      if (res.contains("overhead"))
        std::cout << "encryption overhead vs null transform: " << res["overhead"]["ratio"] << "x\n";
    } else if (*game) {
      json r = request("priv-game");
      overlay(r, "trials", gm_trials);
      overlay(r, "nodes", gm_nodes);
      overlay(r, "subscriptions", gm_subs);
      overlay(r, "trace_length", gm_len);
      overlay(r, "compromise_round", gm_round);
      overlay(r, "distinguisher", gm_dist);
      if (gm_crippled) r["crippled"] = true;
      if (gm_blind) r["compromise"] = false;
      const json res = run_report("priv-game", r);
      write_file(outdir / "priv_game.json", res.dump(2) + "\n");
      std::cout << res.dump(2) << "\n";
    } else if (*blowup) {
      json r = request("blowup");
      overlay(r, "count", bl_count);
      overlay(r, "side_ratio", bl_ratio);
      overlay(r, "side", bl_side);
      const json res = run_report("blowup", r);
      write_file(outdir / "blowup.json", res.dump(2) + "\n");
      std::cout << res.dump(2) << "\n";
    } else if (*fidelity) {
      json r = request("fidelity");
      overlay(r, "moves", fd_moves);
      overlay(r, "geofences", fd_fences);
      overlay(r, "side", fd_side);
      overlay(r, "modes", fd_modes);
      const json res = run_report("fidelity", r);
      write_file(outdir / "fidelity.json", res.dump(2) + "\n");
      std::cout << res.dump(2) << "\n";
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << privloc_status_name(f.status) << ": " << f.message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
