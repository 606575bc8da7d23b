#include <chrono>
#include <latch>
#include <ostream>
#include <thread>

#include "privloc/analysis.hpp"
#include "privloc/error.hpp"
#include "privloc/net.hpp"
#include "privloc/wire.hpp"

namespace privloc {

namespace {

using Clock = std::chrono::steady_clock;

// Issues one client's operations against some target.
class Session {
 public:
  virtual ~Session() = default;
  virtual bool run(const WorkloadEvent& e) = 0;   // false on an error reply
};

class GatewaySession : public Session {
 public:
  explicit GatewaySession(Gateway& gw) : gw_(gw) {}
  bool run(const WorkloadEvent& e) override {
    try {
      if (e.kind == WorkloadEvent::Kind::publish) gw_.publish(e.report);
      else gw_.subscribe(e.subscription);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

 private:
  Gateway& gw_;
};

class TcpSession : public Session {
 public:
  TcpSession(const std::string& host, std::uint16_t port, std::string auth)
      : conn_(net::LineConnection::connect(host, port)), auth_(std::move(auth)) {}

  bool run(const WorkloadEvent& e) override {
    wire::Envelope req;
    req.id = ++next_id_;
    req.auth = auth_;
    if (e.kind == WorkloadEvent::Kind::publish) {
      req.type = std::string(wire::type::publish);
      req.body = wire::to_body(e.report);
    } else {
      req.type = std::string(wire::type::subscribe);
      req.body = wire::to_body(e.subscription);
    }
    return call(req);
  }

  bool call(const wire::Envelope& req) {
    try {
      conn_.send_line(wire::encode(req));
      const auto line = conn_.read_line();
      return line && wire::decode(*line).type == wire::type::ack;
    } catch (const Error&) {
      return false;
    }
  }

  std::int64_t next_id() { return ++next_id_; }

 private:
  net::LineConnection conn_;
  std::string auth_;
  std::int64_t next_id_ = 0;
};

struct RepResult {
  double throughput = 0;
  std::vector<double> latencies_us;
  std::uint64_t errors = 0;
};

RepResult run_rep(const BenchConfig& cfg, const SystemParams& params, std::size_t clients,
                  std::uint64_t seed, const std::string& tag) {
  WorkloadOptions wo;
  wo.clients = clients;
  wo.events = std::max(cfg.ops_per_point, clients);
  wo.ratio = cfg.ratio;
  wo.seed = seed;
  auto events = gen_mixed_workload(wo, params);
  std::vector<std::vector<WorkloadEvent>> per_client(clients);
  for (auto& e : events) {
    if (e.kind == WorkloadEvent::Kind::subscribe) e.subscription.sub_id = tag + e.subscription.sub_id;
    per_client[e.client].push_back(std::move(e));
  }

  std::unique_ptr<InProcessSystem> sys;
  std::vector<std::unique_ptr<Session>> sessions;
  if (cfg.target == "inprocess" || cfg.target == "loopback") {
    InProcessOptions opts;
    opts.mode = cfg.target == "inprocess" ? BackendMode::local : BackendMode::loopback;
    opts.seed = seed;
    sys = std::make_unique<InProcessSystem>(params, simulation_keys(seed, params.lambda), opts);
    for (std::size_t c = 0; c < clients; ++c) sessions.push_back(std::make_unique<GatewaySession>(sys->gateway()));
  } else {
    const auto [host, port] = net::parse_endpoint(cfg.target);
    for (std::size_t c = 0; c < clients; ++c)
      sessions.push_back(std::make_unique<TcpSession>(host, port, cfg.auth));
  }

  std::vector<std::vector<double>> lat(clients);
  std::vector<std::uint64_t> errs(clients, 0);
  std::latch go(static_cast<std::ptrdiff_t>(clients) + 1);
  std::vector<std::thread> threads;
  for (std::size_t c = 0; c < clients; ++c) {
    threads.emplace_back([&, c] {
      lat[c].reserve(per_client[c].size());
      go.arrive_and_wait();
      for (const auto& e : per_client[c]) {
        const auto t0 = Clock::now();
        const bool ok = sessions[c]->run(e);
        lat[c].push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
        errs[c] += !ok;
      }
    });
  }
  const auto start = Clock::now();
  go.arrive_and_wait();
  for (auto& t : threads) t.join();
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();

  // A shared tcp gateway outlives the run; remove what this run added.
  for (std::size_t c = 0; c < clients && !sys; ++c) {
    auto& s = static_cast<TcpSession&>(*sessions[c]);
    for (const auto& e : per_client[c]) {
      if (e.kind != WorkloadEvent::Kind::subscribe) continue;
      wire::Envelope req{std::string(wire::type::unsubscribe), s.next_id(), cfg.auth, wire::to_body(wire::Unsubscribe{e.subscription.sub_id})};
      s.call(req);
    }
  }

  RepResult r;
  for (std::size_t c = 0; c < clients; ++c) {
    r.latencies_us.insert(r.latencies_us.end(), lat[c].begin(), lat[c].end());
    r.errors += errs[c];
  }
  r.throughput = wall > 0 ? r.latencies_us.size() / wall : 0;
  return r;
}

std::string run_tag(std::uint64_t seed, std::size_t clients, std::size_t rep) {
  // Unique per process so repeated runs against one gateway never reuse ids.
  static const auto nonce = Clock::now().time_since_epoch().count();
  return "b" + std::to_string(nonce) + "-" + std::to_string(seed) + "-" +
         std::to_string(clients) + "-" + std::to_string(rep) + "-";
}

}  // namespace

std::vector<BenchPoint> run_bench(const BenchConfig& cfg) {
  if (cfg.repetitions == 0) throw Error(ErrorCode::config, "repetitions: must be >= 1");
  std::vector<BenchPoint> out;
  for (std::size_t clients : cfg.clients) {
    if (clients < 1 || clients > 256) throw Error(ErrorCode::config, "clients: must lie in [1, 256]");
    std::vector<double> tput, mean, p50, p95, p99;
    BenchPoint pt;
    pt.clients = clients;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t seed = derive_seed(cfg.seed, "bench-" + std::to_string(clients) + "-" + std::to_string(rep));
      auto r = run_rep(cfg, cfg.params, clients, seed, run_tag(cfg.seed, clients, rep));
      tput.push_back(r.throughput);
      mean.push_back(summarize(r.latencies_us).mean);
      p50.push_back(percentile(r.latencies_us, 50));
      p95.push_back(percentile(r.latencies_us, 95));
      p99.push_back(percentile(r.latencies_us, 99));
      pt.errors += r.errors;
    }
    pt.throughput = summarize(tput);
    pt.latency_mean_us = summarize(mean);
    pt.p50_us = summarize(p50);
    pt.p95_us = summarize(p95);
    pt.p99_us = summarize(p99);
    out.push_back(pt);
  }
  return out;
}

OverheadReport measure_overhead(const BenchConfig& cfg) {
  const SystemParams null_params =
      SystemParams::null_transform(cfg.params.tile_len, cfg.params.n_x, cfg.params.n_y);
  BenchConfig c = cfg;
  if (c.target != "loopback") c.target = "inprocess";
  std::vector<double> enc, nul;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = derive_seed(cfg.seed, "overhead-" + std::to_string(rep));
    // Same workload, alternating order to spread any drift over both sides.
    const auto tag = run_tag(cfg.seed, 1, rep);
    if (rep % 2 == 0) {
      enc.push_back(summarize(run_rep(c, cfg.params, 1, seed, tag).latencies_us).mean);
      nul.push_back(summarize(run_rep(c, null_params, 1, seed, tag).latencies_us).mean);
    } else {
      nul.push_back(summarize(run_rep(c, null_params, 1, seed, tag).latencies_us).mean);
      enc.push_back(summarize(run_rep(c, cfg.params, 1, seed, tag).latencies_us).mean);
    }
  }
  OverheadReport r;
  r.encrypted_us = summarize(enc);
  r.null_us = summarize(nul);
  r.ratio = r.null_us.mean > 0 ? r.encrypted_us.mean / r.null_us.mean : 0;
  return r;
}

void write_bench_csv(const std::vector<BenchPoint>& points, std::ostream& out) {
  out << "clients,throughput_ops_s,throughput_ci95,latency_mean_us,latency_ci95,"
         "p50_us,p95_us,p99_us,repetitions,errors\n";
  for (const auto& p : points) {
    out << p.clients << ',' << p.throughput.mean << ',' << p.throughput.ci95 << ','
        << p.latency_mean_us.mean << ',' << p.latency_mean_us.ci95 << ',' << p.p50_us.mean << ','
        << p.p95_us.mean << ',' << p.p99_us.mean << ',' << p.throughput.n << ',' << p.errors << '\n';
  }
}

void write_bench_plot(const std::vector<BenchPoint>& points, std::ostream& out) {
  out << "# throughput_ops_s latency_mean_us clients\n";
  for (const auto& p : points)
    out << p.throughput.mean << ' ' << p.latency_mean_us.mean << ' ' << p.clients << '\n';
}

nlohmann::json to_json(const BenchPoint& p) {
  auto s = [](const Summary& x) { return nlohmann::json{{"mean", x.mean}, {"ci95", x.ci95}, {"n", x.n}}; };
  return {{"clients", p.clients},     {"throughput_ops_s", s(p.throughput)},
          {"latency_mean_us", s(p.latency_mean_us)}, {"p50_us", s(p.p50_us)},
          {"p95_us", s(p.p95_us)},    {"p99_us", s(p.p99_us)},
          {"errors", p.errors}};
}

}  // namespace privloc
