#include "privloc/reports.hpp"

#include <sstream>

#include "privloc/analysis.hpp"
#include "privloc/error.hpp"

namespace privloc {

namespace {

using json = nlohmann::json;

template <class T>
T opt(const json& req, const char* key, T fallback) {
  if (!req.is_object()) return fallback;
  auto it = req.find(key);
  if (it == req.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::config, std::string(key) + ": wrong type");
  }
}

SystemParams params_of(const json& req) {
  SystemParams p;
  if (req.is_object() && req.contains("params")) from_json(req.at("params"), p);
  p.validate();
  return p;
}

json simulate(const json& req) {
  const SystemParams p = params_of(req);
  WorkloadOptions o;
  o.clients = opt<std::size_t>(req, "clients", 1);
  o.events = opt<std::size_t>(req, "events", 1000);
  o.ratio = parse_ratio(opt<std::string>(req, "ratio", "19:1"));
  const auto mode = opt<std::string>(req, "mode", "closed");
  if (mode != "closed" && mode != "open") throw Error(ErrorCode::config, "mode: expected closed or open");
  o.mode = mode == "open" ? LoopMode::open : LoopMode::closed;
  o.rate_per_client_hz = opt<double>(req, "rate_hz", 100);
  o.max_side = opt<Coord>(req, "max_side", 0);
  o.seed = opt<std::uint64_t>(req, "seed", 1);
  const auto events = gen_mixed_workload(o, p);
  std::ostringstream lines;
  std::size_t subs = 0;
  for (const auto& e : events) {
    lines << event_to_json(e).dump() << '\n';
    subs += e.kind == WorkloadEvent::Kind::subscribe;
  }
  return {{"events", events.size()}, {"subscriptions", subs}, {"clients", o.clients},
          {"mode", mode}, {"seed", o.seed}, {"jsonl", lines.str()}};
}

json blowup(const json& req) {
  const SystemParams p = params_of(req);
  const auto count = opt<std::size_t>(req, "count", 10000);
  Coord side = opt<Coord>(req, "side", -1);
  if (side < 0) side = static_cast<Coord>(std::llround(opt<double>(req, "side_ratio", 0.5) * p.tile_len));
  const auto seed = opt<std::uint64_t>(req, "seed", 1);
  std::vector<Rect> boxes;
  boxes.reserve(count);
  for (const auto& s : gen_subscriptions(count, side, seed, p)) boxes.push_back(s.box);
  json out = to_json(blowup_stats(boxes, p));
  const double e = expected_parts_per_backend(side, p.tile_len);
  out["side"] = side;
  out["expected_per_backend"] = e;
  out["expected_total"] = 3 * e;
  out["seed"] = seed;
  return out;
}

json fidelity(const json& req) {
  SystemParams p = params_of(req);
  const auto seed = opt<std::uint64_t>(req, "seed", 1);
  const auto moves = gen_path("fidelity", opt<std::size_t>(req, "moves", 2000), seed, p);
  const Coord side = opt<Coord>(req, "side", p.tile_len / 2);
  std::vector<Rect> fences;
  for (const auto& s : gen_subscriptions(opt<std::size_t>(req, "geofences", 500), side, seed, p))
    fences.push_back(s.box);
  const auto modes = opt<std::vector<std::string>>(req, "modes", {"affine", "piecewise"});
  const KeySet keys = simulation_keys(seed, p.lambda);
  json reports = json::array();
  for (const auto& m : modes) {
    try {
      p.ope_mode = parse_ope_mode(m);
    } catch (const Error& e) {
      throw Error(ErrorCode::config, std::string("modes: ") + e.what());
    }
    reports.push_back(to_json(fidelity_report(moves, fences, p, keys)));
  }
  return {{"reports", reports}, {"seed", seed}};
}

json priv_game(const json& req) {
  GameConfig g;
  g.params = params_of(req);
  g.nodes = opt<std::size_t>(req, "nodes", g.nodes);
  g.subscriptions = opt<std::size_t>(req, "subscriptions", g.subscriptions);
  g.trace_length = opt<std::size_t>(req, "trace_length", g.trace_length);
  g.compromise_round = opt<std::size_t>(req, "compromise_round", g.compromise_round);
  g.trials = opt<std::size_t>(req, "trials", g.trials);
  g.seed = opt<std::uint64_t>(req, "seed", g.seed);
  g.distinguisher = opt<std::string>(req, "distinguisher", g.distinguisher);
  g.compromise = opt<bool>(req, "compromise", true);
  const bool crippled = opt<bool>(req, "crippled", false);
  if (crippled) g.params.transforms.permute = false;
  const auto est = run_priv_game(g);
  json out = to_json(est);
  out["within_3_sigma_of_half"] = std::abs(est.advantage - 0.5) <= 3 * est.sigma;
  out["config"] = {{"nodes", g.nodes},           {"subscriptions", g.subscriptions},
                   {"trace_length", g.trace_length}, {"compromise_round", g.compromise_round},
                   {"trials", g.trials},         {"seed", g.seed},
                   {"distinguisher", g.distinguisher}, {"compromise", g.compromise},
                   {"crippled", crippled}};
  return out;
}

json bench(const json& req) {
  BenchConfig c;
  c.params = params_of(req);
  c.clients = opt<std::vector<std::size_t>>(req, "clients", c.clients);
  c.ops_per_point = opt<std::size_t>(req, "ops", c.ops_per_point);
  c.repetitions = opt<std::size_t>(req, "repetitions", c.repetitions);
  c.ratio = parse_ratio(opt<std::string>(req, "ratio", "19:1"));
  c.target = opt<std::string>(req, "target", c.target);
  c.auth = opt<std::string>(req, "auth", "");
  c.seed = opt<std::uint64_t>(req, "seed", c.seed);
  const auto points = run_bench(c);
  std::ostringstream csv, plot;
  write_bench_csv(points, csv);
  write_bench_plot(points, plot);
  json pts = json::array();
  for (const auto& p : points) pts.push_back(to_json(p));
  json out = {{"points", pts}, {"csv", csv.str()}, {"plot", plot.str()}, {"target", c.target}};
  // The null-transform comparison needs both pipelines in this process.
  if (opt<bool>(req, "overhead", true) && c.target == "inprocess") {
    const auto o = measure_overhead(c);
    out["overhead"] = {{"encrypted_us", o.encrypted_us.mean}, {"encrypted_ci95", o.encrypted_us.ci95},
                       {"null_us", o.null_us.mean},           {"null_ci95", o.null_us.ci95},
                       {"ratio", o.ratio}};
  }
  return out;
}

}  // namespace

json run_report(const std::string& kind, const json& req) {
  if (!req.is_null() && !req.is_object()) throw Error(ErrorCode::config, "request: expected an object");
  if (kind == "simulate") return simulate(req);
  if (kind == "blowup") return blowup(req);
  if (kind == "fidelity") return fidelity(req);
  if (kind == "priv-game") return priv_game(req);
  if (kind == "bench") return bench(req);
  throw Error(ErrorCode::invalid_argument, "unknown report kind '" + kind + "'");
}

}  // namespace privloc
