#include "privloc/simulator.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "privloc/error.hpp"

namespace privloc {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the name, then a splitmix64 finalizer with the seed.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) h = (h ^ c) * 1099511628211ULL;
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MobilityModel::MobilityModel(std::string node_id, const SystemParams& params, std::uint64_t seed,
                             std::optional<Point> start, std::optional<double> fixed_length)
    : node_id_(std::move(node_id)),
      params_(params),
      rng_(derive_seed(seed, node_id_)),
      fixed_length_(fixed_length) {
  if (fixed_length && (*fixed_length < 0 || *fixed_length > static_cast<double>(params.max_move)))
    throw Error(ErrorCode::invalid_argument, "fixed length must lie in [0, max_move]");
  if (start) {
    check_in_bounds(*start, params_);
    pos_ = *start;
  } else {
    pos_ = {std::uniform_int_distribution<Coord>(0, params_.map_width() - 1)(rng_),
            std::uniform_int_distribution<Coord>(0, params_.map_height() - 1)(rng_)};
  }
}

MobilityModel::Step MobilityModel::next() {
  std::uniform_real_distribution<double> len(0, static_cast<double>(params_.max_move));
  std::uniform_real_distribution<double> deg(0, 360);
  const double l = fixed_length_ ? *fixed_length_ : len(rng_);
  const Coord limit = params_.max_move * params_.max_move;
  for (;;) {
    const double h = deg(rng_);
    const double rad = h * std::numbers::pi / 180;
    const Point end{pos_.x + std::llround(l * std::cos(rad)), pos_.y + std::llround(l * std::sin(rad))};
    if (!in_bounds(end, params_) || squared_length({pos_, end}) > limit) continue;
    Step s{{node_id_, pos_, end, ts_}, h, l};
    pos_ = end;
    ts_ += 1000;
    return s;
  }
}

std::vector<MovementReport> gen_path(const std::string& node_id, std::size_t steps,
                                     std::uint64_t seed, const SystemParams& params,
                                     std::optional<double> fixed_length) {
  if (steps == 0) throw Error(ErrorCode::invalid_argument, "steps must be >= 1");
  MobilityModel m(node_id, params, seed, std::nullopt, fixed_length);
  std::vector<MovementReport> out;
  out.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) out.push_back(m.next().report);
  return out;
}

std::vector<Subscription> gen_subscriptions(std::size_t count, Coord side, std::uint64_t seed,
                                            const SystemParams& params) {
  if (side < 0 || side > params.tile_len)
    throw Error(ErrorCode::invalid_argument, "side must lie in [0, tile_len]");
  std::mt19937_64 rng(derive_seed(seed, "subscriptions"));
  std::uniform_int_distribution<Coord> x(0, params.map_width() - 1 - side);
  std::uniform_int_distribution<Coord> y(0, params.map_height() - 1 - side);
  std::vector<Subscription> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Point sw{x(rng), y(rng)};
    out.push_back({"sub-" + std::to_string(i), {sw, {sw.x + side, sw.y + side}}, ""});
  }
  return out;
}

Ratio parse_ratio(std::string_view s) {
  const auto colon = s.find(':');
  Ratio r;
  auto parse = [&](std::string_view part, std::uint32_t& v) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    return ec == std::errc{} && p == part.data() + part.size();
  };
  if (colon == std::string_view::npos || !parse(s.substr(0, colon), r.reports) ||
      !parse(s.substr(colon + 1), r.subscriptions) || r.reports + r.subscriptions == 0)
    throw Error(ErrorCode::invalid_argument, "ratio must look like 19:1");
  return r;
}

std::vector<WorkloadEvent> gen_mixed_workload(const WorkloadOptions& o, const SystemParams& params) {
  if (o.clients < 1 || o.clients > 256)
    throw Error(ErrorCode::invalid_argument, "clients must lie in [1, 256]");
  const Coord max_side = o.max_side > 0 ? o.max_side : params.max_sub_side;
  std::mt19937_64 rng(derive_seed(o.seed, "workload"));
  std::vector<MobilityModel> nodes;
  nodes.reserve(o.clients);
  for (std::size_t c = 0; c < o.clients; ++c)
    nodes.emplace_back("node-" + std::to_string(c), params, o.seed);
  std::vector<std::size_t> sub_counter(o.clients, 0);
  std::vector<double> clock(o.clients, 0);
  std::bernoulli_distribution is_sub(static_cast<double>(o.ratio.subscriptions) /
                                     (o.ratio.reports + o.ratio.subscriptions));
  std::uniform_int_distribution<std::size_t> pick(0, o.clients - 1);
  std::uniform_int_distribution<Coord> side(0, max_side);
  std::exponential_distribution<double> gap(o.rate_per_client_hz / 1000.0);

  std::vector<WorkloadEvent> out;
  out.reserve(o.events);
  for (std::size_t i = 0; i < o.events; ++i) {
    WorkloadEvent e;
    e.client = pick(rng);
    if (o.mode == LoopMode::open) {
      clock[e.client] += gap(rng);
      e.at_ms = clock[e.client];
    }
    if (is_sub(rng)) {
      e.kind = WorkloadEvent::Kind::subscribe;
      const Coord s = side(rng);
      const Point sw{std::uniform_int_distribution<Coord>(0, params.map_width() - 1 - s)(rng),
                     std::uniform_int_distribution<Coord>(0, params.map_height() - 1 - s)(rng)};
      e.subscription = {"c" + std::to_string(e.client) + "-s" + std::to_string(sub_counter[e.client]++),
                        {sw, {sw.x + s, sw.y + s}}, ""};
    } else {
      e.kind = WorkloadEvent::Kind::publish;
      e.report = nodes[e.client].next().report;
    }
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json event_to_json(const WorkloadEvent& e) {
  const bool sub = e.kind == WorkloadEvent::Kind::subscribe;
  return {{"client", e.client},
          {"kind", sub ? "subscribe" : "publish"},
          {"at_ms", e.at_ms},
          {"body", sub ? wire::to_body(e.subscription) : wire::to_body(e.report)}};
}

WorkloadEvent event_from_json(const nlohmann::json& j) {
  WorkloadEvent e;
  e.client = static_cast<std::size_t>(wire::require_int(j, "client"));
  const std::string kind = wire::require_string(j, "kind");
  if (auto it = j.find("at_ms"); it != j.end() && it->is_number()) e.at_ms = it->get<double>();
  if (kind == "subscribe") {
    e.kind = WorkloadEvent::Kind::subscribe;
    e.subscription = wire::subscribe_from(wire::require(j, "body"));
  } else if (kind == "publish") {
    e.report = wire::publish_from(wire::require(j, "body"));
  } else {
    throw Error(ErrorCode::protocol, "unknown event kind '" + kind + "'");
  }
  return e;
}

void write_jsonl(const std::vector<WorkloadEvent>& events, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  for (const auto& e : events) out << event_to_json(e).dump() << '\n';
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::vector<WorkloadEvent> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::vector<WorkloadEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::protocol, "malformed workload line");
    out.push_back(event_from_json(j));
  }
  return out;
}

}  // namespace privloc
