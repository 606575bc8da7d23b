#pragma once

// Seeded workload generation: per-step random heading and length mobility,
// square geofences, and mixed publish/subscribe event streams.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "privloc/geometry.hpp"
#include "privloc/params.hpp"
#include "privloc/wire_client.hpp"

namespace privloc {

using MovementReport = wire::Publish;
using Subscription = wire::Subscribe;

// Stable 64-bit mix of a seed and a name, so every node gets its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

// One node. Each step draws a length uniform in [0, max_move] (or a fixed
// length) and a heading uniform in [0, 360); if the rounded endpoint leaves
// the map or exceeds max_move the heading is drawn again, length kept.
class MobilityModel {
 public:
  struct Step {
    MovementReport report;
    double heading_deg = 0;
    double length = 0;
  };

  MobilityModel(std::string node_id, const SystemParams& params, std::uint64_t seed,
                std::optional<Point> start = std::nullopt,
                std::optional<double> fixed_length = std::nullopt);

  Step next();
  Point position() const { return pos_; }

 private:
  std::string node_id_;
  SystemParams params_;
  std::mt19937_64 rng_;
  Point pos_;
  std::optional<double> fixed_length_;
  std::int64_t ts_ = 0;
};

// Reports chain: end of report k is the start of report k + 1. Throws
// Error(invalid_argument) when steps is 0.
std::vector<MovementReport> gen_path(const std::string& node_id, std::size_t steps,
                                     std::uint64_t seed, const SystemParams& params,
                                     std::optional<double> fixed_length = std::nullopt);

// Squares [a, a + side] on both axes (side is the geometric extent), south-
// west corner uniform over the placements that keep the square on the map.
std::vector<Subscription> gen_subscriptions(std::size_t count, Coord side, std::uint64_t seed,
                                            const SystemParams& params);

struct Ratio {
  std::uint32_t reports = 19;
  std::uint32_t subscriptions = 1;
};

// "19:1" style. Throws Error(invalid_argument).
Ratio parse_ratio(std::string_view s);

enum class LoopMode { closed, open };

struct WorkloadEvent {
  enum class Kind { publish, subscribe };
  std::size_t client = 0;
  Kind kind = Kind::publish;
  double at_ms = 0;   // open loop: scheduled send time; closed loop: 0
  MovementReport report;
  Subscription subscription;
};

struct WorkloadOptions {
  std::size_t clients = 1;          // 1..256
  std::size_t events = 1000;        // total across clients
  Ratio ratio;
  LoopMode mode = LoopMode::closed;
  double rate_per_client_hz = 100;  // open loop arrival rate
  Coord max_side = 0;               // 0: params.max_sub_side
  std::uint64_t seed = 1;
};

// Each event is a subscription with probability s / (r + s). Events of one
// client appear in that client's order; clients are interleaved.
std::vector<WorkloadEvent> gen_mixed_workload(const WorkloadOptions& opts, const SystemParams& params);

nlohmann::json event_to_json(const WorkloadEvent& e);
WorkloadEvent event_from_json(const nlohmann::json& j);
void write_jsonl(const std::vector<WorkloadEvent>& events, const std::filesystem::path& path);
std::vector<WorkloadEvent> read_jsonl(const std::filesystem::path& path);

}  // namespace privloc
