#pragma once

// Empirical harness: subscription blow-up, OPE crossing fidelity, the
// trajectory-linking game and the closed-loop benchmark.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privloc/crypto.hpp"
#include "privloc/encrypted.hpp"
#include "privloc/geometry.hpp"
#include "privloc/params.hpp"
#include "privloc/simulator.hpp"
#include "privloc/system.hpp"

namespace privloc {

// ---- statistics -------------------------------------------------------------

struct Interval {
  double lo = 0;
  double hi = 0;
};

// 95% Wilson score interval for successes out of n.
Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

struct Summary {
  double mean = 0;
  double ci95 = 0;   // half width, Student t over the samples
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& samples);

// Nearest-rank percentile, p in [0, 100]. Sorts a copy.
double percentile(std::vector<double> samples, double p);

// ---- blow-up ----------------------------------------------------------------

struct BlowupStats {
  std::array<double, 3> per_backend{};   // mean parts per subscription
  double mean_per_backend = 0;
  double total = 0;                      // sum over the three backends
  std::size_t subscriptions = 0;
};

BlowupStats blowup_stats(const std::vector<Rect>& boxes, const SystemParams& params);

// Closed form for squares of extent side at uniform real placement: each
// axis crosses a tile boundary with probability side / tile_len.
double expected_parts_per_backend(Coord side, Coord tile_len);

nlohmann::json to_json(const BlowupStats& s);

// ---- crossing fidelity ------------------------------------------------------

struct FidelityReport {
  OpeMode mode = OpeMode::affine;
  std::uint64_t checks = 0;          // (movement, geofence, tiling) triples
  std::uint64_t same_tile_checks = 0;  // geofence has a part in the movement's tile
  std::uint64_t positives = 0;       // plaintext oracle says crossing
  std::uint64_t false_positives = 0;
  std::uint64_t false_negatives = 0;
  Interval mismatch_ci;              // over all checks
  Interval same_tile_mismatch_ci;    // over same_tile_checks

  std::uint64_t mismatches() const { return false_positives + false_negatives; }
  double mismatch_rate() const { return checks ? static_cast<double>(mismatches()) / checks : 0; }
};

// Every movement is tested against every geofence in every tiling that
// holds the movement, using the gateway's cipher and the backend's clip test.
FidelityReport fidelity_report(const std::vector<MovementReport>& moves,
                               const std::vector<Rect>& geofences,
                               const SystemParams& params, const KeySet& keys);

nlohmann::json to_json(const FidelityReport& r);

// ---- privacy game -----------------------------------------------------------

// One query seen by the compromised backend.
struct ObservedQuery {
  EncryptedSegment seg;
  std::size_t hits = 0;
};

// What the adversary holds when it answers the challenge.
struct AdversaryView {
  const SystemParams* params = nullptr;         // public parameters
  std::optional<std::size_t> compromised;       // nullopt: nothing observed
  std::vector<std::vector<ObservedQuery>> rounds;  // rounds after compromise
  // Fresh trajectories from the public mobility distribution, same length
  // as the challenge.
  std::function<std::vector<Segment>(std::mt19937_64&)> sample_trajectory;
};

class Distinguisher {
 public:
  virtual ~Distinguisher() = default;
  virtual std::string name() const = 0;
  // 0: the candidate is the node's real trajectory, 1: resampled.
  virtual int guess(const AdversaryView& view, const std::vector<Segment>& candidate,
                    std::mt19937_64& rng) = 0;
};

// Scores a trajectory by its nearest observed query in each round: a
// mismatch between the query's slot and the trajectory's tile on the
// compromised tiling, plus the log ratio of encrypted to plaintext
// displacement. The score is ranked against null_samples fresh
// trajectories; a rank below the middle answers "real".
class KnnDistinguisher : public Distinguisher {
 public:
  explicit KnnDistinguisher(std::size_t null_samples = 31) : null_samples_(null_samples) {}
  std::string name() const override { return "knn"; }
  int guess(const AdversaryView& view, const std::vector<Segment>& candidate,
            std::mt19937_64& rng) override;

  // nullopt when no step of the trajectory fits the compromised tiling.
  static std::optional<double> score(const AdversaryView& view, const std::vector<Segment>& traj);

 private:
  std::size_t null_samples_;
};

std::unique_ptr<Distinguisher> make_distinguisher(const std::string& name);

struct GameConfig {
  std::size_t nodes = 32;
  std::size_t subscriptions = 50;
  std::size_t trace_length = 10;     // challenge trajectory, in rounds
  std::size_t compromise_round = 5;  // rounds before the adversary joins
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  std::string distinguisher = "knn";
  bool compromise = true;            // false: adversary sees no backend
  SystemParams params;               // transforms.permute = false cripples the PRP
};

struct AdvantageEstimate {
  double advantage = 0;   // fraction of correct guesses
  Interval ci95;          // Wilson
  double sigma = 0;       // sqrt(1/4 / trials), the null binomial sd
  std::uint64_t correct = 0;
  std::uint64_t trials = 0;
};

nlohmann::json to_json(const AdvantageEstimate& a);

// trial(b, rng) returns the adversary's guess for hidden bit b.
AdvantageEstimate estimate_advantage(std::size_t trials, std::uint64_t seed,
                                     const std::function<int(int, std::mt19937_64&)>& trial);

// Throws Error(config) when trials < 100, trace_length or nodes is 0.
AdvantageEstimate run_priv_game(const GameConfig& cfg);

// ---- benchmark --------------------------------------------------------------

struct BenchConfig {
  std::vector<std::size_t> clients{1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::size_t ops_per_point = 2000;   // per repetition, split over clients
  std::size_t repetitions = 10;
  Ratio ratio;
  // "inprocess" (local backends, no wire), "loopback" (wire encoding, no
  // sockets) or a gateway endpoint "tcp://host:port".
  std::string target = "inprocess";
  std::string auth;                   // bearer token for a tcp target
  SystemParams params;
  std::uint64_t seed = 1;
};

struct BenchPoint {
  std::size_t clients = 0;
  Summary throughput;      // ops/s over repetitions
  Summary latency_mean_us;
  Summary p50_us, p95_us, p99_us;
  std::uint64_t errors = 0;
};

// Throws Error(unavailable) when a tcp target cannot be reached.
std::vector<BenchPoint> run_bench(const BenchConfig& cfg);

// Mean per-operation latency of the real pipeline divided by the same
// workload on the identity-transform configuration, single client.
struct OverheadReport {
  Summary encrypted_us;
  Summary null_us;
  double ratio = 0;
};

OverheadReport measure_overhead(const BenchConfig& cfg);

void write_bench_csv(const std::vector<BenchPoint>& points, std::ostream& out);
// Two whitespace-separated columns per line: throughput, mean latency (us).
void write_bench_plot(const std::vector<BenchPoint>& points, std::ostream& out);
nlohmann::json to_json(const BenchPoint& p);

// Deterministic key set for simulations only (the game and benchmarks).
KeySet simulation_keys(std::uint64_t seed, std::uint32_t lambda_bits = 128);

}  // namespace privloc
