#include "privloc/analysis.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "privloc/clip.hpp"
#include "privloc/crypto.hpp"
#include "privloc/error.hpp"

namespace privloc {

// ---- statistics -------------------------------------------------------------

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0, 1};
  const double p = static_cast<double>(k) / n;
  const double nn = static_cast<double>(n);
  const double denom = 1 + z * z / nn;
  const double centre = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  if (xs.size() < 2) return s;
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  const double sd = std::sqrt(ss / (xs.size() - 1));
  boost::math::students_t t(static_cast<double>(xs.size() - 1));
  s.ci95 = boost::math::quantile(boost::math::complement(t, 0.025)) * sd / std::sqrt(xs.size());
  return s;
}

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  const double rank = std::ceil(p / 100.0 * xs.size());
  const std::size_t idx = rank < 1 ? 0 : static_cast<std::size_t>(rank) - 1;
  return xs[std::min(idx, xs.size() - 1)];
}

// ---- blow-up ----------------------------------------------------------------

BlowupStats blowup_stats(const std::vector<Rect>& boxes, const SystemParams& params) {
  BlowupStats s;
  s.subscriptions = boxes.size();
  if (boxes.empty()) return s;
  std::array<std::uint64_t, 3> parts{};
  for (const auto& b : boxes)
    for (std::size_t i = 0; i < 3; ++i) parts[i] += split_rect(b, params.offsets[i], params).size();
  for (std::size_t i = 0; i < 3; ++i) {
    s.per_backend[i] = static_cast<double>(parts[i]) / boxes.size();
    s.total += s.per_backend[i];
  }
  s.mean_per_backend = s.total / 3;
  return s;
}

double expected_parts_per_backend(Coord side, Coord tile_len) {
  const double q = static_cast<double>(side) / static_cast<double>(tile_len);
  return (1 + q) * (1 + q);
}

nlohmann::json to_json(const BlowupStats& s) {
  return {{"subscriptions", s.subscriptions},
          {"per_backend", s.per_backend},
          {"mean_per_backend", s.mean_per_backend},
          {"total", s.total}};
}

// ---- fidelity ---------------------------------------------------------------

FidelityReport fidelity_report(const std::vector<MovementReport>& moves,
                               const std::vector<Rect>& geofences,
                               const SystemParams& params, const KeySet& keys) {
  std::array<std::unique_ptr<TileCipher>, 3> ciphers;
  for (std::size_t i = 0; i < 3; ++i)
    ciphers[i] = std::make_unique<TileCipher>(keys.keys[i], params.offsets[i], params);

  struct Part {
    Coord num;
    EncryptedRect rect;
  };
  // enc[i][g]: parts of geofence g on tiling i
  std::array<std::vector<std::vector<Part>>, 3> enc;
  for (std::size_t i = 0; i < 3; ++i) {
    enc[i].resize(geofences.size());
    for (std::size_t g = 0; g < geofences.size(); ++g)
      for (const auto& rp : split_rect(geofences[g], params.offsets[i], params))
        enc[i][g].push_back({rp.num, ciphers[i]->encrypt_rect(rp.num, rp.local, "")});
  }

  FidelityReport r;
  r.mode = params.ope_mode;
  std::uint64_t same_tile_mismatches = 0;
  for (const auto& m : moves) {
    const Segment seg{m.start, m.end};
    const auto fits = fitting_tilings(seg, params);
    for (std::size_t i = 0; i < 3; ++i) {
      if (!fits[i]) continue;
      const Coord num = coordinates_on_tile(seg.p0, params.offsets[i], params).num;
      const EncryptedPoint a = ciphers[i]->encrypt_point(seg.p0);
      const EncryptedPoint b = ciphers[i]->encrypt_point(seg.p1);
      for (std::size_t g = 0; g < geofences.size(); ++g) {
        const bool truth = segment_intersects_rect(seg, geofences[g]);
        bool got = false, same_tile = false;
        for (const auto& p : enc[i][g]) {
          same_tile |= p.num == num;
          if (segment_intersects_rect(a.ex, a.ey, b.ex, b.ey, p.rect.sw.ex, p.rect.sw.ey,
                                      p.rect.ne.ex, p.rect.ne.ey)) {
            got = true;
            break;
          }
        }
        ++r.checks;
        r.same_tile_checks += same_tile;
        r.positives += truth;
        if (got && !truth) ++r.false_positives;
        if (!got && truth) ++r.false_negatives;
        same_tile_mismatches += same_tile && got != truth;
      }
    }
  }
  r.mismatch_ci = wilson_interval(r.mismatches(), r.checks);
  r.same_tile_mismatch_ci = wilson_interval(same_tile_mismatches, r.same_tile_checks);
  return r;
}

nlohmann::json to_json(const FidelityReport& r) {
  return {{"ope_mode", ope_mode_name(r.mode)},
          {"checks", r.checks},
          {"same_tile_checks", r.same_tile_checks},
          {"positives", r.positives},
          {"false_positives", r.false_positives},
          {"false_negatives", r.false_negatives},
          {"mismatch_rate", r.mismatch_rate()},
          {"mismatch_ci95", {r.mismatch_ci.lo, r.mismatch_ci.hi}},
          {"same_tile_mismatch_ci95", {r.same_tile_mismatch_ci.lo, r.same_tile_mismatch_ci.hi}}};
}

// ---- privacy game -----------------------------------------------------------

KeySet simulation_keys(std::uint64_t seed, std::uint32_t lambda_bits) {
  std::mt19937_64 rng(derive_seed(seed, "keys"));
  KeySet ks;
  for (auto& k : ks.keys) {
    std::vector<std::uint8_t> bytes((lambda_bits + 7) / 8);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    k = MasterKey(std::move(bytes));
  }
  return ks;
}

namespace {

double mean_ope_scale(const SystemParams& p) {
  switch (p.ope_mode) {
    case OpeMode::identity:
      return 1;
    case OpeMode::piecewise:
      return static_cast<double>(p.ope_range) / static_cast<double>(p.tile_len);
    case OpeMode::affine:
      break;
  }
  const Coord m = (p.ope_range - p.tile_len) / p.tile_len;
  return m > 0 ? (1 + m) / 2.0 : 1;
}

}  // namespace

std::optional<double> KnnDistinguisher::score(const AdversaryView& view,
                                              const std::vector<Segment>& traj) {
  if (!view.compromised) return std::nullopt;
  const SystemParams& p = *view.params;
  const std::size_t i = *view.compromised;
  const Coord R = p.ope_range;
  const double scale = mean_ope_scale(p);
  double total = 0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < traj.size() && j < view.rounds.size(); ++j) {
    const Segment& s = traj[j];
    if (!fitting_tilings(s, p)[i]) continue;
    const Coord tile = coordinates_on_tile(s.p0, p.offsets[i], p).num;
    const double fp = std::log1p(static_cast<double>(std::abs(s.p1.x - s.p0.x) +
                                                     std::abs(s.p1.y - s.p0.y)) * scale);
    double best = 1.5;
    for (const auto& q : view.rounds[j]) {
      const Coord slot = q.seg.p0.ex / R + (q.seg.p0.ey / R) * p.n_x;
      const double fe = std::log1p(static_cast<double>(std::abs(q.seg.p1.ex - q.seg.p0.ex) +
                                                       std::abs(q.seg.p1.ey - q.seg.p0.ey)));
      const double c = (slot == tile ? 0.0 : 1.0) + 0.5 * std::min(1.0, std::abs(fe - fp) / 4);
      best = std::min(best, c);
    }
    total += best;
    ++used;
  }
  if (used == 0) return std::nullopt;
  return total / static_cast<double>(used);
}

int KnnDistinguisher::guess(const AdversaryView& view, const std::vector<Segment>& candidate,
                            std::mt19937_64& rng) {
  const auto coin = [&] { return static_cast<int>(rng() & 1); };
  const auto s = score(view, candidate);
  if (!s || !view.sample_trajectory) return coin();
  double below = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < null_samples_; ++k) {
    const auto ns = score(view, view.sample_trajectory(rng));
    if (!ns) continue;
    ++n;
    if (*ns < *s) below += 1;
    else if (*ns == *s) below += 0.5;
  }
  if (n == 0) return coin();
  // Low rank: the candidate sits closer to the transcript than chance.
  const double rank = below / static_cast<double>(n);
  if (rank < 0.5) return 0;
  if (rank > 0.5) return 1;
  return coin();
}

std::unique_ptr<Distinguisher> make_distinguisher(const std::string& name) {
  if (name == "knn") return std::make_unique<KnnDistinguisher>();
  throw Error(ErrorCode::config, "distinguisher: unknown '" + name + "'");
}

nlohmann::json to_json(const AdvantageEstimate& a) {
  return {{"advantage", a.advantage},
          {"ci95", {a.ci95.lo, a.ci95.hi}},
          {"sigma", a.sigma},
          {"correct", a.correct},
          {"trials", a.trials}};
}

AdvantageEstimate estimate_advantage(std::size_t trials, std::uint64_t seed,
                                     const std::function<int(int, std::mt19937_64&)>& trial) {
  AdvantageEstimate a;
  a.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, "trial-" + std::to_string(t)));
    const int b = static_cast<int>(rng() & 1);
    a.correct += trial(b, rng) == b;
  }
  if (trials > 0) {
    a.advantage = static_cast<double>(a.correct) / trials;
    a.sigma = std::sqrt(0.25 / trials);
  }
  a.ci95 = wilson_interval(a.correct, trials);
  return a;
}

namespace {

std::vector<Segment> walk(const SystemParams& p, std::uint64_t seed, std::size_t steps) {
  MobilityModel m("walk", p, seed);
  std::vector<Segment> out;
  out.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto s = m.next();
    out.push_back({s.report.start, s.report.end});
  }
  return out;
}

}  // namespace

AdvantageEstimate run_priv_game(const GameConfig& cfg) {
  if (cfg.trials < 100) throw Error(ErrorCode::config, "trials: must be >= 100");
  if (cfg.trace_length == 0) throw Error(ErrorCode::config, "trace_length: must be >= 1");
  if (cfg.nodes == 0) throw Error(ErrorCode::config, "nodes: must be >= 1");
  cfg.params.validate();
  auto dist = make_distinguisher(cfg.distinguisher);
  const SystemParams& params = cfg.params;

  return estimate_advantage(cfg.trials, cfg.seed, [&](int b, std::mt19937_64& rng) {
    // Setup: fresh keys and backends per trial.
    const KeySet keys = simulation_keys(rng(), params.lambda);
    std::optional<std::size_t> victim;
    if (cfg.compromise) victim = static_cast<std::size_t>(rng() % 3);

    auto rounds = std::make_shared<std::vector<std::vector<ObservedQuery>>>();
    auto recording = std::make_shared<bool>(false);
    InProcessOptions opts;
    opts.seed = rng();
    opts.wrap = [&](std::size_t i, std::shared_ptr<BackendClient> inner) -> std::shared_ptr<BackendClient> {
      if (!victim || i != *victim) return inner;
      RecordingBackend::Observer obs;
      obs.on_query = [rounds, recording](const EncryptedSegment& seg, const std::vector<PartId>& ids) {
        if (*recording) rounds->back().push_back({seg, ids.size()});
      };
      return std::make_shared<RecordingBackend>(std::move(inner), std::move(obs));
    };
    InProcessSystem sys(params, keys, opts);
    Gateway& gw = sys.gateway();

    // Run: subscriptions, then nodes moving in rounds.
    std::uniform_int_distribution<Coord> side(0, params.max_sub_side);
    for (std::size_t s = 0; s < cfg.subscriptions; ++s) {
      const Coord d = side(rng);
      const Point sw{std::uniform_int_distribution<Coord>(0, params.map_width() - 1 - d)(rng),
                     std::uniform_int_distribution<Coord>(0, params.map_height() - 1 - d)(rng)};
      gw.subscribe({"s" + std::to_string(s), {sw, {sw.x + d, sw.y + d}}, ""});
    }
    gw.flush();

    std::vector<MobilityModel> nodes;
    nodes.reserve(cfg.nodes);
    for (std::size_t j = 0; j < cfg.nodes; ++j) nodes.emplace_back("n" + std::to_string(j), params, rng());
    std::vector<std::vector<Segment>> traj(cfg.nodes);
    std::vector<std::size_t> order(cfg.nodes);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t r = 0; r < cfg.compromise_round + cfg.trace_length; ++r) {
      // Compromise: the adversary records from this round on.
      if (r == cfg.compromise_round) *recording = true;
      if (*recording) rounds->emplace_back();
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t j : order) {
        const auto step = nodes[j].next();
        gw.publish(step.report);
        if (r >= cfg.compromise_round) traj[j].push_back({step.report.start, step.report.end});
      }
    }

    // Challenge and response.
    const std::size_t k = static_cast<std::size_t>(rng() % cfg.nodes);
    const auto candidate = b == 0 ? traj[k] : walk(params, rng(), cfg.trace_length);

    AdversaryView view;
    view.params = &params;
    view.compromised = victim;
    view.rounds = std::move(*rounds);
    view.sample_trajectory = [&](std::mt19937_64& g) { return walk(params, g(), cfg.trace_length); };
    return dist->guess(view, candidate, rng);
  });
}

}  // namespace privloc
