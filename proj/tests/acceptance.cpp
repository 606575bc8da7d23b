// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--only N[,N...]] [--out-dir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privloc/analysis.hpp"
#include "privloc/crypto.hpp"
#include "privloc/geometry.hpp"
#include "privloc/keys.hpp"
#include "privloc/net.hpp"
#include "privloc/services.hpp"
#include "privloc/simulator.hpp"
#include "privloc/wire.hpp"

using namespace privloc;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace tol {
// 1
constexpr std::size_t blowup_count = 10000;
constexpr double per_backend = 2.25, per_backend_tol = 0.05;
constexpr double total = 6.75, total_tol = 0.15;
constexpr double blowup_seconds = 60;
// 2
constexpr std::size_t random_segments = 1000000;
constexpr double totality_seconds = 60;
// 3
constexpr std::size_t interactions = 100000;
constexpr double oracle_seconds = 300;
// 4
constexpr std::size_t membership_pairs = 100000;  // per OPE mode
// 5
constexpr Coord prp_domains[] = {1, 2, 12, 100, 4096};
constexpr Coord ope_tile_lens[] = {1, 2, 3, 7, 16, 33, 100, 255, 256, 500, 1000, 1023, 1024};
constexpr Coord table_tile_len = 16;
// 6
constexpr std::size_t isometry_samples = 20000;
constexpr double isometry_sigmas = 3;
// 7
constexpr std::size_t game_trials = 10000;
constexpr double game_sigmas = 3;
constexpr std::size_t crippled_trials = 2000;
constexpr double crippled_min = 0.6;
// 8
constexpr std::size_t bench_reps = 10;
constexpr double overhead_max = 10;
// 9
constexpr std::uint64_t fidelity_checks = 1000000;
}  // namespace tol

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

MasterKey random_key(std::mt19937_64& rng) {
  std::vector<std::uint8_t> bytes(16);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
  return MasterKey(std::move(bytes));
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Tile holding p in a tiling, computed from the definition.
std::pair<Coord, Coord> tile_of(const Point& p, Coord off, const SystemParams& s) {
  const Coord w = s.map_width(), h = s.map_height();
  return {((p.x - off) % w + w) % w / s.tile_len, ((p.y - off) % h + h) % h / s.tile_len};
}

// ---- 1 ----------------------------------------------------------------------

Verdict blowup() {
  const auto t0 = Clock::now();
  const SystemParams p;
  std::vector<Rect> boxes;
  for (const auto& s : gen_subscriptions(tol::blowup_count, p.tile_len / 2, 1, p)) boxes.push_back(s.box);
  const auto st = blowup_stats(boxes, p);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(st.mean_per_backend - tol::per_backend) <= tol::per_backend_tol &&
                  std::abs(st.total - tol::total) <= tol::total_tol && secs < tol::blowup_seconds;
  return {ok, fmt("mean per backend %.4f (tilings %.3f/%.3f/%.3f), total %.4f over %zu boxes, %.2f s",
                  st.mean_per_backend, st.per_backend[0], st.per_backend[1], st.per_backend[2], st.total,
                  boxes.size(), secs)};
}

// ---- 2 ----------------------------------------------------------------------

// Empty string when choose_server returned a tiling that really holds both
// endpoints; otherwise a description of the failure.
std::string check_choice(const Segment& seg, const SystemParams& p) {
  const auto got = choose_server(seg, p);
  if (!got) return "NONE";
  const Coord off = p.offsets[*got];
  if (tile_of(seg.p0, off, p) != tile_of(seg.p1, off, p)) return "tiling " + std::to_string(*got) + " splits it";
  return {};
}

Verdict totality() {
  const auto t0 = Clock::now();
  std::size_t bad = 0, random_checked = 0, exhaustive_checked = 0;
  std::string first;
  auto note = [&](const Segment& s, const std::string& why) {
    if (why.empty()) return;
    if (bad++ == 0)
      first = fmt("(%lld,%lld)-(%lld,%lld): ", (long long)s.p0.x, (long long)s.p0.y, (long long)s.p1.x,
                  (long long)s.p1.y) + why;
  };

  const SystemParams p;
  const Coord lim = p.tile_len / 3 - 1;  // |d| < floor(t/3)
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<Coord> x(0, p.map_width() - 1), y(0, p.map_height() - 1), d(-lim, lim);
  while (random_checked < tol::random_segments) {
    const Point a{x(rng), y(rng)};
    const Point b{a.x + d(rng), a.y + d(rng)};
    if (!in_bounds(b, p)) continue;
    note({a, b}, check_choice({a, b}, p));
    ++random_checked;
  }

  const auto g = SystemParams::for_grid(9, 3, 3);
  const Coord s = g.tile_len / 3 - 1;
  for (Coord x0 = 0; x0 < g.map_width(); ++x0)
    for (Coord y0 = 0; y0 < g.map_height(); ++y0)
      for (Coord dx = -s; dx <= s; ++dx)
        for (Coord dy = -s; dy <= s; ++dy) {
          const Point b{x0 + dx, y0 + dy};
          if (!in_bounds(b, g)) continue;
          note({{x0, y0}, b}, check_choice({{x0, y0}, b}, g));
          ++exhaustive_checked;
        }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < tol::totality_seconds,
          fmt("%zu random + %zu exhaustive (3x3, tile 9) segments, %zu without a fitting tiling, %.2f s",
              random_checked, exhaustive_checked, bad, secs) + (first.empty() ? "" : "; first: " + first)};
}

// ---- 3 ----------------------------------------------------------------------

class GatewayClient {
 public:
  explicit GatewayClient(std::uint16_t port) : conn_(net::LineConnection::connect("127.0.0.1", port)) {}

  wire::Envelope call(std::string_view type, json body) {
    conn_.send_line(wire::encode({std::string(type), next_id_++, {}, std::move(body)}));
    auto line = conn_.read_line();
    if (!line) throw std::runtime_error("gateway closed the connection");
    return wire::decode(*line);
  }

 private:
  net::LineConnection conn_;
  std::int64_t next_id_ = 1;
};

// Gateway and three backends on loopback sockets.
struct TcpStack {
  TcpStack(const SystemParams& p, const fs::path& keys) : keys_path(keys) {
    setup_keys(p, keys);
    GatewayConfig gc;
    gc.params = p;
    gc.port = 0;
    gc.keys_path = keys.string();
    gc.log_level = LogLevel::off;
    gc.seed = 3;
    for (std::size_t i = 0; i < kBackends; ++i) {
      BackendConfig bc;
      bc.params = p;
      bc.port = 0;
      bc.log_level = LogLevel::off;
      backends.push_back(std::make_unique<BackendServer>(bc));
      backends.back()->start();
      gc.backends[i] = "tcp://127.0.0.1:" + std::to_string(backends.back()->port());
    }
    gateway = std::make_unique<GatewayServer>(gc);
    gateway->start();
  }
  ~TcpStack() {
    gateway->stop();
    for (auto& b : backends) b->stop();
    fs::remove(keys_path);
  }
  std::string endpoint() const { return "tcp://127.0.0.1:" + std::to_string(gateway->port()); }

  fs::path keys_path;
  std::vector<std::unique_ptr<BackendServer>> backends;
  std::unique_ptr<GatewayServer> gateway;
};

Verdict oracle_equivalence(const fs::path& dir) {
  const auto t0 = Clock::now();
  SystemParams p;
  p.ope_mode = OpeMode::affine;
  TcpStack stack(p, dir / "acceptance_keys.hex");
  GatewayClient client(stack.gateway->port());

  std::mt19937_64 rng(3);
  std::map<std::string, Rect> active;
  std::size_t next_sub = 0;
  auto subscribe = [&] {
    std::uniform_int_distribution<Coord> side(0, p.max_sub_side);
    const Coord w = side(rng), h = side(rng);
    std::uniform_int_distribution<Coord> x(0, p.map_width() - 1 - w), y(0, p.map_height() - 1 - h);
    const Point sw{x(rng), y(rng)};
    const wire::Subscribe s{"g" + std::to_string(next_sub++), {sw, {sw.x + w, sw.y + h}}, ""};
    const auto r = client.call(wire::type::subscribe, wire::to_body(s));
    if (r.type != wire::type::ack) throw std::runtime_error("subscribe rejected: " + r.body.dump());
    active[s.sub_id] = s.box;
  };
  auto unsubscribe = [&] {
    auto it = std::next(active.begin(), static_cast<long>(rng() % active.size()));
    const auto r = client.call(wire::type::unsubscribe, wire::to_body(wire::Unsubscribe{it->first}));
    if (r.type != wire::type::ack) throw std::runtime_error("unsubscribe rejected: " + r.body.dump());
    active.erase(it);
  };

  std::vector<MobilityModel> nodes;
  for (int i = 0; i < 64; ++i) nodes.emplace_back("n" + std::to_string(i), p, 100 + i);

  std::size_t publishes = 0, mismatches = 0, crossings = 0, interactions = 0;
  std::string first;
  for (int i = 0; i < 400; ++i, ++interactions) subscribe();
  std::uniform_real_distribution<double> u(0, 1);
  while (interactions < tol::interactions) {
    ++interactions;
    const double r = u(rng);
    if (r < 0.03) {
      subscribe();
      continue;
    }
    if (r < 0.06 && !active.empty()) {
      unsubscribe();
      continue;
    }
    const auto mv = nodes[rng() % nodes.size()].next().report;
    std::multiset<std::string> want, got;
    for (const auto& [id, box] : active)
      if (segment_intersects_rect(Segment{mv.start, mv.end}, box)) want.insert(id);
    const auto reply = client.call(wire::type::publish, wire::to_body(mv));
    if (reply.type == wire::type::ack)
      for (const auto& n : reply.body.at("notifications")) got.insert(n.at("sub_id").get<std::string>());
    ++publishes;
    crossings += want.size();
    if (reply.type != wire::type::ack || got != want) {
      if (mismatches++ == 0) first = "publish " + std::to_string(publishes) + ": " + reply.body.dump();
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && interactions >= tol::interactions && secs < tol::oracle_seconds,
          fmt("%zu interactions over TCP (%zu publishes, %zu expected notifications, %zu active "
              "subscriptions at end), %zu mismatched publishes, %.1f s",
              interactions, publishes, crossings, active.size(), mismatches, secs) +
              (first.empty() ? "" : "; first: " + first)};
}

// ---- 4 ----------------------------------------------------------------------

Verdict membership() {
  std::string detail;
  bool ok = true;
  for (OpeMode mode : {OpeMode::affine, OpeMode::piecewise}) {
    SystemParams p;
    p.ope_mode = mode;
    std::mt19937_64 rng(4);
    std::deque<TileCipher> ciphers;  // not movable
    for (std::size_t i = 0; i < kBackends; ++i) ciphers.emplace_back(random_key(rng), p.offsets[i], p);
    std::uniform_int_distribution<Coord> local(0, p.tile_len - 1), tile(0, p.tile_count() - 1);
    std::size_t mismatches = 0, inside = 0;
    for (std::size_t n = 0; n < tol::membership_pairs; ++n) {
      const auto& c = ciphers[n % kBackends];
      const Coord num = tile(rng);
      Coord x0 = local(rng), x1 = local(rng), y0 = local(rng), y1 = local(rng);
      if (x0 > x1) std::swap(x0, x1);
      if (y0 > y1) std::swap(y0, y1);
      const Rect r{{x0, y0}, {x1, y1}};
      // Bias half the points into the rectangle or onto its border.
      Point q{local(rng), local(rng)};
      if (n % 2) q = {std::uniform_int_distribution<Coord>(x0, x1)(rng), std::uniform_int_distribution<Coord>(y0, y1)(rng)};
      if (n % 8 == 1) q.x = x1;
      if (n % 8 == 3) q.y = y0;
      const bool plain = x0 <= q.x && q.x <= x1 && y0 <= q.y && q.y <= y1;
      const bool enc = c.encrypt_rect(num, r, "p").contains(c.encrypt_local(num, q.x, q.y));
      inside += plain;
      mismatches += plain != enc;
    }
    ok &= mismatches == 0;
    detail += fmt("%s%s: %zu mismatches over %zu pairs (%zu inside)", detail.empty() ? "" : "; ",
                  ope_mode_name(mode), mismatches, tol::membership_pairs, inside);
  }
  return {ok, detail};
}

// ---- 5 ----------------------------------------------------------------------

// Cell-centre rotation by `quarter` clockwise quarter turns, then an optional
// mirror in x.
std::pair<Coord, Coord> isometry_oracle(unsigned quarter, bool mirror, Coord dx, Coord dy, Coord L) {
  const double c = (L - 1) / 2.0;
  double u = dx - c, v = dy - c;
  for (unsigned i = 0; i < quarter; ++i) std::tie(u, v) = std::pair{v, -u};
  if (mirror) u = -u;
  return {std::llround(u + c), std::llround(v + c)};
}

Verdict primitives() {
  std::mt19937_64 rng(5);
  std::size_t prp_fail = 0, prp_checked = 0;
  for (int k = 0; k < 8; ++k) {
    const MasterKey key = random_key(rng);
    for (Coord domain : tol::prp_domains) {
      std::vector<bool> seen(domain, false);
      for (Coord v = 0; v < domain; ++v) {
        const Coord img = prp_tile(key, domain, v);
        ++prp_checked;
        if (img < 0 || img >= domain || seen[img]) {
          ++prp_fail;
          continue;
        }
        seen[img] = true;
      }
    }
  }

  std::size_t ope_fail = 0, ope_checked = 0;
  for (Coord t : tol::ope_tile_lens) {
    for (OpeMode mode : {OpeMode::affine, OpeMode::piecewise}) {
      SystemParams p = SystemParams::for_grid(t, 2, 2);
      p.ope_mode = mode;
      const MasterKey key = random_key(rng);
      for (Coord num = 0; num < p.tile_count(); ++num)
        for (Axis axis : {Axis::x, Axis::y}) {
          Coord prev = -1;
          for (Coord v = 0; v < t; ++v) {
            const Coord e = ope_encrypt(v, axis, num, key, p);
            ++ope_checked;
            if (e <= prev || e < 0 || e >= p.ope_range) ++ope_fail;
            prev = e;
          }
        }
    }
  }

  // Case tables against the geometric oracle, and the keyed selection against
  // the PRF bits.
  const Coord L = tol::table_tile_len;
  const auto p16 = SystemParams::for_grid(L, 4, 4);
  std::size_t table_fail = 0, table_checked = 0;
  std::set<unsigned> codes_seen;
  std::set<bool> flips_seen;
  for (int k = 0; k < 4; ++k) {
    const MasterKey key = random_key(rng);
    for (Coord num = 0; num < p16.tile_count(); ++num) {
      const unsigned code = static_cast<unsigned>(prf(key, "rotate", static_cast<std::uint64_t>(num), 2).value());
      const bool flip = prf(key, "flip", static_cast<std::uint64_t>(num), 1).value() == 1;
      codes_seen.insert(code);
      flips_seen.insert(flip);
      for (Coord dx = 0; dx < L; ++dx)
        for (Coord dy = 0; dy < L; ++dy) {
          table_checked += 2;
          table_fail += rotate_tile(dx, dy, num, key, p16) != isometry_oracle(code, false, dx, dy, L);
          table_fail += flip_tile(dx, dy, num, key, p16) != isometry_oracle(0, flip, dx, dy, L);
        }
    }
  }
  for (unsigned code = 0; code < 4; ++code)
    for (Coord dx = 0; dx < L; ++dx)
      for (Coord dy = 0; dy < L; ++dy) {
        table_checked += 3;
        table_fail += apply_rotation(code, dx, dy, L) != isometry_oracle(code, false, dx, dy, L);
        table_fail += apply_flip(code & 1, dx, dy, L) != isometry_oracle(0, code & 1, dx, dy, L);
        const auto r = apply_rotation(code, dx, dy, L);
        table_fail += apply_flip(true, r.first, r.second, L) != isometry_oracle(code, true, dx, dy, L);
      }
  const bool cover = codes_seen.size() == 4 && flips_seen.size() == 2;
  return {prp_fail == 0 && ope_fail == 0 && table_fail == 0 && cover,
          fmt("prp %zu/%zu images bad; ope %zu/%zu steps non-increasing or out of range (tile_len up to 1024, "
              "affine+piecewise); rotation/flip %zu/%zu cells differ from the geometric oracle (tile 16), "
              "%zu rotation codes and %zu flip bits exercised",
              prp_fail, prp_checked, ope_fail, ope_checked, table_fail, table_checked, codes_seen.size(),
              flips_seen.size())};
}

// ---- 6 ----------------------------------------------------------------------

Verdict isometries() {
  const SystemParams p;
  std::mt19937_64 rng(6);
  std::array<std::size_t, 8> counts{};
  // One random tile per fresh key.
  for (std::size_t i = 0; i < tol::isometry_samples; ++i) {
    const TileCipher c(random_key(rng), 0, p);
    ++counts[c.transform(static_cast<Coord>(rng() % p.tile_count())).isometry()];
  }
  const double n = static_cast<double>(tol::isometry_samples);
  const double sigma = std::sqrt(0.125 * 0.875 / n);
  bool ok = true;
  std::string freqs;
  for (std::size_t k = 0; k < 8; ++k) {
    const double f = counts[k] / n;
    ok &= std::abs(f - 0.125) <= tol::isometry_sigmas * sigma;
    freqs += fmt("%s%.4f", k ? " " : "", f);
  }
  return {ok, fmt("frequencies [%s] vs 0.125 +- %.4f (3 sigma) over %zu tiles", freqs.c_str(),
                  tol::isometry_sigmas * sigma, tol::isometry_samples)};
}

// ---- 7 ----------------------------------------------------------------------

Verdict privacy_game() {
  const auto t0 = Clock::now();
  GameConfig g;
  g.trials = tol::game_trials;
  g.seed = 1;
  const auto full = run_priv_game(g);
  GameConfig c = g;
  c.trials = tol::crippled_trials;
  c.params.transforms.permute = false;
  const auto crippled = run_priv_game(c);
  const bool full_ok = std::abs(full.advantage - 0.5) <= tol::game_sigmas * full.sigma;
  const bool power_ok = crippled.advantage > tol::crippled_min;
  return {full_ok && power_ok,
          fmt("full pipeline %.4f (CI95 %.4f..%.4f, |adv-0.5| = %.1f sigma, limit %.0f) over %zu trials: %s; "
              "PRP disabled %.4f over %zu trials (need > %.2f): %s; %.0f s",
              full.advantage, full.ci95.lo, full.ci95.hi, std::abs(full.advantage - 0.5) / full.sigma,
              tol::game_sigmas, g.trials, full_ok ? "ok" : "OUT OF BAND", crippled.advantage, c.trials,
              tol::crippled_min, power_ok ? "ok" : "too weak", seconds_since(t0))};
}

// ---- 8 ----------------------------------------------------------------------

struct CurveCheck {
  bool ok = true;
  std::uint64_t errors = 0;
  double peak = 0;
  std::size_t peak_at = 0;
};

CurveCheck check_curve(const std::vector<BenchPoint>& points, const fs::path& csv_path, const fs::path& plot_path) {
  {
    std::ofstream csv(csv_path), plot(plot_path);
    write_bench_csv(points, csv);
    write_bench_plot(points, plot);
  }
  const std::vector<std::size_t> want{1, 2, 4, 8, 16, 32, 64, 128, 256};
  CurveCheck c;
  c.ok = points.size() == want.size();
  for (std::size_t i = 0; c.ok && i < points.size(); ++i) {
    const auto& pt = points[i];
    c.ok &= pt.clients == want[i] && pt.throughput.n == tol::bench_reps && std::isfinite(pt.throughput.ci95) &&
            std::isfinite(pt.latency_mean_us.ci95) && pt.throughput.mean > 0;
    c.errors += pt.errors;
    if (pt.throughput.mean > c.peak) c.peak = pt.throughput.mean, c.peak_at = pt.clients;
  }
  c.ok &= c.errors == 0;
  return c;
}

Verdict bench(const fs::path& dir) {
  const auto t0 = Clock::now();
  BenchConfig c;
  c.repetitions = tol::bench_reps;
  const auto inproc = check_curve(run_bench(c), dir / "acceptance_bench.csv", dir / "acceptance_bench_plot.dat");
  const auto overhead = measure_overhead(c);

  CurveCheck tcp;
  {
    TcpStack stack(c.params, dir / "acceptance_bench_keys.hex");
    BenchConfig t = c;
    t.target = stack.endpoint();
    tcp = check_curve(run_bench(t), dir / "acceptance_bench_tcp.csv", dir / "acceptance_bench_tcp_plot.dat");
  }
  const bool ok = inproc.ok && tcp.ok && overhead.ratio < tol::overhead_max;
  return {ok, fmt("clients 1..256, 19:1, %zu reps, 95%% CIs; in-process: %llu errors, peak %.0f ops/s at %zu "
                  "clients; TCP gateway+3 backends: %llu errors, peak %.0f ops/s at %zu clients; overhead %.2fx "
                  "(%.1f us vs %.1f us null transform, limit %.0fx); %.0f s",
                  tol::bench_reps, (unsigned long long)inproc.errors, inproc.peak, inproc.peak_at,
                  (unsigned long long)tcp.errors, tcp.peak, tcp.peak_at, overhead.ratio,
                  overhead.encrypted_us.mean, overhead.null_us.mean, tol::overhead_max, seconds_since(t0))};
}

// ---- 9 ----------------------------------------------------------------------

Verdict fidelity() {
  SystemParams p;
  const auto moves = gen_path("fidelity", 2000, 9, p);
  std::vector<Rect> fences;
  for (const auto& s : gen_subscriptions(500, p.tile_len / 2, 9, p)) fences.push_back(s.box);
  const KeySet keys = simulation_keys(9, p.lambda);
  p.ope_mode = OpeMode::affine;
  const auto a = fidelity_report(moves, fences, p, keys);
  p.ope_mode = OpeMode::piecewise;
  const auto w = fidelity_report(moves, fences, p, keys);
  const bool ok = a.checks >= tol::fidelity_checks && a.mismatches() == 0 && w.checks >= tol::fidelity_checks;
  return {ok, fmt("affine %llu mismatches over %llu checks (%llu crossings); piecewise rate %.3g "
                  "(CI95 %.3g..%.3g, FP %llu, FN %llu), same-tile rate %.3g (CI95 %.3g..%.3g) over %llu "
                  "same-tile checks [reported only]",
                  (unsigned long long)a.mismatches(), (unsigned long long)a.checks,
                  (unsigned long long)a.positives, w.mismatch_rate(), w.mismatch_ci.lo, w.mismatch_ci.hi,
                  (unsigned long long)w.false_positives, (unsigned long long)w.false_negatives,
                  w.same_tile_checks ? double(w.mismatches()) / w.same_tile_checks : 0.0,
                  w.same_tile_mismatch_ci.lo, w.same_tile_mismatch_ci.hi,
                  (unsigned long long)w.same_tile_checks)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path dir = fs::current_path();
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else if (a == "--out-dir" && i + 1 < argc) {
      dir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N[,N...]] [--out-dir DIR]\n");
      return 2;
    }
  }
  fs::create_directories(dir);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"blow-up", blowup},
      {"server-choice totality", totality},
      {"gateway+backends vs plaintext oracle (affine)", [&] { return oracle_equivalence(dir); }},
      {"point membership (affine, piecewise)", membership},
      {"crypto primitives", primitives},
      {"isometry entropy", isometries},
      {"privacy game", privacy_game},
      {"performance", [&] { return bench(dir); }},
      {"fidelity", fidelity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
