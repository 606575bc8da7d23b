#pragma once

// The trusted gateway: the only component that holds keys and sees
// plaintext. It encrypts, splits and batches subscriptions, routes movement
// queries to one backend per movement and turns matched part ids back into
// notifications.

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "privloc/backend_client.hpp"
#include "privloc/crypto.hpp"
#include "privloc/geometry.hpp"
#include "privloc/log.hpp"
#include "privloc/net.hpp"
#include "privloc/params.hpp"
#include "privloc/wire.hpp"
#include "privloc/wire_client.hpp"

namespace privloc {

inline constexpr std::size_t kBackends = 3;

struct Notification {
  std::string sub_id;
  std::string node_id;
  std::string callback;
  std::int64_t ts = 0;
  bool operator==(const Notification&) const = default;
};

class Notifier {
 public:
  virtual ~Notifier() = default;
  virtual void deliver(const Notification& n) = 0;
};

// Sends notify envelopes to "tcp://host:port" callbacks from a worker
// thread. Other callback schemes are ignored.
class TcpNotifier : public Notifier {
 public:
  explicit TcpNotifier(Logger* log = nullptr, int timeout_ms = 2000);
  ~TcpNotifier() override;
  void deliver(const Notification& n) override;
  // Blocks until the queue is empty.
  void drain();

 private:
  void run();

  Logger* log_;
  int timeout_ms_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Notification> queue_;
  bool busy_ = false;
  bool stop_ = false;
  std::thread worker_;
};

// Which backend answers a movement that fits several tilings. first_fit
// takes the lowest index (choose_server); balanced picks uniformly among the
// fitting ones, which spreads queries evenly over the three backends.
enum class Routing { balanced, first_fit };

Routing parse_routing(std::string_view s);
const char* routing_name(Routing r) noexcept;

struct GatewayOptions {
  SystemParams params;
  Routing routing = Routing::balanced;
  std::string auth;                     // client bearer token, empty: none
  std::optional<std::uint64_t> seed;    // shuffle and part-id randomness
  std::optional<std::chrono::milliseconds> flush_deadline;
};

struct GatewayStats {
  std::array<std::uint64_t, kBackends> queries{};
  std::array<std::uint64_t, kBackends> uploads{};       // insert_parts calls
  std::array<std::uint64_t, kBackends> parts_stored{};
  std::uint64_t publishes = 0;
  std::uint64_t rejected_publishes = 0;
  std::uint64_t notifications = 0;
  std::size_t subscriptions = 0;
  std::size_t pending = 0;
};

class Gateway {
 public:
  using Backends = std::array<std::shared_ptr<BackendClient>, kBackends>;

  Gateway(GatewayOptions opts, const KeySet& keys, Backends backends,
          std::shared_ptr<Notifier> notifier = nullptr, Logger* log = nullptr);

  const SystemParams& params() const { return opts_.params; }

  // Throws Error(invalid_argument) for off-map points, Error(distance_violation)
  // when the movement exceeds max_move, Error(unavailable) when the backend
  // cannot be reached.
  std::vector<Notification> publish(const wire::Publish& r);

  // Throws Error(invalid_argument) for invalid, off-map or oversized boxes
  // and for a sub_id already in use.
  void subscribe(const wire::Subscribe& s);

  // Throws Error(not_found) for an unknown sub_id.
  void unsubscribe(const std::string& sub_id);

  // Uploads every pending subscription now, even below the threshold.
  // Returns how many subscriptions were uploaded.
  std::size_t flush();

  // Flushes when the oldest pending subscription is past the deadline.
  void tick(std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now());

  GatewayStats stats() const;

  // Parts the gateway holds for sub_id, per backend (pending or stored).
  std::array<std::vector<EncryptedRect>, kBackends> parts_of(const std::string& sub_id) const;

  // Client protocol. handle(line) asks the transport to close the
  // connection after replying to undecodable input.
  wire::Envelope handle(const wire::Envelope& req);
  net::Reply handle(std::string_view line);

 private:
  struct SubRecord {
    std::string callback;
    std::array<std::vector<EncryptedRect>, kBackends> parts;
    bool pending = true;
    std::chrono::steady_clock::time_point queued_at;
  };
  struct PartOwner {
    std::string sub_id;
    std::string callback;
  };

  PartId fresh_part_id();
  std::size_t flush_locked();

  GatewayOptions opts_;
  std::array<std::unique_ptr<TileCipher>, kBackends> ciphers_;
  Backends backends_;
  std::shared_ptr<Notifier> notifier_;
  Logger* log_;

  // Lock order: batch_mu_ then state_mu_.
  std::mutex batch_mu_;                       // serializes flushes and removals
  mutable std::shared_mutex state_mu_;        // subs_, owners_, pending_
  std::unordered_map<std::string, SubRecord> subs_;
  std::array<std::unordered_map<PartId, PartOwner>, kBackends> owners_;  // the PartMap
  std::vector<std::string> pending_;          // BatchBuffer, arrival order

  std::mutex rng_mu_;
  std::mt19937_64 rng_;

  mutable std::mutex stats_mu_;
  GatewayStats stats_;
};

// Parsed gateway service configuration. Environment variables PRIVLOC_PORT
// and PRIVLOC_KEYS override "port" and "keys".
struct GatewayConfig {
  SystemParams params;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7400;
  std::string keys_path = "keys.hex";
  std::array<std::string, kBackends> backends{"tcp://127.0.0.1:7401", "tcp://127.0.0.1:7402",
                                              "tcp://127.0.0.1:7403"};
  std::string auth;
  std::string backend_auth;
  std::optional<std::int64_t> flush_deadline_ms;
  std::optional<std::uint64_t> seed;
  Routing routing = Routing::balanced;
  LogLevel log_level = LogLevel::info;
};

GatewayConfig gateway_config_from_json(const nlohmann::json& j, bool use_env = true);

}  // namespace privloc
