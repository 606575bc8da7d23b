#include "privloc/gateway.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "privloc/error.hpp"

namespace privloc {

using nlohmann::json;

// ---- notifier ---------------------------------------------------------------

TcpNotifier::TcpNotifier(Logger* log, int timeout_ms)
    : log_(log), timeout_ms_(timeout_ms), worker_([this] { run(); }) {}

TcpNotifier::~TcpNotifier() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void TcpNotifier::deliver(const Notification& n) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(n);
  }
  cv_.notify_all();
}

void TcpNotifier::drain() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

void TcpNotifier::run() {
  std::int64_t next_id = 1;
  for (;;) {
    Notification n;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      n = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    if (n.callback.starts_with("tcp://")) {
      try {
        const auto [host, port] = net::parse_endpoint(n.callback);
        auto c = net::LineConnection::connect(host, port, timeout_ms_);
        const wire::Notify msg{n.sub_id, n.node_id, n.ts};
        c.send_line(wire::encode({std::string(wire::type::notify), next_id++, {}, wire::to_body(msg)}));
        c.read_line(timeout_ms_);
      } catch (const std::exception& e) {
        if (log_)
          log_->event(LogLevel::warn, "notify_failed", {{"sub_id", n.sub_id}, {"error", e.what()}},
                      {{"callback", n.callback}});
      }
    }
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    cv_.notify_all();
  }
}

// ---- gateway ----------------------------------------------------------------

Routing parse_routing(std::string_view s) {
  if (s == "balanced") return Routing::balanced;
  if (s == "first_fit") return Routing::first_fit;
  throw Error(ErrorCode::config, "routing: expected balanced or first_fit");
}

const char* routing_name(Routing r) noexcept {
  return r == Routing::balanced ? "balanced" : "first_fit";
}

Gateway::Gateway(GatewayOptions opts, const KeySet& keys, Backends backends,
                 std::shared_ptr<Notifier> notifier, Logger* log)
    : opts_(std::move(opts)),
      backends_(std::move(backends)),
      notifier_(std::move(notifier)),
      log_(log),
      rng_(opts_.seed ? *opts_.seed : std::random_device{}()) {
  opts_.params.validate();
  for (std::size_t i = 0; i < kBackends; ++i) {
    if (!backends_[i]) throw Error(ErrorCode::config, "backends: three backends required");
    ciphers_[i] = std::make_unique<TileCipher>(keys.keys[i], opts_.params.offsets[i], opts_.params);
  }
}

PartId Gateway::fresh_part_id() {
  std::lock_guard lock(rng_mu_);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng_()),
                static_cast<unsigned long long>(rng_()));
  return buf;
}

std::vector<Notification> Gateway::publish(const wire::Publish& r) {
  const SystemParams& p = opts_.params;
  const Segment seg{r.start, r.end};
  try {
    check_in_bounds(seg.p0, p);
    check_in_bounds(seg.p1, p);
    if (squared_length(seg) > p.max_move * p.max_move)
      throw Error(ErrorCode::distance_violation,
                  "movement longer than max_move=" + std::to_string(p.max_move) +
                      "; report at finer granularity");
  } catch (const Error&) {
    std::lock_guard lock(stats_mu_);
    ++stats_.rejected_publishes;
    throw;
  }
  const auto fits = fitting_tilings(seg, p);
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < kBackends; ++k)
    if (fits[k]) candidates.push_back(k);
  if (candidates.empty()) {
    if (log_) log_->event(LogLevel::error, "no_tiling_fits", {}, {{"start", {r.start.x, r.start.y}}, {"end", {r.end.x, r.end.y}}});
    throw Error(ErrorCode::internal, "no tiling holds the movement");
  }
  std::size_t i = candidates.front();
  if (opts_.routing == Routing::balanced && candidates.size() > 1) {
    std::lock_guard lock(rng_mu_);
    i = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng_)];
  }
  const EncryptedSegment eseg{ciphers_[i]->encrypt_point(seg.p0), ciphers_[i]->encrypt_point(seg.p1)};
  const std::vector<PartId> ids = backends_[i]->query_segment(eseg);

  std::vector<Notification> out;
  {
    std::shared_lock lock(state_mu_);
    std::set<std::string> seen;
    for (const auto& id : ids) {
      auto it = owners_[i].find(id);
      if (it == owners_[i].end()) continue;  // removed concurrently
      if (seen.insert(it->second.sub_id).second)
        out.push_back({it->second.sub_id, r.node_id, it->second.callback, r.ts});
    }
  }
  {
    std::lock_guard lock(stats_mu_);
    ++stats_.publishes;
    ++stats_.queries[i];
    stats_.notifications += out.size();
  }
  if (log_ && log_->enabled(LogLevel::info)) {
    log_->event(LogLevel::info, "publish", {{"backend", i + 1}, {"matches", out.size()}},
                {{"node_id", r.node_id},
                 {"start", {r.start.x, r.start.y}},
                 {"end", {r.end.x, r.end.y}}});
  }
  for (const auto& n : out) {
    if (notifier_) notifier_->deliver(n);
    if (log_) log_->event(LogLevel::info, "notify", {{"sub_id", n.sub_id}}, {{"node_id", n.node_id}});
  }
  return out;
}

void Gateway::subscribe(const wire::Subscribe& s) {
  const SystemParams& p = opts_.params;
  if (s.sub_id.empty()) throw Error(ErrorCode::invalid_argument, "sub_id must not be empty");
  if (!s.box.valid()) throw Error(ErrorCode::invalid_argument, "box: sw must not exceed ne");
  check_in_bounds(s.box.sw, p);
  check_in_bounds(s.box.ne, p);
  if (s.box.ne.x - s.box.sw.x > p.max_sub_side || s.box.ne.y - s.box.sw.y > p.max_sub_side)
    throw Error(ErrorCode::invalid_argument,
                "box: side exceeds max_sub_side=" + std::to_string(p.max_sub_side));

  SubRecord rec;
  rec.callback = s.callback;
  rec.queued_at = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < kBackends; ++i) {
    for (const RectPart& part : split_rect(s.box, p.offsets[i], p))
      rec.parts[i].push_back(ciphers_[i]->encrypt_rect(part.num, part.local, fresh_part_id()));
  }

  std::lock_guard batch(batch_mu_);
  {
    std::unique_lock lock(state_mu_);
    if (subs_.count(s.sub_id))
      throw Error(ErrorCode::invalid_argument, "sub_id '" + s.sub_id + "' already subscribed");
    for (std::size_t i = 0; i < kBackends; ++i)
      for (const auto& part : rec.parts[i]) owners_[i][part.part_id] = {s.sub_id, s.callback};
    subs_.emplace(s.sub_id, std::move(rec));
    pending_.push_back(s.sub_id);
  }
  if (log_) log_->event(LogLevel::info, "subscribe", {{"sub_id", s.sub_id}},
                        {{"box", {s.box.sw.x, s.box.sw.y, s.box.ne.x, s.box.ne.y}}});
  if (pending_.size() >= p.batch_k) flush_locked();
}

std::size_t Gateway::flush() {
  std::lock_guard batch(batch_mu_);
  return flush_locked();
}

void Gateway::tick(std::chrono::steady_clock::time_point now) {
  if (!opts_.flush_deadline) return;
  std::lock_guard batch(batch_mu_);
  {
    std::shared_lock lock(state_mu_);
    if (pending_.empty()) return;
    const auto& oldest = subs_.at(pending_.front());
    if (now - oldest.queued_at < *opts_.flush_deadline) return;
  }
  flush_locked();
}

std::size_t Gateway::flush_locked() {
  std::vector<std::string> batch;
  std::array<std::vector<EncryptedRect>, kBackends> parts;
  {
    std::unique_lock lock(state_mu_);
    batch.swap(pending_);
    for (const auto& id : batch)
      for (std::size_t i = 0; i < kBackends; ++i)
        parts[i].insert(parts[i].end(), subs_.at(id).parts[i].begin(), subs_.at(id).parts[i].end());
  }
  if (batch.empty()) return 0;
  {
    std::lock_guard lock(rng_mu_);
    for (auto& v : parts) std::shuffle(v.begin(), v.end(), rng_);
  }
  try {
    for (std::size_t i = 0; i < kBackends; ++i) {
      if (parts[i].empty()) continue;
      backends_[i]->insert_parts(parts[i]);
      std::lock_guard lock(stats_mu_);
      ++stats_.uploads[i];
      stats_.parts_stored[i] += parts[i].size();
    }
  } catch (...) {
    // Keep the batch for a retry; re-inserting the same part ids replaces
    // them on backends that already accepted the upload.
    std::unique_lock lock(state_mu_);
    pending_.insert(pending_.begin(), batch.begin(), batch.end());
    throw;
  }
  {
    std::unique_lock lock(state_mu_);
    for (const auto& id : batch) subs_.at(id).pending = false;
  }
  if (log_) log_->event(LogLevel::info, "batch_upload", {{"subscriptions", batch.size()},
                                                         {"parts", {parts[0].size(), parts[1].size(), parts[2].size()}}});
  return batch.size();
}

void Gateway::unsubscribe(const std::string& sub_id) {
  std::lock_guard batch(batch_mu_);
  std::array<std::vector<PartId>, kBackends> ids;
  bool pending = false;
  {
    std::unique_lock lock(state_mu_);
    auto it = subs_.find(sub_id);
    if (it == subs_.end()) throw Error(ErrorCode::not_found, "unknown sub_id '" + sub_id + "'");
    pending = it->second.pending;
    for (std::size_t i = 0; i < kBackends; ++i)
      for (const auto& part : it->second.parts[i]) ids[i].push_back(part.part_id);
    if (pending) {
      pending_.erase(std::remove(pending_.begin(), pending_.end(), sub_id), pending_.end());
      for (std::size_t i = 0; i < kBackends; ++i)
        for (const auto& id : ids[i]) owners_[i].erase(id);
      subs_.erase(it);
    }
  }
  if (!pending) {
    for (std::size_t i = 0; i < kBackends; ++i) {
      backends_[i]->delete_parts(ids[i]);
      std::lock_guard lock(stats_mu_);
      stats_.parts_stored[i] -= ids[i].size();
    }
    std::unique_lock lock(state_mu_);
    for (std::size_t i = 0; i < kBackends; ++i)
      for (const auto& id : ids[i]) owners_[i].erase(id);
    subs_.erase(sub_id);
  }
  if (log_) log_->event(LogLevel::info, "unsubscribe", {{"sub_id", sub_id}, {"was_pending", pending}});
}

GatewayStats Gateway::stats() const {
  GatewayStats s;
  {
    std::lock_guard lock(stats_mu_);
    s = stats_;
  }
  std::shared_lock lock(state_mu_);
  s.subscriptions = subs_.size();
  s.pending = pending_.size();
  return s;
}

std::array<std::vector<EncryptedRect>, kBackends> Gateway::parts_of(const std::string& sub_id) const {
  std::shared_lock lock(state_mu_);
  auto it = subs_.find(sub_id);
  if (it == subs_.end()) throw Error(ErrorCode::not_found, "unknown sub_id '" + sub_id + "'");
  return it->second.parts;
}

// ---- client protocol --------------------------------------------------------

namespace {

struct Malformed : Error {
  explicit Malformed(const Error& e) : Error(e) {}
};

template <typename F>
auto parse_body(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Malformed(e);
  }
}

}  // namespace

wire::Envelope Gateway::handle(const wire::Envelope& req) {
  try {
    if (!opts_.auth.empty() && req.auth != opts_.auth)
      return wire::make_error(req.id, error_code_name(ErrorCode::unauthorized), "bad token");
    if (req.type == wire::type::publish) {
      const auto msg = parse_body([&] { return wire::publish_from(req.body); });
      json notes = json::array();
      for (const auto& n : publish(msg))
        notes.push_back(wire::to_body(wire::Notify{n.sub_id, n.node_id, n.ts}));
      return wire::make_ack(req.id, {{"notifications", std::move(notes)}});
    }
    if (req.type == wire::type::subscribe) {
      const auto msg = parse_body([&] { return wire::subscribe_from(req.body); });
      subscribe(msg);
      std::shared_lock lock(state_mu_);
      auto it = subs_.find(msg.sub_id);
      return wire::make_ack(req.id, {{"sub_id", msg.sub_id},
                                     {"pending", it != subs_.end() && it->second.pending}});
    }
    if (req.type == wire::type::unsubscribe) {
      const auto msg = parse_body([&] { return wire::unsubscribe_from(req.body); });
      unsubscribe(msg.sub_id);
      return wire::make_ack(req.id, {{"sub_id", msg.sub_id}});
    }
    if (req.type == wire::type::flush) return wire::make_ack(req.id, {{"uploaded", flush()}});
    return wire::make_error(req.id, error_code_name(ErrorCode::protocol),
                            "unsupported message type '" + req.type + "'");
  } catch (const Malformed&) {
    throw;
  } catch (const Error& e) {
    return wire::make_error(req.id, error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return wire::make_error(req.id, error_code_name(ErrorCode::internal), e.what());
  }
}

net::Reply Gateway::handle(std::string_view line) {
  wire::Envelope req;
  try {
    req = wire::decode(line);
    return {wire::encode(handle(req)), false};
  } catch (const Error& e) {
    return {wire::encode(wire::make_error(req.id, error_code_name(e.code()), e.what())), true};
  }
}

// ---- config -----------------------------------------------------------------

GatewayConfig gateway_config_from_json(const json& j, bool use_env) {
  GatewayConfig c;
  if (!j.is_object() && !j.is_null()) throw Error(ErrorCode::config, "config: expected an object");
  auto field = [&](const char* key) -> const json* {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  };
  try {
    if (auto v = field("params")) from_json(*v, c.params);
    if (auto v = field("host")) c.host = v->get<std::string>();
    if (auto v = field("port")) c.port = v->get<std::uint16_t>();
    if (auto v = field("keys")) c.keys_path = v->get<std::string>();
    if (auto v = field("backends")) {
      if (!v->is_array() || v->size() != kBackends)
        throw Error(ErrorCode::config, "backends: expected an array of three endpoints");
      for (std::size_t i = 0; i < kBackends; ++i) c.backends[i] = (*v)[i].get<std::string>();
    }
    if (auto v = field("auth")) c.auth = v->get<std::string>();
    if (auto v = field("backend_auth")) c.backend_auth = v->get<std::string>();
    if (auto v = field("flush_deadline_ms")) c.flush_deadline_ms = v->get<std::int64_t>();
    if (auto v = field("seed")) c.seed = v->get<std::uint64_t>();
    if (auto v = field("log_level")) c.log_level = parse_log_level(v->get<std::string>());
    if (auto v = field("routing")) c.routing = parse_routing(v->get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("config: ") + e.what());
  }
  if (use_env) {
    if (const char* port = std::getenv("PRIVLOC_PORT")) {
      char* end = nullptr;
      const long v = std::strtol(port, &end, 10);
      if (*port == '\0' || *end != '\0' || v < 0 || v > 65535)
        throw Error(ErrorCode::config, "PRIVLOC_PORT: not a port number");
      c.port = static_cast<std::uint16_t>(v);
    }
    if (const char* keys = std::getenv("PRIVLOC_KEYS")) c.keys_path = keys;
  }
  if (c.flush_deadline_ms && *c.flush_deadline_ms <= 0)
    throw Error(ErrorCode::config, "flush_deadline_ms: must be positive");
  c.params.validate();
  return c;
}

}  // namespace privloc
