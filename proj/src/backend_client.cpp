#include "privloc/backend_client.hpp"

#include "privloc/error.hpp"
#include "privloc/wire.hpp"

namespace privloc {

std::size_t LocalBackend::insert_parts(const std::vector<EncryptedRect>& parts) {
  return index_->insert(parts).inserted;
}

std::vector<PartId> LocalBackend::query_segment(const EncryptedSegment& seg) {
  return index_->query(seg);
}

std::size_t LocalBackend::delete_parts(const std::vector<PartId>& ids) {
  return index_->erase(ids);
}

// ---- wire -------------------------------------------------------------------

WireBackend::WireBackend(Transport transport, std::string auth)
    : transport_(std::move(transport)), auth_(std::move(auth)) {}

nlohmann::json WireBackend::call(std::string_view type, nlohmann::json body) {
  const wire::Envelope req{std::string(type), next_id_++, auth_, std::move(body)};
  const std::string line = wire::encode(req);
  if (tap_) tap_(true, line);
  const std::string reply_line = transport_(line);
  if (tap_) tap_(false, reply_line);
  const wire::Envelope rep = wire::decode(reply_line);
  if (rep.id != req.id) throw Error(ErrorCode::protocol, "reply id does not match request");
  if (rep.type == wire::type::error)
    throw Error(parse_error_code(rep.body.value("code", "internal")),
                "backend: " + rep.body.value("message", ""));
  if (rep.type != wire::type::ack) throw Error(ErrorCode::protocol, "unexpected reply type");
  return rep.body;
}

std::size_t WireBackend::insert_parts(const std::vector<EncryptedRect>& parts) {
  const auto body = call(wire::type::insert_parts, wire::to_body(wire::InsertParts{parts}));
  return static_cast<std::size_t>(wire::require_int(body, "inserted"));
}

std::vector<PartId> WireBackend::query_segment(const EncryptedSegment& seg) {
  const auto body = call(wire::type::query_segment, wire::to_body(wire::QuerySegment{seg}));
  return wire::delete_parts_from(nlohmann::json{{"part_ids", wire::require(body, "part_ids")}})
      .part_ids;
}

std::size_t WireBackend::delete_parts(const std::vector<PartId>& ids) {
  const auto body = call(wire::type::delete_parts, wire::to_body(wire::DeleteParts{ids}));
  return static_cast<std::size_t>(wire::require_int(body, "deleted"));
}

Transport loopback_transport(std::shared_ptr<BackendService> service) {
  return [service](const std::string& line) { return service->handle(std::string_view(line)).line; };
}

namespace {

class TcpPool {
 public:
  TcpPool(std::string host, std::uint16_t port, int timeout_ms)
      : host_(std::move(host)), port_(port), timeout_ms_(timeout_ms) {}

  std::string call(const std::string& line) {
    for (int attempt = 0;; ++attempt) {
      net::LineConnection c = take();
      try {
        c.send_line(line);
        auto reply = c.read_line(timeout_ms_);
        if (!reply) throw Error(ErrorCode::unavailable, "backend closed the connection");
        give_back(std::move(c));
        return *reply;
      } catch (const Error& e) {
        // A pooled connection may have gone stale; retry once on a new one.
        if (attempt > 0 || e.code() != ErrorCode::unavailable) throw;
      }
    }
  }

 private:
  net::LineConnection take() {
    {
      std::lock_guard lock(mu_);
      if (!idle_.empty()) {
        net::LineConnection c = std::move(idle_.back());
        idle_.pop_back();
        return c;
      }
    }
    return net::LineConnection::connect(host_, port_, timeout_ms_);
  }

  void give_back(net::LineConnection c) {
    std::lock_guard lock(mu_);
    idle_.push_back(std::move(c));
  }

  std::string host_;
  std::uint16_t port_;
  int timeout_ms_;
  std::mutex mu_;
  std::vector<net::LineConnection> idle_;
};

}  // namespace

Transport tcp_transport(const std::string& host, std::uint16_t port, int timeout_ms) {
  auto pool = std::make_shared<TcpPool>(host, port, timeout_ms);
  return [pool](const std::string& line) { return pool->call(line); };
}

// ---- recording --------------------------------------------------------------

std::size_t RecordingBackend::insert_parts(const std::vector<EncryptedRect>& parts) {
  if (obs_.on_insert) obs_.on_insert(parts);
  return inner_->insert_parts(parts);
}

std::vector<PartId> RecordingBackend::query_segment(const EncryptedSegment& seg) {
  auto ids = inner_->query_segment(seg);
  if (obs_.on_query) obs_.on_query(seg, ids);
  return ids;
}

std::size_t RecordingBackend::delete_parts(const std::vector<PartId>& ids) {
  if (obs_.on_delete) obs_.on_delete(ids);
  return inner_->delete_parts(ids);
}

}  // namespace privloc
