#pragma once

// Gateway-side handles on the three backends: in-process short circuit,
// wire-encoded (loopback or TCP), and a recording decorator.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "privloc/backend.hpp"
#include "privloc/encrypted.hpp"
#include "privloc/net.hpp"

namespace privloc {

class BackendClient {
 public:
  virtual ~BackendClient() = default;
  virtual std::size_t insert_parts(const std::vector<EncryptedRect>& parts) = 0;
  virtual std::vector<PartId> query_segment(const EncryptedSegment& seg) = 0;
  virtual std::size_t delete_parts(const std::vector<PartId>& ids) = 0;
};

// Calls a SpatialIndex directly, bypassing encoding and sockets.
class LocalBackend : public BackendClient {
 public:
  explicit LocalBackend(std::shared_ptr<SpatialIndex> index) : index_(std::move(index)) {}
  std::size_t insert_parts(const std::vector<EncryptedRect>& parts) override;
  std::vector<PartId> query_segment(const EncryptedSegment& seg) override;
  std::size_t delete_parts(const std::vector<PartId>& ids) override;
  SpatialIndex& index() { return *index_; }

 private:
  std::shared_ptr<SpatialIndex> index_;
};

// Request line in, reply line out.
using Transport = std::function<std::string(const std::string& line)>;

// Sees every line crossing the connection; outbound is true for requests.
using WireTap = std::function<void(bool outbound, std::string_view line)>;

// Speaks the wire protocol over any transport. Error replies are rethrown
// as Error with the code the backend reported.
class WireBackend : public BackendClient {
 public:
  WireBackend(Transport transport, std::string auth = {});
  void set_tap(WireTap tap) { tap_ = std::move(tap); }

  std::size_t insert_parts(const std::vector<EncryptedRect>& parts) override;
  std::vector<PartId> query_segment(const EncryptedSegment& seg) override;
  std::size_t delete_parts(const std::vector<PartId>& ids) override;

 private:
  nlohmann::json call(std::string_view type, nlohmann::json body);

  Transport transport_;
  std::string auth_;
  WireTap tap_;
  std::atomic<std::int64_t> next_id_{1};
};

// BackendService::handle in-process: full encoding, no sockets.
Transport loopback_transport(std::shared_ptr<BackendService> service);

// Pooled TCP connections to host:port; one retry on a fresh connection.
Transport tcp_transport(const std::string& host, std::uint16_t port, int timeout_ms = 10000);

// Forwards to an inner client and reports every call to observers.
class RecordingBackend : public BackendClient {
 public:
  struct Observer {
    std::function<void(const std::vector<EncryptedRect>&)> on_insert;
    std::function<void(const EncryptedSegment&, const std::vector<PartId>&)> on_query;
    std::function<void(const std::vector<PartId>&)> on_delete;
  };

  RecordingBackend(std::shared_ptr<BackendClient> inner, Observer obs)
      : inner_(std::move(inner)), obs_(std::move(obs)) {}

  std::size_t insert_parts(const std::vector<EncryptedRect>& parts) override;
  std::vector<PartId> query_segment(const EncryptedSegment& seg) override;
  std::size_t delete_parts(const std::vector<PartId>& ids) override;

 private:
  std::shared_ptr<BackendClient> inner_;
  Observer obs_;
};

}  // namespace privloc
