#pragma once

// Untrusted spatial store. Sees only encrypted coordinates; the slot width
// is an opaque integer handed over in its configuration.

#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "privloc/encrypted.hpp"
#include "privloc/net.hpp"
#include "privloc/wire.hpp"

namespace privloc {

enum class IndexKind { grid, rtree };

IndexKind parse_index_kind(std::string_view s);

struct InsertResult {
  std::size_t inserted = 0;
  std::vector<PartId> rejected;   // ids of malformed entries ("#<pos>" when the id is empty)
};

class SpatialIndex {
 public:
  explicit SpatialIndex(std::int64_t slot_width, IndexKind kind = IndexKind::grid);
  ~SpatialIndex();
  SpatialIndex(const SpatialIndex&) = delete;
  SpatialIndex& operator=(const SpatialIndex&) = delete;

  // Malformed entries (empty id, unnormalized corners, negative values,
  // corners in different slots) are rejected; a duplicate id replaces the
  // stored box. The batch becomes visible atomically.
  InsertResult insert(const std::vector<EncryptedRect>& entries);

  // Sorted ids of every stored box meeting the closed segment. Throws
  // Error(protocol) when the endpoints sit in different slots.
  std::vector<PartId> query(const EncryptedSegment& seg) const;

  // Linear scan over all entries; the reference for query().
  std::vector<PartId> scan(const EncryptedSegment& seg) const;

  std::size_t erase(const std::vector<PartId>& ids);

  std::size_t size() const;
  std::size_t slot_count() const;
  std::int64_t slot_width() const { return slot_width_; }

  // When on, every query is cross-checked against scan() and a mismatch
  // throws Error(internal). On by default in debug builds.
  void set_verify(bool on) { verify_ = on; }

 private:
  struct Slot;
  struct Entry;
  struct SlotKey {
    std::int64_t sx, sy;
    bool operator==(const SlotKey&) const = default;
  };
  struct SlotHash {
    std::size_t operator()(const SlotKey& k) const noexcept;
  };

  SlotKey slot_of(const EncryptedPoint& p) const;
  bool well_formed(const EncryptedRect& r) const;
  void remove_locked(std::uint32_t handle);

  std::int64_t slot_width_;
  IndexKind kind_;
  bool verify_;
  mutable std::shared_mutex mu_;
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> free_;
  std::unordered_map<PartId, std::uint32_t> by_id_;
  std::unordered_map<SlotKey, std::unique_ptr<Slot>, SlotHash> slots_;
};

struct BackendOptions {
  std::int64_t slot_width = 1 << 16;
  IndexKind index = IndexKind::grid;
  std::string data_dir;   // empty: no persistence
  std::string auth;       // expected bearer token, empty: none
  bool verify = false;
};

// Message handler for one backend. Thread-safe.
class BackendService {
 public:
  explicit BackendService(const BackendOptions& opts);

  // One request line in, one reply line out. Undecodable input yields an
  // error reply and asks the transport to close the connection.
  net::Reply handle(std::string_view line);

  // Same, on an already decoded envelope; never throws.
  wire::Envelope handle(const wire::Envelope& req);

  SpatialIndex& index() { return index_; }

 private:
  wire::Envelope dispatch(const wire::Envelope& req, bool& malformed);
  void replay();
  void append_log(std::string_view op, const nlohmann::json& body);

  BackendOptions opts_;
  SpatialIndex index_;
  std::mutex log_mu_;
  std::ofstream log_;
};

}  // namespace privloc
