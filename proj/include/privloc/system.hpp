#pragma once

// A gateway wired to three in-process backends, for tests, the simulator
// and the analysis harness.

#include <array>
#include <functional>
#include <memory>

#include "privloc/backend.hpp"
#include "privloc/backend_client.hpp"
#include "privloc/gateway.hpp"

namespace privloc {

enum class BackendMode {
  local,      // direct SpatialIndex calls
  loopback,   // full wire encoding through BackendService, no sockets
};

struct InProcessOptions {
  BackendMode mode = BackendMode::local;
  IndexKind index = IndexKind::grid;
  Routing routing = Routing::balanced;
  std::optional<std::uint64_t> seed;
  // Loopback mode only: sees every line sent to or received from backend i.
  std::function<void(std::size_t backend, bool outbound, std::string_view line)> tap;
  // Optional decorator around each backend client (e.g. RecordingBackend).
  std::function<std::shared_ptr<BackendClient>(std::size_t backend,
                                               std::shared_ptr<BackendClient> inner)>
      wrap;
  std::shared_ptr<Notifier> notifier;
};

class InProcessSystem {
 public:
  InProcessSystem(const SystemParams& params, const KeySet& keys, InProcessOptions opts = {});

  Gateway& gateway() { return *gateway_; }
  SpatialIndex& index(std::size_t i) { return *indexes_[i]; }

 private:
  std::array<std::shared_ptr<SpatialIndex>, kBackends> indexes_;
  std::array<std::shared_ptr<BackendService>, kBackends> services_;
  std::unique_ptr<Gateway> gateway_;
};

}  // namespace privloc
