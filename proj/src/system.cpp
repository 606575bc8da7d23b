#include "privloc/system.hpp"

namespace privloc {

InProcessSystem::InProcessSystem(const SystemParams& params, const KeySet& keys,
                                 InProcessOptions opts) {
  Gateway::Backends clients;
  for (std::size_t i = 0; i < kBackends; ++i) {
    std::shared_ptr<BackendClient> client;
    if (opts.mode == BackendMode::local) {
      indexes_[i] = std::make_shared<SpatialIndex>(params.ope_range, opts.index);
      indexes_[i]->set_verify(false);
      client = std::make_shared<LocalBackend>(indexes_[i]);
    } else {
      BackendOptions bo;
      bo.slot_width = params.ope_range;
      bo.index = opts.index;
      services_[i] = std::make_shared<BackendService>(bo);
      indexes_[i] = std::shared_ptr<SpatialIndex>(services_[i], &services_[i]->index());
      auto wb = std::make_shared<WireBackend>(loopback_transport(services_[i]));
      if (opts.tap) {
        wb->set_tap([tap = opts.tap, i](bool outbound, std::string_view line) {
          tap(i, outbound, line);
        });
      }
      client = wb;
    }
    clients[i] = opts.wrap ? opts.wrap(i, client) : client;
  }
  GatewayOptions go;
  go.params = params;
  go.routing = opts.routing;
  go.seed = opts.seed;
  gateway_ = std::make_unique<Gateway>(go, keys, clients, opts.notifier);
}

}  // namespace privloc
