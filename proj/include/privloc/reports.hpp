#pragma once

// JSON-in, JSON-out drivers for the simulator and analysis harness; the C
// API and the CLI are thin layers over these.

#include <string>

#include <nlohmann/json.hpp>

namespace privloc {

// kind: simulate | blowup | fidelity | priv-game | bench. Missing request
// fields take defaults; malformed ones raise Error(config) naming the field.
nlohmann::json run_report(const std::string& kind, const nlohmann::json& request);

}  // namespace privloc
