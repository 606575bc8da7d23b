#pragma once

// Client <-> gateway bodies: these carry plaintext and never leave the
// trusted side.

#include <string>
#include <vector>

#include "privloc/geometry.hpp"
#include "privloc/wire.hpp"

namespace privloc::wire {

struct Publish {
  std::string node_id;
  Point start;
  Point end;
  std::int64_t ts = 0;
};

struct Subscribe {
  std::string sub_id;
  Rect box;
  std::string callback;
};

struct Unsubscribe {
  std::string sub_id;
};

struct Notify {
  std::string sub_id;
  std::string node_id;
  std::int64_t ts = 0;
  bool operator==(const Notify&) const = default;
};

nlohmann::json to_body(const Publish& m);
nlohmann::json to_body(const Subscribe& m);
nlohmann::json to_body(const Unsubscribe& m);
nlohmann::json to_body(const Notify& m);

Publish publish_from(const nlohmann::json& body);
Subscribe subscribe_from(const nlohmann::json& body);
Unsubscribe unsubscribe_from(const nlohmann::json& body);
Notify notify_from(const nlohmann::json& body);

}  // namespace privloc::wire
