#include "privloc/wire.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "privloc/error.hpp"
#include "privloc/wire_client.hpp"

namespace privloc::wire {

using nlohmann::json;

namespace {

[[noreturn]] void protocol_error(const std::string& what) {
  throw Error(ErrorCode::protocol, what);
}

constexpr std::array<std::string_view, 10> kTypes = {
    type::publish,      type::subscribe,     type::unsubscribe, type::notify,
    type::insert_parts, type::query_segment, type::delete_parts, type::ack,
    type::error,        type::flush};

json point_json(const EncryptedPoint& p) { return {{"ex", p.ex}, {"ey", p.ey}}; }

EncryptedPoint encrypted_point_from(const json& j) {
  return {require_int(j, "ex"), require_int(j, "ey")};
}

json plain_point(const Point& p) { return {{"x", p.x}, {"y", p.y}}; }

Point plain_point_from(const json& j) { return {require_int(j, "x"), require_int(j, "y")}; }

}  // namespace

bool known_type(std::string_view t) {
  return std::find(kTypes.begin(), kTypes.end(), t) != kTypes.end();
}

const json& require(const json& obj, std::string_view key) {
  if (!obj.is_object()) protocol_error("expected an object around '" + std::string(key) + "'");
  auto it = obj.find(key);
  if (it == obj.end()) protocol_error("missing field '" + std::string(key) + "'");
  return *it;
}

std::int64_t require_int(const json& obj, std::string_view key) {
  const json& v = require(obj, key);
  if (!v.is_number_integer()) protocol_error("field '" + std::string(key) + "' must be an integer");
  if (v.is_number_unsigned() &&
      v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
    protocol_error("field '" + std::string(key) + "' is out of range");
  return v.get<std::int64_t>();
}

std::string require_string(const json& obj, std::string_view key) {
  const json& v = require(obj, key);
  if (!v.is_string()) protocol_error("field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

std::string encode(const Envelope& env) {
  json j = {{"type", env.type}, {"id", env.id}, {"body", env.body}};
  if (!env.auth.empty()) j["auth"] = env.auth;
  return j.dump();
}

Envelope decode(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) protocol_error("malformed JSON");
  if (!j.is_object()) protocol_error("envelope must be a JSON object");
  Envelope env;
  env.type = require_string(j, "type");
  if (!known_type(env.type)) protocol_error("unknown message type '" + env.type + "'");
  env.id = require_int(j, "id");
  if (auto it = j.find("auth"); it != j.end()) {
    if (!it->is_string()) protocol_error("field 'auth' must be a string");
    env.auth = it->get<std::string>();
  }
  if (auto it = j.find("body"); it != j.end()) {
    if (!it->is_object()) protocol_error("field 'body' must be an object");
    env.body = std::move(*it);
  }
  return env;
}

Envelope make_ack(std::int64_t id, json body) {
  return Envelope{std::string(type::ack), id, {}, std::move(body)};
}

Envelope make_error(std::int64_t id, std::string_view code, std::string_view message) {
  return Envelope{std::string(type::error), id, {},
                  json{{"code", code}, {"message", message}}};
}

// ---- backend bodies ---------------------------------------------------------

json encrypted_rect_json(const EncryptedRect& r) {
  return {{"part_id", r.part_id}, {"sw", point_json(r.sw)}, {"ne", point_json(r.ne)}};
}

EncryptedRect encrypted_rect_from(const json& j) {
  return {require_string(j, "part_id"), encrypted_point_from(require(j, "sw")),
          encrypted_point_from(require(j, "ne"))};
}

json to_body(const InsertParts& m) {
  json parts = json::array();
  for (const auto& p : m.parts) parts.push_back(encrypted_rect_json(p));
  return {{"parts", std::move(parts)}};
}

json to_body(const QuerySegment& m) {
  return {{"ex0", m.seg.p0.ex}, {"ey0", m.seg.p0.ey},
          {"ex1", m.seg.p1.ex}, {"ey1", m.seg.p1.ey}};
}

json to_body(const DeleteParts& m) { return {{"part_ids", m.part_ids}}; }

InsertParts insert_parts_from(const json& body) {
  const json& parts = require(body, "parts");
  if (!parts.is_array()) protocol_error("field 'parts' must be an array");
  InsertParts m;
  m.parts.reserve(parts.size());
  for (const auto& p : parts) m.parts.push_back(encrypted_rect_from(p));
  return m;
}

QuerySegment query_segment_from(const json& body) {
  return {{{require_int(body, "ex0"), require_int(body, "ey0")},
           {require_int(body, "ex1"), require_int(body, "ey1")}}};
}

DeleteParts delete_parts_from(const json& body) {
  const json& ids = require(body, "part_ids");
  if (!ids.is_array()) protocol_error("field 'part_ids' must be an array");
  DeleteParts m;
  for (const auto& id : ids) {
    if (!id.is_string()) protocol_error("part ids must be strings");
    m.part_ids.push_back(id.get<std::string>());
  }
  return m;
}

std::vector<std::string> backend_field_paths() {
  return {
      "insert_parts.parts[].part_id", "insert_parts.parts[].sw.ex",
      "insert_parts.parts[].sw.ey",   "insert_parts.parts[].ne.ex",
      "insert_parts.parts[].ne.ey",   "query_segment.ex0",
      "query_segment.ey0",            "query_segment.ex1",
      "query_segment.ey1",            "delete_parts.part_ids[]",
      "ack.inserted",                 "ack.rejected[]",
      "ack.part_ids[]",               "ack.deleted",
      "error.code",                   "error.message",
  };
}

namespace {

void collect_paths(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string path = prefix + "." + it.key();
      if (it->is_object() || it->is_array())
        collect_paths(*it, path, out);
      else
        out.push_back(path);
    }
  } else if (j.is_array()) {
    if (j.empty()) out.push_back(prefix + "[]");
    for (const auto& e : j) {
      if (e.is_object() || e.is_array())
        collect_paths(e, prefix + "[]", out);
      else
        out.push_back(prefix + "[]");
    }
  }
}

}  // namespace

void check_backend_schema(std::string_view type, const json& body) {
  static const std::vector<std::string> allowed = backend_field_paths();
  std::vector<std::string> paths;
  collect_paths(body, std::string(type), paths);
  for (const auto& p : paths) {
    if (std::find(allowed.begin(), allowed.end(), p) == allowed.end())
      protocol_error("field '" + p + "' is not part of the backend schema");
  }
}

// ---- client bodies ----------------------------------------------------------

json to_body(const Publish& m) {
  return {{"node_id", m.node_id},
          {"start", plain_point(m.start)},
          {"end", plain_point(m.end)},
          {"ts", m.ts}};
}

json to_body(const Subscribe& m) {
  return {{"sub_id", m.sub_id},
          {"box", {{"sw", plain_point(m.box.sw)}, {"ne", plain_point(m.box.ne)}}},
          {"callback", m.callback}};
}

json to_body(const Unsubscribe& m) { return {{"sub_id", m.sub_id}}; }

json to_body(const Notify& m) {
  return {{"sub_id", m.sub_id}, {"node_id", m.node_id}, {"ts", m.ts}};
}

Publish publish_from(const json& body) {
  Publish m;
  m.node_id = require_string(body, "node_id");
  m.start = plain_point_from(require(body, "start"));
  m.end = plain_point_from(require(body, "end"));
  m.ts = require_int(body, "ts");
  return m;
}

Subscribe subscribe_from(const json& body) {
  Subscribe m;
  m.sub_id = require_string(body, "sub_id");
  const json& box = require(body, "box");
  m.box = {plain_point_from(require(box, "sw")), plain_point_from(require(box, "ne"))};
  if (auto it = body.find("callback"); it != body.end() && it->is_string())
    m.callback = it->get<std::string>();
  return m;
}

Unsubscribe unsubscribe_from(const json& body) { return {require_string(body, "sub_id")}; }

Notify notify_from(const json& body) {
  return {require_string(body, "sub_id"), require_string(body, "node_id"),
          require_int(body, "ts")};
}

}  // namespace privloc::wire
