#pragma once

// Newline-delimited JSON envelopes shared by every connection, plus the
// gateway <-> backend message bodies. Nothing in this header can carry a
// plaintext coordinate or a node identity; client-facing bodies live in
// wire_client.hpp.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "privloc/encrypted.hpp"

namespace privloc::wire {

namespace type {
inline constexpr std::string_view publish = "publish";
inline constexpr std::string_view subscribe = "subscribe";
inline constexpr std::string_view unsubscribe = "unsubscribe";
inline constexpr std::string_view notify = "notify";
inline constexpr std::string_view insert_parts = "insert_parts";
inline constexpr std::string_view query_segment = "query_segment";
inline constexpr std::string_view delete_parts = "delete_parts";
inline constexpr std::string_view ack = "ack";
inline constexpr std::string_view error = "error";
inline constexpr std::string_view flush = "flush";
}  // namespace type

bool known_type(std::string_view t);

struct Envelope {
  std::string type;
  std::int64_t id = 0;
  std::string auth;   // omitted on the wire when empty
  nlohmann::json body = nlohmann::json::object();
};

// One line, no trailing newline. Keys are emitted in sorted order, which
// makes the output canonical.
std::string encode(const Envelope& env);

// Throws Error(protocol) on malformed JSON, a non-object, a missing or
// mistyped type/id, or an unknown type. Unknown fields are ignored.
Envelope decode(std::string_view line);

Envelope make_ack(std::int64_t id, nlohmann::json body = nlohmann::json::object());
Envelope make_error(std::int64_t id, std::string_view code, std::string_view message);

// ---- gateway <-> backend bodies ------------------------------------------

struct InsertParts {
  std::vector<EncryptedRect> parts;
};

struct QuerySegment {
  EncryptedSegment seg;
};

struct DeleteParts {
  std::vector<PartId> part_ids;
};

nlohmann::json to_body(const InsertParts& m);
nlohmann::json to_body(const QuerySegment& m);
nlohmann::json to_body(const DeleteParts& m);

InsertParts insert_parts_from(const nlohmann::json& body);
QuerySegment query_segment_from(const nlohmann::json& body);
DeleteParts delete_parts_from(const nlohmann::json& body);

nlohmann::json encrypted_rect_json(const EncryptedRect& r);
// Throws Error(protocol) on missing or mistyped fields.
EncryptedRect encrypted_rect_from(const nlohmann::json& j);

// Every JSON field path the backend protocol can carry, requests and acks,
// e.g. "insert_parts.parts[].sw.ex". Used by the schema privacy lint.
std::vector<std::string> backend_field_paths();

// Throws Error(protocol) when body holds a field outside the backend schema
// for its message type.
void check_backend_schema(std::string_view type, const nlohmann::json& body);

// ---- helpers for typed field access ---------------------------------------

const nlohmann::json& require(const nlohmann::json& obj, std::string_view key);
std::int64_t require_int(const nlohmann::json& obj, std::string_view key);
std::string require_string(const nlohmann::json& obj, std::string_view key);

}  // namespace privloc::wire
