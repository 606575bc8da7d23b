#include "privloc/params.hpp"

#include <algorithm>

#include "privloc/error.hpp"

namespace privloc {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::config: return "config";
    case ErrorCode::distance_violation: return "distance_violation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::io: return "io";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::unavailable: return "unavailable";
    case ErrorCode::internal: return "internal";
    case ErrorCode::unauthorized: return "unauthorized";
  }
  return "unknown";
}

ErrorCode parse_error_code(std::string_view name) noexcept {
  for (int c = 1; c <= 9; ++c)
    if (name == error_code_name(static_cast<ErrorCode>(c))) return static_cast<ErrorCode>(c);
  return ErrorCode::internal;
}

const char* ope_mode_name(OpeMode mode) noexcept {
  switch (mode) {
    case OpeMode::affine: return "affine";
    case OpeMode::piecewise: return "piecewise";
    case OpeMode::identity: return "identity";
  }
  return "unknown";
}

OpeMode parse_ope_mode(const std::string& name) {
  if (name == "affine") return OpeMode::affine;
  if (name == "piecewise") return OpeMode::piecewise;
  if (name == "identity") return OpeMode::identity;
  throw Error(ErrorCode::config, "ope_mode: unknown mode '" + name + "'");
}

SystemParams SystemParams::for_grid(Coord tile_len, Coord n_x, Coord n_y) {
  SystemParams p;
  p.tile_len = tile_len;
  p.n_x = n_x;
  p.n_y = n_y;
  const Coord third = tile_len / 3;
  p.offsets = {0, third, 2 * third};
  p.max_move = third;
  p.max_sub_side = tile_len;
  return p;
}

SystemParams SystemParams::null_transform(Coord tile_len, Coord n_x,
                                          Coord n_y) {
  SystemParams p = for_grid(tile_len, n_x, n_y);
  p.ope_mode = OpeMode::identity;
  p.ope_range = tile_len;
  p.transforms = {false, false, false};
  return p;
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::config, field + ": " + why);
}

}  // namespace

void SystemParams::validate() const {
  if (lambda == 0 || lambda % 8 != 0) bad("lambda", "must be a positive multiple of 8");
  if (tile_len <= 0) bad("tile_len", "must be positive");
  if (n_x <= 0) bad("n_x", "must be positive");
  if (n_y <= 0) bad("n_y", "must be positive");
  if (ope_range < tile_len) bad("ope_range", "must be >= tile_len");
  if (batch_k < 1) bad("batch_k", "must be >= 1");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (offsets[i] < 0 || offsets[i] >= tile_len)
      bad("offsets[" + std::to_string(i) + "]", "must lie in [0, tile_len)");
    for (std::size_t j = 0; j < i; ++j)
      if (offsets[i] == offsets[j]) bad("offsets", "must be distinct");
  }
  if (max_move < 0 || max_move > tile_len / 3)
    bad("max_move", "must lie in [0, floor(tile_len/3)]");
  if (max_sub_side < 0) bad("max_sub_side", "must be non-negative");
  // Encrypted coordinates must stay well inside int64 so that clipping
  // products fit in 128 bits with room to spare.
  const Coord limit = Coord{1} << 40;
  if (ope_range > limit / std::max(n_x, n_y))
    bad("ope_range", "encrypted extent n*ope_range exceeds 2^40");
}

void to_json(nlohmann::json& j, const SystemParams& p) {
  j = nlohmann::json{
      {"lambda", p.lambda},
      {"tile_len", p.tile_len},
      {"n_x", p.n_x},
      {"n_y", p.n_y},
      {"offsets", p.offsets},
      {"ope_mode", ope_mode_name(p.ope_mode)},
      {"ope_range", p.ope_range},
      {"batch_k", p.batch_k},
      {"max_move", p.max_move},
      {"max_sub_side", p.max_sub_side},
      {"transforms",
       {{"permute", p.transforms.permute},
        {"rotate", p.transforms.rotate},
        {"flip", p.transforms.flip}}},
  };
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* name, T& out) {
  auto it = j.find(name);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string(name) + ": " + e.what());
  }
}

}  // namespace

void from_json(const nlohmann::json& j, SystemParams& p) {
  if (!j.is_object()) throw Error(ErrorCode::config, "params: expected an object");
  // A new tile_len re-derives the dependent defaults before explicit
  // overrides are applied.
  if (j.contains("tile_len") || j.contains("n_x") || j.contains("n_y")) {
    Coord t = p.tile_len, nx = p.n_x, ny = p.n_y;
    read_field(j, "tile_len", t);
    read_field(j, "n_x", nx);
    read_field(j, "n_y", ny);
    if (t != p.tile_len) {
      const SystemParams derived = SystemParams::for_grid(t, nx, ny);
      p.offsets = derived.offsets;
      p.max_move = derived.max_move;
      p.max_sub_side = derived.max_sub_side;
    }
    p.tile_len = t;
    p.n_x = nx;
    p.n_y = ny;
  }
  read_field(j, "lambda", p.lambda);
  read_field(j, "offsets", p.offsets);
  if (auto it = j.find("ope_mode"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::config, "ope_mode: expected a string");
    p.ope_mode = parse_ope_mode(it->get<std::string>());
  }
  read_field(j, "ope_range", p.ope_range);
  read_field(j, "batch_k", p.batch_k);
  read_field(j, "max_move", p.max_move);
  read_field(j, "max_sub_side", p.max_sub_side);
  if (auto it = j.find("transforms"); it != j.end()) {
    read_field(*it, "permute", p.transforms.permute);
    read_field(*it, "rotate", p.transforms.rotate);
    read_field(*it, "flip", p.transforms.flip);
  }
}

}  // namespace privloc
