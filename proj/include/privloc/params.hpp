#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace privloc {

using Coord = std::int64_t;

enum class OpeMode { affine, piecewise, identity };

const char* ope_mode_name(OpeMode mode) noexcept;
OpeMode parse_ope_mode(const std::string& name);

// Switches for the keyed per-tile transforms. All on in production; the
// analysis harness turns individual stages off to build null or crippled
// pipelines.
struct TransformSwitches {
  bool permute = true;
  bool rotate = true;
  bool flip = true;

  bool operator==(const TransformSwitches&) const = default;
};

// Global system configuration shared by the gateway, the simulator and the
// analysis harness. Coordinates are integer map units.
struct SystemParams {
  std::uint32_t lambda = 128;   // key length in bits
  Coord tile_len = 100;
  Coord n_x = 10;               // tiles per row
  Coord n_y = 10;               // tiles per column
  std::array<Coord, 3> offsets{0, 33, 66};
  OpeMode ope_mode = OpeMode::affine;
  Coord ope_range = 1 << 16;    // encrypted width of one tile slot
  std::uint32_t batch_k = 1;
  Coord max_move = 33;
  Coord max_sub_side = 100;     // longest accepted subscription side
  TransformSwitches transforms;

  Coord map_width() const { return n_x * tile_len; }
  Coord map_height() const { return n_y * tile_len; }
  Coord tile_count() const { return n_x * n_y; }

  // Fills offsets, max_move and max_sub_side from tile_len.
  static SystemParams for_grid(Coord tile_len, Coord n_x, Coord n_y);

  // Identity transforms with ope_range = tile_len; encryption becomes a
  // pass-through on the tile grid.
  static SystemParams null_transform(Coord tile_len, Coord n_x, Coord n_y);

  // Throws Error(config) naming the offending field.
  void validate() const;

  bool operator==(const SystemParams&) const = default;
};

void to_json(nlohmann::json& j, const SystemParams& p);
// Missing fields keep their current values, so a partial config file only
// overrides what it names.
void from_json(const nlohmann::json& j, SystemParams& p);

}  // namespace privloc
