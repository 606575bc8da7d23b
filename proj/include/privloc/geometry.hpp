#pragma once

// Tile-grid arithmetic over the plaintext map. Everything here is key-free
// and works on closed integer sets: a tile covers
// [k*tile_len + z, (k+1)*tile_len + z - 1] on each axis (modulo the map
// extent), rectangles and segments include their boundaries.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "privloc/clip.hpp"
#include "privloc/params.hpp"

namespace privloc {

struct Point {
  Coord x = 0;
  Coord y = 0;
  bool operator==(const Point&) const = default;
};

struct Segment {
  Point p0;
  Point p1;
  bool operator==(const Segment&) const = default;
};

// Axis-aligned, closed on every side.
struct Rect {
  Point sw;
  Point ne;
  bool operator==(const Rect&) const = default;
  bool valid() const { return sw.x <= ne.x && sw.y <= ne.y; }
  bool contains(const Point& p) const {
    return sw.x <= p.x && p.x <= ne.x && sw.y <= p.y && p.y <= ne.y;
  }
};

struct TileCoord {
  Coord num = 0;
  Coord dx = 0;
  Coord dy = 0;
  bool operator==(const TileCoord&) const = default;
};

// One piece of a rectangle that lies inside a single tile.
struct RectPart {
  Coord num = 0;
  Rect local;   // tile-local corners in [0, tile_len)^2
  Rect map;     // the same piece in map coordinates
};

bool in_bounds(const Point& p, const SystemParams& params);

// Throws Error(invalid_argument) when p is off the map.
void check_in_bounds(const Point& p, const SystemParams& params);

TileCoord coordinates_on_tile(const Point& p, Coord offset,
                              const SystemParams& params);

// Index (0, 1, 2) of the first tiling whose tile holds both endpoints, or
// nullopt when every tiling splits the segment.
std::optional<std::size_t> choose_server(const Segment& seg,
                                         const SystemParams& params);

// fits[i] is true when tiling i holds both endpoints on one tile.
std::array<bool, 3> fitting_tilings(const Segment& seg, const SystemParams& params);

std::vector<RectPart> split_rect(const Rect& r, Coord offset,
                                 const SystemParams& params);

inline bool segment_intersects_rect(const Segment& s, const Rect& r) {
  return segment_intersects_rect(s.p0.x, s.p0.y, s.p1.x, s.p1.y, r.sw.x,
                                 r.sw.y, r.ne.x, r.ne.y);
}

// Squared Euclidean length; avoids floating point in the max_move check.
inline Coord squared_length(const Segment& s) {
  const Coord dx = s.p1.x - s.p0.x;
  const Coord dy = s.p1.y - s.p0.y;
  return dx * dx + dy * dy;
}

}  // namespace privloc
