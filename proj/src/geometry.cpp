#include "privloc/geometry.hpp"

#include <algorithm>
#include <string>

#include "privloc/error.hpp"

namespace privloc {

namespace {

Coord floor_mod(Coord a, Coord m) {
  const Coord r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

bool in_bounds(const Point& p, const SystemParams& params) {
  return p.x >= 0 && p.y >= 0 && p.x < params.map_width() &&
         p.y < params.map_height();
}

void check_in_bounds(const Point& p, const SystemParams& params) {
  if (!in_bounds(p, params)) {
    throw Error(ErrorCode::invalid_argument,
                "point (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                    ") outside map " + std::to_string(params.map_width()) +
                    "x" + std::to_string(params.map_height()));
  }
}

TileCoord coordinates_on_tile(const Point& p, Coord offset,
                              const SystemParams& params) {
  check_in_bounds(p, params);
  const Coord t = params.tile_len;
  const Coord xs = floor_mod(p.x - offset, params.map_width());
  const Coord ys = floor_mod(p.y - offset, params.map_height());
  return TileCoord{xs / t + (ys / t) * params.n_x, xs % t, ys % t};
}

std::optional<std::size_t> choose_server(const Segment& seg,
                                         const SystemParams& params) {
  const auto fits = fitting_tilings(seg, params);
  for (std::size_t i = 0; i < fits.size(); ++i)
    if (fits[i]) return i;
  return std::nullopt;
}

std::array<bool, 3> fitting_tilings(const Segment& seg, const SystemParams& params) {
  std::array<bool, 3> fits{};
  for (std::size_t i = 0; i < params.offsets.size(); ++i) {
    const Coord z = params.offsets[i];
    fits[i] = coordinates_on_tile(seg.p0, z, params).num ==
              coordinates_on_tile(seg.p1, z, params).num;
  }
  return fits;
}

namespace {

struct AxisPiece {
  Coord lo, hi;   // map coordinates, inclusive
  Coord tile;     // tile column/row under the offset
  Coord local_lo; // tile-local coordinate of lo
};

std::vector<AxisPiece> split_axis(Coord lo, Coord hi, Coord offset, Coord t,
                                  Coord extent) {
  std::vector<AxisPiece> out;
  for (Coord start = lo; start <= hi;) {
    const Coord shifted = floor_mod(start - offset, extent);
    const Coord local = shifted % t;
    const Coord end = std::min(hi, start + (t - 1 - local));
    out.push_back({start, end, shifted / t, local});
    start = end + 1;
  }
  return out;
}

}  // namespace

std::vector<RectPart> split_rect(const Rect& r, Coord offset,
                                 const SystemParams& params) {
  if (!r.valid())
    throw Error(ErrorCode::invalid_argument, "rectangle corners not ordered");
  check_in_bounds(r.sw, params);
  check_in_bounds(r.ne, params);
  const Coord t = params.tile_len;
  const auto xs = split_axis(r.sw.x, r.ne.x, offset, t, params.map_width());
  const auto ys = split_axis(r.sw.y, r.ne.y, offset, t, params.map_height());

  std::vector<RectPart> parts;
  parts.reserve(xs.size() * ys.size());
  for (const auto& py : ys) {
    for (const auto& px : xs) {
      RectPart part;
      part.num = px.tile + py.tile * params.n_x;
      part.local = {{px.local_lo, py.local_lo},
                    {px.local_lo + (px.hi - px.lo), py.local_lo + (py.hi - py.lo)}};
      part.map = {{px.lo, py.lo}, {px.hi, py.hi}};
      parts.push_back(part);
    }
  }
  return parts;
}

}  // namespace privloc
