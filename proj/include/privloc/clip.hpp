#pragma once

#include <cstdint>

namespace privloc {

// Exact closed-set segment/box test by Liang-Barsky clipping in rational
// arithmetic. Coordinate-space agnostic: used on plaintext map coordinates by
// the gateway's oracle and on encrypted coordinates by the backend index.
bool segment_intersects_rect(std::int64_t x0, std::int64_t y0, std::int64_t x1,
                             std::int64_t y1, std::int64_t xmin,
                             std::int64_t ymin, std::int64_t xmax,
                             std::int64_t ymax);

}  // namespace privloc
