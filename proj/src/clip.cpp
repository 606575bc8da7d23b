#include "privloc/clip.hpp"

namespace privloc {

namespace {

// Positive-denominator fraction; only ever compared, never reduced.
struct Fraction {
  __int128 num;
  __int128 den;
};

bool less(const Fraction& a, const Fraction& b) {
  return a.num * b.den < b.num * a.den;
}

}  // namespace

bool segment_intersects_rect(std::int64_t x0, std::int64_t y0, std::int64_t x1,
                             std::int64_t y1, std::int64_t xmin,
                             std::int64_t ymin, std::int64_t xmax,
                             std::int64_t ymax) {
  if (xmin > xmax || ymin > ymax) return false;
  const std::int64_t dx = x1 - x0;
  const std::int64_t dy = y1 - y0;
  // Constraint p*t <= q for t in [0, 1].
  const std::int64_t p[4] = {-dx, dx, -dy, dy};
  const std::int64_t q[4] = {x0 - xmin, xmax - x0, y0 - ymin, ymax - y0};

  Fraction enter{0, 1};
  Fraction leave{1, 1};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0) {
      if (q[i] < 0) return false;
      continue;
    }
    // t = q/p, stored with a positive denominator.
    const Fraction t = p[i] > 0 ? Fraction{q[i], p[i]} : Fraction{-q[i], -p[i]};
    if (p[i] < 0) {
      if (less(enter, t)) enter = t;
    } else {
      if (less(t, leave)) leave = t;
    }
    if (less(leave, enter)) return false;
  }
  return true;
}

}  // namespace privloc
