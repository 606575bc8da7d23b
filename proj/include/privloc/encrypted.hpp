#pragma once

// Values that cross the trust boundary toward the backends. This header must
// not depend on the plaintext geometry types.

#include <cstdint>
#include <string>

namespace privloc {

using PartId = std::string;

struct EncryptedPoint {
  std::int64_t ex = 0;
  std::int64_t ey = 0;
  bool operator==(const EncryptedPoint&) const = default;
};

struct EncryptedSegment {
  EncryptedPoint p0;
  EncryptedPoint p1;
  bool operator==(const EncryptedSegment&) const = default;
};

// sw holds the minimum on both axes, ne the maximum.
struct EncryptedRect {
  PartId part_id;
  EncryptedPoint sw;
  EncryptedPoint ne;
  bool operator==(const EncryptedRect&) const = default;
  bool contains(const EncryptedPoint& p) const {
    return sw.ex <= p.ex && p.ex <= ne.ex && sw.ey <= p.ey && p.ey <= ne.ey;
  }
};

}  // namespace privloc
