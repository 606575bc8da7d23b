#pragma once

// Keyed per-tile transforms: tile permutation, rotation, flip and per-axis
// order-preserving encryption, composed into point and rectangle encryption.
//
// All PRF calls are HMAC-SHA256 over  label || 0x00 || input || counter,
// so every purpose ("prp", "rotate", "flip", "ope-x", "ope-y") lives in its
// own domain.

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "privloc/encrypted.hpp"
#include "privloc/geometry.hpp"
#include "privloc/params.hpp"

struct crypto_auth_hmacsha256_state;

namespace privloc {

class MasterKey {
 public:
  MasterKey() = default;
  explicit MasterKey(std::vector<std::uint8_t> bytes);

  // Draws lambda_bits from the operating system CSPRNG.
  static MasterKey generate(std::uint32_t lambda_bits);
  static MasterKey from_hex(std::string_view hex);

  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::size_t bits() const { return bytes_.size() * 8; }
  std::string to_hex() const;

  bool operator==(const MasterKey&) const = default;

 private:
  std::vector<std::uint8_t> bytes_;
};

// One key per backend / tiling.
struct KeySet {
  std::array<MasterKey, 3> keys;

  static KeySet generate(std::uint32_t lambda_bits);
};

// Leading out_bits bits of a PRF output, most significant bit first.
struct BitString {
  std::vector<std::uint8_t> bytes;
  std::size_t bits = 0;

  unsigned bit(std::size_t i) const { return (bytes[i / 8] >> (7 - i % 8)) & 1u; }
  // Value of the first min(bits, 64) bits read as a big-endian integer.
  std::uint64_t value() const;
  std::string str() const;  // e.g. "01"
};

// HMAC-SHA256 with the key schedule computed once.
class Prf {
 public:
  explicit Prf(std::span<const std::uint8_t> key);
  ~Prf();
  Prf(const Prf&) = delete;
  Prf& operator=(const Prf&) = delete;

  // Outputs longer than one digest are produced in counter mode.
  BitString eval(std::string_view label, std::span<const std::uint8_t> input,
                 std::size_t out_bits) const;
  // First 64 bits of eval(label, be64(a) || be64(b)).
  std::uint64_t word(std::string_view label, std::uint64_t a,
                     std::uint64_t b = 0) const;
  // Two independent words from one call.
  std::pair<std::uint64_t, std::uint64_t> words(std::string_view label,
                                                std::uint64_t a,
                                                std::uint64_t b = 0) const;

 private:
  void digest(std::string_view label, std::span<const std::uint8_t> input,
              std::uint32_t counter, std::uint8_t out[32]) const;

  std::unique_ptr<crypto_auth_hmacsha256_state> keyed_;
};

enum class Axis { x, y };

// ---- reference operations (direct, uncached) -------------------------------

BitString prf(const MasterKey& key, std::string_view label, std::uint64_t num,
              std::size_t out_bits);

// Keyed bijection on [0, domain).
Coord prp_tile(const MasterKey& key, Coord domain, Coord num);

// Case tables. code is the two PRF bits read as an integer ('01' == 1).
std::pair<Coord, Coord> apply_rotation(unsigned code, Coord dx, Coord dy,
                                       Coord tile_len);
std::pair<Coord, Coord> apply_flip(bool flip, Coord dx, Coord dy,
                                   Coord tile_len);

std::pair<Coord, Coord> rotate_tile(Coord dx, Coord dy, Coord num,
                                    const MasterKey& key,
                                    const SystemParams& params);
std::pair<Coord, Coord> flip_tile(Coord dx, Coord dy, Coord num,
                                  const MasterKey& key,
                                  const SystemParams& params);

Coord ope_encrypt(Coord v, Axis axis, Coord num, const MasterKey& key,
                  const SystemParams& params);

EncryptedPoint encrypt_point(const Point& p, Coord offset, const MasterKey& key,
                             const SystemParams& params);

// local must lie in tile num (as produced by split_rect).
EncryptedRect encrypt_rect(Coord num, const Rect& local, const MasterKey& key,
                           const SystemParams& params, PartId part_id);

// ---- cached pipeline -------------------------------------------------------

// Per-axis monotone map of one tile.
struct OpeAxis {
  Coord scale = 1;   // affine
  Coord shift = 0;   // affine
  std::shared_ptr<const std::vector<Coord>> table;  // piecewise

  Coord apply(Coord v) const {
    return table ? (*table)[static_cast<std::size_t>(v)] : scale * v + shift;
  }
};

// Everything the pipeline derives from (key, plaintext tile number).
struct TileTransform {
  Coord slot = 0;        // permuted tile number
  unsigned rotation = 0; // 0..3, case table code
  bool flip = false;
  OpeAxis ope_x;
  OpeAxis ope_y;

  // 0..7; distinct codes are distinct isometries of the tile.
  unsigned isometry() const { return rotation * 2 + (flip ? 1 : 0); }
};

// The encryption pipeline for one tiling: one master key, one offset.
// Per-tile transforms are derived once and memoized; thread-safe.
class TileCipher {
 public:
  TileCipher(const MasterKey& key, Coord offset, const SystemParams& params);

  const SystemParams& params() const { return params_; }
  Coord offset() const { return offset_; }

  TileTransform transform(Coord num) const;
  EncryptedPoint encrypt_point(const Point& p) const;
  EncryptedPoint encrypt_local(Coord num, Coord dx, Coord dy) const;
  EncryptedRect encrypt_rect(Coord num, const Rect& local, PartId part_id) const;

  std::size_t cached_tiles() const;

 private:
  TileTransform derive(Coord num) const;

  SystemParams params_;
  Coord offset_;
  MasterKey key_;
  std::unique_ptr<Prf> prf_;
  mutable std::shared_mutex cache_mu_;
  mutable std::unordered_map<Coord, TileTransform> cache_;
};

// Exposed for tests: the per-tile OPE parameters.
OpeAxis derive_ope_axis(const Prf& prf, Axis axis, Coord slot,
                        const SystemParams& params);
Coord piecewise_encrypt(const Prf& prf, std::string_view label, Coord slot,
                        Coord v, Coord tile_len, Coord range);

}  // namespace privloc
