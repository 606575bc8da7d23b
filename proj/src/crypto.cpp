#include "privloc/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>
#include <functional>

#include "privloc/error.hpp"

namespace privloc {

namespace {

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw Error(ErrorCode::internal, "libsodium initialisation failed");
}

void put_be64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
}

std::uint64_t get_be64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

constexpr std::string_view kLabelPrp = "prp";
constexpr std::string_view kLabelRotate = "rotate";
constexpr std::string_view kLabelFlip = "flip";

std::string_view ope_label(Axis axis) { return axis == Axis::x ? "ope-x" : "ope-y"; }

}  // namespace

// ---- keys ------------------------------------------------------------------

MasterKey::MasterKey(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.empty()) throw Error(ErrorCode::invalid_argument, "empty master key");
}

MasterKey MasterKey::generate(std::uint32_t lambda_bits) {
  if (lambda_bits == 0 || lambda_bits % 8 != 0)
    throw Error(ErrorCode::config, "lambda must be a positive multiple of 8");
  ensure_sodium();
  std::vector<std::uint8_t> bytes(lambda_bits / 8);
  randombytes_buf(bytes.data(), bytes.size());
  return MasterKey(std::move(bytes));
}

MasterKey MasterKey::from_hex(std::string_view hex) {
  if (hex.empty() || hex.size() % 2 != 0)
    throw Error(ErrorCode::invalid_argument, "key hex must have even, non-zero length");
  std::vector<std::uint8_t> bytes(hex.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::invalid_argument, "key is not valid hex");
    bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return MasterKey(std::move(bytes));
}

std::string MasterKey::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (std::uint8_t b : bytes_) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

KeySet KeySet::generate(std::uint32_t lambda_bits) {
  KeySet ks;
  for (auto& k : ks.keys) k = MasterKey::generate(lambda_bits);
  return ks;
}

// ---- PRF -------------------------------------------------------------------

std::uint64_t BitString::value() const {
  std::uint64_t v = 0;
  const std::size_t n = std::min<std::size_t>(bits, 64);
  for (std::size_t i = 0; i < n; ++i) v = (v << 1) | bit(i);
  return v;
}

std::string BitString::str() const {
  std::string s;
  for (std::size_t i = 0; i < bits; ++i) s.push_back(bit(i) ? '1' : '0');
  return s;
}

Prf::Prf(std::span<const std::uint8_t> key)
    : keyed_(std::make_unique<crypto_auth_hmacsha256_state>()) {
  ensure_sodium();
  crypto_auth_hmacsha256_init(keyed_.get(), key.data(), key.size());
}

Prf::~Prf() = default;

void Prf::digest(std::string_view label, std::span<const std::uint8_t> input,
                 std::uint32_t counter, std::uint8_t out[32]) const {
  crypto_auth_hmacsha256_state st = *keyed_;
  const std::uint8_t sep = 0;
  std::uint8_t ctr[4] = {static_cast<std::uint8_t>(counter >> 24),
                         static_cast<std::uint8_t>(counter >> 16),
                         static_cast<std::uint8_t>(counter >> 8),
                         static_cast<std::uint8_t>(counter)};
  crypto_auth_hmacsha256_update(
      &st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  crypto_auth_hmacsha256_update(&st, &sep, 1);
  crypto_auth_hmacsha256_update(&st, input.data(), input.size());
  crypto_auth_hmacsha256_update(&st, ctr, sizeof ctr);
  crypto_auth_hmacsha256_final(&st, out);
}

BitString Prf::eval(std::string_view label, std::span<const std::uint8_t> input,
                    std::size_t out_bits) const {
  BitString out;
  out.bits = out_bits;
  out.bytes.resize((out_bits + 7) / 8);
  std::uint8_t block[32];
  for (std::size_t off = 0, counter = 0; off < out.bytes.size(); off += 32, ++counter) {
    digest(label, input, static_cast<std::uint32_t>(counter), block);
    std::memcpy(out.bytes.data() + off, block,
                std::min<std::size_t>(32, out.bytes.size() - off));
  }
  if (out_bits % 8 != 0)
    out.bytes.back() &= static_cast<std::uint8_t>(0xff << (8 - out_bits % 8));
  return out;
}

std::uint64_t Prf::word(std::string_view label, std::uint64_t a,
                        std::uint64_t b) const {
  return words(label, a, b).first;
}

std::pair<std::uint64_t, std::uint64_t> Prf::words(std::string_view label,
                                                   std::uint64_t a,
                                                   std::uint64_t b) const {
  std::uint8_t in[16];
  put_be64(in, a);
  put_be64(in + 8, b);
  std::uint8_t block[32];
  digest(label, in, 0, block);
  return {get_be64(block), get_be64(block + 8)};
}

BitString prf(const MasterKey& key, std::string_view label, std::uint64_t num,
              std::size_t out_bits) {
  std::uint8_t in[8];
  put_be64(in, num);
  return Prf(key.bytes()).eval(label, in, out_bits);
}

// ---- tile permutation ------------------------------------------------------

namespace {

// Balanced four-round Feistel network on 2*half bits, cycle-walked into
// [0, domain).
Coord feistel_permute(const Prf& prf, Coord domain, Coord num) {
  if (domain < 1) throw Error(ErrorCode::config, "permutation domain must be >= 1");
  if (num < 0 || num >= domain)
    throw Error(ErrorCode::invalid_argument, "tile number outside permutation domain");
  if (domain == 1) return 0;
  int bits = 0;
  while ((Coord{1} << bits) < domain) ++bits;
  const int half = (bits + 1) / 2;
  const std::uint64_t mask = (std::uint64_t{1} << half) - 1;

  std::uint64_t v = static_cast<std::uint64_t>(num);
  do {
    std::uint64_t left = v >> half;
    std::uint64_t right = v & mask;
    for (std::uint64_t round = 0; round < 4; ++round) {
      const std::uint64_t f = prf.word(kLabelPrp, round << 32 | domain, right) & mask;
      const std::uint64_t next = left ^ f;
      left = right;
      right = next;
    }
    v = left << half | right;
  } while (v >= static_cast<std::uint64_t>(domain));
  return static_cast<Coord>(v);
}

std::uint64_t tile_bits(const Prf& prf, std::string_view label, Coord num,
                        std::size_t bits) {
  std::uint8_t in[8];
  put_be64(in, static_cast<std::uint64_t>(num));
  return prf.eval(label, in, bits).value();
}

unsigned rotation_code(const Prf& prf, Coord slot) {
  return static_cast<unsigned>(tile_bits(prf, kLabelRotate, slot, 2));
}

bool flip_bit(const Prf& prf, Coord slot) {
  return tile_bits(prf, kLabelFlip, slot, 1) != 0;
}

void check_local(Coord v, Coord tile_len) {
  if (v < 0 || v >= tile_len)
    throw Error(ErrorCode::invalid_argument, "tile-local coordinate outside [0, tile_len)");
}

}  // namespace

Coord prp_tile(const MasterKey& key, Coord domain, Coord num) {
  return feistel_permute(Prf(key.bytes()), domain, num);
}

// ---- rotation / flip -------------------------------------------------------

std::pair<Coord, Coord> apply_rotation(unsigned code, Coord dx, Coord dy,
                                       Coord tile_len) {
  const Coord m = tile_len - 1;
  switch (code & 3u) {
    case 0: return {dx, dy};
    case 1: return {dy, m - dx};
    case 2: return {m - dx, m - dy};
    default: return {m - dy, dx};
  }
}

std::pair<Coord, Coord> apply_flip(bool flip, Coord dx, Coord dy, Coord tile_len) {
  return {flip ? (tile_len - 1) - dx : dx, dy};
}

std::pair<Coord, Coord> rotate_tile(Coord dx, Coord dy, Coord num,
                                    const MasterKey& key,
                                    const SystemParams& params) {
  check_local(dx, params.tile_len);
  check_local(dy, params.tile_len);
  const unsigned code = rotation_code(Prf(key.bytes()), num);
  return apply_rotation(code, dx, dy, params.tile_len);
}

std::pair<Coord, Coord> flip_tile(Coord dx, Coord dy, Coord num,
                                  const MasterKey& key,
                                  const SystemParams& params) {
  check_local(dx, params.tile_len);
  check_local(dy, params.tile_len);
  return apply_flip(flip_bit(Prf(key.bytes()), num), dx, dy, params.tile_len);
}

// ---- order-preserving encryption ------------------------------------------

Coord piecewise_encrypt(const Prf& prf, std::string_view label, Coord slot,
                        Coord v, Coord tile_len, Coord range) {
  Coord dlo = 0, dhi = tile_len - 1;
  Coord rlo = 0, rhi = range - 1;
  for (;;) {
    const Coord mid = dlo + (dhi - dlo) / 2;
    // Leave room for every domain point on each side of mid.
    const Coord lo = rlo + (mid - dlo);
    const Coord hi = rhi - (dhi - mid);
    const std::uint64_t node =
        static_cast<std::uint64_t>(dlo) << 32 | static_cast<std::uint64_t>(dhi);
    const std::uint64_t r = prf.word(label, static_cast<std::uint64_t>(slot), node);
    const Coord image = lo + static_cast<Coord>(r % static_cast<std::uint64_t>(hi - lo + 1));
    if (v == mid) return image;
    if (v < mid) {
      dhi = mid - 1;
      rhi = image - 1;
    } else {
      dlo = mid + 1;
      rlo = image + 1;
    }
  }
}

namespace {

void piecewise_fill(const Prf& prf, std::string_view label, Coord slot, Coord dlo,
                    Coord dhi, Coord rlo, Coord rhi, std::vector<Coord>& out) {
  if (dlo > dhi) return;
  const Coord mid = dlo + (dhi - dlo) / 2;
  const Coord lo = rlo + (mid - dlo);
  const Coord hi = rhi - (dhi - mid);
  const std::uint64_t node =
      static_cast<std::uint64_t>(dlo) << 32 | static_cast<std::uint64_t>(dhi);
  const std::uint64_t r = prf.word(label, static_cast<std::uint64_t>(slot), node);
  const Coord image = lo + static_cast<Coord>(r % static_cast<std::uint64_t>(hi - lo + 1));
  out[static_cast<std::size_t>(mid)] = image;
  piecewise_fill(prf, label, slot, dlo, mid - 1, rlo, image - 1, out);
  piecewise_fill(prf, label, slot, mid + 1, dhi, image + 1, rhi, out);
}

}  // namespace

OpeAxis derive_ope_axis(const Prf& prf, Axis axis, Coord slot,
                        const SystemParams& params) {
  const Coord L = params.tile_len;
  const Coord R = params.ope_range;
  if (R < L) throw Error(ErrorCode::config, "ope_range must be >= tile_len");
  OpeAxis out;
  switch (params.ope_mode) {
    case OpeMode::identity:
      break;
    case OpeMode::affine: {
      const auto [u, w] = prf.words(ope_label(axis), static_cast<std::uint64_t>(slot));
      const Coord m = (R - L) / L;
      out.scale = m > 0 ? 1 + static_cast<Coord>(u % static_cast<std::uint64_t>(m)) : 1;
      const Coord room = R - out.scale * (L - 1);
      out.shift = static_cast<Coord>(w % static_cast<std::uint64_t>(room));
      break;
    }
    case OpeMode::piecewise: {
      auto table = std::make_shared<std::vector<Coord>>(static_cast<std::size_t>(L));
      piecewise_fill(prf, ope_label(axis), slot, 0, L - 1, 0, R - 1, *table);
      out.table = std::move(table);
      break;
    }
  }
  return out;
}

Coord ope_encrypt(Coord v, Axis axis, Coord num, const MasterKey& key,
                  const SystemParams& params) {
  if (params.ope_range < params.tile_len)
    throw Error(ErrorCode::config, "ope_range must be >= tile_len");
  check_local(v, params.tile_len);
  const Prf prf(key.bytes());
  if (params.ope_mode == OpeMode::piecewise)
    return piecewise_encrypt(prf, ope_label(axis), num, v, params.tile_len,
                             params.ope_range);
  return derive_ope_axis(prf, axis, num, params).apply(v);
}

// ---- composed pipeline -----------------------------------------------------

TileCipher::TileCipher(const MasterKey& key, Coord offset,
                       const SystemParams& params)
    : params_(params), offset_(offset), key_(key),
      prf_(std::make_unique<Prf>(key.bytes())) {
  params_.validate();
}

TileTransform TileCipher::derive(Coord num) const {
  TileTransform t;
  t.slot = params_.transforms.permute
               ? feistel_permute(*prf_, params_.tile_count(), num)
               : num;
  t.rotation = params_.transforms.rotate ? rotation_code(*prf_, t.slot) : 0;
  t.flip = params_.transforms.flip && flip_bit(*prf_, t.slot);
  t.ope_x = derive_ope_axis(*prf_, Axis::x, t.slot, params_);
  t.ope_y = derive_ope_axis(*prf_, Axis::y, t.slot, params_);
  return t;
}

TileTransform TileCipher::transform(Coord num) const {
  if (num < 0 || num >= params_.tile_count())
    throw Error(ErrorCode::invalid_argument, "tile number outside the grid");
  {
    std::shared_lock lock(cache_mu_);
    if (auto it = cache_.find(num); it != cache_.end()) return it->second;
  }
  TileTransform t = derive(num);
  std::unique_lock lock(cache_mu_);
  return cache_.emplace(num, std::move(t)).first->second;
}

std::size_t TileCipher::cached_tiles() const {
  std::shared_lock lock(cache_mu_);
  return cache_.size();
}

EncryptedPoint TileCipher::encrypt_local(Coord num, Coord dx, Coord dy) const {
  check_local(dx, params_.tile_len);
  check_local(dy, params_.tile_len);
  const TileTransform t = transform(num);
  auto [rx, ry] = apply_rotation(t.rotation, dx, dy, params_.tile_len);
  auto [fx, fy] = apply_flip(t.flip, rx, ry, params_.tile_len);
  const Coord R = params_.ope_range;
  return {(t.slot % params_.n_x) * R + t.ope_x.apply(fx),
          (t.slot / params_.n_x) * R + t.ope_y.apply(fy)};
}

EncryptedPoint TileCipher::encrypt_point(const Point& p) const {
  const TileCoord tc = coordinates_on_tile(p, offset_, params_);
  return encrypt_local(tc.num, tc.dx, tc.dy);
}

EncryptedRect TileCipher::encrypt_rect(Coord num, const Rect& local,
                                       PartId part_id) const {
  if (!local.valid() || local.sw.x < 0 || local.sw.y < 0 ||
      local.ne.x >= params_.tile_len || local.ne.y >= params_.tile_len)
    throw Error(ErrorCode::invalid_argument,
                "rectangle must lie inside one tile; split it first");
  const EncryptedPoint a = encrypt_local(num, local.sw.x, local.sw.y);
  const EncryptedPoint b = encrypt_local(num, local.ne.x, local.ne.y);
  return {std::move(part_id),
          {std::min(a.ex, b.ex), std::min(a.ey, b.ey)},
          {std::max(a.ex, b.ex), std::max(a.ey, b.ey)}};
}

EncryptedPoint encrypt_point(const Point& p, Coord offset, const MasterKey& key,
                             const SystemParams& params) {
  return TileCipher(key, offset, params).encrypt_point(p);
}

EncryptedRect encrypt_rect(Coord num, const Rect& local, const MasterKey& key,
                           const SystemParams& params, PartId part_id) {
  return TileCipher(key, 0, params).encrypt_rect(num, local, std::move(part_id));
}

}  // namespace privloc
