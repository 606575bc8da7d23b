#include "privloc/crypto.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "privloc/error.hpp"

namespace privloc {
namespace {

MasterKey fixed_key(std::uint8_t seed) {
  std::vector<std::uint8_t> bytes(16);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(seed * 31 + i * 7);
  return MasterKey(bytes);
}

TEST(Prf, DeterministicAndLengthBounded) {
  const MasterKey k = fixed_key(1);
  EXPECT_EQ(prf(k, "rotate", 42, 2).value(), prf(k, "rotate", 42, 2).value());
  EXPECT_EQ(prf(k, "ope-x", 7, 700).bytes, prf(k, "ope-x", 7, 700).bytes);
  for (std::uint64_t n = 0; n < 64; ++n) EXPECT_LE(prf(k, "flip", n, 1).value(), 1u);
  EXPECT_EQ(prf(k, "flip", 3, 1).str().size(), 1u);
  // Counter-mode extension keeps the first block as a prefix.
  const auto short_out = prf(k, "x", 5, 256);
  const auto long_out = prf(k, "x", 5, 600);
  EXPECT_TRUE(std::equal(short_out.bytes.begin(), short_out.bytes.end(),
                         long_out.bytes.begin()));
  EXPECT_NE(prf(k, "x", 5, 64).value(), prf(fixed_key(2), "x", 5, 64).value());
}

TEST(Prf, RotateAndFlipLabelsAreIndependent) {
  // 4x2 contingency table of (rotation bits, flip bit) over 10^4 tiles;
  // chi-square with 3 degrees of freedom, rejected at p < 0.001 (16.27).
  const MasterKey k = fixed_key(3);
  const Prf f(k.bytes());
  double table[4][2] = {};
  const int n = 10000;
  for (int num = 0; num < n; ++num) {
    const auto r = prf(k, "rotate", num, 2).value();
    const auto b = prf(k, "flip", num, 1).value();
    table[r][b] += 1;
  }
  double chi2 = 0;
  for (int r = 0; r < 4; ++r) {
    const double row = table[r][0] + table[r][1];
    for (int b = 0; b < 2; ++b) {
      const double col = [&] { double s = 0; for (auto& t : table) s += t[b]; return s; }();
      const double expected = row * col / n;
      chi2 += (table[r][b] - expected) * (table[r][b] - expected) / expected;
    }
  }
  EXPECT_LT(chi2, 16.27);
}

TEST(PrpTile, BijectiveOnSmallDomains) {
  for (std::uint8_t seed = 0; seed < 4; ++seed) {
    const MasterKey k = fixed_key(seed);
    for (Coord domain : {1, 2, 3, 12, 100, 4096}) {
      std::vector<bool> seen(domain, false);
      for (Coord v = 0; v < domain; ++v) {
        const Coord img = prp_tile(k, domain, v);
        ASSERT_GE(img, 0);
        ASSERT_LT(img, domain);
        ASSERT_FALSE(seen[img]) << "domain " << domain << " collides at " << v;
        seen[img] = true;
      }
    }
  }
}

TEST(PrpTile, SingletonAndErrors) {
  const MasterKey k = fixed_key(5);
  EXPECT_EQ(prp_tile(k, 1, 0), 0);
  EXPECT_EQ(prp_tile(k, 100, 37), prp_tile(k, 100, 37));
  EXPECT_THROW(prp_tile(k, 0, 0), Error);
  EXPECT_THROW(prp_tile(k, 10, 10), Error);
}

TEST(PrpTile, KeysGiveDifferentPermutations) {
  int differ = 0;
  for (Coord v = 0; v < 100; ++v)
    differ += prp_tile(fixed_key(1), 100, v) != prp_tile(fixed_key(2), 100, v);
  EXPECT_GT(differ, 80);
}

TEST(Rotation, CaseTable) {
  EXPECT_EQ(apply_rotation(0, 3, 7, 100), (std::pair<Coord, Coord>{3, 7}));
  EXPECT_EQ(apply_rotation(1, 3, 7, 100), (std::pair<Coord, Coord>{7, 96}));
  EXPECT_EQ(apply_rotation(2, 3, 7, 100), (std::pair<Coord, Coord>{96, 92}));
  EXPECT_EQ(apply_rotation(3, 3, 7, 100), (std::pair<Coord, Coord>{92, 3}));
}

TEST(Rotation, CasesAreQuarterTurnPowersOnWholeTile) {
  // '01' is a quarter turn; '10' and '11' must be its square and cube.
  const Coord L = 16;
  for (Coord dx = 0; dx < L; ++dx)
    for (Coord dy = 0; dy < L; ++dy) {
      auto q1 = apply_rotation(1, dx, dy, L);
      auto q2 = apply_rotation(1, q1.first, q1.second, L);
      auto q3 = apply_rotation(1, q2.first, q2.second, L);
      auto q4 = apply_rotation(1, q3.first, q3.second, L);
      EXPECT_EQ(apply_rotation(0, dx, dy, L), (std::pair<Coord, Coord>{dx, dy}));
      EXPECT_EQ(apply_rotation(2, dx, dy, L), q2);
      EXPECT_EQ(apply_rotation(3, dx, dy, L), q3);
      EXPECT_EQ(q4, (std::pair<Coord, Coord>{dx, dy}));
      EXPECT_EQ(q1, (std::pair<Coord, Coord>{dy, L - 1 - dx}));
    }
}

TEST(Rotation, KeyedCaseFollowsPrfBits) {
  const auto params = SystemParams::for_grid(16, 4, 4);
  const MasterKey k = fixed_key(9);
  std::set<unsigned> codes;
  for (Coord num = 0; num < 16; ++num) {
    const unsigned code = static_cast<unsigned>(prf(k, "rotate", num, 2).value());
    codes.insert(code);
    for (Coord dx = 0; dx < 16; ++dx)
      for (Coord dy = 0; dy < 16; ++dy)
        ASSERT_EQ(rotate_tile(dx, dy, num, k, params), apply_rotation(code, dx, dy, 16));
  }
  EXPECT_EQ(codes.size(), 4u);
}

TEST(Flip, CaseTableAndInvolution) {
  EXPECT_EQ(apply_flip(false, 3, 7, 100), (std::pair<Coord, Coord>{3, 7}));
  EXPECT_EQ(apply_flip(true, 3, 7, 100), (std::pair<Coord, Coord>{96, 7}));
  const auto params = SystemParams::for_grid(16, 4, 4);
  const MasterKey k = fixed_key(4);
  for (Coord num = 0; num < 16; ++num) {
    const bool bit = prf(k, "flip", num, 1).value() == 1;
    for (Coord dx = 0; dx < 16; ++dx)
      for (Coord dy = 0; dy < 16; ++dy) {
        const auto once = flip_tile(dx, dy, num, k, params);
        ASSERT_EQ(once, (std::pair<Coord, Coord>{bit ? 15 - dx : dx, dy}));
        ASSERT_EQ(flip_tile(once.first, once.second, num, k, params),
                  (std::pair<Coord, Coord>{dx, dy}));
      }
  }
}

TEST(Isometries, EightDistinctForms) {
  const Coord L = 16;
  std::set<std::vector<std::pair<Coord, Coord>>> forms;
  for (unsigned code = 0; code < 4; ++code)
    for (bool f : {false, true}) {
      std::vector<std::pair<Coord, Coord>> image;
      for (Coord dx = 0; dx < L; ++dx)
        for (Coord dy = 0; dy < L; ++dy) {
          auto r = apply_rotation(code, dx, dy, L);
          image.push_back(apply_flip(f, r.first, r.second, L));
        }
      forms.insert(image);
    }
  EXPECT_EQ(forms.size(), 8u);
}

TEST(Ope, AffineStrictlyMonotoneExhaustive) {
  for (Coord L : {1000, 1024}) {
    auto params = SystemParams::for_grid(L, 4, 4);
    const MasterKey k = fixed_key(static_cast<std::uint8_t>(L));
    for (Coord num = 0; num < 4; ++num)
      for (Axis axis : {Axis::x, Axis::y}) {
        Coord prev = -1;
        for (Coord v = 0; v < L; ++v) {
          const Coord c = ope_encrypt(v, axis, num, k, params);
          ASSERT_GT(c, prev);
          ASSERT_LT(c, params.ope_range);
          prev = c;
        }
      }
  }
}

TEST(Ope, PiecewiseStrictlyMonotoneExhaustive) {
  for (Coord L : {1000, 1024}) {
    auto params = SystemParams::for_grid(L, 4, 4);
    params.ope_mode = OpeMode::piecewise;
    const MasterKey k = fixed_key(17);
    const Prf f(k.bytes());
    for (Coord num = 0; num < 3; ++num)
      for (Axis axis : {Axis::x, Axis::y}) {
        const OpeAxis table = derive_ope_axis(f, axis, num, params);
        Coord prev = -1;
        for (Coord v = 0; v < L; ++v) {
          const Coord c = ope_encrypt(v, axis, num, k, params);
          ASSERT_EQ(c, table.apply(v));
          ASSERT_GT(c, prev);
          ASSERT_LT(c, params.ope_range);
          prev = c;
        }
      }
  }
}

TEST(Ope, AffineParametersFollowTheFormula) {
  const auto params = SystemParams::for_grid(100, 10, 10);
  const MasterKey k = fixed_key(8);
  const Prf f(k.bytes());
  std::set<Coord> scales;
  for (Coord num = 0; num < 50; ++num) {
    const OpeAxis a = derive_ope_axis(f, Axis::x, num, params);
    const auto [u, w] = f.words("ope-x", static_cast<std::uint64_t>(num));
    const Coord m = (params.ope_range - 100) / 100;
    ASSERT_EQ(a.scale, 1 + static_cast<Coord>(u % m));
    ASSERT_EQ(a.shift, static_cast<Coord>(w % (params.ope_range - a.scale * 99)));
    ASSERT_EQ(ope_encrypt(0, Axis::x, num, k, params), a.shift);
    ASSERT_EQ(ope_encrypt(37, Axis::x, num, k, params), a.scale * 37 + a.shift);
    ASSERT_LT(ope_encrypt(99, Axis::x, num, k, params), params.ope_range);
    scales.insert(a.scale);
  }
  EXPECT_GT(scales.size(), 40u);
}

TEST(Ope, RangeMustCoverTile) {
  auto params = SystemParams::for_grid(100, 10, 10);
  params.ope_range = 50;
  EXPECT_THROW(ope_encrypt(1, Axis::x, 0, fixed_key(1), params), Error);
  // A range equal to the tile forces the unit scale.
  params.ope_range = 100;
  for (Coord v = 0; v < 100; ++v)
    EXPECT_EQ(ope_encrypt(v, Axis::y, 3, fixed_key(1), params), v);
}

TEST(EncryptPoint, IdentityPipelineIsPassThrough) {
  const auto params = SystemParams::null_transform(100, 10, 10);
  const MasterKey k = fixed_key(2);
  for (Coord x = 0; x < 1000; x += 37)
    for (Coord y = 0; y < 1000; y += 41)
      ASSERT_EQ(encrypt_point({x, y}, 0, k, params), (EncryptedPoint{x, y}));
}

TEST(EncryptPoint, ComposesTheStagesInOrder) {
  for (OpeMode mode : {OpeMode::affine, OpeMode::piecewise}) {
    auto params = SystemParams::for_grid(100, 6, 5);
    params.ope_mode = mode;
    const MasterKey k = fixed_key(6);
    const TileCipher cipher(k, params.offsets[1], params);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
      const Point p{static_cast<Coord>(rng() % 600), static_cast<Coord>(rng() % 500)};
      const TileCoord tc = coordinates_on_tile(p, params.offsets[1], params);
      const Coord slot = prp_tile(k, params.tile_count(), tc.num);
      auto [rx, ry] = rotate_tile(tc.dx, tc.dy, slot, k, params);
      auto [fx, fy] = flip_tile(rx, ry, slot, k, params);
      const EncryptedPoint expected{
          (slot % params.n_x) * params.ope_range + ope_encrypt(fx, Axis::x, slot, k, params),
          (slot / params.n_x) * params.ope_range + ope_encrypt(fy, Axis::y, slot, k, params)};
      ASSERT_EQ(cipher.encrypt_point(p), expected);
      ASSERT_EQ(encrypt_point(p, params.offsets[1], k, params), expected);
    }
  }
}

TEST(EncryptPoint, OutputsStayInTheirSlot) {
  const auto params = SystemParams::for_grid(100, 10, 10);
  const TileCipher cipher(fixed_key(4), 33, params);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20000; ++i) {
    const Point p{static_cast<Coord>(rng() % 1000), static_cast<Coord>(rng() % 1000)};
    const auto e = cipher.encrypt_point(p);
    ASSERT_GE(e.ex, 0);
    ASSERT_GE(e.ey, 0);
    ASSERT_LT(e.ex / params.ope_range, params.n_x);
    ASSERT_LT(e.ey / params.ope_range, params.n_y);
    const TileCoord tc = coordinates_on_tile(p, 33, params);
    const Coord slot = cipher.transform(tc.num).slot;
    ASSERT_EQ(e.ex / params.ope_range, slot % params.n_x);
    ASSERT_EQ(e.ey / params.ope_range, slot / params.n_x);
  }
}

TEST(EncryptRect, MembershipIsPreserved) {
  for (OpeMode mode : {OpeMode::affine, OpeMode::piecewise}) {
    auto params = SystemParams::for_grid(100, 10, 10);
    params.ope_mode = mode;
    const TileCipher cipher(fixed_key(12), 66, params);
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<Coord> local(0, 99);
    std::size_t inside = 0;
    for (int i = 0; i < 20000; ++i) {
      const Coord num = rng() % 100;
      Coord a = local(rng), b = local(rng), c = local(rng), d = local(rng);
      if (a > b) std::swap(a, b);
      if (c > d) std::swap(c, d);
      const Rect r{{a, c}, {b, d}};
      const Coord qx = local(rng), qy = local(rng);
      const bool plain = r.contains({qx, qy});
      const bool enc = cipher.encrypt_rect(num, r, "p").contains(cipher.encrypt_local(num, qx, qy));
      ASSERT_EQ(plain, enc);
      inside += plain;
    }
    EXPECT_GT(inside, 1000u);
  }
}

TEST(EncryptRect, IdentityModeKeepsCorners) {
  const auto params = SystemParams::null_transform(100, 10, 10);
  const auto r = encrypt_rect(12, {{5, 6}, {40, 70}}, fixed_key(1), params, "id-1");
  EXPECT_EQ(r.part_id, "id-1");
  EXPECT_EQ(r.sw, (EncryptedPoint{205, 106}));
  EXPECT_EQ(r.ne, (EncryptedPoint{240, 170}));
}

TEST(EncryptRect, PointReflectionSwapsCornerRoles) {
  auto params = SystemParams::for_grid(100, 10, 10);
  params.ope_mode = OpeMode::identity;
  params.ope_range = 100;
  params.transforms.permute = false;
  const TileCipher cipher(fixed_key(21), 0, params);
  Coord num = -1;
  for (Coord n = 0; n < 100 && num < 0; ++n) {
    const auto t = cipher.transform(n);
    if (t.rotation == 2 && !t.flip) num = n;
  }
  ASSERT_GE(num, 0);
  const Rect local{{10, 20}, {30, 60}};
  const EncryptedPoint sw_image = cipher.encrypt_local(num, 10, 20);
  const auto enc = cipher.encrypt_rect(num, local, "x");
  EXPECT_EQ(enc.ne, sw_image);
  EXPECT_LE(enc.sw.ex, enc.ne.ex);
  EXPECT_LE(enc.sw.ey, enc.ne.ey);
  EXPECT_THROW(cipher.encrypt_rect(num, {{10, 20}, {100, 30}}, "y"), Error);
}

TEST(TileCipher, IsometriesAreUniform) {
  // 10^4 tiles across fresh keys; each of the 8 forms at 1/8 within 3 sigma.
  auto params = SystemParams::for_grid(100, 100, 100);
  std::array<int, 8> counts{};
  const int per_key = 2500, keys = 4;
  for (int k = 0; k < keys; ++k) {
    const TileCipher cipher(fixed_key(static_cast<std::uint8_t>(40 + k)), 0, params);
    for (Coord num = 0; num < per_key; ++num) ++counts[cipher.transform(num).isometry()];
  }
  const double n = per_key * keys, p = 1.0 / 8;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) EXPECT_NEAR(c, n * p, 3 * sigma);
}

TEST(Keys, HexRoundTripAndGeneration) {
  const KeySet a = KeySet::generate(128);
  const KeySet b = KeySet::generate(128);
  for (const auto& k : a.keys) EXPECT_EQ(k.bytes().size(), 16u);
  EXPECT_NE(a.keys[0], a.keys[1]);
  EXPECT_NE(a.keys[0], b.keys[0]);
  EXPECT_EQ(MasterKey::from_hex(a.keys[2].to_hex()), a.keys[2]);
  EXPECT_THROW(MasterKey::from_hex("abc"), Error);
  EXPECT_THROW(MasterKey::from_hex("zz"), Error);
  EXPECT_THROW(MasterKey::generate(12), Error);
}

}  // namespace
}  // namespace privloc
