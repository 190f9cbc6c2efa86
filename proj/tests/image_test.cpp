#include "ndtex/image.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "support/oracles.hpp"

using ndtex::DomainError;
using ndtex::Extents;
using ndtex::NdImage;
using ndtex::ShapeError;

namespace {

std::vector<std::int64_t> pt(std::initializer_list<std::int64_t> v) { return v; }

TEST(NdImage, FromSlicesGoldenVolume) {
  const NdImage img = testsupport::sample_volume();
  EXPECT_EQ(img.dims(), (Extents{3, 3, 3}));
  EXPECT_EQ(img.levels(), 4u);
  EXPECT_EQ(img.get(pt({2, 0, 0})), 1);  // top-right of the first slice
  EXPECT_EQ(img.get(pt({0, 0, 0})), 0);
  EXPECT_EQ(img.get(pt({2, 2, 2})), 1);  // bottom-right of the last slice
}

TEST(NdImage, FromSlicesSingleton) {
  const NdImage img = ndtex::from_slices({{{0}}}, 1);
  EXPECT_EQ(img.dims(), (Extents{1, 1, 1}));
  EXPECT_EQ(img.size(), 1u);
  EXPECT_EQ(img[0], 0);
}

TEST(NdImage, FromSlicesLayout) {
  const NdImage img = ndtex::from_slices(
      {{{0, 1}, {1, 0}}, {{1, 0}, {0, 1}}}, 2);
  EXPECT_EQ(img.dims(), (Extents{2, 2, 2}));
  const std::vector<std::uint16_t> expected = {0, 1, 1, 0, 1, 0, 0, 1};
  EXPECT_TRUE(std::equal(expected.begin(), expected.end(), img.data().begin()));
}

TEST(NdImage, FromSlicesRaggedThrows) {
  EXPECT_THROW(ndtex::from_slices({{{0, 1}, {0}}}, 2), ShapeError);
  EXPECT_THROW(ndtex::from_slices({{{0, 1}}, {{0, 1}, {1, 0}}}, 2), ShapeError);
}

TEST(NdImage, FromSlicesOutOfRangeIntensityThrows) {
  EXPECT_THROW(ndtex::from_slices({{{0, 5}}}, 4), DomainError);
  EXPECT_THROW(ndtex::from_slices({{{-1}}}, 4), DomainError);
}

TEST(NdImage, GetOutOfBounds) {
  const NdImage img = testsupport::sample_volume();
  EXPECT_EQ(img.get(pt({3, 0, 0})), std::nullopt);
  EXPECT_EQ(img.get(pt({-1, 0, 0})), std::nullopt);
  EXPECT_EQ(img.get(pt({0, 0, 3})), std::nullopt);
}

TEST(NdImage, GetArityMismatchThrows) {
  const NdImage img = testsupport::sample_volume();
  EXPECT_THROW(img.get(pt({0, 0})), ShapeError);
  EXPECT_THROW(img.get(pt({0, 0, 0, 0})), ShapeError);
}

TEST(NdImage, ConstructorValidation) {
  EXPECT_THROW(NdImage({}, 2), ShapeError);
  EXPECT_THROW(NdImage({3, 0}, 2), ShapeError);
  EXPECT_THROW(NdImage({2}, 0), DomainError);
  EXPECT_THROW(NdImage({2}, NdImage::kMaxLevels + 1), DomainError);
  EXPECT_THROW(NdImage({2}, 2, {0, 1, 0}), ShapeError);   // length mismatch
  EXPECT_THROW(NdImage({2}, 2, {0, 2}), DomainError);     // value >= levels
}

TEST(NdImage, LayoutRoundTrip) {
  testsupport::Rng rng(11);
  for (int iter = 0; iter < 50; ++iter) {
    const NdImage img = testsupport::random_image(rng);
    std::vector<std::int64_t> point(img.rank(), 0);
    while (true) {
      const std::size_t flat = img.flat_index(point);
      ASSERT_EQ(img.get(point), img[flat]);
      std::size_t a = 0;
      for (;; ++a) {
        if (a >= img.rank()) goto next_image;
        if (++point[a] < static_cast<std::int64_t>(img.dims()[a])) break;
        point[a] = 0;
      }
    }
  next_image:;
  }
}

TEST(Quantize, GoldenMappings) {
  const NdImage img({3}, 256, {0, 128, 255});
  const NdImage q = ndtex::quantize(img, 4);
  EXPECT_EQ(q.levels(), 4u);
  EXPECT_EQ(q[0], 0);
  EXPECT_EQ(q[1], 2);
  EXPECT_EQ(q[2], 3);
}

TEST(Quantize, IdentityWhenLevelsMatch) {
  testsupport::Rng rng(12);
  for (int iter = 0; iter < 20; ++iter) {
    const NdImage img = testsupport::random_image(rng);
    const NdImage q = ndtex::quantize(img, img.levels());
    EXPECT_EQ(q, img);
  }
}

TEST(Quantize, MonotoneAndSurjective) {
  // Full-range ramp: quantizing to fewer levels must stay monotone and
  // cover every target bin.
  const std::uint32_t levels = 64;
  std::vector<std::uint16_t> ramp(levels);
  for (std::uint32_t v = 0; v < levels; ++v) ramp[v] = static_cast<std::uint16_t>(v);
  const NdImage img({levels}, levels, std::move(ramp));
  for (std::uint32_t target : {1u, 3u, 4u, 7u, 64u}) {
    const NdImage q = ndtex::quantize(img, target);
    std::set<std::uint16_t> seen;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (i > 0) {
        EXPECT_LE(q[i - 1], q[i]);
      }
      EXPECT_LT(q[i], target);
      seen.insert(q[i]);
    }
    EXPECT_EQ(seen.size(), target);
  }
}

TEST(Quantize, RejectsBadTargets) {
  const NdImage img({2}, 4, {0, 3});
  EXPECT_THROW(ndtex::quantize(img, 0), DomainError);
}

}  // namespace
