#include "ndtex/features.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "support/oracles.hpp"

using ndtex::CoMatrix;
using ndtex::Direction;
using ndtex::DomainError;
using ndtex::FeatureSet;
using ndtex::FeatureVector;
using ndtex::MatrixAveraging;
using ndtex::NdImage;
using ndtex::NormCoMatrix;

namespace {

NormCoMatrix golden_volume_norm() {
  return ndtex::normalize(testsupport::sample_volume_glcm());
}

// p(0,1) = p(1,0) = 1/2
NormCoMatrix checkerboard_norm() {
  return ndtex::normalize(CoMatrix::from_rows({{0, 1}, {1, 0}}));
}

TEST(Trace, GoldenVolume) {
  EXPECT_DOUBLE_EQ(ndtex::trace(golden_volume_norm()), 1.0 / 18.0);
}

TEST(Trace, ConstantImageIsOne) {
  const NdImage img({4, 4}, 4, std::vector<std::uint16_t>(16, 1));
  const auto nm = ndtex::normalize(ndtex::compute_glcm(img, Direction({1, 0}), 1));
  EXPECT_DOUBLE_EQ(ndtex::trace(nm), 1.0);
}

TEST(Trace, CheckerboardIsZero) {
  EXPECT_DOUBLE_EQ(ndtex::trace(checkerboard_norm()), 0.0);
}

TEST(TraceQuarters, GoldenVolume) {
  const auto q = ndtex::trace_quarters(golden_volume_norm());
  EXPECT_DOUBLE_EQ(q[0], 1.0 / 18.0);
  EXPECT_DOUBLE_EQ(q[1], 0.0);
  EXPECT_DOUBLE_EQ(q[2], 0.0);
  EXPECT_DOUBLE_EQ(q[3], 0.0);
}

TEST(TraceQuarters, ConstantImageOrderFour) {
  const NdImage img({4, 4}, 4);  // all zero
  const auto nm = ndtex::normalize(ndtex::compute_glcm(img, Direction({1, 0}), 1));
  const auto q = ndtex::trace_quarters(nm);
  EXPECT_DOUBLE_EQ(q[0], 1.0);
  EXPECT_DOUBLE_EQ(q[1] + q[2] + q[3], 0.0);
}

TEST(TraceQuarters, UniformDiagonalOrderEight) {
  std::vector<std::vector<std::uint64_t>> rows(8, std::vector<std::uint64_t>(8, 0));
  for (std::size_t i = 0; i < 8; ++i) rows[i][i] = 1;
  const auto nm = ndtex::normalize(CoMatrix::from_rows(rows));
  const auto q = ndtex::trace_quarters(nm);
  for (double v : q) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(TraceQuarters, SmallOrderThrows) {
  EXPECT_THROW(ndtex::trace_quarters(checkerboard_norm()), DomainError);
}

TEST(TraceQuarters, FloorPartitionCoversDiagonal) {
  // Order not divisible by 4: the quarter ranges still partition [0, N).
  std::vector<std::vector<std::uint64_t>> rows(6, std::vector<std::uint64_t>(6, 0));
  for (std::size_t i = 0; i < 6; ++i) rows[i][i] = 1;
  const auto nm = ndtex::normalize(CoMatrix::from_rows(rows));
  const auto q = ndtex::trace_quarters(nm);
  EXPECT_NEAR(q[0] + q[1] + q[2] + q[3], ndtex::trace(nm), 1e-12);
  EXPECT_DOUBLE_EQ(q[0], 1.0 / 6.0);  // floor(6/4) = 1 cell
  EXPECT_DOUBLE_EQ(q[1], 2.0 / 6.0);  // cells 1,2
}

TEST(Haralick4, CheckerboardClosedForm) {
  const auto f = ndtex::haralick4(checkerboard_norm());
  EXPECT_NEAR(f.contrast, 1.0, 1e-12);
  EXPECT_NEAR(f.correlation, -1.0, 1e-12);
  EXPECT_NEAR(f.energy, 0.5, 1e-12);
  EXPECT_NEAR(f.homogeneity, 0.5, 1e-12);
}

TEST(Haralick4, DegenerateSingleCell) {
  const auto nm = ndtex::normalize(CoMatrix::from_rows({{0, 0}, {0, 4}}));
  const auto f = ndtex::haralick4(nm);
  EXPECT_DOUBLE_EQ(f.contrast, 0.0);
  EXPECT_DOUBLE_EQ(f.correlation, 0.0);  // zero marginal variance
  EXPECT_DOUBLE_EQ(f.energy, 1.0);
  EXPECT_DOUBLE_EQ(f.homogeneity, 1.0);
}

TEST(Haralick4, BalancedDiagonal) {
  const auto nm = ndtex::normalize(CoMatrix::from_rows({{1, 0}, {0, 1}}));
  const auto f = ndtex::haralick4(nm);
  EXPECT_NEAR(f.contrast, 0.0, 1e-12);
  EXPECT_NEAR(f.correlation, 1.0, 1e-12);
  EXPECT_NEAR(f.energy, 0.5, 1e-12);
  EXPECT_NEAR(f.homogeneity, 1.0, 1e-12);
}

TEST(Haralick4, TransposeInvariants) {
  testsupport::Rng rng(31);
  for (int iter = 0; iter < 50; ++iter) {
    const NdImage img = testsupport::random_image(rng);
    const Direction d = testsupport::random_direction(rng, img.rank());
    const CoMatrix m = ndtex::compute_glcm(img, d, 1);
    if (m.pair_total() == 0) continue;
    const auto nm = ndtex::normalize(m);
    const auto nt = ndtex::normalize(ndtex::transpose(m));
    // trace only sees the diagonal, which transposition fixes
    EXPECT_DOUBLE_EQ(ndtex::trace(nm), ndtex::trace(nt));
    // a symmetric matrix gives identical haralick values either way
    const CoMatrix sym = ndtex::symmetrize(m, ndtex::transpose(m));
    const auto fs = ndtex::haralick4(ndtex::normalize(sym));
    const auto ft = ndtex::haralick4(ndtex::normalize(ndtex::transpose(sym)));
    EXPECT_DOUBLE_EQ(fs.contrast, ft.contrast);
    EXPECT_DOUBLE_EQ(fs.correlation, ft.correlation);
    EXPECT_DOUBLE_EQ(fs.energy, ft.energy);
    EXPECT_DOUBLE_EQ(fs.homogeneity, ft.homogeneity);
  }
}

TEST(FeatureRanges, RandomMatrices) {
  testsupport::Rng rng(32);
  int checked = 0;
  while (checked < 100) {
    const NdImage img = testsupport::random_image(rng);
    const Direction d = testsupport::random_direction(rng, img.rank());
    const CoMatrix m = ndtex::compute_glcm(img, d, 1);
    if (m.pair_total() == 0) continue;
    const auto nm = ndtex::normalize(m);
    const double t = ndtex::trace(nm);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
    const auto f = ndtex::haralick4(nm);
    EXPECT_GE(f.contrast, 0.0);
    EXPECT_LE(std::abs(f.correlation), 1.0 + 1e-12);
    EXPECT_GT(f.energy, 0.0);
    EXPECT_LE(f.energy, 1.0);
    EXPECT_GT(f.homogeneity, 0.0);
    EXPECT_LE(f.homogeneity, 1.0);
    if (nm.order() >= 4) {
      const auto q = ndtex::trace_quarters(nm);
      EXPECT_NEAR(q[0] + q[1] + q[2] + q[3], t, 1e-12);
    }
    ++checked;
  }
}

TEST(AveragedFeatures, ConstantImage) {
  const NdImage img({5, 5}, 8, std::vector<std::uint16_t>(25, 3));
  const FeatureVector f = ndtex::averaged_features(img, 1);
  EXPECT_DOUBLE_EQ(f.trace, 1.0);
  EXPECT_DOUBLE_EQ(f.contrast, 0.0);
  EXPECT_DOUBLE_EQ(f.correlation, 0.0);
  EXPECT_DOUBLE_EQ(f.energy, 1.0);
}

TEST(AveragedFeatures, SingleDirectionMatchesDirect) {
  testsupport::Rng rng(33);
  const NdImage img = [] {
    std::vector<std::uint16_t> data(36);
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = static_cast<std::uint16_t>((i * 5 + i / 6) % 7);
    }
    return NdImage({6, 6}, 7, std::move(data));
  }();
  const std::vector<Direction> one = {Direction({1, 0})};
  const FeatureVector f = ndtex::averaged_features(img, 1, one);
  const auto nm = ndtex::normalize(ndtex::compute_glcm(img, one[0], 1));
  EXPECT_EQ(f, ndtex::features_of(nm));
}

TEST(AveragedFeatures, DefaultIsMeanOverCanonicalDirections) {
  std::vector<std::uint16_t> data(25);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<std::uint16_t>((3 * i + 1) % 5);
  }
  const NdImage img({5, 5}, 5, std::move(data));
  const auto dirs = ndtex::enumerate_directions(2);
  ASSERT_EQ(dirs.size(), 4u);
  std::array<double, 9> mean{};
  for (const Direction& d : dirs) {
    const auto c =
        ndtex::features_of(ndtex::normalize(ndtex::compute_glcm(img, d, 1)))
            .components();
    for (std::size_t i = 0; i < 9; ++i) mean[i] += c[i] / 4.0;
  }
  const auto got = ndtex::averaged_features(img, 1).components();
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(got[i], mean[i], 1e-12) << FeatureVector::component_names[i];
  }
}

TEST(AveragedFeatures, PermutationInvariance) {
  std::vector<std::uint16_t> data(49);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<std::uint16_t>((i * i + 2 * i) % 6);
  }
  const NdImage img({7, 7}, 6, std::move(data));
  std::vector<Direction> dirs = ndtex::enumerate_directions(2);
  const FeatureVector base = ndtex::averaged_features(img, 1, dirs);
  std::reverse(dirs.begin(), dirs.end());
  EXPECT_EQ(ndtex::averaged_features(img, 1, dirs), base);
  std::rotate(dirs.begin(), dirs.begin() + 1, dirs.end());
  EXPECT_EQ(ndtex::averaged_features(img, 1, dirs), base);
}

TEST(AveragedFeatures, ZeroPairDirectionNamesOffender) {
  const NdImage img({4, 1}, 4, {0, 1, 2, 3});  // one row: vertical steps impossible
  try {
    ndtex::averaged_features(img, 1);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
  }
}

TEST(AveragedFeatures, EmptyDirectionListThrows) {
  const NdImage img({4, 4}, 4);
  EXPECT_THROW(
      ndtex::averaged_features(img, 1, std::span<const Direction>{}),
      DomainError);
}

TEST(AveragedFeatures, PooledModeMatchesMatrixAverage) {
  std::vector<std::uint16_t> data(36);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<std::uint16_t>((2 * i + 3) % 5);
  }
  const NdImage img({6, 6}, 5, std::move(data));
  const auto dirs = ndtex::enumerate_directions(2);
  std::vector<NormCoMatrix> mats;
  for (const Direction& d : dirs) {
    mats.push_back(ndtex::normalize(ndtex::compute_glcm(img, d, 1)));
  }
  const FeatureVector expected =
      ndtex::features_of(NormCoMatrix::average(mats));
  const FeatureVector got =
      ndtex::averaged_features(img, 1, dirs, MatrixAveraging::kPooled);
  EXPECT_EQ(got, expected);
}

TEST(AveragedFeatures, ConstantRowGrowthNeverLowersTrace) {
  // Extending an image with constant rows adds only diagonal mass for
  // the within-row direction.
  testsupport::Rng rng(34);
  for (int iter = 0; iter < 20; ++iter) {
    const std::size_t w = rng.in(2, 6);
    const std::size_t h = rng.in(2, 6);
    const std::uint32_t levels = rng.in(4, 8);
    std::vector<std::uint16_t> data(w * h);
    for (auto& v : data) v = static_cast<std::uint16_t>(rng.below(levels));
    const std::uint16_t fill = static_cast<std::uint16_t>(rng.below(levels));
    double previous = -1.0;
    for (std::size_t extra = 0; extra <= 3; ++extra) {
      std::vector<std::uint16_t> grown = data;
      grown.insert(grown.end(), extra * w, fill);
      const NdImage img({w, h + extra}, levels, std::move(grown));
      const auto nm =
          ndtex::normalize(ndtex::compute_glcm(img, Direction({1, 0}), 1));
      const double t = ndtex::trace(nm);
      EXPECT_GE(t, previous - 1e-12);
      previous = t;
    }
  }
}

TEST(FeatureSets, SchemaAndSelection) {
  FeatureVector f;
  f.trace = 0.5;
  f.quarters = {0.1, 0.2, 0.3, 0.4};
  f.contrast = 5.0;
  f.correlation = -0.5;
  f.energy = 0.25;
  f.homogeneity = 0.75;
  EXPECT_EQ(ndtex::select_features(f, FeatureSet::kTrace4),
            (std::vector<double>{0.1, 0.2, 0.3, 0.4}));
  EXPECT_EQ(ndtex::select_features(f, FeatureSet::kHaralick4),
            (std::vector<double>{5.0, -0.5, 0.25, 0.75}));
  EXPECT_EQ(ndtex::select_features(f, FeatureSet::kCombined8).size(), 8u);
  EXPECT_EQ(ndtex::feature_schema(FeatureSet::kTrace4),
            (std::vector<std::string>{"q1", "q2", "q3", "q4"}));
  EXPECT_EQ(ndtex::feature_set_from_name("haralick4"), FeatureSet::kHaralick4);
  EXPECT_THROW(ndtex::feature_set_from_name("bogus"), DomainError);
}

TEST(FeatureCsv, RoundTrip) {
  std::vector<ndtex::FeatureRow> rows(2);
  rows[0] = {"a/one", "a", {}};
  rows[0].features.trace = 1.0 / 3.0;
  rows[0].features.quarters = {1.0 / 3.0, 0, 0, 0};
  rows[0].features.contrast = 2.5;
  rows[1] = {"b/two", "b", {}};
  rows[1].features.correlation = -0.25;
  std::ostringstream os;
  ndtex::write_features_csv(os, rows);
  std::istringstream is(os.str());
  const auto back = ndtex::read_features_csv(is);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].id, "a/one");
  EXPECT_EQ(back[0].class_label, "a");
  EXPECT_EQ(back[0].features, rows[0].features);
  EXPECT_EQ(back[1].features, rows[1].features);
}

}  // namespace
