#pragma once

// Test-only helpers: a seeded generator for random grids and a
// deliberately naive co-occurrence counter that visits every point and
// bounds-checks its displaced partner. The naive counter shares no code
// with the optimized kernel so the two act as independent witnesses.

#include <cstdint>
#include <vector>

#include "ndtex/cooccur.hpp"
#include "ndtex/image.hpp"

namespace testsupport {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bULL) {}

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(next() % n);
  }

  std::uint32_t in(std::uint32_t lo, std::uint32_t hi) {  // inclusive range
    return lo + below(hi - lo + 1);
  }

  double unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

private:
  std::uint64_t state_;
};

inline ndtex::NdImage random_image(Rng& rng, std::size_t min_rank = 1,
                                   std::size_t max_rank = 4) {
  const std::size_t rank = rng.in(static_cast<std::uint32_t>(min_rank),
                                  static_cast<std::uint32_t>(max_rank));
  ndtex::Extents dims(rank);
  std::size_t volume = 1;
  for (auto& e : dims) {
    e = rng.in(2, 8);
    volume *= e;
  }
  const std::uint32_t levels = rng.in(2, 8);
  std::vector<std::uint16_t> data(volume);
  for (auto& v : data) v = static_cast<std::uint16_t>(rng.below(levels));
  return ndtex::NdImage(std::move(dims), levels, std::move(data));
}

inline ndtex::Direction random_direction(Rng& rng, std::size_t rank) {
  std::vector<int> c(rank);
  while (true) {
    bool nonzero = false;
    for (auto& v : c) {
      v = static_cast<int>(rng.below(3)) - 1;
      nonzero |= v != 0;
    }
    if (nonzero) return ndtex::Direction(c);
  }
}

inline ndtex::CoMatrix naive_glcm(const ndtex::NdImage& image,
                                  const ndtex::Direction& pattern,
                                  std::uint32_t k) {
  ndtex::CoMatrix out(image.levels());
  const std::size_t n = image.rank();
  std::vector<std::int64_t> point(n, 0);
  std::vector<std::int64_t> target(n);
  while (true) {
    for (std::size_t a = 0; a < n; ++a) {
      target[a] = point[a] + static_cast<std::int64_t>(k) * pattern[a];
    }
    const auto from = image.get(point);
    const auto to = image.get(target);
    if (from && to) {
      out.increment(*from, *to);
    }
    std::size_t a = 0;
    for (;; ++a) {
      if (a >= n) return out;
      if (++point[a] < static_cast<std::int64_t>(image.dims()[a])) break;
      point[a] = 0;
    }
  }
}

// The worked 3x3x3 sample grid with four grey levels used across the
// golden tests.
inline ndtex::NdImage sample_volume() {
  return ndtex::from_slices(
      {
          {{0, 0, 1}, {0, 1, 2}, {0, 2, 3}},
          {{1, 2, 3}, {0, 2, 3}, {0, 1, 2}},
          {{1, 3, 0}, {0, 3, 1}, {3, 2, 1}},
      },
      4);
}

// Its co-occurrence counts along axis 0 at distance 1.
inline ndtex::CoMatrix sample_volume_glcm() {
  return ndtex::CoMatrix::from_rows({
      {1, 3, 2, 1},
      {0, 0, 3, 1},
      {0, 1, 0, 3},
      {1, 1, 1, 0},
  });
}

// The same counts for the reversed direction.
inline ndtex::CoMatrix sample_volume_glcm_reversed() {
  return ndtex::CoMatrix::from_rows({
      {1, 0, 0, 1},
      {3, 0, 1, 1},
      {2, 3, 0, 1},
      {1, 1, 3, 0},
  });
}

}  // namespace testsupport
