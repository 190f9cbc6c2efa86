#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ndtex/error.hpp"

namespace ndtex {

using Extents = std::vector<std::size_t>;

namespace detail {

inline std::size_t checked_volume(const Extents& dims) {
  if (dims.empty()) {
    throw ShapeError("image must have at least one axis");
  }
  std::size_t total = 1;
  for (std::size_t e : dims) {
    if (e == 0) {
      throw ShapeError("every axis extent must be >= 1");
    }
    if (total > std::numeric_limits<std::size_t>::max() / e) {
      throw DomainError("image volume overflows addressable size");
    }
    total *= e;
  }
  return total;
}

}  // namespace detail

/// An n-dimensional grey-scale grid with integer intensities.
///
/// Storage is a flat buffer with axis 0 fastest-varying:
///   index = x0 + dims[0] * (x1 + dims[1] * (x2 + ...))
/// Instances are immutable after construction, so concurrent reads are safe.
class NdImage {
public:
  /// Grey-level counts above this are rejected so that a dense
  /// levels x levels co-occurrence matrix stays allocatable.
  static constexpr std::uint32_t kMaxLevels = 65536;

  /// Zero-filled image.
  NdImage(Extents dims, std::uint32_t levels)
      : NdImage(std::move(dims), levels, {}, true) {}

  /// Takes ownership of a flat intensity buffer (axis 0 fastest).
  NdImage(Extents dims, std::uint32_t levels, std::vector<std::uint16_t> data)
      : NdImage(std::move(dims), levels, std::move(data), false) {}

  std::size_t rank() const noexcept { return dims_.size(); }
  const Extents& dims() const noexcept { return dims_; }
  std::uint32_t levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const std::uint16_t> data() const noexcept { return data_; }

  std::uint16_t operator[](std::size_t flat) const { return data_[flat]; }

  /// Flat offset of an in-bounds point. Only the arity is checked.
  std::size_t flat_index(std::span<const std::int64_t> point) const {
    check_arity(point.size());
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (std::size_t a = 0; a < dims_.size(); ++a) {
      idx += static_cast<std::size_t>(point[a]) * stride;
      stride *= dims_[a];
    }
    return idx;
  }

  /// Intensity at `point`, or nullopt when the point falls outside the
  /// grid. Callers walking displaced pairs use the nullopt to skip them.
  std::optional<std::uint16_t> get(std::span<const std::int64_t> point) const {
    check_arity(point.size());
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (std::size_t a = 0; a < dims_.size(); ++a) {
      if (point[a] < 0 || point[a] >= static_cast<std::int64_t>(dims_[a])) {
        return std::nullopt;
      }
      idx += static_cast<std::size_t>(point[a]) * stride;
      stride *= dims_[a];
    }
    return data_[idx];
  }

  bool operator==(const NdImage&) const = default;

private:
  NdImage(Extents dims, std::uint32_t levels, std::vector<std::uint16_t> data,
          bool zero_fill)
      : dims_(std::move(dims)), levels_(levels) {
    const std::size_t volume = detail::checked_volume(dims_);
    if (levels_ == 0 || levels_ > kMaxLevels) {
      throw DomainError("levels must be in [1, " + std::to_string(kMaxLevels) +
                        "], got " + std::to_string(levels_));
    }
    if (zero_fill) {
      data_.assign(volume, 0);
    } else {
      data_ = std::move(data);
      if (data_.size() != volume) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match volume " + std::to_string(volume));
      }
      for (std::uint16_t v : data_) {
        if (v >= levels_) {
          throw DomainError("intensity " + std::to_string(v) +
                            " out of range [0, " + std::to_string(levels_) + ")");
        }
      }
    }
  }

  void check_arity(std::size_t got) const {
    if (got != dims_.size()) {
      throw ShapeError("point arity " + std::to_string(got) +
                       " does not match image rank " +
                       std::to_string(dims_.size()));
    }
  }

  Extents dims_;
  std::uint32_t levels_;
  std::vector<std::uint16_t> data_;
};

/// Builds a 3-D image from a stack of 2-D slices. Within a slice, the
/// column index is axis 0 and the row index is axis 1; the slice index
/// becomes axis 2, so dims = (columns, rows, slice count).
inline NdImage from_slices(const std::vector<std::vector<std::vector<int>>>& slices,
                           std::uint32_t levels) {
  if (slices.empty() || slices.front().empty() || slices.front().front().empty()) {
    throw ShapeError("from_slices requires at least one non-empty slice");
  }
  const std::size_t rows = slices.front().size();
  const std::size_t cols = slices.front().front().size();
  std::vector<std::uint16_t> data;
  data.reserve(cols * rows * slices.size());
  for (const auto& slice : slices) {
    if (slice.size() != rows) {
      throw ShapeError("ragged slice stack: expected " + std::to_string(rows) +
                       " rows, got " + std::to_string(slice.size()));
    }
    for (const auto& row : slice) {
      if (row.size() != cols) {
        throw ShapeError("ragged slice row: expected " + std::to_string(cols) +
                         " columns, got " + std::to_string(row.size()));
      }
      for (int v : row) {
        if (v < 0 || static_cast<std::uint32_t>(v) >= levels) {
          throw DomainError("intensity " + std::to_string(v) +
                            " out of range [0, " + std::to_string(levels) + ")");
        }
        data.push_back(static_cast<std::uint16_t>(v));
      }
    }
  }
  return NdImage({cols, rows, slices.size()}, levels, std::move(data));
}

/// Uniform requantization: v -> floor(v * target_levels / levels).
/// With target_levels == levels this is the identity.
inline NdImage quantize(const NdImage& image, std::uint32_t target_levels) {
  if (target_levels == 0 || target_levels > NdImage::kMaxLevels) {
    throw DomainError("target levels must be in [1, " +
                      std::to_string(NdImage::kMaxLevels) + "]");
  }
  std::vector<std::uint16_t> data(image.size());
  const std::uint64_t t = target_levels;
  const std::uint64_t l = image.levels();
  for (std::size_t i = 0; i < image.size(); ++i) {
    data[i] = static_cast<std::uint16_t>(image[i] * t / l);
  }
  return NdImage(image.dims(), target_levels, std::move(data));
}

}  // namespace ndtex
