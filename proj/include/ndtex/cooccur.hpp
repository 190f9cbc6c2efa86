#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndtex/detail/format.hpp"
#include "ndtex/error.hpp"
#include "ndtex/image.hpp"

namespace ndtex {

/// Unit displacement pattern over {-1, 0, +1}^n, never all zero. The
/// realized offset at distance k is k * components, so each axis moves
/// by 0, +k, or -k (Chebyshev-style displacement).
///
/// A pattern and its negation count the same pairs in swapped order, so
/// only one of them is canonical: the one whose first nonzero component
/// is +1.
class Direction {
public:
  explicit Direction(std::vector<int> components) : c_(std::move(components)) {
    if (c_.empty()) {
      throw ShapeError("direction must have at least one component");
    }
    bool any_nonzero = false;
    for (int v : c_) {
      if (v < -1 || v > 1) {
        throw DomainError("direction components must be in {-1, 0, +1}");
      }
      any_nonzero |= v != 0;
    }
    if (!any_nonzero) {
      throw DomainError("direction must have a nonzero component");
    }
  }

  std::size_t size() const noexcept { return c_.size(); }
  int operator[](std::size_t i) const { return c_[i]; }
  const std::vector<int>& components() const noexcept { return c_; }

  Direction reversed() const {
    std::vector<int> r(c_.size());
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] = -c_[i];
    return Direction(std::move(r));
  }

  /// True when the first nonzero component is +1.
  bool is_canonical() const {
    for (int v : c_) {
      if (v != 0) return v > 0;
    }
    return false;
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(c_[i]);
    }
    s += ')';
    return s;
  }

  bool operator==(const Direction&) const = default;
  bool operator<(const Direction& other) const {
    return std::lexicographical_compare(c_.begin(), c_.end(),
                                        other.c_.begin(), other.c_.end());
  }

private:
  std::vector<int> c_;
};

/// All canonical direction patterns in n dimensions, sorted
/// lexicographically. There are (3^n - 1) / 2 of them: the 3^n sign
/// patterns minus the zero vector, halved because a pattern and its
/// negation produce transposed (dependent) matrices.
inline std::vector<Direction> enumerate_directions(std::size_t n) {
  if (n == 0) {
    throw DomainError("dimensionality must be >= 1");
  }
  if (n > 16) {
    throw DomainError("direction enumeration over " + std::to_string(n) +
                      " axes is too large");
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;
  std::vector<Direction> out;
  out.reserve((total - 1) / 2);
  // Odometer over {-1,0,+1}^n with axis 0 most significant yields
  // lexicographically ascending patterns directly.
  std::vector<int> c(n, -1);
  while (true) {
    bool canonical = false;
    for (int v : c) {
      if (v != 0) {
        canonical = v > 0;
        break;
      }
    }
    if (canonical) {
      out.push_back(Direction(c));
    }
    std::size_t a = n;
    while (a > 0) {
      --a;
      if (c[a] < 1) {
        ++c[a];
        break;
      }
      c[a] = -1;
      if (a == 0) return out;
    }
  }
}

/// Raw co-occurrence counts: entry (i, j) is the number of point pairs
/// (X, X + k*d) inside the grid whose intensities are (i, j).
class CoMatrix {
public:
  explicit CoMatrix(std::size_t order)
      : order_(order), counts_(checked_cells(order), 0) {}

  static CoMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
    CoMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) {
        throw ShapeError("co-occurrence matrix rows must be square");
      }
      for (std::size_t j = 0; j < rows.size(); ++j) {
        m.counts_[i * m.order_ + j] = rows[i][j];
        m.pair_total_ += rows[i][j];
      }
    }
    return m;
  }

  std::size_t order() const noexcept { return order_; }
  std::uint64_t pair_total() const noexcept { return pair_total_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  std::uint64_t operator()(std::size_t i, std::size_t j) const {
    return counts_[i * order_ + j];
  }

  std::uint64_t at(std::size_t i, std::size_t j) const {
    if (i >= order_ || j >= order_) {
      throw ShapeError("matrix index out of range");
    }
    return counts_[i * order_ + j];
  }

  void increment(std::size_t i, std::size_t j) {
    counts_[i * order_ + j] += 1;
    pair_total_ += 1;
  }

  bool operator==(const CoMatrix&) const = default;

private:
  static std::size_t checked_cells(std::size_t order) {
    if (order == 0) {
      throw ShapeError("matrix order must be >= 1");
    }
    if (order > NdImage::kMaxLevels) {
      throw DomainError("matrix order exceeds the supported grey-level count");
    }
    return order * order;
  }

  std::size_t order_ = 0;
  std::vector<std::uint64_t> counts_;
  std::uint64_t pair_total_ = 0;
};

/// Counts intensity pairs at displacement k * pattern. The walk visits
/// only the sub-box of points whose displaced partner stays in bounds,
/// so the inner loop is a contiguous scan with one fixed flat offset.
inline CoMatrix compute_glcm(const NdImage& image, const Direction& pattern,
                             std::uint32_t k) {
  const std::size_t n = image.rank();
  if (pattern.size() != n) {
    throw ShapeError("direction arity " + std::to_string(pattern.size()) +
                     " does not match image rank " + std::to_string(n));
  }
  if (k == 0) {
    throw DomainError("distance k must be >= 1");
  }

  CoMatrix out(image.levels());
  std::vector<std::int64_t> lo(n), hi(n), stride(n);
  std::int64_t offset = 0;
  std::int64_t s = 1;
  bool empty = false;
  for (std::size_t a = 0; a < n; ++a) {
    const std::int64_t step = static_cast<std::int64_t>(k) * pattern[a];
    const std::int64_t extent = static_cast<std::int64_t>(image.dims()[a]);
    lo[a] = std::max<std::int64_t>(0, -step);
    hi[a] = extent - std::max<std::int64_t>(0, step);
    if (hi[a] <= lo[a]) empty = true;
    stride[a] = s;
    offset += step * s;
    s *= extent;
  }
  if (empty) {
    return out;  // no pair fits this offset; pair_total stays 0
  }

  const std::span<const std::uint16_t> data = image.data();
  std::vector<std::int64_t> x(lo);
  std::int64_t base = 0;
  for (std::size_t a = 0; a < n; ++a) base += lo[a] * stride[a];
  const std::int64_t run = hi[0] - lo[0];
  while (true) {
    for (std::int64_t i = 0; i < run; ++i) {
      const std::int64_t idx = base + i;
      out.increment(data[static_cast<std::size_t>(idx)],
                    data[static_cast<std::size_t>(idx + offset)]);
    }
    std::size_t a = 1;
    for (;; ++a) {
      if (a >= n) return out;
      if (++x[a] < hi[a]) {
        base += stride[a];
        break;
      }
      base -= (hi[a] - lo[a] - 1) * stride[a];
      x[a] = lo[a];
    }
  }
}

/// counts'(i, j) = counts(j, i). The matrix for the reversed direction
/// equals the transpose of the forward one.
inline CoMatrix transpose(const CoMatrix& m) {
  std::vector<std::vector<std::uint64_t>> rows(
      m.order(), std::vector<std::uint64_t>(m.order()));
  for (std::size_t i = 0; i < m.order(); ++i) {
    for (std::size_t j = 0; j < m.order(); ++j) {
      rows[i][j] = m(j, i);
    }
  }
  return CoMatrix::from_rows(rows);
}

/// Elementwise sum. With m_rev = transpose(m) the result is symmetric.
inline CoMatrix symmetrize(const CoMatrix& m, const CoMatrix& m_rev) {
  if (m.order() != m_rev.order()) {
    throw ShapeError("cannot sum matrices of orders " +
                     std::to_string(m.order()) + " and " +
                     std::to_string(m_rev.order()));
  }
  std::vector<std::vector<std::uint64_t>> rows(m.order());
  for (std::size_t i = 0; i < m.order(); ++i) {
    rows[i].resize(m.order());
    for (std::size_t j = 0; j < m.order(); ++j) {
      rows[i][j] = m(i, j) + m_rev(i, j);
    }
  }
  return CoMatrix::from_rows(rows);
}

/// Joint intensity-pair probabilities: counts divided by the pair total.
class NormCoMatrix {
public:
  std::size_t order() const noexcept { return order_; }
  std::uint64_t pair_total() const noexcept { return pair_total_; }
  std::span<const double> probs() const noexcept { return probs_; }

  double operator()(std::size_t i, std::size_t j) const {
    return probs_[i * order_ + j];
  }

  /// Equal-weight mean of probability matrices of one order.
  static NormCoMatrix average(std::span<const NormCoMatrix> matrices) {
    if (matrices.empty()) {
      throw DomainError("cannot average zero matrices");
    }
    NormCoMatrix out;
    out.order_ = matrices.front().order_;
    out.probs_.assign(out.order_ * out.order_, 0.0);
    for (const NormCoMatrix& m : matrices) {
      if (m.order_ != out.order_) {
        throw ShapeError("cannot average matrices of different orders");
      }
      out.pair_total_ += m.pair_total_;
      for (std::size_t c = 0; c < out.probs_.size(); ++c) {
        out.probs_[c] += m.probs_[c];
      }
    }
    for (double& p : out.probs_) p /= static_cast<double>(matrices.size());
    return out;
  }

private:
  friend NormCoMatrix normalize(const CoMatrix&);

  NormCoMatrix() = default;

  std::size_t order_ = 0;
  std::uint64_t pair_total_ = 0;
  std::vector<double> probs_;
};

inline NormCoMatrix normalize(const CoMatrix& m) {
  if (m.pair_total() == 0) {
    throw EmptyMatrixError(
        "cannot normalize a co-occurrence matrix with zero pairs "
        "(image too small for the requested offset)");
  }
  NormCoMatrix out;
  out.order_ = m.order();
  out.pair_total_ = m.pair_total();
  out.probs_.resize(m.order() * m.order());
  const double total = static_cast<double>(m.pair_total());
  for (std::size_t c = 0; c < out.probs_.size(); ++c) {
    out.probs_[c] = static_cast<double>(m.counts()[c]) / total;
  }
  return out;
}

// --- serialization -----------------------------------------------------

inline void write_csv(const CoMatrix& m, std::ostream& os) {
  os << "order,pair_total\n" << m.order() << ',' << m.pair_total() << '\n';
  for (std::size_t i = 0; i < m.order(); ++i) {
    for (std::size_t j = 0; j < m.order(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

inline void write_csv(const NormCoMatrix& m, std::ostream& os) {
  os << "order,pair_total\n" << m.order() << ',' << m.pair_total() << '\n';
  for (std::size_t i = 0; i < m.order(); ++i) {
    for (std::size_t j = 0; j < m.order(); ++j) {
      if (j) os << ',';
      os << detail::fmt_double(m(i, j));
    }
    os << '\n';
  }
}

inline nlohmann::json to_json(const CoMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.order(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.order(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"order", m.order()}, {"pair_total", m.pair_total()}, {"counts", rows}};
}

inline nlohmann::json to_json(const NormCoMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.order(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.order(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"order", m.order()}, {"pair_total", m.pair_total()}, {"probs", rows}};
}

}  // namespace ndtex
