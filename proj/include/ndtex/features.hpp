#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndtex/cooccur.hpp"
#include "ndtex/detail/format.hpp"
#include "ndtex/error.hpp"
#include "ndtex/image.hpp"

namespace ndtex {

/// Sum of the main diagonal of a probability matrix: the fraction of
/// co-occurring pairs with identical intensity. High trace means large
/// constant regions.
inline double trace(const NormCoMatrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < m.order(); ++i) t += m(i, i);
  return t;
}

/// The main diagonal split into four contiguous index ranges, each
/// summed. Quarter q covers [floor(q*N/4), floor((q+1)*N/4)), which
/// partitions [0, N) exactly. Requires order >= 4.
inline std::array<double, 4> trace_quarters(const NormCoMatrix& m) {
  const std::size_t n = m.order();
  if (n < 4) {
    throw DomainError("trace quarters need order >= 4, got " + std::to_string(n));
  }
  std::array<double, 4> q{};
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t begin = k * n / 4;
    const std::size_t end = (k + 1) * n / 4;
    for (std::size_t i = begin; i < end; ++i) q[k] += m(i, i);
  }
  return q;
}

struct Haralick4 {
  double contrast = 0.0;
  double correlation = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;
};

/// The four comparison statistics over p = probs:
///   contrast    = sum (i-j)^2 p(i,j)
///   correlation = sum (i-mu_i)(j-mu_j) p(i,j) / (sigma_i sigma_j),
///                 0 when either marginal variance vanishes
///   energy      = sum p(i,j)^2
///   homogeneity = sum p(i,j) / (1 + |i-j|)
inline Haralick4 haralick4(const NormCoMatrix& m) {
  const std::size_t n = m.order();
  std::vector<double> px(n, 0.0), py(n, 0.0);
  Haralick4 f;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double p = m(i, j);
      px[i] += p;
      py[j] += p;
      const double d = static_cast<double>(i) - static_cast<double>(j);
      f.contrast += d * d * p;
      f.energy += p * p;
      f.homogeneity += p / (1.0 + std::abs(d));
    }
  }
  double mux = 0.0, muy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mux += static_cast<double>(i) * px[i];
    muy += static_cast<double>(i) * py[i];
  }
  double varx = 0.0, vary = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    varx += (static_cast<double>(i) - mux) * (static_cast<double>(i) - mux) * px[i];
    vary += (static_cast<double>(i) - muy) * (static_cast<double>(i) - muy) * py[i];
  }
  if (varx > 0.0 && vary > 0.0) {
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        cov += (static_cast<double>(i) - mux) * (static_cast<double>(j) - muy) * m(i, j);
      }
    }
    f.correlation = cov / std::sqrt(varx * vary);
  }
  return f;
}

/// Named texture descriptors of one image (or one direction's matrix).
struct FeatureVector {
  double trace = 0.0;
  std::array<double, 4> quarters{};
  double contrast = 0.0;
  double correlation = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;

  static constexpr std::array<const char*, 9> component_names = {
      "trace", "q1", "q2", "q3", "q4",
      "contrast", "correlation", "energy", "homogeneity"};

  std::array<double, 9> components() const {
    return {trace, quarters[0], quarters[1], quarters[2], quarters[3],
            contrast, correlation, energy, homogeneity};
  }

  static FeatureVector from_components(std::span<const double> c) {
    if (c.size() != 9) {
      throw ShapeError("feature vector needs 9 components");
    }
    FeatureVector f;
    f.trace = c[0];
    f.quarters = {c[1], c[2], c[3], c[4]};
    f.contrast = c[5];
    f.correlation = c[6];
    f.energy = c[7];
    f.homogeneity = c[8];
    return f;
  }

  bool operator==(const FeatureVector&) const = default;
};

inline FeatureVector features_of(const NormCoMatrix& m) {
  FeatureVector f;
  f.trace = trace(m);
  f.quarters = trace_quarters(m);
  const Haralick4 h = haralick4(m);
  f.contrast = h.contrast;
  f.correlation = h.correlation;
  f.energy = h.energy;
  f.homogeneity = h.homogeneity;
  return f;
}

/// Which components feed the retrieval index.
enum class FeatureSet { kTrace4, kHaralick4, kCombined8 };

inline const char* feature_set_name(FeatureSet s) {
  switch (s) {
    case FeatureSet::kTrace4: return "trace4";
    case FeatureSet::kHaralick4: return "haralick4";
    case FeatureSet::kCombined8: return "combined8";
  }
  return "?";
}

inline FeatureSet feature_set_from_name(std::string_view name) {
  if (name == "trace4") return FeatureSet::kTrace4;
  if (name == "haralick4") return FeatureSet::kHaralick4;
  if (name == "combined8") return FeatureSet::kCombined8;
  throw DomainError("unknown feature set '" + std::string(name) +
                    "' (expected trace4, haralick4, or combined8)");
}

inline std::vector<std::string> feature_schema(FeatureSet s) {
  switch (s) {
    case FeatureSet::kTrace4:
      return {"q1", "q2", "q3", "q4"};
    case FeatureSet::kHaralick4:
      return {"contrast", "correlation", "energy", "homogeneity"};
    case FeatureSet::kCombined8:
      return {"q1", "q2", "q3", "q4",
              "contrast", "correlation", "energy", "homogeneity"};
  }
  return {};
}

inline std::vector<double> select_features(const FeatureVector& f, FeatureSet s) {
  switch (s) {
    case FeatureSet::kTrace4:
      return {f.quarters[0], f.quarters[1], f.quarters[2], f.quarters[3]};
    case FeatureSet::kHaralick4:
      return {f.contrast, f.correlation, f.energy, f.homogeneity};
    case FeatureSet::kCombined8:
      return {f.quarters[0], f.quarters[1], f.quarters[2], f.quarters[3],
              f.contrast, f.correlation, f.energy, f.homogeneity};
  }
  return {};
}

/// How per-direction matrices combine into one feature vector.
/// kPerDirection extracts features from every direction's matrix and
/// averages the feature values; kPooled averages the probability
/// matrices first and extracts features once.
enum class MatrixAveraging { kPerDirection, kPooled };

/// Features averaged over a set of directions at distance k. The
/// reduction always runs in canonical (lexicographic) direction order,
/// so permuting `directions` cannot change the result bit for bit.
inline FeatureVector averaged_features(
    const NdImage& image, std::uint32_t k, std::span<const Direction> directions,
    MatrixAveraging mode = MatrixAveraging::kPerDirection) {
  if (directions.empty()) {
    throw DomainError("at least one direction is required");
  }
  std::vector<const Direction*> ordered;
  ordered.reserve(directions.size());
  for (const Direction& d : directions) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const Direction* a, const Direction* b) { return *a < *b; });

  std::vector<NormCoMatrix> matrices;
  matrices.reserve(ordered.size());
  for (const Direction* d : ordered) {
    CoMatrix g = compute_glcm(image, *d, k);
    if (g.pair_total() == 0) {
      throw DomainError("direction " + d->str() + " yields no pairs at k=" +
                        std::to_string(k) + " for this image");
    }
    matrices.push_back(normalize(g));
  }

  if (mode == MatrixAveraging::kPooled) {
    return features_of(NormCoMatrix::average(matrices));
  }

  std::array<double, 9> sum{};
  for (const NormCoMatrix& m : matrices) {
    const std::array<double, 9> c = features_of(m).components();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c[i];
  }
  for (double& v : sum) v /= static_cast<double>(matrices.size());
  return FeatureVector::from_components(sum);
}

/// Convenience overload: averages over all canonical directions for the
/// image's dimensionality.
inline FeatureVector averaged_features(const NdImage& image, std::uint32_t k = 1,
                                       MatrixAveraging mode = MatrixAveraging::kPerDirection) {
  const std::vector<Direction> dirs = enumerate_directions(image.rank());
  return averaged_features(image, k, dirs, mode);
}

// --- serialization -----------------------------------------------------

/// One labelled image's descriptors, as written to feature tables.
struct FeatureRow {
  std::string id;
  std::string class_label;
  FeatureVector features;
};

inline constexpr const char* kFeatureCsvHeader =
    "id,class,trace,q1,q2,q3,q4,contrast,correlation,energy,homogeneity";

inline void write_features_csv(std::ostream& os, std::span<const FeatureRow> rows) {
  os << kFeatureCsvHeader << '\n';
  for (const FeatureRow& r : rows) {
    os << r.id << ',' << r.class_label;
    for (double v : r.features.components()) {
      os << ',' << detail::fmt_double(v);
    }
    os << '\n';
  }
}

inline std::vector<FeatureRow> read_features_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kFeatureCsvHeader) {
    throw IoError("feature CSV must start with header '" +
                  std::string(kFeatureCsvHeader) + "'");
  }
  std::vector<FeatureRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 11) {
      throw IoError("feature CSV row needs 11 fields, got " +
                    std::to_string(fields.size()));
    }
    FeatureRow r;
    r.id = std::string(fields[0]);
    r.class_label = std::string(fields[1]);
    std::array<double, 9> c{};
    for (std::size_t i = 0; i < 9; ++i) c[i] = detail::parse_double(fields[2 + i]);
    r.features = FeatureVector::from_components(c);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json to_json(const FeatureRow& r) {
  return {{"id", r.id},
          {"class", r.class_label},
          {"trace", r.features.trace},
          {"quarters", r.features.quarters},
          {"contrast", r.features.contrast},
          {"correlation", r.features.correlation},
          {"energy", r.features.energy},
          {"homogeneity", r.features.homogeneity}};
}

}  // namespace ndtex
