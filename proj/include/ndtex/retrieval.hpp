#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ndtex/detail/format.hpp"
#include "ndtex/error.hpp"

namespace ndtex {

/// One labelled feature vector in the corpus.
struct CorpusEntry {
  std::string id;
  std::string class_label;
  std::vector<double> features;
};

/// Immutable linear-scan index. Per-dimension min/max captured at build
/// time drive min-max normalization; a dimension whose min equals its
/// max contributes nothing to any distance.
class RetrievalIndex {
public:
  struct DimStats {
    double min = 0.0;
    double max = 0.0;
  };

  const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }
  const std::vector<std::string>& schema() const noexcept { return schema_; }
  const std::vector<DimStats>& norm_stats() const noexcept { return stats_; }

  const CorpusEntry* find(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &entries_[it->second];
  }

private:
  friend RetrievalIndex build_index(std::vector<CorpusEntry>,
                                    std::vector<std::string>);
  friend RetrievalIndex load_index(const std::filesystem::path&);

  void index_ids() {
    by_id_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!by_id_.emplace(entries_[i].id, i).second) {
        throw DomainError("duplicate corpus id '" + entries_[i].id + "'");
      }
    }
  }

  std::vector<CorpusEntry> entries_;
  std::vector<std::string> schema_;
  std::vector<DimStats> stats_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

inline RetrievalIndex build_index(std::vector<CorpusEntry> entries,
                                  std::vector<std::string> schema) {
  if (entries.empty()) {
    throw DomainError("index needs at least one entry");
  }
  if (schema.empty()) {
    throw ShapeError("index needs a non-empty feature schema");
  }
  RetrievalIndex index;
  index.schema_ = std::move(schema);
  for (const CorpusEntry& e : entries) {
    if (e.features.size() != index.schema_.size()) {
      throw ShapeError("entry '" + e.id + "' has " +
                       std::to_string(e.features.size()) +
                       " features, schema has " +
                       std::to_string(index.schema_.size()));
    }
  }
  index.stats_.resize(index.schema_.size());
  for (std::size_t d = 0; d < index.stats_.size(); ++d) {
    index.stats_[d] = {entries.front().features[d], entries.front().features[d]};
  }
  for (const CorpusEntry& e : entries) {
    for (std::size_t d = 0; d < e.features.size(); ++d) {
      index.stats_[d].min = std::min(index.stats_[d].min, e.features[d]);
      index.stats_[d].max = std::max(index.stats_[d].max, e.features[d]);
    }
  }
  index.entries_ = std::move(entries);
  index.index_ids();
  return index;
}

struct QueryHit {
  std::string id;
  double distance = 0.0;
};

/// Euclidean distance over min-max-normalized dimensions, ascending;
/// ties break by id so rankings are deterministic everywhere.
inline std::vector<QueryHit> query(const RetrievalIndex& index,
                                   std::span<const double> probe, std::size_t m,
                                   std::optional<std::string_view> exclude_id = std::nullopt) {
  if (probe.size() != index.schema().size()) {
    throw ShapeError("probe has " + std::to_string(probe.size()) +
                     " dimensions, index schema has " +
                     std::to_string(index.schema().size()));
  }
  if (m == 0) {
    throw DomainError("retrieval count m must be >= 1");
  }
  const auto& stats = index.norm_stats();
  std::vector<QueryHit> hits;
  hits.reserve(index.entries().size());
  for (const CorpusEntry& e : index.entries()) {
    if (exclude_id && e.id == *exclude_id) continue;
    double d2 = 0.0;
    for (std::size_t d = 0; d < probe.size(); ++d) {
      const double range = stats[d].max - stats[d].min;
      if (range <= 0.0) continue;  // constant dimension
      const double a = (probe[d] - stats[d].min) / range;
      const double b = (e.features[d] - stats[d].min) / range;
      d2 += (a - b) * (a - b);
    }
    hits.push_back({e.id, std::sqrt(d2)});
  }
  std::sort(hits.begin(), hits.end(), [](const QueryHit& a, const QueryHit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  if (hits.size() > m) hits.resize(m);
  return hits;
}

/// Per-query precision@m plus the average, sorted by query id.
struct PrecisionReport {
  struct QueryPrecision {
    std::string query_id;
    double precision = 0.0;
  };
  std::vector<QueryPrecision> per_query;
  double average_precision = 0.0;
  std::size_t m = 0;
  bool include_self = true;
};

/// Runs every query id against the index and scores the fraction of the
/// m retrieved entries sharing the query's class. With include_self the
/// query entry itself may appear among the results.
inline PrecisionReport evaluate(const RetrievalIndex& index,
                                std::span<const std::string> query_ids,
                                std::size_t m, bool include_self) {
  if (query_ids.empty()) {
    throw DomainError("at least one query id is required");
  }
  PrecisionReport report;
  report.m = m;
  report.include_self = include_self;
  for (const std::string& qid : query_ids) {
    const CorpusEntry* q = index.find(qid);
    if (!q) {
      throw DomainError("unknown query id '" + qid + "'");
    }
    const auto hits = query(index, q->features, m,
                            include_self ? std::nullopt
                                         : std::optional<std::string_view>(qid));
    std::size_t relevant = 0;
    for (const QueryHit& h : hits) {
      if (index.find(h.id)->class_label == q->class_label) ++relevant;
    }
    report.per_query.push_back(
        {qid, static_cast<double>(relevant) / static_cast<double>(m)});
  }
  std::sort(report.per_query.begin(), report.per_query.end(),
            [](const auto& a, const auto& b) { return a.query_id < b.query_id; });
  double sum = 0.0;
  for (const auto& p : report.per_query) sum += p.precision;
  report.average_precision = sum / static_cast<double>(report.per_query.size());
  return report;
}

// --- persistence ---------------------------------------------------------

inline nlohmann::json to_json(const RetrievalIndex& index) {
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : index.norm_stats()) {
    stats.push_back({{"min", s.min}, {"max", s.max}});
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const CorpusEntry& e : index.entries()) {
    entries.push_back(
        {{"id", e.id}, {"class", e.class_label}, {"features", e.features}});
  }
  return {{"schema", index.schema()}, {"norm_stats", stats}, {"entries", entries}};
}

inline void save_index(const RetrievalIndex& index, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    throw IoError(path.string() + ": cannot open file for writing");
  }
  os << to_json(index).dump(2) << '\n';
  if (!os) {
    throw IoError(path.string() + ": write failed");
  }
}

inline RetrievalIndex load_index(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw IoError(path.string() + ": cannot open file");
  }
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": invalid index JSON (" + e.what() + ")");
  }
  try {
    RetrievalIndex index;
    index.schema_ = j.at("schema").get<std::vector<std::string>>();
    for (const auto& s : j.at("norm_stats")) {
      RetrievalIndex::DimStats ds{s.at("min").get<double>(), s.at("max").get<double>()};
      if (ds.max < ds.min) {
        throw IoError(path.string() + ": norm_stats max < min");
      }
      index.stats_.push_back(ds);
    }
    if (index.stats_.size() != index.schema_.size()) {
      throw IoError(path.string() + ": norm_stats length does not match schema");
    }
    for (const auto& e : j.at("entries")) {
      CorpusEntry entry{e.at("id").get<std::string>(),
                        e.at("class").get<std::string>(),
                        e.at("features").get<std::vector<double>>()};
      if (entry.features.size() != index.schema_.size()) {
        throw IoError(path.string() + ": entry '" + entry.id +
                      "' feature length does not match schema");
      }
      index.entries_.push_back(std::move(entry));
    }
    if (index.entries_.empty()) {
      throw IoError(path.string() + ": index has no entries");
    }
    index.index_ids();
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": invalid index JSON (" + e.what() + ")");
  }
}

inline void write_csv(const PrecisionReport& report, std::ostream& os) {
  os << "query_id,precision\n";
  for (const auto& p : report.per_query) {
    os << p.query_id << ',' << detail::fmt_double(p.precision) << '\n';
  }
  os << "average_precision," << detail::fmt_double(report.average_precision)
     << '\n';
}

inline nlohmann::json to_json(const PrecisionReport& report) {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& p : report.per_query) {
    per_query.push_back({{"query_id", p.query_id}, {"precision", p.precision}});
  }
  return {{"m", report.m},
          {"include_self", report.include_self},
          {"per_query", per_query},
          {"average_precision", report.average_precision}};
}

}  // namespace ndtex
