// Command-line driver for the ndtex library: co-occurrence matrix
// inspection, feature extraction, retrieval index building, queries,
// precision evaluation, and synthetic corpus generation.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ndtex/ndtex.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

constexpr const char* kDatasetEnvVar = "NDTEX_DATASET_ROOT";

// Writes to stdout when path is "-", otherwise to the named file.
struct Output {
  explicit Output(const std::string& path) {
    if (path == "-") {
      os = &std::cout;
    } else {
      file.open(path, std::ios::trunc);
      if (!file) {
        throw ndtex::IoError(path + ": cannot open file for writing");
      }
      os = &file;
    }
  }
  std::ofstream file;
  std::ostream* os = nullptr;
};

std::vector<int> parse_components(const std::string& text) {
  std::vector<int> out;
  for (const auto& field : ndtex::detail::split(text, ',')) {
    out.push_back(static_cast<int>(ndtex::detail::parse_int(field)));
  }
  return out;
}

// "all" -> every canonical direction for the rank; otherwise a
// semicolon-separated list like "1,0;0,1".
std::vector<ndtex::Direction> resolve_directions(const std::string& text,
                                                 std::size_t rank) {
  if (text == "all") {
    return ndtex::enumerate_directions(rank);
  }
  std::vector<ndtex::Direction> out;
  for (const auto& part : ndtex::detail::split(text, ';')) {
    out.emplace_back(parse_components(std::string(part)));
  }
  return out;
}

// Runs fn(0..count) across up to `threads` workers; the first exception
// wins and is rethrown after all workers join.
template <typename Fn>
void for_each_index(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t workers = std::min<std::size_t>(threads, count);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = cursor.fetch_add(1); i < count;
           i = cursor.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct ExtractOptions {
  std::uint32_t k = 1;
  std::optional<std::uint32_t> levels;
  std::string directions = "all";
  bool pooled = false;
  unsigned threads = 1;
};

ndtex::FeatureVector extract_one(const ndtex::NdImage& raw,
                                 const ExtractOptions& opt) {
  const ndtex::NdImage image =
      opt.levels ? ndtex::quantize(raw, *opt.levels) : raw;
  const auto dirs = resolve_directions(opt.directions, image.rank());
  const auto mode = opt.pooled ? ndtex::MatrixAveraging::kPooled
                               : ndtex::MatrixAveraging::kPerDirection;
  return ndtex::averaged_features(image, opt.k, dirs, mode);
}

std::vector<ndtex::FeatureRow> extract_rows(const ndtex::DatasetManifest& manifest,
                                            const ExtractOptions& opt) {
  const auto entries = manifest.all();
  std::vector<ndtex::FeatureRow> rows(entries.size());
  for_each_index(entries.size(), opt.threads, [&](std::size_t i) {
    const ndtex::ImageEntry& e = *entries[i];
    rows[i] = {e.id, e.class_label, extract_one(ndtex::read_image(e.path), opt)};
  });
  return rows;
}

std::string bool_name(bool v) { return v ? "true" : "false"; }

// --- glcm ------------------------------------------------------------------

struct GlcmArgs {
  std::string image;
  std::string direction;
  std::uint32_t k = 1;
  std::optional<std::uint32_t> levels;
  bool normalize = false;
  std::string format = "csv";
  std::string out = "-";
};

void run_glcm(const GlcmArgs& a) {
  std::cerr << "config: command=glcm image=" << a.image << " direction="
            << a.direction << " k=" << a.k << " levels="
            << (a.levels ? std::to_string(*a.levels) : "native")
            << " normalize=" << bool_name(a.normalize) << " format=" << a.format
            << " out=" << a.out << '\n';
  ndtex::NdImage image = ndtex::read_image(a.image);
  if (a.levels) image = ndtex::quantize(image, *a.levels);
  const ndtex::Direction dir(parse_components(a.direction));
  const ndtex::CoMatrix m = ndtex::compute_glcm(image, dir, a.k);
  Output output(a.out);
  if (a.normalize) {
    const ndtex::NormCoMatrix nm = ndtex::normalize(m);
    if (a.format == "json") {
      *output.os << ndtex::to_json(nm).dump(2) << '\n';
    } else {
      ndtex::write_csv(nm, *output.os);
    }
  } else {
    if (a.format == "json") {
      *output.os << ndtex::to_json(m).dump(2) << '\n';
    } else {
      ndtex::write_csv(m, *output.os);
    }
  }
}

// --- features ----------------------------------------------------------------

struct FeaturesArgs {
  std::string input;
  ExtractOptions extract;
  std::string format = "csv";
  std::string out = "-";
};

void run_features(const FeaturesArgs& a) {
  std::cerr << "config: command=features input=" << a.input << " k="
            << a.extract.k << " levels="
            << (a.extract.levels ? std::to_string(*a.extract.levels) : "native")
            << " directions=" << a.extract.directions << " pooled="
            << bool_name(a.extract.pooled) << " threads=" << a.extract.threads
            << " format=" << a.format << " out=" << a.out << '\n';
  std::vector<ndtex::FeatureRow> rows;
  if (fs::is_directory(a.input)) {
    rows = extract_rows(ndtex::load_dataset(a.input), a.extract);
  } else {
    const fs::path path(a.input);
    rows.push_back({path.stem().string(), "",
                    extract_one(ndtex::read_image(path), a.extract)});
  }
  Output output(a.out);
  if (a.format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) j.push_back(ndtex::to_json(r));
    *output.os << j.dump(2) << '\n';
  } else {
    ndtex::write_features_csv(*output.os, rows);
  }
}

// --- index -------------------------------------------------------------------

struct IndexArgs {
  std::string features_csv;
  std::string feature_set = "trace4";
  std::string out;
};

void run_index(const IndexArgs& a) {
  std::cerr << "config: command=index features=" << a.features_csv
            << " feature-set=" << a.feature_set << " out=" << a.out << '\n';
  std::ifstream is(a.features_csv);
  if (!is) {
    throw ndtex::IoError(a.features_csv + ": cannot open file");
  }
  const auto rows = ndtex::read_features_csv(is);
  const ndtex::FeatureSet set = ndtex::feature_set_from_name(a.feature_set);
  std::vector<ndtex::CorpusEntry> entries;
  entries.reserve(rows.size());
  for (const auto& r : rows) {
    entries.push_back({r.id, r.class_label, ndtex::select_features(r.features, set)});
  }
  const auto index = ndtex::build_index(std::move(entries), ndtex::feature_schema(set));
  ndtex::save_index(index, a.out);
  std::cerr << "indexed " << index.entries().size() << " entries ("
            << a.feature_set << ")\n";
}

// --- query -------------------------------------------------------------------

struct QueryArgs {
  std::string index_path;
  std::string id;
  std::size_t m = 8;
  bool exclude_self = false;
  std::string format = "csv";
  std::string out = "-";
};

void run_query(const QueryArgs& a) {
  std::cerr << "config: command=query index=" << a.index_path << " id=" << a.id
            << " m=" << a.m << " include-self=" << bool_name(!a.exclude_self)
            << " format=" << a.format << " out=" << a.out << '\n';
  const auto index = ndtex::load_index(a.index_path);
  const ndtex::CorpusEntry* probe = index.find(a.id);
  if (!probe) {
    throw ndtex::DomainError("unknown query id '" + a.id + "'");
  }
  const auto hits = ndtex::query(
      index, probe->features, a.m,
      a.exclude_self ? std::optional<std::string_view>(a.id) : std::nullopt);
  Output output(a.out);
  if (a.format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& h : hits) {
      j.push_back({{"id", h.id}, {"distance", h.distance}});
    }
    *output.os << j.dump(2) << '\n';
  } else {
    *output.os << "rank,id,distance\n";
    for (std::size_t i = 0; i < hits.size(); ++i) {
      *output.os << (i + 1) << ',' << hits[i].id << ','
                 << ndtex::detail::fmt_double(hits[i].distance) << '\n';
    }
  }
}

// --- evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::string root;
  std::string feature_set = "trace4";
  bool compare = false;
  ExtractOptions extract;
  std::size_t m = 8;
  bool exclude_self = false;
  std::string queries = "1,4";
  std::string report;
  std::string format = "csv";
};

void write_report(const ndtex::PrecisionReport& report, const std::string& path,
                  const std::string& format) {
  Output output(path);
  if (format == "json") {
    *output.os << ndtex::to_json(report).dump(2) << '\n';
  } else {
    ndtex::write_csv(report, *output.os);
  }
}

void run_evaluate(const EvaluateArgs& a) {
  std::string root = a.root;
  if (root.empty()) {
    if (const char* env = std::getenv(kDatasetEnvVar)) {
      root = env;
    }
  }
  if (root.empty()) {
    throw CLI::ValidationError(
        "evaluate", std::string("no dataset root: pass --root or set $") +
                        kDatasetEnvVar);
  }
  std::cerr << "config: command=evaluate root=" << root << " feature-set="
            << (a.compare ? "trace4+haralick4" : a.feature_set) << " k="
            << a.extract.k << " levels="
            << (a.extract.levels ? std::to_string(*a.extract.levels) : "native")
            << " directions=" << a.extract.directions << " pooled="
            << bool_name(a.extract.pooled) << " m=" << a.m << " include-self="
            << bool_name(!a.exclude_self) << " queries=" << a.queries
            << " threads=" << a.extract.threads << '\n';

  const auto manifest = ndtex::load_dataset(root);
  std::cout << "corpus: classes=" << manifest.classes.size()
            << " images=" << manifest.image_count() << '\n';

  const auto rows = extract_rows(manifest, a.extract);

  std::vector<std::size_t> positions;
  for (const auto& p : ndtex::detail::split(a.queries, ',')) {
    positions.push_back(static_cast<std::size_t>(ndtex::detail::parse_int(p)));
  }
  const auto query_ids = ndtex::protocol_queries(manifest, positions);

  std::vector<ndtex::FeatureSet> sets;
  if (a.compare) {
    sets = {ndtex::FeatureSet::kTrace4, ndtex::FeatureSet::kHaralick4};
  } else {
    sets = {ndtex::feature_set_from_name(a.feature_set)};
  }

  std::cout << "feature_set,average_precision,queries,m,include_self\n";
  for (const ndtex::FeatureSet set : sets) {
    std::vector<ndtex::CorpusEntry> entries;
    entries.reserve(rows.size());
    for (const auto& r : rows) {
      entries.push_back({r.id, r.class_label, ndtex::select_features(r.features, set)});
    }
    const auto index = ndtex::build_index(std::move(entries), ndtex::feature_schema(set));
    const auto report = ndtex::evaluate(index, query_ids, a.m, !a.exclude_self);
    std::cout << ndtex::feature_set_name(set) << ','
              << ndtex::detail::fmt_double(report.average_precision) << ','
              << report.per_query.size() << ',' << report.m << ','
              << bool_name(report.include_self) << '\n';
    if (!a.report.empty()) {
      fs::path path(a.report);
      if (sets.size() > 1) {
        fs::path stem = path.stem();
        stem += std::string("_") + ndtex::feature_set_name(set);
        stem += path.extension();
        path = path.parent_path() / stem;
      }
      write_report(report, path.string(), a.format);
    }
  }
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  ndtex::SyntheticSpec spec;
};

void run_synth(const SynthArgs& a) {
  std::cerr << "config: command=synth out=" << a.out << " classes="
            << a.spec.class_count << " per-class=" << a.spec.per_class
            << " size=" << a.spec.size << " levels=" << a.spec.levels
            << " seed=" << a.spec.seed << '\n';
  const auto manifest = ndtex::generate_synthetic(a.spec, a.out);
  std::cout << "generated classes=" << manifest.classes.size()
            << " images=" << manifest.image_count() << " root=" << a.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-dimensional grey-level co-occurrence texture toolkit"};
  app.require_subcommand(1);

  GlcmArgs glcm_args;
  auto* glcm = app.add_subcommand(
      "glcm", "Compute a co-occurrence matrix for one image and direction");
  glcm->add_option("image", glcm_args.image, "Input image (.pgm/.png/.ndr)")
      ->required();
  glcm->add_option("--direction", glcm_args.direction,
                   "Displacement pattern, e.g. 1,0,0")
      ->required();
  glcm->add_option("--k", glcm_args.k, "Displacement distance")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  std::uint32_t glcm_levels = 0;
  auto* glcm_levels_opt = glcm->add_option(
      "--levels", glcm_levels, "Requantize to this many grey levels first");
  glcm->add_flag("--normalize", glcm_args.normalize,
                 "Emit joint probabilities instead of raw counts");
  glcm->add_option("--format", glcm_args.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val("csv");
  glcm->add_option("--out", glcm_args.out, "Output path or - for stdout")
      ->default_val("-");

  FeaturesArgs features_args;
  auto* features = app.add_subcommand(
      "features", "Extract texture features for an image or dataset tree");
  features->add_option("input", features_args.input,
                       "Image file or dataset root directory")
      ->required();
  features->add_option("--k", features_args.extract.k, "Displacement distance")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  std::uint32_t features_levels = 0;
  auto* features_levels_opt = features->add_option(
      "--levels", features_levels, "Requantize to this many grey levels first");
  features->add_option("--directions", features_args.extract.directions,
                       "'all' or explicit list, e.g. '1,0;0,1'")
      ->default_val("all");
  features->add_flag("--pooled", features_args.extract.pooled,
                     "Extract features from the averaged matrix instead of "
                     "averaging per-direction features");
  features->add_option("--threads", features_args.extract.threads,
                       "Worker threads for per-image extraction")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  features->add_option("--format", features_args.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val("csv");
  features->add_option("--out", features_args.out, "Output path or - for stdout")
      ->default_val("-");

  IndexArgs index_args;
  auto* index = app.add_subcommand(
      "index", "Build a retrieval index from a feature CSV");
  index->add_option("features", index_args.features_csv, "Feature CSV path")
      ->required();
  index->add_option("--feature-set", index_args.feature_set,
                    "Vector components for retrieval")
      ->check(CLI::IsMember({"trace4", "haralick4", "combined8"}))
      ->default_val("trace4");
  index->add_option("--out", index_args.out, "Index JSON output path")
      ->required();

  QueryArgs query_args;
  auto* query = app.add_subcommand("query", "Rank corpus entries against a query id");
  query->add_option("index", query_args.index_path, "Index JSON path")->required();
  query->add_option("--id", query_args.id, "Query entry id")->required();
  query->add_option("--m", query_args.m, "Number of results")
      ->default_val(8)
      ->check(CLI::PositiveNumber);
  query->add_flag("--exclude-self", query_args.exclude_self,
                  "Drop the query entry from the candidates");
  query->add_option("--format", query_args.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val("csv");
  query->add_option("--out", query_args.out, "Output path or - for stdout")
      ->default_val("-");

  EvaluateArgs evaluate_args;
  auto* evaluate = app.add_subcommand(
      "evaluate",
      "Run the retrieval protocol over a dataset and report precision");
  evaluate->add_option("--root", evaluate_args.root,
                       std::string("Dataset root (default: $") + kDatasetEnvVar + ")");
  evaluate->add_option("--feature-set", evaluate_args.feature_set,
                       "Vector components for retrieval")
      ->check(CLI::IsMember({"trace4", "haralick4", "combined8"}))
      ->default_val("trace4");
  evaluate->add_flag("--compare", evaluate_args.compare,
                     "Evaluate trace4 and haralick4 side by side");
  evaluate->add_option("--k", evaluate_args.extract.k, "Displacement distance")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  std::uint32_t evaluate_levels = 0;
  auto* evaluate_levels_opt = evaluate->add_option(
      "--levels", evaluate_levels, "Requantize to this many grey levels first");
  evaluate->add_option("--directions", evaluate_args.extract.directions,
                       "'all' or explicit list, e.g. '1,0;0,1'")
      ->default_val("all");
  evaluate->add_flag("--pooled", evaluate_args.extract.pooled,
                     "Extract features from the averaged matrix");
  evaluate->add_option("--m", evaluate_args.m, "Retrieved images per query")
      ->default_val(8)
      ->check(CLI::PositiveNumber);
  evaluate->add_flag("--exclude-self", evaluate_args.exclude_self,
                     "Drop each query from its own candidate set");
  evaluate->add_option("--queries", evaluate_args.queries,
                       "1-based image positions per class")
      ->default_val("1,4");
  evaluate->add_option("--threads", evaluate_args.extract.threads,
                       "Worker threads for per-image extraction")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--report", evaluate_args.report,
                       "Write the per-query report to this path");
  evaluate->add_option("--format", evaluate_args.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val("csv");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand(
      "synth", "Generate a seeded synthetic texture dataset");
  synth->add_option("--out", synth_args.out, "Output dataset root")->required();
  synth->add_option("--classes", synth_args.spec.class_count, "Class count")
      ->default_val(36);
  synth->add_option("--per-class", synth_args.spec.per_class, "Images per class")
      ->default_val(9);
  synth->add_option("--size", synth_args.spec.size, "Square image side")
      ->default_val(64);
  synth->add_option("--levels", synth_args.spec.levels, "Grey levels")
      ->default_val(32);
  synth->add_option("--seed", synth_args.spec.seed, "Generator seed")
      ->default_val(0);

  glcm->callback([&] {
    if (*glcm_levels_opt) glcm_args.levels = glcm_levels;
    run_glcm(glcm_args);
  });
  features->callback([&] {
    if (*features_levels_opt) features_args.extract.levels = features_levels;
    run_features(features_args);
  });
  index->callback([&] { run_index(index_args); });
  query->callback([&] { run_query(query_args); });
  evaluate->callback([&] {
    if (*evaluate_levels_opt) evaluate_args.extract.levels = evaluate_levels;
    run_evaluate(evaluate_args);
  });
  synth->callback([&] { run_synth(synth_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const ndtex::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
