#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndtex/error.hpp"
#include "ndtex/image.hpp"
#include "ndtex/image_io.hpp"

namespace ndtex {

/// Deterministic, platform-stable PRNG (splitmix64). The synthetic
/// corpus depends on this exact sequence, so the algorithm is part of
/// the corpus format and is recorded in the provenance file.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform-ish draw in [0, n). Modulo bias is irrelevant at the n
  /// used here and keeps the sequence identical on every platform.
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(next() % n);
  }

private:
  std::uint64_t state_;
};

struct ImageEntry {
  std::string id;  // "<class>/<file stem>", unique across the dataset
  std::string class_label;
  std::filesystem::path path;
  Extents dims;
  std::uint32_t levels = 0;
};

struct ClassGroup {
  std::string label;
  std::vector<ImageEntry> images;  // sorted by id
};

/// A class-per-directory image tree. Classes and images are ordered
/// lexicographically so positional query selection is well defined.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ClassGroup> classes;

  std::size_t image_count() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.images.size();
    return n;
  }

  std::vector<const ImageEntry*> all() const {
    std::vector<const ImageEntry*> out;
    out.reserve(image_count());
    for (const auto& c : classes) {
      for (const auto& e : c.images) out.push_back(&e);
    }
    return out;
  }
};

/// Scans root/<class>/<image>.pgm|png. Every image header is read to
/// record dims and levels; unreadable files are reported per path and
/// abort the load.
inline DatasetManifest load_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    throw IoError(root.string() + ": dataset root is not a directory");
  }
  std::vector<std::string> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      class_dirs.push_back(entry.path().filename().string());
    }
  }
  if (class_dirs.empty()) {
    throw IoError(root.string() + ": dataset root has no class directories");
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  DatasetManifest manifest;
  manifest.root = root;
  std::string failures;
  for (const std::string& label : class_dirs) {
    ClassGroup group;
    group.label = label;
    for (const auto& entry : fs::directory_iterator(root / label)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (ext != ".pgm" && ext != ".png") continue;
      ImageEntry img;
      img.class_label = label;
      img.path = entry.path();
      img.id = label + "/" + entry.path().stem().string();
      try {
        const NdImage im = read_image(entry.path());
        img.dims = im.dims();
        img.levels = im.levels();
      } catch (const Error& e) {
        failures += std::string("  ") + e.what() + "\n";
        continue;
      }
      group.images.push_back(std::move(img));
    }
    std::sort(group.images.begin(), group.images.end(),
              [](const ImageEntry& a, const ImageEntry& b) { return a.id < b.id; });
    if (group.images.empty() && failures.empty()) {
      throw IoError((root / label).string() + ": class directory has no images");
    }
    manifest.classes.push_back(std::move(group));
  }
  if (!failures.empty()) {
    throw IoError("unreadable images under " + root.string() + ":\n" + failures);
  }
  return manifest;
}

/// Cuts a 2-D master image into a rows x cols grid of equal blocks,
/// returned in row-major block order. Extents must divide evenly.
inline std::vector<NdImage> split_master(const NdImage& image,
                                         std::size_t grid_rows,
                                         std::size_t grid_cols) {
  if (image.rank() != 2) {
    throw ShapeError("split_master requires a 2-D image");
  }
  if (grid_rows == 0 || grid_cols == 0) {
    throw DomainError("grid factors must be >= 1");
  }
  const std::size_t width = image.dims()[0];
  const std::size_t height = image.dims()[1];
  if (width % grid_cols != 0 || height % grid_rows != 0) {
    throw DomainError("extents " + std::to_string(width) + "x" +
                      std::to_string(height) + " are not divisible by grid " +
                      std::to_string(grid_rows) + "x" + std::to_string(grid_cols));
  }
  const std::size_t sub_w = width / grid_cols;
  const std::size_t sub_h = height / grid_rows;
  std::vector<NdImage> out;
  out.reserve(grid_rows * grid_cols);
  for (std::size_t br = 0; br < grid_rows; ++br) {
    for (std::size_t bc = 0; bc < grid_cols; ++bc) {
      std::vector<std::uint16_t> data(sub_w * sub_h);
      for (std::size_t y = 0; y < sub_h; ++y) {
        for (std::size_t x = 0; x < sub_w; ++x) {
          data[x + sub_w * y] =
              image[(bc * sub_w + x) + width * (br * sub_h + y)];
        }
      }
      out.emplace_back(Extents{sub_w, sub_h}, image.levels(), std::move(data));
    }
  }
  return out;
}

// --- synthetic corpus ------------------------------------------------------

struct SyntheticSpec {
  std::size_t class_count = 36;
  std::size_t per_class = 9;
  std::size_t size = 64;  // square side
  std::uint32_t levels = 32;
  std::uint64_t seed = 0;
};

inline constexpr const char* kSyntheticGeneratorId = "ndtex-synth-splitmix64-v1";

namespace detail {

inline std::uint64_t image_stream_seed(std::uint64_t seed, std::uint64_t class_idx,
                                       std::uint64_t image_idx) {
  SplitMix64 g(seed ^ (class_idx * 0x9E3779B97F4A7C15ULL) ^
               (image_idx * 0xC2B2AE3D27D4EB4FULL));
  return g.next();
}

inline std::uint16_t clamp_level(std::int64_t v, std::uint32_t levels) {
  if (v < 0) return 0;
  if (v >= static_cast<std::int64_t>(levels)) {
    return static_cast<std::uint16_t>(levels - 1);
  }
  return static_cast<std::uint16_t>(v);
}

// Occasional +-1 perturbation so images of one class differ without
// moving their co-occurrence statistics much.
inline std::uint16_t jitter(std::uint16_t v, std::uint32_t levels, SplitMix64& rng) {
  if (rng.below(8) == 0) {
    return clamp_level(static_cast<std::int64_t>(v) +
                           static_cast<std::int64_t>(rng.below(3)) - 1,
                       levels);
  }
  return v;
}

// Intensity positions are written as 32nds of the grey range so the
// same class layout works for any level count >= 8.
inline std::uint32_t level_pos(std::uint32_t frac32, std::uint32_t levels) {
  return frac32 * levels / 32;
}

// Four texture families cycle with the class index; the family
// parameters depend only on the class index (never the seed), so a
// class keeps its identity across differently-seeded corpora. Within a
// family the rank picks a (structure scale, intensity band) pair, so
// classes differ both in how much constant region they carry and in
// where on the diagonal that mass sits.
inline NdImage synth_image(std::size_t class_idx, const SyntheticSpec& spec,
                           SplitMix64& rng) {
  const std::size_t size = spec.size;
  const std::uint32_t levels = spec.levels;
  const std::size_t rank = class_idx / 4;
  const std::size_t ranks = (spec.class_count + 3) / 4;
  // rank -> 3x3 grid of (scale a, band b); repeats shift the scale so
  // corpora larger than 36 classes stay distinguishable
  const std::size_t a = (rank % 9) / 3;
  const std::size_t b = rank % 3;
  const std::uint32_t wrap = static_cast<std::uint32_t>(rank / 9);
  std::vector<std::uint16_t> data(size * size);

  switch (class_idx % 4) {
    case 0: {  // flat: constant base plus uniform noise
      const std::uint32_t base =
          static_cast<std::uint32_t>((2 * rank + 1) * levels / (2 * ranks));
      const std::uint32_t amp = static_cast<std::uint32_t>(
          rank * (levels / 4) / std::max<std::size_t>(1, ranks - 1));
      for (auto& v : data) {
        std::int64_t x = base;
        if (amp > 0) {
          x += static_cast<std::int64_t>(rng.below(2 * amp + 1)) -
               static_cast<std::int64_t>(amp);
        }
        v = clamp_level(x, levels);
      }
      break;
    }
    case 1: {  // stripe: vertical bands; period and band placement vary
      static constexpr std::uint32_t kPeriods[3] = {2, 4, 9};
      static constexpr std::uint32_t kBands[3][2] = {{2, 29}, {10, 21}, {3, 12}};
      const std::uint32_t period = kPeriods[a] + wrap;
      const std::uint32_t lo = level_pos(kBands[b][0], levels);
      const std::uint32_t hi =
          std::max(lo + 1, level_pos(kBands[b][1], levels));
      const std::uint32_t phase = rng.below(2 * period);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const std::uint16_t v = static_cast<std::uint16_t>(
              ((x + phase) / period) % 2 ? hi : lo);
          data[x + size * y] = jitter(v, levels, rng);
        }
      }
      break;
    }
    case 2: {  // check: checkerboard cells; cell size and band placement vary
      static constexpr std::uint32_t kCells[3] = {2, 4, 9};
      static constexpr std::uint32_t kBands[3][2] = {{6, 27}, {13, 18}, {19, 28}};
      const std::uint32_t cell = kCells[a] + wrap;
      const std::uint32_t lo = level_pos(kBands[b][0], levels);
      const std::uint32_t hi =
          std::max(lo + 1, level_pos(kBands[b][1], levels));
      const std::uint32_t dx = rng.below(2 * cell);
      const std::uint32_t dy = rng.below(2 * cell);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const std::uint16_t v = static_cast<std::uint16_t>(
              (((x + dx) / cell) + ((y + dy) / cell)) % 2 ? hi : lo);
          data[x + size * y] = jitter(v, levels, rng);
        }
      }
      break;
    }
    default: {  // blob: box-smoothed white noise; radius and band vary
      static constexpr std::uint32_t kRadii[3] = {1, 3, 7};
      static constexpr std::uint32_t kBands[3][2] = {{0, 15}, {8, 23}, {16, 31}};
      const std::size_t radius = kRadii[a] + wrap;
      const std::uint32_t lo = level_pos(kBands[b][0], levels);
      const std::uint32_t hi =
          std::max(lo + 1, level_pos(kBands[b][1], levels));
      std::vector<std::int64_t> noise(size * size);
      for (auto& v : noise) v = rng.below(4096);
      std::vector<std::int64_t> tmp(size * size);
      // horizontal pass
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const std::size_t x0 = x > radius ? x - radius : 0;
          const std::size_t x1 = std::min(size - 1, x + radius);
          std::int64_t sum = 0;
          for (std::size_t i = x0; i <= x1; ++i) sum += noise[i + size * y];
          tmp[x + size * y] = sum / static_cast<std::int64_t>(x1 - x0 + 1);
        }
      }
      // vertical pass
      std::vector<std::int64_t> smooth(size * size);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const std::size_t y0 = y > radius ? y - radius : 0;
          const std::size_t y1 = std::min(size - 1, y + radius);
          std::int64_t sum = 0;
          for (std::size_t i = y0; i <= y1; ++i) sum += tmp[x + size * i];
          smooth[x + size * y] = sum / static_cast<std::int64_t>(y1 - y0 + 1);
        }
      }
      // rescale into the class's intensity band
      const auto [mn, mx] = std::minmax_element(smooth.begin(), smooth.end());
      const std::int64_t span = *mx - *mn;
      for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = static_cast<std::uint16_t>(
            span == 0 ? lo : lo + (smooth[i] - *mn) * (hi - lo) / span);
      }
      break;
    }
  }
  return NdImage({size, size}, levels, std::move(data));
}

inline std::string class_dir_name(std::size_t class_idx) {
  static constexpr const char* kFamilies[4] = {"flat", "stripe", "check", "blob"};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu_%s", class_idx,
                kFamilies[class_idx % 4]);
  return buf;
}

}  // namespace detail

inline nlohmann::json to_json(const DatasetManifest& manifest) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : manifest.classes) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& e : c.images) {
      images.push_back({{"id", e.id},
                        {"path", e.path.filename().string()},
                        {"dims", e.dims},
                        {"levels", e.levels}});
    }
    classes.push_back({{"label", c.label}, {"images", images}});
  }
  return {{"root", manifest.root.string()},
          {"image_count", manifest.image_count()},
          {"classes", classes}};
}

inline void save_manifest(const DatasetManifest& manifest,
                          const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    throw IoError(path.string() + ": cannot open file for writing");
  }
  os << to_json(manifest).dump(2) << '\n';
}

/// Writes a seeded synthetic dataset tree under out_root and returns its
/// manifest. Equal seeds produce byte-identical trees; the per-class
/// texture parameters are a function of the class index alone.
inline DatasetManifest generate_synthetic(const SyntheticSpec& spec,
                                          const std::filesystem::path& out_root) {
  if (spec.class_count < 2 || spec.per_class < 2) {
    throw DomainError("synthetic corpus needs >= 2 classes and >= 2 images each");
  }
  if (spec.size < 8) {
    throw DomainError("synthetic image side must be >= 8");
  }
  if (spec.levels < 8 || spec.levels > 256) {
    throw DomainError("synthetic levels must be in [8, 256]");
  }
  namespace fs = std::filesystem;
  fs::create_directories(out_root);
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    const std::string label = detail::class_dir_name(c);
    fs::create_directories(out_root / label);
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      SplitMix64 rng(detail::image_stream_seed(spec.seed, c, i));
      const NdImage img = detail::synth_image(c, spec, rng);
      char name[32];
      std::snprintf(name, sizeof(name), "im%03zu.pgm", i);
      write_pgm(out_root / label / name, img);
    }
  }
  nlohmann::json provenance = {{"generator", kSyntheticGeneratorId},
                               {"seed", spec.seed},
                               {"class_count", spec.class_count},
                               {"per_class", spec.per_class},
                               {"size", spec.size},
                               {"levels", spec.levels}};
  {
    std::ofstream os(out_root / "provenance.json", std::ios::trunc);
    if (!os) {
      throw IoError((out_root / "provenance.json").string() +
                    ": cannot open file for writing");
    }
    os << provenance.dump(2) << '\n';
  }
  DatasetManifest manifest = load_dataset(out_root);
  save_manifest(manifest, out_root / "manifest.json");
  return manifest;
}

/// Ids at the given 1-based positions inside every class (positions past
/// a class's size are skipped). positions {1, 4} with m = 8 is the
/// default retrieval protocol.
inline std::vector<std::string> protocol_queries(
    const DatasetManifest& manifest, std::span<const std::size_t> positions) {
  std::vector<std::string> out;
  for (const auto& c : manifest.classes) {
    for (std::size_t p : positions) {
      if (p == 0) {
        throw DomainError("query positions are 1-based");
      }
      if (p <= c.images.size()) {
        out.push_back(c.images[p - 1].id);
      }
    }
  }
  return out;
}

}  // namespace ndtex
