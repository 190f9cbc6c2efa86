#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "ndtex/detail/format.hpp"
#include "ndtex/error.hpp"
#include "ndtex/image.hpp"

namespace ndtex {

namespace detail {

// Netpbm token scanner: skips whitespace and '#' comments.
inline std::string pnm_token(std::istream& is, const std::string& path) {
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (!std::isspace(c)) {
      break;
    } else {
      c = is.get();
    }
  }
  if (c == EOF) {
    throw IoError(path + ": truncated PGM header");
  }
  std::string tok;
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = is.get();
  }
  return tok;
}

inline std::uint64_t pnm_uint(std::istream& is, const std::string& path) {
  const std::string tok = pnm_token(is, path);
  const std::int64_t v = parse_int(tok);
  if (v < 0) {
    throw IoError(path + ": negative value in PGM header");
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

/// Reads a binary (P5) or ASCII (P2) PGM file. The resulting image has
/// levels = maxval + 1; 16-bit samples are big-endian per the format.
inline NdImage read_pgm(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError(name + ": cannot open file");
  }
  const std::string magic = detail::pnm_token(is, name);
  if (magic != "P5" && magic != "P2") {
    throw IoError(name + ": not a PGM file (magic '" + magic + "')");
  }
  const std::uint64_t width = detail::pnm_uint(is, name);
  const std::uint64_t height = detail::pnm_uint(is, name);
  const std::uint64_t maxval = detail::pnm_uint(is, name);
  if (width == 0 || height == 0) {
    throw IoError(name + ": zero-sized PGM");
  }
  if (maxval == 0 || maxval > 65535) {
    throw IoError(name + ": unsupported maxval " + std::to_string(maxval));
  }
  const std::size_t count = static_cast<std::size_t>(width * height);
  std::vector<std::uint16_t> data(count);
  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = static_cast<std::uint16_t>(detail::pnm_uint(is, name));
    }
  } else {
    // P5: exactly one whitespace byte after maxval, then raw samples.
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
      throw IoError(name + ": truncated PGM pixel data");
    }
    if (bytes == 1) {
      std::copy(raw.begin(), raw.end(), data.begin());
    } else {
      for (std::size_t i = 0; i < count; ++i) {
        data[i] = static_cast<std::uint16_t>(raw[2 * i] << 8 | raw[2 * i + 1]);
      }
    }
  }
  for (std::uint16_t v : data) {
    if (v > maxval) {
      throw IoError(name + ": sample " + std::to_string(v) + " exceeds maxval");
    }
  }
  return NdImage({static_cast<std::size_t>(width), static_cast<std::size_t>(height)},
                 static_cast<std::uint32_t>(maxval + 1), std::move(data));
}

/// Writes a 2-D image as binary PGM (P5) with maxval = levels - 1.
inline void write_pgm(const std::filesystem::path& path, const NdImage& image) {
  if (image.rank() != 2) {
    throw ShapeError("PGM export requires a 2-D image, got rank " +
                     std::to_string(image.rank()));
  }
  const std::string name = path.string();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw IoError(name + ": cannot open file for writing");
  }
  const std::uint32_t maxval = std::max<std::uint32_t>(1, image.levels() - 1);
  os << "P5\n" << image.dims()[0] << ' ' << image.dims()[1] << '\n' << maxval << '\n';
  if (maxval > 255) {
    for (std::uint16_t v : image.data()) {
      os.put(static_cast<char>(v >> 8));
      os.put(static_cast<char>(v & 0xff));
    }
  } else {
    for (std::uint16_t v : image.data()) {
      os.put(static_cast<char>(v));
    }
  }
  if (!os) {
    throw IoError(name + ": write failed");
  }
}

namespace detail {

struct PngDecoded {
  std::vector<std::uint16_t> data;
  std::size_t width = 0;
  std::size_t height = 0;
  std::string reject_reason;
};

// Everything libpng's longjmp could clobber lives behind this stable
// pointer; the enclosing frame only holds handles set before setjmp.
inline void png_decode(png_structp png, png_infop info, PngDecoded* out) {
  png_read_info(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type != PNG_COLOR_TYPE_GRAY) {
    out->reject_reason = "only greyscale PNG is supported";
    return;
  }
  if (bit_depth > 8) {
    out->reject_reason = "only 8-bit greyscale PNG is supported";
    return;
  }
  if (bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  std::vector<unsigned char> row(png_get_rowbytes(png, info));
  out->data.resize(out->width * out->height);
  for (std::size_t y = 0; y < out->height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t x = 0; x < out->width; ++x) {
      out->data[x + out->width * y] = row[x];
    }
  }
  png_read_end(png, nullptr);
}

}  // namespace detail

/// Reads an 8-bit greyscale PNG as a 2-D image with 256 levels.
/// Bit depths 1/2/4 are expanded to 8; color and 16-bit files are rejected.
inline NdImage read_png(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::FILE* fp = std::fopen(name.c_str(), "rb");
  if (!fp) {
    throw IoError(name + ": cannot open file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError(name + ": libpng initialization failed");
  }
  const auto decoded = std::make_unique<detail::PngDecoded>();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError(name + ": invalid PNG data");
  }
  png_init_io(png, fp);
  detail::png_decode(png, info, decoded.get());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  if (!decoded->reject_reason.empty()) {
    throw IoError(name + ": " + decoded->reject_reason);
  }
  return NdImage({decoded->width, decoded->height}, 256, std::move(decoded->data));
}

// --- raw n-D format -----------------------------------------------------
//
// A text header names the grid; voxels live in a separate flat binary
// file, little-endian, axis 0 fastest:
//
//   ndraw
//   dims 3 3 3
//   levels 4
//   bytes 1
//   data volume.bin
//
// bytes is 1 or 2 (2 required when levels > 256). The data path is
// resolved relative to the header's directory.

/// Reads the raw header + voxel pair described above.
inline NdImage read_raw(const std::filesystem::path& header_path) {
  const std::string name = header_path.string();
  std::ifstream is(header_path);
  if (!is) {
    throw IoError(name + ": cannot open file");
  }
  std::string magic;
  is >> magic;
  if (magic != "ndraw") {
    throw IoError(name + ": not a raw grid header (magic '" + magic + "')");
  }
  Extents dims;
  std::uint32_t levels = 0;
  std::size_t bytes = 0;
  std::filesystem::path data_path;
  std::string line;
  std::getline(is, line);  // rest of the magic line
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "dims") {
      std::int64_t e;
      while (ls >> e) {
        if (e <= 0) throw IoError(name + ": non-positive extent in dims");
        dims.push_back(static_cast<std::size_t>(e));
      }
    } else if (key == "levels") {
      std::int64_t v;
      if (!(ls >> v) || v <= 0) throw IoError(name + ": bad levels");
      levels = static_cast<std::uint32_t>(v);
    } else if (key == "bytes") {
      std::int64_t v;
      if (!(ls >> v) || (v != 1 && v != 2)) throw IoError(name + ": bytes must be 1 or 2");
      bytes = static_cast<std::size_t>(v);
    } else if (key == "data") {
      std::string rel;
      if (!(ls >> rel)) throw IoError(name + ": bad data path");
      data_path = header_path.parent_path() / rel;
    } else {
      throw IoError(name + ": unknown header key '" + key + "'");
    }
  }
  if (dims.empty() || levels == 0 || data_path.empty()) {
    throw IoError(name + ": header must name dims, levels, and data");
  }
  if (bytes == 0) {
    bytes = levels > 256 ? 2 : 1;
  }
  if (levels > 256 && bytes == 1) {
    throw IoError(name + ": levels > 256 requires bytes 2");
  }
  const std::size_t count = detail::checked_volume(dims);
  std::ifstream ds(data_path, std::ios::binary);
  if (!ds) {
    throw IoError(data_path.string() + ": cannot open voxel file");
  }
  std::vector<unsigned char> raw(count * bytes);
  ds.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(ds.gcount()) != raw.size()) {
    throw IoError(data_path.string() + ": voxel file shorter than dims imply");
  }
  std::vector<std::uint16_t> data(count);
  if (bytes == 1) {
    std::copy(raw.begin(), raw.end(), data.begin());
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = static_cast<std::uint16_t>(raw[2 * i] | raw[2 * i + 1] << 8);
    }
  }
  return NdImage(std::move(dims), levels, std::move(data));
}

/// Writes the header to `header_path` and the voxels to a sibling file
/// named after the header's stem with a .bin suffix.
inline void write_raw(const std::filesystem::path& header_path, const NdImage& image) {
  const std::filesystem::path bin_name = header_path.stem().concat(".bin");
  const std::filesystem::path bin_path = header_path.parent_path() / bin_name;
  const std::size_t bytes = image.levels() > 256 ? 2 : 1;
  {
    std::ofstream os(header_path, std::ios::trunc);
    if (!os) {
      throw IoError(header_path.string() + ": cannot open file for writing");
    }
    os << "ndraw\ndims";
    for (std::size_t e : image.dims()) os << ' ' << e;
    os << "\nlevels " << image.levels() << "\nbytes " << bytes
       << "\ndata " << bin_name.string() << '\n';
    if (!os) {
      throw IoError(header_path.string() + ": write failed");
    }
  }
  std::ofstream ds(bin_path, std::ios::binary | std::ios::trunc);
  if (!ds) {
    throw IoError(bin_path.string() + ": cannot open file for writing");
  }
  for (std::uint16_t v : image.data()) {
    ds.put(static_cast<char>(v & 0xff));
    if (bytes == 2) ds.put(static_cast<char>(v >> 8));
  }
  if (!ds) {
    throw IoError(bin_path.string() + ": write failed");
  }
}

/// Dispatches on the file extension: .pgm, .png, or .ndr (raw header).
inline NdImage read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ndr") return read_raw(path);
  throw IoError(path.string() + ": unsupported image format '" + ext + "'");
}

}  // namespace ndtex
