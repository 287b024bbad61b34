#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "lagan/error.hpp"
#include "lagan/jet.hpp"
#include "lagan/tensor.hpp"

namespace lagan::io {

// All on-disk integers and floats are little-endian. Values are encoded
// explicitly byte by byte so the formats are portable and bit-exact.

inline void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

inline void read_exact(std::istream& in, char* dst, size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  require(static_cast<size_t>(in.gcount()) == n, ErrorCategory::format,
          std::string("truncated file while reading ") + what);
}

inline uint32_t get_u32(std::istream& in, const char* what = "u32") {
  char b[4];
  read_exact(in, b, 4, what);
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(b[i]);
  return v;
}

inline uint64_t get_u64(std::istream& in, const char* what = "u64") {
  char b[8];
  read_exact(in, b, 8, what);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(b[i]);
  return v;
}

inline double get_f64(std::istream& in, const char* what = "f64") {
  uint64_t bits = get_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void check_magic(std::istream& in, const char magic[4], const char* format_name) {
  char b[4];
  read_exact(in, b, 4, "magic bytes");
  require(std::memcmp(b, magic, 4) == 0, ErrorCategory::format,
          std::string("bad magic bytes, not a ") + format_name + " file");
}

/// Write through a temp file and rename into place, so a crash never leaves
/// a half-written file at the destination.
inline void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCategory::io, "cannot open for writing: " + tmp.string());
    body(out);
    out.flush();
    require(out.good(), ErrorCategory::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  require(!ec, ErrorCategory::io, "rename failed: " + target.string());
}

inline std::ifstream open_input(const std::string& path) {
  require(std::filesystem::exists(path), ErrorCategory::io, "file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCategory::io, "cannot open: " + path);
  return in;
}

// ---------------------------------------------------------------------------
// Parameter checkpoints ("LGN1")
//
//   magic "LGN1" | u64 entry count | per entry:
//     u32 name length | name bytes | u32 rank | u64 extents[rank] | f64 values
// ---------------------------------------------------------------------------

struct NamedArray {
  std::string name;
  Tensor tensor;
};

inline void save_arrays(const std::string& path, const std::vector<NamedArray>& entries) {
  atomic_write(path, [&](std::ostream& out) {
    out.write("LGN1", 4);
    put_u64(out, entries.size());
    for (const auto& e : entries) {
      put_u32(out, static_cast<uint32_t>(e.name.size()));
      out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      put_u32(out, static_cast<uint32_t>(e.tensor.rank()));
      for (int64_t ext : e.tensor.shape()) put_u64(out, static_cast<uint64_t>(ext));
      for (double v : e.tensor.values()) put_f64(out, v);
    }
  });
}

inline std::vector<NamedArray> load_arrays(const std::string& path) {
  std::ifstream in = open_input(path);
  check_magic(in, "LGN1", "LGN1 checkpoint");
  uint64_t count = get_u64(in, "entry count");
  std::vector<NamedArray> entries;
  entries.reserve(count);
  for (uint64_t k = 0; k < count; ++k) {
    uint32_t name_len = get_u32(in, "name length");
    std::string name(name_len, '\0');
    read_exact(in, name.data(), name_len, "entry name");
    uint32_t rank = get_u32(in, "rank");
    require(rank <= 8, ErrorCategory::format, "implausible tensor rank in checkpoint");
    std::vector<int64_t> shape(rank);
    for (uint32_t a = 0; a < rank; ++a) shape[a] = static_cast<int64_t>(get_u64(in, "extent"));
    Tensor t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = get_f64(in, "value");
    entries.push_back({std::move(name), std::move(t)});
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Jet image datasets ("JIM1")
//
//   magic "JIM1" | u64 count | per image:
//     u8 label | u8 origin | 625 f64 intensities (row-major)
// ---------------------------------------------------------------------------

inline void save_images(const std::string& path, const std::vector<JetImage>& images) {
  atomic_write(path, [&](std::ostream& out) {
    out.write("JIM1", 4);
    put_u64(out, images.size());
    for (const auto& img : images) {
      char meta[2] = {static_cast<char>(img.label), static_cast<char>(img.origin)};
      out.write(meta, 2);
      for (double v : img.pixels) put_f64(out, v);
    }
  });
}

inline std::vector<JetImage> load_images(const std::string& path) {
  std::ifstream in = open_input(path);
  check_magic(in, "JIM1", "JIM1 image dataset");
  uint64_t count = get_u64(in, "image count");
  std::vector<JetImage> images(count);
  for (auto& img : images) {
    char meta[2];
    read_exact(in, meta, 2, "image header");
    require(meta[0] == 0 || meta[0] == 1, ErrorCategory::format, "bad label byte");
    require(meta[1] == 0 || meta[1] == 1, ErrorCategory::format, "bad origin byte");
    img.label = static_cast<Label>(meta[0]);
    img.origin = static_cast<Origin>(meta[1]);
    for (double& v : img.pixels) v = get_f64(in, "pixel");
  }
  return images;
}

// ---------------------------------------------------------------------------
// Jet event datasets ("JEV1")
//
//   magic "JEV1" | u64 count | per event:
//     u8 label | u32 constituent count | per constituent f64 pt, eta, phi |
//     f64 subjet1 eta, phi | u8 has_subjet2 | [f64 subjet2 eta, phi]
// ---------------------------------------------------------------------------

inline void save_events(const std::string& path, const std::vector<JetEvent>& events) {
  atomic_write(path, [&](std::ostream& out) {
    out.write("JEV1", 4);
    put_u64(out, events.size());
    for (const auto& ev : events) {
      char label = static_cast<char>(ev.label);
      out.write(&label, 1);
      put_u32(out, static_cast<uint32_t>(ev.constituents.size()));
      for (const auto& c : ev.constituents) {
        put_f64(out, c.pt);
        put_f64(out, c.eta);
        put_f64(out, c.phi);
      }
      put_f64(out, ev.subjet1.eta);
      put_f64(out, ev.subjet1.phi);
      char has2 = ev.subjet2 ? 1 : 0;
      out.write(&has2, 1);
      if (ev.subjet2) {
        put_f64(out, ev.subjet2->eta);
        put_f64(out, ev.subjet2->phi);
      }
    }
  });
}

inline std::vector<JetEvent> load_events(const std::string& path) {
  std::ifstream in = open_input(path);
  check_magic(in, "JEV1", "JEV1 event dataset");
  uint64_t count = get_u64(in, "event count");
  std::vector<JetEvent> events(count);
  for (auto& ev : events) {
    char label;
    read_exact(in, &label, 1, "event label");
    require(label == 0 || label == 1, ErrorCategory::format, "bad label byte");
    ev.label = static_cast<Label>(label);
    uint32_t n = get_u32(in, "constituent count");
    ev.constituents.resize(n);
    for (auto& c : ev.constituents) {
      c.pt = get_f64(in, "pt");
      c.eta = get_f64(in, "eta");
      c.phi = get_f64(in, "phi");
    }
    ev.subjet1.eta = get_f64(in, "subjet1 eta");
    ev.subjet1.phi = get_f64(in, "subjet1 phi");
    char has2;
    read_exact(in, &has2, 1, "subjet2 flag");
    if (has2) {
      SubjetDirection s;
      s.eta = get_f64(in, "subjet2 eta");
      s.phi = get_f64(in, "subjet2 phi");
      ev.subjet2 = s;
    }
  }
  return events;
}

}  // namespace lagan::io
