#pragma once

// Little-endian byte buffers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "sfwi/core/errors.hpp"

namespace sfwi::binary {

static_assert(std::endian::native == std::endian::little, "byte-swapping not implemented");

class Writer {
 public:
  void magic(const char (&m)[5]) { buf_.insert(buf_.end(), m, m + 4); }
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void flush(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void expect_magic(const char (&m)[5]) {
    need(4, "magic");
    if (std::memcmp(buf_.data(), m, 4) != 0)
      throw FormatError(std::string("bad magic, expected \"") + m + "\"", 0);
    pos_ = 4;
  }
  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> floats(std::uint64_t count, const char* what) {
    if (count > (std::numeric_limits<std::uint64_t>::max() / sizeof(float)))
      throw FormatError(std::string(what) + ": element count overflows", pos_);
    need(count * sizeof(float), what);
    std::vector<double> out(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, buf_.data() + pos_ + i * sizeof(float), sizeof(float));
      out[i] = f;
    }
    pos_ += count * sizeof(float);
    return out;
  }
  std::uint64_t pos() const { return pos_; }

 private:
  void need(std::uint64_t n, const char* what) const {
    if (n > buf_.size() - pos_)
      throw FormatError(std::string("truncated file reading ") + what + ": need " +
                            std::to_string(n) + " bytes, " + std::to_string(buf_.size() - pos_) +
                            " available",
                        pos_);
  }
  std::vector<char> buf_;
  std::uint64_t pos_ = 0;
};

inline void check_version(std::uint32_t v, std::uint32_t expected, std::uint64_t offset) {
  if (v != expected)
    throw FormatError("unsupported version " + std::to_string(v) + ", expected " +
                          std::to_string(expected),
                      offset);
}


}  // namespace sfwi::binary
