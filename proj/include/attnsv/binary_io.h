// Copyright 2026 The attnsv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian byte buffers for the feature and checkpoint formats.

#ifndef ATTNSV_BINARY_IO_H_
#define ATTNSV_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace attnsv {

class ByteWriter {
 public:
  void Bytes(const void *data, size_t n) {
    buffer_.append(static_cast<const char *>(data), n);
  }
  void U8(uint8_t v) { Bytes(&v, 1); }
  void U16(uint16_t v) { Little(v); }
  void U32(uint32_t v) { Little(v); }
  void F32(float v) { Little(std::bit_cast<uint32_t>(v)); }
  void F64(double v) { Little(std::bit_cast<uint64_t>(v)); }

  const std::string &buffer() const { return buffer_; }
  bool WriteFile(const std::string &path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    return static_cast<bool>(os);
  }

 private:
  template <typename U>
  void Little(U v) {
    unsigned char b[sizeof(U)];
    for (size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    Bytes(b, sizeof(U));
  }

  std::string buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string &bytes) : bytes_(bytes) {}

  size_t remaining() const { return bytes_.size() - pos_; }
  bool Bytes(void *out, size_t n) {
    if (remaining() < n) return false;
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
    return true;
  }
  bool U8(uint8_t *v) { return Bytes(v, 1); }
  bool U16(uint16_t *v) { return Little(v); }
  bool U32(uint32_t *v) { return Little(v); }
  bool F32(float *v) {
    uint32_t bits;
    if (!Little(&bits)) return false;
    *v = std::bit_cast<float>(bits);
    return true;
  }
  bool F64(double *v) {
    uint64_t bits;
    if (!Little(&bits)) return false;
    *v = std::bit_cast<double>(bits);
    return true;
  }

 private:
  template <typename U>
  bool Little(U *v) {
    unsigned char b[sizeof(U)];
    if (!Bytes(b, sizeof(U))) return false;
    U out = 0;
    for (size_t i = 0; i < sizeof(U); ++i) out |= static_cast<U>(b[i]) << (8 * i);
    *v = out;
    return true;
  }

  const std::string &bytes_;
  size_t pos_ = 0;
};

inline bool ReadFileBytes(const std::string &path, std::string *out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  out->assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  return !is.bad();
}

}  // namespace attnsv

#endif  // ATTNSV_BINARY_IO_H_
