/* Copyright 2026 The CGNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Little-endian binary record helpers shared by the dataset and checkpoint
// containers.

#ifndef CGNET_BINARY_IO_H_
#define CGNET_BINARY_IO_H_

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cgnet {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CorruptFileError : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

std::uint32_t Crc32(std::string_view bytes);
std::string HexHash(std::string_view bytes);

std::string Deflate(std::span<const std::uint8_t> raw);
std::vector<std::uint8_t> Inflate(std::string_view packed,
                                  std::size_t expected_size);

class BinaryWriter {
 public:
  template <typename T>
  void Put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buffer_.append(bytes, sizeof(T));
  }
  void PutString(std::string_view s) {
    Put<std::uint64_t>(s.size());
    buffer_.append(s);
  }
  void PutBytes(std::string_view s) { buffer_.append(s); }

  const std::string& buffer() const { return buffer_; }

  // Appends a CRC32 of everything written so far and writes the file.
  void WriteFileWithChecksum(const std::string& path);

 private:
  std::string buffer_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : data_(std::move(data)) {}

  // Reads `path`, checks the trailing CRC32 and strips it.
  static BinaryReader FromChecksummedFile(const std::string& path);

  template <typename T>
  T Get() {
    static_assert(std::is_arithmetic_v<T>);
    Need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string GetString() {
    const auto n = Get<std::uint64_t>();
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string GetBytes(std::size_t n) {
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == data_.size(); }

 private:
  void Need(std::size_t n) const {
    if (n > data_.size() - pos_) throw CorruptFileError("truncated record");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

std::string ReadWholeFile(const std::string& path);
void WriteWholeFile(const std::string& path, std::string_view contents);

}  // namespace cgnet

#endif  // CGNET_BINARY_IO_H_
