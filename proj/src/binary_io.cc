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

#include "cgnet/binary_io.h"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cgnet {

std::uint32_t Crc32(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string HexHash(std::string_view bytes) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", Crc32(bytes));
  return buf;
}

std::string Deflate(std::span<const std::uint8_t> raw) {
  uLongf size = compressBound(raw.size());
  std::string out(size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &size, raw.data(),
                raw.size(), Z_BEST_SPEED) != Z_OK) {
    throw FormatError("deflate failed");
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> Inflate(std::string_view packed,
                                  std::size_t expected_size) {
  std::vector<std::uint8_t> out(expected_size);
  uLongf size = expected_size;
  if (uncompress(out.data(), &size,
                 reinterpret_cast<const Bytef*>(packed.data()),
                 packed.size()) != Z_OK ||
      size != expected_size) {
    throw CorruptFileError("compressed block does not inflate");
  }
  return out;
}

void BinaryWriter::WriteFileWithChecksum(const std::string& path) {
  std::string out = buffer_;
  const std::uint32_t crc = Crc32(buffer_);
  char bytes[sizeof(crc)];
  std::memcpy(bytes, &crc, sizeof(crc));
  out.append(bytes, sizeof(crc));
  WriteWholeFile(path, out);
}

BinaryReader BinaryReader::FromChecksummedFile(const std::string& path) {
  std::string data = ReadWholeFile(path);
  if (data.size() < sizeof(std::uint32_t)) {
    throw CorruptFileError(path + ": file too short");
  }
  std::uint32_t stored;
  std::memcpy(&stored, data.data() + data.size() - sizeof(stored),
              sizeof(stored));
  data.resize(data.size() - sizeof(stored));
  if (Crc32(data) != stored) {
    throw CorruptFileError(path + ": checksum mismatch");
  }
  return BinaryReader(std::move(data));
}

std::string ReadWholeFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteWholeFile(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace cgnet
