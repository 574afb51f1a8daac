// Copyright 2026 The rvqkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rvqkit/byte_io.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <system_error>

#include "rvqkit/status.h"

namespace rvqkit {

void ByteWriter::PutBytes(std::string_view bytes) {
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::PutU16(uint16_t v) {
  bytes_.push_back(static_cast<unsigned char>(v & 0xff));
  bytes_.push_back(static_cast<unsigned char>(v >> 8));
}

void ByteWriter::PutU32(uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    bytes_.push_back(static_cast<unsigned char>((v >> shift) & 0xff));
  }
}

void ByteWriter::PutF32(float v) { PutU32(std::bit_cast<uint32_t>(v)); }

std::span<const unsigned char> ByteReader::Take(size_t n) {
  if (n > remaining()) {
    Fail(ErrorCode::kTruncated, "unexpected end of data at byte " +
                                    std::to_string(pos_) + " (needed " +
                                    std::to_string(n) + " more)");
  }
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

uint16_t ByteReader::GetU16() {
  auto b = Take(2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t ByteReader::GetU32() {
  auto b = Take(4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

float ByteReader::GetF32() { return std::bit_cast<float>(GetU32()); }

bool ByteReader::Match(std::string_view tag) {
  auto b = Take(tag.size());
  return std::memcmp(b.data(), tag.data(), tag.size()) == 0;
}

std::vector<unsigned char> ReadFileBytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    Fail(ErrorCode::kNotFound, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

void AtomicWriteFile(const std::filesystem::path& path,
                     std::span<const unsigned char> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      Fail(ErrorCode::kIoError, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    Fail(ErrorCode::kIoError, "cannot rename into " + path.string());
  }
}

}  // namespace rvqkit
