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

#ifndef RVQKIT_BYTE_IO_H_
#define RVQKIT_BYTE_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace rvqkit {

// Little-endian serialization helpers shared by the WAV, model and stream
// formats.
class ByteWriter {
 public:
  void PutBytes(std::string_view bytes);
  void PutU16(uint16_t v);
  void PutU32(uint32_t v);
  void PutF32(float v);

  const std::vector<unsigned char>& bytes() const { return bytes_; }
  std::vector<unsigned char> Release() { return std::move(bytes_); }

 private:
  std::vector<unsigned char> bytes_;
};

// Every read throws ErrorCode::kTruncated when the input runs out.
class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::span<const unsigned char> Take(size_t n);
  uint16_t GetU16();
  uint32_t GetU32();
  float GetF32();
  bool Match(std::string_view tag);

  size_t remaining() const { return bytes_.size() - pos_; }
  size_t position() const { return pos_; }

 private:
  std::span<const unsigned char> bytes_;
  size_t pos_ = 0;
};

std::vector<unsigned char> ReadFileBytes(const std::filesystem::path& path);

// Writes to a sibling temporary and renames it over `path`, so readers never
// observe a partially written file.
void AtomicWriteFile(const std::filesystem::path& path,
                     std::span<const unsigned char> bytes);

}  // namespace rvqkit

#endif  // RVQKIT_BYTE_IO_H_
