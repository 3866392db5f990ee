/*
 * Copyright 2026 The negminer Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "negminer/common.hpp"

#include <unistd.h>

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace negminer {

namespace fs = std::filesystem;

Error::Error(std::string_view module, std::string_view message)
    : std::runtime_error(std::string(module) + ": " + std::string(message)),
      module_(module) {}

namespace {

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) {
      c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    }
    table[i] = c;
  }
  return table;
}

}  // namespace

uint32_t crc32(const void* data, std::size_t size) {
  static const std::array<uint32_t, 256> table = make_crc_table();
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i) {
    crc = table[(crc ^ bytes[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

uint32_t crc32(std::string_view data) { return crc32(data.data(), data.size()); }

uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) {
  if (n == 0) throw Error("common", "uniform_below: n must be positive");
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

double standard_normal(std::mt19937_64& rng) {
  // 53-bit uniforms in (0,1]; u1 > 0 keeps the log finite.
  const double scale = 1.0 / 9007199254740992.0;  // 2^-53
  double u1 = (static_cast<double>(rng() >> 11) + 1.0) * scale;
  double u2 = static_cast<double>(rng() >> 11) * scale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open file: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw Error("io", "read failed: " + path.string());
  return std::move(out).str();
}

void atomic_write_file(const fs::path& path, std::string_view content) {
  static std::atomic<uint64_t> counter{0};
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot create file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("io", "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("io", "rename failed for: " + path.string());
  }
}

void atomic_replace_dir(const fs::path& staging, const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir)) {
    fs::remove_all(dir, ec);
    if (ec) throw Error("io", "cannot replace directory: " + dir.string());
  }
  if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
  fs::rename(staging, dir, ec);
  if (ec) throw Error("io", "cannot move staged directory into place: " + dir.string());
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error("common", "double formatting failed");
  return std::string(buf.data(), ptr);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace negminer
