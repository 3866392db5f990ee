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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace negminer {

/// Library-wide failure type. The module tag prefixes the message so CLI
/// errors stay machine-parseable ("module: detail").
class Error : public std::runtime_error {
 public:
  Error(std::string_view module, std::string_view message);
  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

uint32_t crc32(const void* data, std::size_t size);
uint32_t crc32(std::string_view data);

/// Compensated (Kahan) accumulator. Batch reductions stay order-stable far
/// below double rounding noise.
class KahanSum {
 public:
  void add(double x) {
    double y = x - carry_;
    double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Unbiased draw from [0, n). Rejection sampling over the raw engine output,
/// so results do not depend on the standard library's distribution code.
uint64_t uniform_below(std::mt19937_64& rng, uint64_t n);

/// Standard-normal draw via Box-Muller on the raw engine output (same
/// portability rationale as uniform_below).
double standard_normal(std::mt19937_64& rng);

std::string read_file(const std::filesystem::path& path);

/// Write-temp-then-rename. A killed process never leaves a partial file
/// under the declared name.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

/// Move a fully staged directory into place, replacing any previous artifact.
void atomic_replace_dir(const std::filesystem::path& staging, const std::filesystem::path& dir);

/// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace negminer
