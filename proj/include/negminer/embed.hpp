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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace negminer::embed {

/// Id-aligned dense vector matrix for one model. Rows are 32-bit floats;
/// all distance and PCA arithmetic upstream runs in 64-bit.
struct EmbeddingStore {
  std::string model_name;
  std::size_t dim = 0;
  bool normalized = false;
  std::vector<std::string> ids;
  std::vector<float> matrix;  // row-major, count x dim
  std::unordered_map<std::string, std::size_t> index;

  std::size_t count() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(matrix.data() + i * dim, dim);
  }
  /// Row for an id, or empty span when absent.
  std::span<const float> find_row(const std::string& id) const;
  bool contains(const std::string& id) const { return index.contains(id); }

  void rebuild_index();
  /// Checks the store invariants: id/matrix alignment, unique ids, finite
  /// entries, and unit norms when the normalized flag is set.
  void validate() const;
};

struct ConcatSegment {
  std::string model_name;
  std::size_t offset = 0;
  std::size_t dim = 0;
};

struct ConcatVector {
  std::string id;
  std::vector<float> values;
  std::vector<ConcatSegment> layout;
};

struct ProviderSpec {
  std::string base_url;
  std::vector<std::string> model_names;
  std::size_t batch_size = 32;
  std::chrono::milliseconds timeout{30000};
  unsigned max_retries = 3;  // additional attempts after the first
  std::chrono::milliseconds initial_backoff{100};
};

/// Unit-L2 copy of v. Throws on the zero vector (degenerate embedding).
std::vector<float> l2_normalize(std::span<const float> v);
std::vector<double> l2_normalize(std::span<const double> v);

/// Per-model vectors for one id, each segment L2-normalized (unless
/// disabled), joined in store order.
ConcatVector concat_embeddings(std::span<const EmbeddingStore* const> stores,
                               const std::string& id, bool normalize_segments = true);

/// Whole-store concatenation. All stores must carry identical id sequences.
EmbeddingStore concat_stores(std::span<const EmbeddingStore* const> stores,
                             bool normalize_segments = true);

/// Fetches embeddings for `texts` (stored under `ids`) from the provider,
/// batching requests and retrying transient failures with exponential
/// backoff. Row i always corresponds to texts[i].
EmbeddingStore fetch_embeddings(const ProviderSpec& provider, const std::string& model,
                                const std::vector<std::string>& ids,
                                const std::vector<std::string>& texts);

/// Store directory layout: manifest.json, ids.txt, matrix.f32 (row-major
/// little-endian floats). read_store(write_store(s)) is bit-exact.
void write_store(const EmbeddingStore& store, const std::filesystem::path& dir);
EmbeddingStore read_store(const std::filesystem::path& dir);

}  // namespace negminer::embed
