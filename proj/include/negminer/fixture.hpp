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

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "negminer/corpus.hpp"
#include "negminer/embed.hpp"

namespace negminer::fixture {

/// Synthetic clustered corpus: Gaussian topic clusters per embedding model,
/// queries near cluster centers, positives drawn from the query's cluster
/// but never among its nearest neighbors (so hard-negative candidates
/// exist). Fully offline substitute for an embedding provider.
struct FixtureConfig {
  std::size_t n_docs = 4000;
  std::size_t n_queries = 200;
  std::size_t n_clusters = 8;
  std::vector<std::size_t> model_dims = {12, 8};
  double doc_noise = 0.08;
  double query_noise = 0.05;
  /// The positive is placed so at least this many same-cluster docs sit
  /// closer to the query.
  std::size_t min_closer_docs = 20;
  uint64_t seed = 42;
};

struct Fixture {
  corpus::DocumentSet documents;
  corpus::QuerySet queries;
  corpus::QrelSet qrels;
  std::vector<embed::EmbeddingStore> model_stores;  // ids: docs then queries
  std::unordered_map<std::string, int> labels;      // id -> cluster
};

Fixture make_fixture(const FixtureConfig& config);

/// Persists corpus.jsonl, queries.jsonl, qrels.tsv, labels.tsv, and one
/// store directory per model under dir/stores/.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

}  // namespace negminer::fixture
