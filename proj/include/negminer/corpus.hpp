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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace negminer::corpus {

struct Document {
  std::string id;
  std::string text;
  std::map<std::string, std::string> meta;
};

struct Query {
  std::string id;
  std::string text;
};

/// One relevance judgment. Only grade >= 1 rows are kept as positives.
struct QrelPair {
  std::string query_id;
  std::string doc_id;
  int grade = 1;
};

/// Documents in file order with an id index. Immutable once loaded; safe to
/// share across threads.
struct DocumentSet {
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t size() const { return docs.size(); }
  const Document* find(std::string_view id) const;
  std::vector<std::string> ids() const;
};

struct QuerySet {
  std::vector<Query> queries;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t size() const { return queries.size(); }
  const Query* find(std::string_view id) const;
};

struct QrelSet {
  std::vector<QrelPair> pairs;  // file order
  std::unordered_map<std::string, std::vector<std::string>> positives;

  std::size_t size() const { return pairs.size(); }
  /// Positive doc ids for a query, O(1); empty list for unknown queries.
  const std::vector<std::string>& positives_for(const std::string& query_id) const;
};

struct LoadOptions {
  bool allow_empty_text = false;
};

/// JSON-Lines loader: one object per line with "id", "text", optional "meta"
/// (flat string map). Errors carry the 1-based line number.
DocumentSet load_documents(const std::filesystem::path& path, const LoadOptions& options = {});
QuerySet load_queries(const std::filesystem::path& path);

/// JSON-Lines writer; round-trips ids and texts exactly.
void save_documents(const DocumentSet& set, const std::filesystem::path& path);

/// TSV loader (query_id, doc_id[, grade]); validates ids against the given
/// query and document sets and rejects duplicate pairs.
QrelSet load_qrels(const std::filesystem::path& path, const QuerySet& queries,
                   const DocumentSet& corpus);

/// Lowercased maximal runs of alphanumeric code points (UTF-8 aware, major
/// scripts; simple case folding for ASCII, Latin-1, Greek, Cyrillic).
std::vector<std::string> tokenize(std::string_view text);

std::size_t token_count(std::string_view text);

struct LengthSummary {
  std::size_t min = 0;
  std::size_t max = 0;
  double mean = 0.0;
  double median = 0.0;
};

/// counts[0] holds lengths < edges[0], counts[i] holds edges[i-1] <= len <
/// edges[i], counts.back() holds len >= edges.back().
struct LengthHistogram {
  std::vector<int64_t> bucket_edges;
  std::vector<std::size_t> counts;
  LengthSummary summary;

  std::size_t total() const;
};

LengthHistogram length_stats(const DocumentSet& set, std::span<const int64_t> bucket_edges);
LengthHistogram length_stats(const QuerySet& set, std::span<const int64_t> bucket_edges);

}  // namespace negminer::corpus
