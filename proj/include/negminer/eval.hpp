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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "negminer/corpus.hpp"

namespace negminer::eval {

/// Reranker scores per (query, doc). Pairs are unique and scores finite.
struct RunScores {
  std::vector<std::tuple<std::string, std::string, double>> entries;
};

/// TSV loader: query_id, doc_id, score.
RunScores load_run(const std::filesystem::path& path);

enum class MissingQueryPolicy { error, zero };

struct MrrResult {
  double mrr = 0.0;
  std::map<std::string, double> per_query_rr;
};

/// Per query: rank docs by descending score (ties by ascending doc id),
/// reciprocal rank of the best-ranked positive when within the top k, else
/// 0. MRR averages over the queries present in qrels.
MrrResult mrr_at_k(const RunScores& run, const corpus::QrelSet& qrels, int k,
                   MissingQueryPolicy missing = MissingQueryPolicy::error);

/// Partition: short = token count < threshold, long = the rest.
struct LengthBuckets {
  std::unordered_set<std::string> short_ids;
  std::unordered_set<std::string> long_ids;
};
LengthBuckets bucket_by_length(const corpus::DocumentSet& documents,
                               std::size_t threshold_tokens);

struct MrrReport {
  std::map<int, double> mrr;                    // k -> MRR@k
  std::map<std::string, double> per_query_rr;   // at the largest k
  std::size_t query_count = 0;
};

struct EvalReport {
  MrrReport overall;
  std::optional<MrrReport> short_bucket;  // queries whose positive is short
  std::optional<MrrReport> long_bucket;
  std::size_t threshold_tokens = 0;
};

/// Overall MRR@k for each k plus short/long sub-reports; a query's bucket
/// is the bucket of its (first) positive document.
EvalReport eval_report(const RunScores& run, const corpus::QrelSet& qrels,
                       const corpus::DocumentSet& documents, const std::vector<int>& ks,
                       std::size_t threshold_tokens,
                       MissingQueryPolicy missing = MissingQueryPolicy::error);

std::string report_to_json(const EvalReport& report);

}  // namespace negminer::eval
