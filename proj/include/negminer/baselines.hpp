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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "negminer/corpus.hpp"
#include "negminer/miner.hpp"

namespace negminer::baselines {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Bm25Index {
  // term -> (doc_id, term_freq), in corpus order
  std::unordered_map<std::string, std::vector<std::pair<std::string, int>>> postings;
  std::unordered_map<std::string, std::size_t> doc_freq;
  std::unordered_map<std::string, std::size_t> doc_lengths;
  double avg_doc_len = 0.0;
  std::size_t num_docs = 0;
};

Bm25Index build_bm25_index(const corpus::DocumentSet& documents);

/// Smoothed idf, never negative: ln((N - df + 0.5) / (df + 0.5) + 1).
double bm25_idf(const Bm25Index& index, const std::string& term);

/// Okapi BM25 score of one document against the query tokens; 0 when no
/// query term occurs in the document.
double bm25_score(const Bm25Index& index, const Bm25Params& params,
                  const std::vector<std::string>& query_tokens, const std::string& doc_id);

/// k uniform negatives per pair, excluding the query's positives. A fixed
/// seed reproduces the output exactly. Distance fields stay unset.
std::vector<miner::TripletRecord> sample_random(const corpus::QrelSet& qrels,
                                                const std::vector<std::string>& corpus_ids,
                                                std::size_t k, uint64_t seed);

/// Top-k BM25 scorers per pair (score > 0, positives excluded, ties by doc
/// id). Shorter lists carry a reason in no_negative.
std::vector<miner::TripletRecord> sample_bm25(const corpus::QrelSet& qrels,
                                              const corpus::QuerySet& queries,
                                              const Bm25Index& index, const Bm25Params& params,
                                              std::size_t k);

/// In-batch negatives: each pair takes the other pairs' positives in the
/// batch, never a positive of its own query. Batch must hold >= 2 pairs.
std::vector<miner::TripletRecord> sample_in_batch(std::span<const corpus::QrelPair> batch,
                                                  const corpus::QrelSet& qrels);

/// Splits qrels into deterministic batches (qrels order) and concatenates
/// the per-batch outputs. A trailing single-pair batch is merged into its
/// predecessor so every batch keeps at least 2 pairs.
std::vector<miner::TripletRecord> sample_in_batch_all(const corpus::QrelSet& qrels,
                                                      std::size_t batch_size);

}  // namespace negminer::baselines
