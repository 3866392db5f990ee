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

#include "negminer/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "negminer/common.hpp"

namespace negminer::baselines {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("baselines", message); }

bool is_positive_of(const corpus::QrelSet& qrels, const std::string& query_id,
                    const std::string& doc_id) {
  const auto& positives = qrels.positives_for(query_id);
  return std::find(positives.begin(), positives.end(), doc_id) != positives.end();
}

}  // namespace

Bm25Index build_bm25_index(const corpus::DocumentSet& documents) {
  if (documents.size() == 0) fail("cannot build a BM25 index over an empty corpus");

  Bm25Index index;
  index.num_docs = documents.size();
  std::size_t total_len = 0;
  std::unordered_map<std::string, int> frequencies;
  for (const auto& doc : documents.docs) {
    auto tokens = corpus::tokenize(doc.text);
    index.doc_lengths[doc.id] = tokens.size();
    total_len += tokens.size();

    frequencies.clear();
    for (const auto& token : tokens) frequencies[token]++;
    for (const auto& [term, tf] : frequencies) {
      index.postings[term].emplace_back(doc.id, tf);
      index.doc_freq[term]++;
    }
  }
  index.avg_doc_len = static_cast<double>(total_len) / static_cast<double>(documents.size());
  return index;
}

double bm25_idf(const Bm25Index& index, const std::string& term) {
  auto it = index.doc_freq.find(term);
  const double df = it == index.doc_freq.end() ? 0.0 : static_cast<double>(it->second);
  const double n = static_cast<double>(index.num_docs);
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double bm25_score(const Bm25Index& index, const Bm25Params& params,
                  const std::vector<std::string>& query_tokens, const std::string& doc_id) {
  auto len_it = index.doc_lengths.find(doc_id);
  if (len_it == index.doc_lengths.end()) fail("unknown doc_id: " + doc_id);
  if (params.k1 < 0.0) fail("k1 must be >= 0");
  if (params.b < 0.0 || params.b > 1.0) fail("b must be in [0, 1]");

  const double len_norm =
      1.0 - params.b + params.b * static_cast<double>(len_it->second) / index.avg_doc_len;
  double score = 0.0;
  for (const auto& term : query_tokens) {
    auto postings_it = index.postings.find(term);
    if (postings_it == index.postings.end()) continue;
    int tf = 0;
    for (const auto& [posted_doc, posted_tf] : postings_it->second) {
      if (posted_doc == doc_id) {
        tf = posted_tf;
        break;
      }
    }
    if (tf == 0) continue;
    const double t = static_cast<double>(tf);
    score += bm25_idf(index, term) * (t * (params.k1 + 1.0)) / (t + params.k1 * len_norm);
  }
  return score;
}

std::vector<miner::TripletRecord> sample_random(const corpus::QrelSet& qrels,
                                                const std::vector<std::string>& corpus_ids,
                                                std::size_t k, uint64_t seed) {
  if (k < 1) fail("k must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<miner::TripletRecord> records;
  records.reserve(qrels.pairs.size());
  std::vector<std::string> eligible;
  for (const auto& pair : qrels.pairs) {
    eligible.clear();
    for (const auto& id : corpus_ids) {
      if (!is_positive_of(qrels, pair.query_id, id)) eligible.push_back(id);
    }
    if (eligible.size() < k) {
      fail("query " + pair.query_id + " has only " + std::to_string(eligible.size()) +
           " eligible candidates, need " + std::to_string(k));
    }
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + uniform_below(rng, eligible.size() - i);
      std::swap(eligible[i], eligible[j]);
    }
    miner::TripletRecord record;
    record.query_id = pair.query_id;
    record.positive_id = pair.doc_id;
    for (std::size_t i = 0; i < k; ++i) {
      record.negatives.push_back({eligible[i], std::nullopt, std::nullopt,
                                  static_cast<int>(i + 1)});
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<miner::TripletRecord> sample_bm25(const corpus::QrelSet& qrels,
                                              const corpus::QuerySet& queries,
                                              const Bm25Index& index, const Bm25Params& params,
                                              std::size_t k) {
  if (k < 1) fail("k must be >= 1");
  std::vector<miner::TripletRecord> records;
  records.reserve(qrels.pairs.size());
  for (const auto& pair : qrels.pairs) {
    const corpus::Query* query = queries.find(pair.query_id);
    if (!query) fail("query " + pair.query_id + " not in query set");
    const auto query_tokens = corpus::tokenize(query->text);

    // Accumulate scores over postings; per-document term order equals the
    // query-token order, so sums match bm25_score bit for bit.
    std::unordered_map<std::string, double> scores;
    for (const auto& term : query_tokens) {
      auto postings_it = index.postings.find(term);
      if (postings_it == index.postings.end()) continue;
      const double idf = bm25_idf(index, term);
      for (const auto& [doc_id, tf] : postings_it->second) {
        const double len_norm = 1.0 - params.b +
                                params.b * static_cast<double>(index.doc_lengths.at(doc_id)) /
                                    index.avg_doc_len;
        const double t = static_cast<double>(tf);
        scores[doc_id] += idf * (t * (params.k1 + 1.0)) / (t + params.k1 * len_norm);
      }
    }

    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) {
      if (score <= 0.0) continue;
      if (is_positive_of(qrels, pair.query_id, doc_id)) continue;
      ranked.emplace_back(doc_id, score);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);

    miner::TripletRecord record;
    record.query_id = pair.query_id;
    record.positive_id = pair.doc_id;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      record.negatives.push_back({ranked[i].first, std::nullopt, std::nullopt,
                                  static_cast<int>(i + 1)});
    }
    if (ranked.size() < k) {
      record.no_negative = "only-" + std::to_string(ranked.size()) +
                           "-candidates-with-positive-bm25-score";
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<miner::TripletRecord> sample_in_batch(std::span<const corpus::QrelPair> batch,
                                                  const corpus::QrelSet& qrels) {
  if (batch.size() < 2) fail("in-batch sampling needs a batch of >= 2 pairs");
  std::vector<miner::TripletRecord> records;
  records.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    miner::TripletRecord record;
    record.query_id = batch[i].query_id;
    record.positive_id = batch[i].doc_id;
    std::unordered_set<std::string> emitted;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i) continue;
      const std::string& candidate = batch[j].doc_id;
      if (is_positive_of(qrels, batch[i].query_id, candidate)) continue;
      if (!emitted.insert(candidate).second) continue;
      record.negatives.push_back({candidate, std::nullopt, std::nullopt,
                                  static_cast<int>(record.negatives.size() + 1)});
    }
    if (record.negatives.empty()) {
      record.no_negative = "all-batch-positives-shared-with-query";
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<miner::TripletRecord> sample_in_batch_all(const corpus::QrelSet& qrels,
                                                      std::size_t batch_size) {
  if (batch_size < 2) fail("batch size must be >= 2");
  if (qrels.pairs.size() < 2) fail("in-batch sampling needs at least 2 qrel pairs");

  std::vector<miner::TripletRecord> records;
  std::size_t start = 0;
  while (start < qrels.pairs.size()) {
    std::size_t end = std::min(start + batch_size, qrels.pairs.size());
    // Never leave a final singleton behind.
    if (qrels.pairs.size() - end == 1) end = qrels.pairs.size();
    auto batch = std::span<const corpus::QrelPair>(qrels.pairs).subspan(start, end - start);
    auto batch_records = sample_in_batch(batch, qrels);
    std::move(batch_records.begin(), batch_records.end(), std::back_inserter(records));
    start = end;
  }
  return records;
}

}  // namespace negminer::baselines
