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

#include "negminer/miner.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "negminer/common.hpp"

namespace negminer::miner {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw Error("miner", message); }

template <typename T>
double cosine_distance_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    fail("cosine_distance: dim mismatch (" + std::to_string(a.size()) + " vs " +
         std::to_string(b.size()) + ")");
  }
  if (a.empty()) fail("cosine_distance: empty vectors");
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(b[i]);
    dot += x * y;
    norm_a += x * x;
    norm_b += y * y;
  }
  if (norm_a == 0.0 || norm_b == 0.0) fail("cosine_distance: zero vector");
  double d = 1.0 - dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
  return std::clamp(d, 0.0, 2.0);
}

}  // namespace

std::string_view to_string(DistanceSpace space) {
  return space == DistanceSpace::pca ? "pca" : "concat";
}

DistanceSpace distance_space_from_string(std::string_view s) {
  if (s == "pca") return DistanceSpace::pca;
  if (s == "concat") return DistanceSpace::concat;
  fail("unknown distance space: " + std::string(s));
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  return cosine_distance_impl(a, b);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  return cosine_distance_impl(a, b);
}

bool is_hard_negative(double d_q_d, double d_q_pd, double d_pd_d, double eps) {
  return d_q_d + eps < d_q_pd && d_q_d + eps < d_pd_d;
}

TripletRecord mine_for_pair(std::string_view query_id, std::span<const float> q_vec,
                            std::string_view positive_id, std::span<const float> pd_vec,
                            std::span<const Candidate> candidates, const MiningConfig& config) {
  if (config.k_negatives < 1) fail("k_negatives must be >= 1");
  if (config.epsilon < 0.0) fail("epsilon must be >= 0");
  if (candidates.empty()) fail("empty candidate set for query " + std::string(query_id));

  TripletRecord record;
  record.query_id = query_id;
  record.positive_id = positive_id;
  const double d_q_pd = cosine_distance(q_vec, pd_vec);
  record.d_q_pd = d_q_pd;

  struct Passer {
    std::string_view id;
    double d_q_d;
    double d_pd_d;
  };
  std::vector<Passer> passers;
  for (const Candidate& candidate : candidates) {
    const double d_q_d = cosine_distance(q_vec, candidate.vec);
    const double d_pd_d = cosine_distance(pd_vec, candidate.vec);
    if (is_hard_negative(d_q_d, d_q_pd, d_pd_d, config.epsilon)) {
      passers.push_back({candidate.id, d_q_d, d_pd_d});
    }
  }

  std::sort(passers.begin(), passers.end(), [](const Passer& a, const Passer& b) {
    if (a.d_q_d != b.d_q_d) return a.d_q_d < b.d_q_d;
    return a.id < b.id;
  });
  if (passers.size() > config.k_negatives) passers.resize(config.k_negatives);

  if (passers.empty()) {
    record.no_negative = std::string(kNoCandidateReason);
    return record;
  }
  record.negatives.reserve(passers.size());
  for (std::size_t i = 0; i < passers.size(); ++i) {
    record.negatives.push_back({std::string(passers[i].id), passers[i].d_q_d, passers[i].d_pd_d,
                                static_cast<int>(i + 1)});
  }
  return record;
}

std::vector<TripletRecord> mine_all(const corpus::QrelSet& qrels,
                                    const embed::EmbeddingStore& vectors,
                                    const std::vector<std::string>& candidate_ids,
                                    const MiningConfig& config, unsigned threads) {
  if (qrels.pairs.empty()) fail("no qrel pairs to mine");
  if (candidate_ids.empty()) fail("empty candidate id set");

  std::vector<std::string> missing;
  auto require = [&](const std::string& id) {
    if (!vectors.contains(id) &&
        std::find(missing.begin(), missing.end(), id) == missing.end()) {
      missing.push_back(id);
    }
  };
  for (const auto& pair : qrels.pairs) {
    require(pair.query_id);
    require(pair.doc_id);
  }
  for (const auto& id : candidate_ids) require(id);
  if (!missing.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      if (i) joined += ", ";
      joined += missing[i];
    }
    if (missing.size() > 20) joined += ", ...";
    fail("missing vectors for " + std::to_string(missing.size()) + " id(s): " + joined);
  }

  std::unordered_set<std::string> all_positives;
  if (config.exclude_cross_query_positives) {
    for (const auto& pair : qrels.pairs) all_positives.insert(pair.doc_id);
  }

  std::vector<TripletRecord> records(qrels.pairs.size());
  auto mine_range = [&](std::size_t begin, std::size_t end) {
    std::vector<Candidate> candidates;
    candidates.reserve(candidate_ids.size());
    for (std::size_t idx = begin; idx < end; ++idx) {
      const corpus::QrelPair& pair = qrels.pairs[idx];
      const auto& own_positives = qrels.positives_for(pair.query_id);

      candidates.clear();
      for (const auto& id : candidate_ids) {
        if (config.exclude_cross_query_positives) {
          if (all_positives.contains(id)) continue;
        } else if (std::find(own_positives.begin(), own_positives.end(), id) !=
                   own_positives.end()) {
          continue;
        }
        candidates.push_back({id, vectors.find_row(id)});
      }
      if (candidates.empty()) {
        fail("candidate pool for query " + pair.query_id + " is empty after exclusions");
      }
      records[idx] = mine_for_pair(pair.query_id, vectors.find_row(pair.query_id), pair.doc_id,
                                   vectors.find_row(pair.doc_id), candidates, config);
    }
  };

  unsigned worker_count = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (worker_count <= 1 || qrels.pairs.size() < 2) {
    mine_range(0, qrels.pairs.size());
  } else {
    worker_count = std::min<unsigned>(worker_count, static_cast<unsigned>(qrels.pairs.size()));
    std::vector<std::thread> workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (qrels.pairs.size() + worker_count - 1) / worker_count;
    for (unsigned w = 0; w < worker_count; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(begin + chunk, qrels.pairs.size());
      if (begin >= end) break;
      workers.emplace_back([&, begin, end] {
        try {
          mine_range(begin, end);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& worker : workers) worker.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return records;
}

std::string triplet_to_json_line(const TripletRecord& record) {
  ordered_json obj;
  obj["query_id"] = record.query_id;
  obj["positive_id"] = record.positive_id;
  obj["d_q_pd"] = record.d_q_pd ? ordered_json(*record.d_q_pd) : ordered_json(nullptr);
  ordered_json negatives = ordered_json::array();
  for (const TripletNegative& negative : record.negatives) {
    ordered_json n;
    n["doc_id"] = negative.doc_id;
    n["d_q_d"] = negative.d_q_d ? ordered_json(*negative.d_q_d) : ordered_json(nullptr);
    n["d_pd_d"] = negative.d_pd_d ? ordered_json(*negative.d_pd_d) : ordered_json(nullptr);
    n["rank"] = negative.rank;
    negatives.push_back(std::move(n));
  }
  obj["negatives"] = std::move(negatives);
  if (record.no_negative) obj["no_negative"] = *record.no_negative;
  return obj.dump();
}

void write_triplets(std::span<const TripletRecord> records, const std::filesystem::path& path) {
  std::string out;
  for (const TripletRecord& record : records) {
    out += triplet_to_json_line(record);
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<TripletRecord> read_triplets(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<TripletRecord> records;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      fail("triplets line " + std::to_string(line_no) + ": malformed JSON");
    }
    TripletRecord record;
    try {
      record.query_id = obj.at("query_id").get<std::string>();
      record.positive_id = obj.at("positive_id").get<std::string>();
      if (obj.contains("d_q_pd") && !obj["d_q_pd"].is_null()) {
        record.d_q_pd = obj["d_q_pd"].get<double>();
      }
      for (const auto& n : obj.at("negatives")) {
        TripletNegative negative;
        negative.doc_id = n.at("doc_id").get<std::string>();
        if (n.contains("d_q_d") && !n["d_q_d"].is_null()) {
          negative.d_q_d = n["d_q_d"].get<double>();
        }
        if (n.contains("d_pd_d") && !n["d_pd_d"].is_null()) {
          negative.d_pd_d = n["d_pd_d"].get<double>();
        }
        negative.rank = n.at("rank").get<int>();
        record.negatives.push_back(std::move(negative));
      }
      if (obj.contains("no_negative") && !obj["no_negative"].is_null()) {
        record.no_negative = obj["no_negative"].get<std::string>();
      }
    } catch (const ordered_json::exception& e) {
      fail("triplets line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace negminer::miner
