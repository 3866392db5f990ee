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

#include "negminer/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "negminer/common.hpp"

namespace negminer::eval {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw Error("eval", message); }

}  // namespace

RunScores load_run(const std::filesystem::path& path) {
  std::string content = read_file(path);
  RunScores run;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    auto cols = split(line, '\t');
    if (cols.size() != 3) {
      fail("run line " + std::to_string(line_no) + ": expected 3 tab-separated columns");
    }
    double score;
    auto [ptr, ec] = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), score);
    if (ec != std::errc{} || ptr != cols[2].data() + cols[2].size() || !std::isfinite(score)) {
      fail("run line " + std::to_string(line_no) + ": bad score: " + cols[2]);
    }
    if (!seen.emplace(cols[0], cols[1]).second) {
      fail("run line " + std::to_string(line_no) + ": duplicate (query_id, doc_id): " + cols[0] +
           ", " + cols[1]);
    }
    run.entries.emplace_back(std::move(cols[0]), std::move(cols[1]), score);
  }
  return run;
}

MrrResult mrr_at_k(const RunScores& run, const corpus::QrelSet& qrels, int k,
                   MissingQueryPolicy missing) {
  if (k < 1) fail("k must be >= 1");
  if (qrels.positives.empty()) fail("no judged queries to evaluate");

  std::unordered_map<std::string, std::vector<std::pair<std::string, double>>> by_query;
  for (const auto& [query_id, doc_id, score] : run.entries) {
    by_query[query_id].emplace_back(doc_id, score);
  }

  // Judged queries in deterministic (sorted) order.
  std::vector<std::string> judged;
  judged.reserve(qrels.positives.size());
  for (const auto& [query_id, docs] : qrels.positives) judged.push_back(query_id);
  std::sort(judged.begin(), judged.end());

  MrrResult result;
  KahanSum sum;
  for (const auto& query_id : judged) {
    auto run_it = by_query.find(query_id);
    if (run_it == by_query.end()) {
      if (missing == MissingQueryPolicy::error) {
        fail("query " + query_id + " has qrels but no run entries");
      }
      result.per_query_rr[query_id] = 0.0;
      sum.add(0.0);
      continue;
    }
    auto& ranked = run_it->second;
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });

    const auto& positives = qrels.positives_for(query_id);
    double rr = 0.0;
    const std::size_t cutoff = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
    for (std::size_t rank = 0; rank < cutoff; ++rank) {
      if (std::find(positives.begin(), positives.end(), ranked[rank].first) != positives.end()) {
        rr = 1.0 / static_cast<double>(rank + 1);
        break;
      }
    }
    result.per_query_rr[query_id] = rr;
    sum.add(rr);
  }
  result.mrr = sum.value() / static_cast<double>(judged.size());
  return result;
}

LengthBuckets bucket_by_length(const corpus::DocumentSet& documents,
                               std::size_t threshold_tokens) {
  if (threshold_tokens < 1) fail("length threshold must be >= 1");
  LengthBuckets buckets;
  for (const auto& doc : documents.docs) {
    if (corpus::token_count(doc.text) < threshold_tokens) {
      buckets.short_ids.insert(doc.id);
    } else {
      buckets.long_ids.insert(doc.id);
    }
  }
  return buckets;
}

namespace {

MrrReport mrr_report(const RunScores& run, const corpus::QrelSet& qrels,
                     const std::vector<int>& ks, MissingQueryPolicy missing) {
  MrrReport report;
  report.query_count = qrels.positives.size();
  for (int k : ks) {
    MrrResult result = mrr_at_k(run, qrels, k, missing);
    report.mrr[k] = result.mrr;
    report.per_query_rr = std::move(result.per_query_rr);
  }
  return report;
}

corpus::QrelSet restrict_qrels(const corpus::QrelSet& qrels,
                               const std::unordered_set<std::string>& query_ids) {
  corpus::QrelSet subset;
  for (const auto& pair : qrels.pairs) {
    if (!query_ids.contains(pair.query_id)) continue;
    subset.positives[pair.query_id].push_back(pair.doc_id);
    subset.pairs.push_back(pair);
  }
  return subset;
}

ordered_json mrr_report_to_json(const MrrReport& report) {
  ordered_json obj;
  ordered_json mrr;
  for (const auto& [k, value] : report.mrr) mrr[std::to_string(k)] = value;
  obj["mrr"] = std::move(mrr);
  obj["query_count"] = report.query_count;
  ordered_json per_query;
  for (const auto& [query_id, rr] : report.per_query_rr) per_query[query_id] = rr;
  obj["per_query_rr"] = std::move(per_query);
  return obj;
}

}  // namespace

EvalReport eval_report(const RunScores& run, const corpus::QrelSet& qrels,
                       const corpus::DocumentSet& documents, const std::vector<int>& ks,
                       std::size_t threshold_tokens, MissingQueryPolicy missing) {
  if (ks.empty()) fail("ks must be nonempty");
  for (std::size_t i = 1; i < ks.size(); ++i) {
    if (ks[i] <= ks[i - 1]) fail("ks must be strictly ascending");
  }

  EvalReport report;
  report.threshold_tokens = threshold_tokens;
  report.overall = mrr_report(run, qrels, ks, missing);

  LengthBuckets buckets = bucket_by_length(documents, threshold_tokens);
  std::unordered_set<std::string> short_queries;
  std::unordered_set<std::string> long_queries;
  for (const auto& [query_id, positives] : qrels.positives) {
    // A query's bucket is the bucket of its first positive document.
    const std::string& anchor = positives.front();
    if (buckets.short_ids.contains(anchor)) {
      short_queries.insert(query_id);
    } else {
      long_queries.insert(query_id);
    }
  }
  if (!short_queries.empty()) {
    report.short_bucket = mrr_report(run, restrict_qrels(qrels, short_queries), ks, missing);
  }
  if (!long_queries.empty()) {
    report.long_bucket = mrr_report(run, restrict_qrels(qrels, long_queries), ks, missing);
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  ordered_json obj = mrr_report_to_json(report.overall);
  obj["threshold_tokens"] = report.threshold_tokens;
  ordered_json buckets;
  if (report.short_bucket) buckets["short"] = mrr_report_to_json(*report.short_bucket);
  if (report.long_bucket) buckets["long"] = mrr_report_to_json(*report.long_bucket);
  if (!buckets.is_null()) obj["bucket_reports"] = std::move(buckets);
  return obj.dump(2);
}

}  // namespace negminer::eval
