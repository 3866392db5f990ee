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

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "negminer/common.hpp"
#include "negminer/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace negminer;
using testutil::TempDir;
using testutil::write_text;

namespace {

corpus::QrelSet qrels_of(const std::vector<std::pair<std::string, std::string>>& pairs) {
  corpus::QrelSet qrels;
  for (const auto& [query_id, doc_id] : pairs) {
    qrels.pairs.push_back({query_id, doc_id, 1});
    qrels.positives[query_id].push_back(doc_id);
  }
  return qrels;
}

eval::RunScores run_of(
    const std::vector<std::tuple<std::string, std::string, double>>& entries) {
  eval::RunScores run;
  run.entries = entries;
  return run;
}

corpus::DocumentSet docs_of(const std::vector<std::pair<std::string, std::string>>& id_texts) {
  corpus::DocumentSet set;
  for (const auto& [id, text] : id_texts) {
    set.index.emplace(id, set.docs.size());
    set.docs.push_back({id, text, {}});
  }
  return set;
}

}  // namespace

TEST_CASE("mrr_at_k definition cases") {
  auto qrels = qrels_of({{"q1", "d1"}});

  SUBCASE("positive ranked 1 / 2 / below the cutoff") {
    auto top = run_of({{"q1", "d1", 3.0}, {"q1", "d2", 2.0}});
    CHECK(eval::mrr_at_k(top, qrels, 3).mrr == doctest::Approx(1.0));

    auto second = run_of({{"q1", "d2", 3.0}, {"q1", "d1", 2.0}});
    CHECK(eval::mrr_at_k(second, qrels, 3).mrr == doctest::Approx(0.5));

    auto fourth = run_of(
        {{"q1", "a", 9.0}, {"q1", "b", 8.0}, {"q1", "c", 7.0}, {"q1", "d1", 6.0}});
    CHECK(eval::mrr_at_k(fourth, qrels, 3).mrr == doctest::Approx(0.0));
    CHECK(eval::mrr_at_k(fourth, qrels, 10).mrr == doctest::Approx(0.25));
  }

  SUBCASE("mean over queries") {
    auto qrels2 = qrels_of({{"q1", "d1"}, {"q2", "d2"}});
    auto run = run_of({{"q1", "d1", 2.0},
                       {"q1", "d2", 1.0},
                       {"q2", "d1", 2.0},
                       {"q2", "d2", 1.0}});
    auto result = eval::mrr_at_k(run, qrels2, 3);
    CHECK(result.mrr == doctest::Approx(0.75));
    CHECK(result.per_query_rr.at("q1") == doctest::Approx(1.0));
    CHECK(result.per_query_rr.at("q2") == doctest::Approx(0.5));
  }

  SUBCASE("score ties break by ascending doc id") {
    auto qrels2 = qrels_of({{"q1", "db"}});
    auto tied = run_of({{"q1", "da", 1.0}, {"q1", "db", 1.0}, {"q1", "dc", 1.0}});
    CHECK(eval::mrr_at_k(tied, qrels2, 3).mrr == doctest::Approx(0.5));
  }

  SUBCASE("multiple positives use the best-ranked one") {
    corpus::QrelSet multi = qrels_of({{"q1", "d1"}, {"q1", "d2"}});
    auto run = run_of({{"q1", "d9", 3.0}, {"q1", "d2", 2.0}, {"q1", "d1", 1.0}});
    CHECK(eval::mrr_at_k(run, multi, 10).mrr == doctest::Approx(0.5));
  }

  SUBCASE("judged query missing from the run: policy decides") {
    auto run = run_of({{"q9", "d1", 1.0}});
    CHECK_THROWS_WITH_AS(eval::mrr_at_k(run, qrels, 3), doctest::Contains("no run entries"),
                         Error);
    auto result = eval::mrr_at_k(run, qrels, 3, eval::MissingQueryPolicy::zero);
    CHECK(result.mrr == doctest::Approx(0.0));
  }
}

TEST_CASE("mrr matches the definitional oracle on random runs") {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n_queries = 1 + uniform_below(rng, 10);
    const std::size_t n_docs = 2 + uniform_below(rng, 100);

    corpus::QrelSet qrels;
    std::map<std::string, std::set<std::string>> positives;
    std::vector<std::tuple<std::string, std::string, double>> entries;
    for (std::size_t qi = 0; qi < n_queries; ++qi) {
      const std::string query_id = "q" + std::to_string(qi);
      const std::size_t n_positives = 1 + uniform_below(rng, 3);
      for (std::size_t p = 0; p < n_positives; ++p) {
        std::string doc_id = "d" + std::to_string(uniform_below(rng, n_docs));
        if (positives[query_id].insert(doc_id).second) {
          qrels.pairs.push_back({query_id, doc_id, 1});
          qrels.positives[query_id].push_back(doc_id);
        }
      }
      for (std::size_t di = 0; di < n_docs; ++di) {
        // Integer scores in a narrow range force plenty of ties.
        entries.emplace_back(query_id, "d" + std::to_string(di),
                             static_cast<double>(uniform_below(rng, 8)));
      }
    }
    auto run = run_of(entries);
    const int k = 1 + static_cast<int>(uniform_below(rng, 15));
    const double got = eval::mrr_at_k(run, qrels, k).mrr;
    const double expected = oracle::mrr_reference(entries, positives, k);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));

    // Rank-cutoff monotonicity.
    const double at_3 = eval::mrr_at_k(run, qrels, 3).mrr;
    const double at_10 = eval::mrr_at_k(run, qrels, 10).mrr;
    CHECK(at_10 >= at_3);
    CHECK(at_3 >= 0.0);
    CHECK(at_10 <= 1.0);
  }
}

TEST_CASE("adding an irrelevant document scored below everything changes nothing") {
  std::mt19937_64 rng(43);
  auto qrels = qrels_of({{"q1", "d2"}, {"q2", "d0"}});
  std::vector<std::tuple<std::string, std::string, double>> entries;
  for (int qi = 1; qi <= 2; ++qi) {
    for (int di = 0; di < 6; ++di) {
      entries.emplace_back("q" + std::to_string(qi), "d" + std::to_string(di),
                           1.0 + static_cast<double>(uniform_below(rng, 50)));
    }
  }
  auto base = eval::mrr_at_k(run_of(entries), qrels, 5);
  auto extended = entries;
  extended.emplace_back("q1", "dz", -100.0);
  extended.emplace_back("q2", "dz", -100.0);
  auto with_extra = eval::mrr_at_k(run_of(extended), qrels, 5);
  CHECK(base.mrr == with_extra.mrr);
  CHECK(base.per_query_rr == with_extra.per_query_rr);
}

TEST_CASE("run line order never affects the report") {
  std::mt19937_64 rng(44);
  auto qrels = qrels_of({{"q1", "d3"}, {"q2", "d1"}});
  std::vector<std::tuple<std::string, std::string, double>> entries;
  for (int qi = 1; qi <= 2; ++qi) {
    for (int di = 0; di < 10; ++di) {
      entries.emplace_back("q" + std::to_string(qi), "d" + std::to_string(di),
                           static_cast<double>(uniform_below(rng, 4)));
    }
  }
  auto base = eval::mrr_at_k(run_of(entries), qrels, 5);
  auto shuffled = entries;
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    std::swap(shuffled[i], shuffled[uniform_below(rng, i + 1)]);
  }
  auto permuted = eval::mrr_at_k(run_of(shuffled), qrels, 5);
  CHECK(base.mrr == permuted.mrr);
  CHECK(base.per_query_rr == permuted.per_query_rr);
}

TEST_CASE("bucket_by_length boundaries") {
  std::string short_text, exact_text;
  for (int i = 0; i < 1023; ++i) short_text += "w" + std::to_string(i) + " ";
  exact_text = short_text + "w1023";
  auto docs = docs_of({{"short", short_text}, {"exact", exact_text}, {"tiny", "one two"}});
  auto buckets = eval::bucket_by_length(docs, 1024);
  CHECK(buckets.short_ids.contains("short"));  // 1023 tokens < 1024
  CHECK(buckets.long_ids.contains("exact"));   // exactly 1024 tokens
  CHECK(buckets.short_ids.contains("tiny"));
  CHECK(buckets.short_ids.size() + buckets.long_ids.size() == docs.size());
}

TEST_CASE("eval_report") {
  auto docs = docs_of({{"d1", "a b"}, {"d2", "a b c d e f"}, {"d3", "x"}});
  auto qrels = qrels_of({{"q1", "d1"}, {"q2", "d2"}});

  SUBCASE("perfect run scores 1.0 overall and in both buckets") {
    auto run = run_of({{"q1", "d1", 9.0},
                       {"q1", "d2", 1.0},
                       {"q2", "d2", 9.0},
                       {"q2", "d3", 1.0}});
    auto report = eval::eval_report(run, qrels, docs, {3, 10}, 4);
    CHECK(report.overall.mrr.at(3) == doctest::Approx(1.0));
    CHECK(report.overall.mrr.at(10) == doctest::Approx(1.0));
    REQUIRE(report.short_bucket.has_value());  // q1: d1 has 2 tokens < 4
    REQUIRE(report.long_bucket.has_value());   // q2: d2 has 6 tokens >= 4
    CHECK(report.short_bucket->mrr.at(3) == doctest::Approx(1.0));
    CHECK(report.long_bucket->mrr.at(3) == doctest::Approx(1.0));
    CHECK(report.short_bucket->query_count == 1);
    CHECK(report.long_bucket->query_count == 1);
  }

  SUBCASE("positives ranked 5th: MRR@3 = 0, MRR@10 = 0.2") {
    std::vector<std::tuple<std::string, std::string, double>> entries;
    for (const char* query : {"q1", "q2"}) {
      for (int i = 0; i < 4; ++i) {
        entries.emplace_back(query, "filler" + std::to_string(i), 10.0 - i);
      }
    }
    entries.emplace_back("q1", "d1", 1.0);
    entries.emplace_back("q2", "d2", 1.0);
    auto report = eval::eval_report(run_of(entries), qrels, docs, {3, 10}, 4);
    CHECK(report.overall.mrr.at(3) == doctest::Approx(0.0));
    CHECK(report.overall.mrr.at(10) == doctest::Approx(0.2));
  }

  SUBCASE("report JSON is well-formed and ordered") {
    auto run = run_of({{"q1", "d1", 2.0}, {"q2", "d2", 2.0}});
    auto report = eval::eval_report(run, qrels, docs, {3, 10}, 4);
    auto json = eval::report_to_json(report);
    CHECK(json.find("\"mrr\"") != std::string::npos);
    CHECK(json.find("\"bucket_reports\"") != std::string::npos);
    CHECK(json.find("\"threshold_tokens\": 4") != std::string::npos);
  }

  SUBCASE("ks must be ascending and nonempty") {
    auto run = run_of({{"q1", "d1", 2.0}, {"q2", "d2", 2.0}});
    CHECK_THROWS_AS(eval::eval_report(run, qrels, docs, {}, 4), Error);
    CHECK_THROWS_AS(eval::eval_report(run, qrels, docs, {10, 3}, 4), Error);
  }
}

TEST_CASE("load_run validation") {
  TempDir tmp;

  SUBCASE("well-formed TSV") {
    write_text(tmp.file("run.tsv"), "q1\td1\t0.75\nq1\td2\t-1.5\n");
    auto run = eval::load_run(tmp.file("run.tsv"));
    REQUIRE(run.entries.size() == 2);
    CHECK(std::get<2>(run.entries[0]) == doctest::Approx(0.75));
  }

  SUBCASE("duplicate pair is rejected") {
    write_text(tmp.file("run.tsv"), "q1\td1\t1\nq1\td1\t2\n");
    CHECK_THROWS_WITH_AS(eval::load_run(tmp.file("run.tsv")), doctest::Contains("duplicate"),
                         Error);
  }

  SUBCASE("bad score is rejected") {
    write_text(tmp.file("run.tsv"), "q1\td1\tfast\n");
    CHECK_THROWS_WITH_AS(eval::load_run(tmp.file("run.tsv")), doctest::Contains("bad score"),
                         Error);
  }
}
