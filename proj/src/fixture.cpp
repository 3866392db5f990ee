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

#include "negminer/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "negminer/common.hpp"
#include "negminer/miner.hpp"

namespace negminer::fixture {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw Error("fixture", message); }

std::vector<double> random_unit_vector(std::mt19937_64& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = standard_normal(rng);
  return embed::l2_normalize(std::span<const double>(v));
}

// Topic-flavored filler so BM25 and length stats have something real to
// chew on. Cluster vocabulary dominates; a shared vocabulary adds overlap.
std::string make_text(std::mt19937_64& rng, int cluster, std::size_t min_tokens,
                      std::size_t max_tokens) {
  static const char* kShared[] = {"cloud",  "service", "deploy", "config", "network",
                                  "guide",  "setup",   "access", "policy", "instance"};
  const std::size_t len = min_tokens + uniform_below(rng, max_tokens - min_tokens + 1);
  std::string text;
  for (std::size_t i = 0; i < len; ++i) {
    if (!text.empty()) text += ' ';
    if (uniform_below(rng, 10) < 7) {
      text += "topic" + std::to_string(cluster) + "term" +
              std::to_string(uniform_below(rng, 40));
    } else {
      text += kShared[uniform_below(rng, std::size(kShared))];
    }
  }
  return text;
}

std::string pad_number(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

Fixture make_fixture(const FixtureConfig& config) {
  if (config.n_clusters < 2) fail("need at least 2 clusters");
  if (config.n_docs < config.n_clusters * (config.min_closer_docs + 2)) {
    fail("too few docs per cluster for the requested min_closer_docs");
  }
  if (config.model_dims.empty()) fail("need at least one model dim");

  std::mt19937_64 rng(config.seed);
  Fixture fx;

  // Cluster centers per model.
  std::vector<std::vector<std::vector<double>>> centers(config.model_dims.size());
  for (std::size_t m = 0; m < config.model_dims.size(); ++m) {
    centers[m].reserve(config.n_clusters);
    for (std::size_t c = 0; c < config.n_clusters; ++c) {
      centers[m].push_back(random_unit_vector(rng, config.model_dims[m]));
    }
  }

  for (std::size_t m = 0; m < config.model_dims.size(); ++m) {
    embed::EmbeddingStore store;
    store.model_name = "fixture-m" + std::to_string(m);
    store.dim = config.model_dims[m];
    store.normalized = false;
    fx.model_stores.push_back(std::move(store));
  }

  auto add_row = [&](const std::string& id, int cluster, double noise) {
    for (std::size_t m = 0; m < config.model_dims.size(); ++m) {
      embed::EmbeddingStore& store = fx.model_stores[m];
      store.ids.push_back(id);
      for (std::size_t j = 0; j < store.dim; ++j) {
        store.matrix.push_back(static_cast<float>(centers[m][cluster][j] +
                                                  noise * standard_normal(rng)));
      }
    }
    fx.labels[id] = cluster;
  };

  const std::size_t id_width = std::to_string(std::max(config.n_docs, config.n_queries)).size();
  for (std::size_t i = 0; i < config.n_docs; ++i) {
    const int cluster = static_cast<int>(i % config.n_clusters);
    const std::string id = "d" + pad_number(i, id_width);
    add_row(id, cluster, config.doc_noise);
    fx.documents.index.emplace(id, fx.documents.docs.size());
    fx.documents.docs.push_back({id, make_text(rng, cluster, 5, 40), {}});
  }
  for (std::size_t i = 0; i < config.n_queries; ++i) {
    const int cluster = static_cast<int>(i % config.n_clusters);
    const std::string id = "q" + pad_number(i, id_width);
    add_row(id, cluster, config.query_noise);
    fx.queries.index.emplace(id, fx.queries.queries.size());
    fx.queries.queries.push_back({id, make_text(rng, cluster, 2, 8)});
  }
  for (auto& store : fx.model_stores) store.rebuild_index();

  // Concatenated (per-model normalized) view used to place positives.
  std::vector<const embed::EmbeddingStore*> store_ptrs;
  for (const auto& store : fx.model_stores) store_ptrs.push_back(&store);
  embed::EmbeddingStore concat = embed::concat_stores(store_ptrs, true);

  for (std::size_t i = 0; i < config.n_queries; ++i) {
    const std::string& query_id = fx.queries.queries[i].id;
    const int cluster = fx.labels.at(query_id);
    std::span<const float> q_vec = concat.find_row(query_id);

    std::vector<std::pair<double, std::string>> same_cluster;
    for (const auto& doc : fx.documents.docs) {
      if (fx.labels.at(doc.id) != cluster) continue;
      same_cluster.emplace_back(miner::cosine_distance(q_vec, concat.find_row(doc.id)), doc.id);
    }
    std::sort(same_cluster.begin(), same_cluster.end());

    // Positive at a rank past min_closer_docs: the nearest neighbors stay
    // available as hard-negative candidates.
    const std::size_t lo = config.min_closer_docs;
    const std::size_t hi = std::min(same_cluster.size() - 1, lo + 100);
    const std::size_t pick = lo + uniform_below(rng, hi - lo + 1);
    const std::string& positive_id = same_cluster[pick].second;

    fx.qrels.pairs.push_back({query_id, positive_id, 1});
    fx.qrels.positives[query_id].push_back(positive_id);
  }
  return fx;
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  corpus::save_documents(fixture.documents, dir / "corpus.jsonl");

  std::string queries_out;
  for (const auto& query : fixture.queries.queries) {
    ordered_json obj;
    obj["id"] = query.id;
    obj["text"] = query.text;
    queries_out += obj.dump();
    queries_out += '\n';
  }
  atomic_write_file(dir / "queries.jsonl", queries_out);

  std::string qrels_out;
  for (const auto& pair : fixture.qrels.pairs) {
    qrels_out += pair.query_id + "\t" + pair.doc_id + "\t" + std::to_string(pair.grade) + "\n";
  }
  atomic_write_file(dir / "qrels.tsv", qrels_out);

  std::vector<std::pair<std::string, int>> labels(fixture.labels.begin(), fixture.labels.end());
  std::sort(labels.begin(), labels.end());
  std::string labels_out;
  for (const auto& [id, cluster] : labels) {
    labels_out += id + "\t" + std::to_string(cluster) + "\n";
  }
  atomic_write_file(dir / "labels.tsv", labels_out);

  for (std::size_t m = 0; m < fixture.model_stores.size(); ++m) {
    embed::write_store(fixture.model_stores[m], dir / "stores" / ("m" + std::to_string(m)));
  }
}

}  // namespace negminer::fixture
