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

// negminer: hard-negative mining toolkit for retrieval training data.
//
// Pipeline: embed -> pca fit -> pca transform -> mine -> verify/loss/eval,
// with baseline samplers (sample) and corpus statistics (stats) alongside.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "negminer/baselines.hpp"
#include "negminer/common.hpp"
#include "negminer/corpus.hpp"
#include "negminer/embed.hpp"
#include "negminer/eval.hpp"
#include "negminer/miner.hpp"
#include "negminer/objective.hpp"
#include "negminer/pca.hpp"

namespace fs = std::filesystem;
using namespace negminer;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitVerifyFailed = 2;

std::vector<int64_t> parse_edges(const std::string& csv) {
  std::vector<int64_t> edges;
  for (const auto& part : split(csv, ',')) {
    if (part.empty()) throw Error("cli", "empty bucket edge in: " + csv);
    edges.push_back(std::stoll(part));
  }
  return edges;
}

std::vector<int> parse_ks(const std::string& csv) {
  std::vector<int> ks;
  for (const auto& part : split(csv, ',')) {
    if (part.empty()) throw Error("cli", "empty k in: " + csv);
    ks.push_back(std::stoi(part));
  }
  return ks;
}

std::string sanitize_dir_name(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return out;
}

// Texts and ids for embedding: corpus documents first, then queries.
struct EmbedInputs {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
};

EmbedInputs gather_inputs(const corpus::DocumentSet& docs, const corpus::QuerySet& queries) {
  EmbedInputs inputs;
  for (const auto& doc : docs.docs) {
    inputs.ids.push_back(doc.id);
    inputs.texts.push_back(doc.text);
  }
  for (const auto& query : queries.queries) {
    if (docs.find(query.id)) {
      throw Error("cli", "id collision between corpus and queries: " + query.id);
    }
    inputs.ids.push_back(query.id);
    inputs.texts.push_back(query.text);
  }
  return inputs;
}

embed::EmbeddingStore load_space_store(const fs::path& embeddings_root,
                                       miner::DistanceSpace space) {
  const fs::path dir =
      embeddings_root / std::string(miner::to_string(space));
  if (!fs::exists(dir)) {
    throw Error("cli", "no " + std::string(miner::to_string(space)) + " store under " +
                           embeddings_root.string() +
                           (space == miner::DistanceSpace::pca
                                ? " (run `negminer pca transform` first)"
                                : " (run `negminer embed` first)"));
  }
  return embed::read_store(dir);
}

// Vectors used by verify: always rebuilt from the concat store (plus the
// model when verifying pca space), never from the intermediate pca store.
embed::EmbeddingStore rebuild_vectors(const fs::path& embeddings_root,
                                      miner::DistanceSpace space,
                                      const std::string& pca_model_path) {
  embed::EmbeddingStore concat = load_space_store(embeddings_root, miner::DistanceSpace::concat);
  if (space == miner::DistanceSpace::concat) return concat;
  if (pca_model_path.empty()) {
    throw Error("cli", "--pca-model is required when verifying pca space");
  }
  pca::PcaModel model = pca::load_model(pca_model_path);
  return pca::transform_store(model, concat);
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    atomic_write_file(out_path, content);
  }
}

std::string format_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

struct EmbedArgs {
  std::string corpus_path;
  std::string queries_path;
  std::string out_dir;
  std::string provider_url;
  std::vector<std::string> models;
  std::vector<std::string> store_dirs;
  std::size_t batch_size = 32;
  unsigned timeout_ms = 30000;
  unsigned max_retries = 3;
  bool normalize = true;
};

int cmd_embed(const EmbedArgs& args) {
  std::vector<embed::EmbeddingStore> stores;

  if (!args.store_dirs.empty() && !args.models.empty()) {
    throw Error("cli", "--stores and --models are mutually exclusive");
  }
  if (!args.store_dirs.empty()) {
    for (const auto& dir : args.store_dirs) stores.push_back(embed::read_store(dir));
  } else {
    if (args.models.empty()) {
      throw Error("cli", "embed needs either --stores or --provider-url with --models");
    }
    if (args.provider_url.empty()) {
      throw Error("cli", "no provider URL (flag --provider-url or NEGMINER_PROVIDER_URL)");
    }
    if (args.corpus_path.empty()) {
      throw Error("cli", "provider mode needs --corpus (and usually --queries)");
    }
    auto docs = corpus::load_documents(args.corpus_path);
    auto queries = args.queries_path.empty() ? corpus::QuerySet{}
                                             : corpus::load_queries(args.queries_path);
    EmbedInputs inputs = gather_inputs(docs, queries);
    if (inputs.ids.empty()) throw Error("cli", "nothing to embed");

    embed::ProviderSpec spec;
    spec.base_url = args.provider_url;
    spec.model_names = args.models;
    spec.batch_size = args.batch_size;
    spec.timeout = std::chrono::milliseconds(args.timeout_ms);
    spec.max_retries = args.max_retries;
    for (const auto& model : args.models) {
      std::cerr << "embed: fetching " << inputs.ids.size() << " embeddings from " << model
                << "\n";
      auto store = embed::fetch_embeddings(spec, model, inputs.ids, inputs.texts);
      embed::write_store(store, fs::path(args.out_dir) / sanitize_dir_name(model));
      stores.push_back(std::move(store));
    }
  }

  std::vector<const embed::EmbeddingStore*> pointers;
  for (const auto& store : stores) pointers.push_back(&store);
  embed::EmbeddingStore concat = embed::concat_stores(pointers, args.normalize);
  embed::write_store(concat, fs::path(args.out_dir) / "concat");
  std::cerr << "embed: wrote concat store (" << concat.count() << " x " << concat.dim
            << ") to " << (fs::path(args.out_dir) / "concat").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pca fit / transform
// ---------------------------------------------------------------------------

int cmd_pca_fit(const std::string& store_dir, double variance, const std::string& out_path) {
  auto store = embed::read_store(store_dir);
  auto model = pca::fit_store(store, variance);
  pca::save_model(model, out_path);
  double cumulative = 0.0;
  for (double r : model.explained_variance_ratio) cumulative += r;
  std::cerr << "pca: " << model.n_components << "/" << model.input_dim
            << " components keep " << format_fixed(100.0 * cumulative, 2)
            << "% of variance (threshold " << format_fixed(100.0 * variance, 0) << "%)\n";
  return 0;
}

int cmd_pca_transform(const std::string& store_dir, const std::string& model_path,
                      const std::string& out_dir) {
  auto store = embed::read_store(store_dir);
  auto model = pca::load_model(model_path);
  auto projected = pca::transform_store(model, store);
  embed::write_store(projected, out_dir);
  std::cerr << "pca: projected " << projected.count() << " vectors to dim " << projected.dim
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// mine
// ---------------------------------------------------------------------------

struct MineArgs {
  std::string qrels_path;
  std::string corpus_path;
  std::string queries_path;
  std::string embeddings_root;
  std::string space = "pca";
  std::size_t k = 5;
  double epsilon = 0.0;
  bool exclude_cross_query_positives = false;
  double margin = 0.2;
  unsigned threads = 0;
  std::string out_path;
};

int cmd_mine(const MineArgs& args) {
  auto docs = corpus::load_documents(args.corpus_path);
  auto queries = corpus::load_queries(args.queries_path);
  auto qrels = corpus::load_qrels(args.qrels_path, queries, docs);

  miner::MiningConfig config;
  config.k_negatives = args.k;
  config.epsilon = args.epsilon;
  config.exclude_cross_query_positives = args.exclude_cross_query_positives;
  config.distance_space = miner::distance_space_from_string(args.space);

  auto vectors = load_space_store(args.embeddings_root, config.distance_space);
  auto records = miner::mine_all(qrels, vectors, docs.ids(), config, args.threads);
  miner::write_triplets(records, args.out_path);

  std::size_t with = 0, negatives = 0;
  for (const auto& record : records) {
    with += !record.negatives.empty();
    negatives += record.negatives.size();
  }
  ordered_json meta;
  meta["command"] = "mine";
  meta["space"] = args.space;
  meta["k_negatives"] = args.k;
  meta["epsilon"] = args.epsilon;
  meta["exclude_cross_query_positives"] = args.exclude_cross_query_positives;
  meta["margin"] = args.margin;
  meta["pairs"] = records.size();
  meta["pairs_with_negatives"] = with;
  meta["total_negatives"] = negatives;
  atomic_write_file(args.out_path + ".meta.json", meta.dump(2) + "\n");

  std::cerr << "mine: " << records.size() << " pairs, " << negatives << " negatives ("
            << (records.size() - with) << " pairs without)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string method = "random";
  std::string qrels_path;
  std::string corpus_path;
  std::string queries_path;
  std::size_t k = 5;
  uint64_t seed = 42;
  std::size_t batch_size = 32;
  double k1 = 1.2;
  double b = 0.75;
  std::string ratio = "1:1";
  std::string out_path;
};

std::vector<miner::TripletRecord> hybrid_bm25_inbatch(const SampleArgs& args,
                                                      const corpus::QrelSet& qrels,
                                                      const corpus::QuerySet& queries,
                                                      const corpus::DocumentSet& docs) {
  auto parts = split(args.ratio, ':');
  if (parts.size() != 2) throw Error("cli", "--ratio must look like 1:1");
  const double bm25_weight = std::stod(parts[0]);
  const double inbatch_weight = std::stod(parts[1]);
  if (bm25_weight < 0 || inbatch_weight < 0 || bm25_weight + inbatch_weight <= 0) {
    throw Error("cli", "--ratio parts must be nonnegative and not both zero");
  }
  const std::size_t n_bm25 = static_cast<std::size_t>(
      std::llround(static_cast<double>(args.k) * bm25_weight / (bm25_weight + inbatch_weight)));

  auto index = baselines::build_bm25_index(docs);
  auto bm25 = baselines::sample_bm25(qrels, queries, index, {args.k1, args.b}, args.k);
  auto inbatch = baselines::sample_in_batch_all(qrels, args.batch_size);

  // Per pair: bm25 head, then in-batch fill, deduplicated; bm25 backfills
  // when in-batch runs short.
  std::vector<miner::TripletRecord> merged;
  merged.reserve(qrels.pairs.size());
  for (std::size_t i = 0; i < qrels.pairs.size(); ++i) {
    miner::TripletRecord record;
    record.query_id = qrels.pairs[i].query_id;
    record.positive_id = qrels.pairs[i].doc_id;
    std::vector<std::string> chosen;
    auto take = [&](const std::vector<miner::TripletNegative>& pool, std::size_t limit) {
      for (const auto& negative : pool) {
        if (chosen.size() >= limit) break;
        if (std::find(chosen.begin(), chosen.end(), negative.doc_id) == chosen.end()) {
          chosen.push_back(negative.doc_id);
        }
      }
    };
    take(bm25[i].negatives, n_bm25);
    take(inbatch[i].negatives, args.k);
    take(bm25[i].negatives, args.k);
    for (std::size_t r = 0; r < chosen.size(); ++r) {
      record.negatives.push_back({chosen[r], std::nullopt, std::nullopt,
                                  static_cast<int>(r + 1)});
    }
    if (chosen.size() < args.k) {
      record.no_negative = "only-" + std::to_string(chosen.size()) + "-distinct-candidates";
    }
    merged.push_back(std::move(record));
  }
  return merged;
}

int cmd_sample(const SampleArgs& args) {
  auto docs = corpus::load_documents(args.corpus_path);
  auto queries = corpus::load_queries(args.queries_path);
  auto qrels = corpus::load_qrels(args.qrels_path, queries, docs);

  std::vector<miner::TripletRecord> records;
  if (args.method == "random") {
    records = baselines::sample_random(qrels, docs.ids(), args.k, args.seed);
  } else if (args.method == "bm25") {
    auto index = baselines::build_bm25_index(docs);
    records = baselines::sample_bm25(qrels, queries, index, {args.k1, args.b}, args.k);
  } else if (args.method == "inbatch") {
    records = baselines::sample_in_batch_all(qrels, args.batch_size);
  } else if (args.method == "bm25+inbatch") {
    records = hybrid_bm25_inbatch(args, qrels, queries, docs);
  } else {
    throw Error("cli", "unknown sampler method: " + args.method);
  }
  miner::write_triplets(records, args.out_path);

  ordered_json meta;
  meta["command"] = "sample";
  meta["method"] = args.method;
  meta["k"] = args.k;
  meta["seed"] = args.seed;
  if (args.method == "inbatch" || args.method == "bm25+inbatch") {
    meta["batch_size"] = args.batch_size;
  }
  if (args.method == "bm25" || args.method == "bm25+inbatch") {
    meta["k1"] = args.k1;
    meta["b"] = args.b;
  }
  if (args.method == "bm25+inbatch") meta["ratio"] = args.ratio;
  meta["pairs"] = records.size();
  atomic_write_file(args.out_path + ".meta.json", meta.dump(2) + "\n");

  std::cerr << "sample: wrote " << records.size() << " records (" << args.method << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

struct LossArgs {
  std::string triplets_path;
  std::string embeddings_dir;  // a store directory; optional
  double margin = 0.2;
  std::string reduce = "sum";
  std::string out_path;
};

int cmd_loss(const LossArgs& args) {
  auto records = miner::read_triplets(args.triplets_path);
  std::optional<embed::EmbeddingStore> store;
  if (!args.embeddings_dir.empty()) store = embed::read_store(args.embeddings_dir);

  auto distance = [&](const std::string& a, const std::string& b) {
    std::span<const float> va = store->find_row(a);
    std::span<const float> vb = store->find_row(b);
    if (va.empty()) throw Error("cli", "no vector for id " + a);
    if (vb.empty()) throw Error("cli", "no vector for id " + b);
    return miner::cosine_distance(va, vb);
  };

  std::string out = "# negminer loss margin=" + format_double(args.margin) +
                    " reduce=" + args.reduce + "\n";
  out += "query_id\tpositive_id\tnegative_id\trank\td_q_pd\td_q_hn\tloss\n";
  KahanSum total;
  std::size_t triplets = 0, skipped = 0;
  for (const auto& record : records) {
    if (record.negatives.empty()) {
      ++skipped;
      continue;
    }
    double d_q_pd;
    if (store) {
      d_q_pd = distance(record.query_id, record.positive_id);
    } else if (record.d_q_pd) {
      d_q_pd = *record.d_q_pd;
    } else {
      throw Error("cli",
                  "triplets carry no recorded distances; pass --embeddings to recompute");
    }
    for (const auto& negative : record.negatives) {
      double d_q_hn;
      if (store) {
        d_q_hn = distance(record.query_id, negative.doc_id);
      } else if (negative.d_q_d) {
        d_q_hn = *negative.d_q_d;
      } else {
        throw Error("cli",
                    "triplets carry no recorded distances; pass --embeddings to recompute");
      }
      const double loss = objective::triplet_loss(d_q_pd, d_q_hn, args.margin);
      total.add(loss);
      ++triplets;
      out += record.query_id + "\t" + record.positive_id + "\t" + negative.doc_id + "\t" +
             std::to_string(negative.rank) + "\t" + format_double(d_q_pd) + "\t" +
             format_double(d_q_hn) + "\t" + format_double(loss) + "\n";
    }
  }
  const double reduced =
      args.reduce == "mean" && triplets > 0 ? total.value() / static_cast<double>(triplets)
                                            : total.value();
  out += "# triplets=" + std::to_string(triplets) + " pairs_skipped=" + std::to_string(skipped) +
         " " + args.reduce + "_loss=" + format_double(reduced) + "\n";
  emit(out, args.out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string run_path;
  std::string qrels_path;
  std::string corpus_path;
  std::string queries_path;
  std::string ks = "3,10";
  std::size_t length_threshold = 1024;
  std::string missing = "error";
  std::string out_path;
};

void print_eval_table(const eval::EvalReport& report, const std::vector<int>& ks) {
  auto pad_left = [](const std::string& s, std::size_t width) {
    return std::string(width > s.size() ? width - s.size() : 0, ' ') + s;
  };
  auto row = [&](const std::string& name, const eval::MrrReport& r) {
    std::string line = name;
    line.resize(10, ' ');
    line += pad_left(std::to_string(r.query_count), 8);
    for (int k : ks) line += pad_left(format_fixed(r.mrr.at(k), 4), 9);
    std::cout << line << "\n";
  };
  std::string header = "bucket     queries";
  for (int k : ks) header += pad_left("MRR@" + std::to_string(k), 9);
  std::cout << header << "\n";
  row("overall", report.overall);
  if (report.short_bucket) row("short", *report.short_bucket);
  if (report.long_bucket) row("long", *report.long_bucket);
}

int cmd_eval(const EvalArgs& args) {
  auto docs = corpus::load_documents(args.corpus_path);
  auto queries = corpus::load_queries(args.queries_path);
  auto qrels = corpus::load_qrels(args.qrels_path, queries, docs);
  auto run = eval::load_run(args.run_path);
  auto ks = parse_ks(args.ks);
  const auto missing = args.missing == "zero" ? eval::MissingQueryPolicy::zero
                                              : eval::MissingQueryPolicy::error;
  auto report = eval::eval_report(run, qrels, docs, ks, args.length_threshold, missing);
  print_eval_table(report, ks);
  if (!args.out_path.empty()) {
    atomic_write_file(args.out_path, eval::report_to_json(report) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string corpus_path;
  std::string queries_path;
  std::string edges = "4,8,16,32,64,128,256,512,1024,2048";
  std::string out_path;
};

void append_histogram(std::string& out, const std::string& label,
                      const corpus::LengthHistogram& hist) {
  out += "# " + label + " records=" + std::to_string(hist.total()) +
         " min=" + std::to_string(hist.summary.min) + " max=" + std::to_string(hist.summary.max) +
         " mean=" + format_fixed(hist.summary.mean, 3) +
         " median=" + format_fixed(hist.summary.median, 1) + "\n";
  out += "bucket_start\tbucket_end\tcount\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    const std::string lo = b == 0 ? "-inf" : std::to_string(hist.bucket_edges[b - 1]);
    const std::string hi =
        b == hist.bucket_edges.size() ? "inf" : std::to_string(hist.bucket_edges[b]);
    out += lo + "\t" + hi + "\t" + std::to_string(hist.counts[b]) + "\n";
  }
}

int cmd_stats(const StatsArgs& args) {
  if (args.corpus_path.empty() && args.queries_path.empty()) {
    throw Error("cli", "stats needs --corpus and/or --queries");
  }
  auto edges = parse_edges(args.edges);
  std::string out;
  if (!args.corpus_path.empty()) {
    auto docs = corpus::load_documents(args.corpus_path);
    append_histogram(out, "documents", corpus::length_stats(docs, edges));
  }
  if (!args.queries_path.empty()) {
    auto queries = corpus::load_queries(args.queries_path);
    append_histogram(out, "queries", corpus::length_stats(queries, edges));
  }
  emit(out, args.out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string triplets_path;
  std::string embeddings_root;
  std::string space = "pca";
  std::string pca_model_path;
  double epsilon = 0.0;
  double max_drift = 1e-9;
};

int cmd_verify(const VerifyArgs& args) {
  auto records = miner::read_triplets(args.triplets_path);
  auto vectors = rebuild_vectors(args.embeddings_root,
                                 miner::distance_space_from_string(args.space),
                                 args.pca_model_path);

  auto vector_for = [&](const std::string& id) {
    std::span<const float> v = vectors.find_row(id);
    if (v.empty()) throw Error("cli", "unresolvable id in triplets: " + id);
    return v;
  };

  std::size_t checked = 0;
  std::size_t violations = 0;
  std::size_t drift_lines = 0;
  double max_drift = 0.0;
  std::vector<std::string> details;
  auto note = [&](std::size_t line, const std::string& message) {
    if (details.size() < 10) {
      details.push_back("line " + std::to_string(line) + ": " + message);
    }
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    const std::size_t line = i + 1;
    if (!record.d_q_pd && record.negatives.empty()) continue;
    if (!record.d_q_pd) {
      throw Error("cli", "triplets carry no recorded distances (line " + std::to_string(line) +
                             "); only mined files can be verified");
    }
    auto q_vec = vector_for(record.query_id);
    auto pd_vec = vector_for(record.positive_id);
    const double d_q_pd = miner::cosine_distance(q_vec, pd_vec);

    auto track_drift = [&](double recomputed, double recorded, const char* field,
                           const std::string& doc_id) {
      const double drift = std::abs(recomputed - recorded);
      max_drift = std::max(max_drift, drift);
      if (drift > args.max_drift) {
        ++drift_lines;
        note(line, std::string("recorded ") + field + " for " + doc_id + " drifts by " +
                       format_double(drift));
      }
    };
    track_drift(d_q_pd, *record.d_q_pd, "d_q_pd", record.positive_id);

    int previous_rank = 0;
    double previous_d = -1.0;
    for (const auto& negative : record.negatives) {
      if (!negative.d_q_d || !negative.d_pd_d) {
        throw Error("cli", "negative without recorded distances at line " +
                               std::to_string(line));
      }
      auto d_vec = vector_for(negative.doc_id);
      const double d_q_d = miner::cosine_distance(q_vec, d_vec);
      const double d_pd_d = miner::cosine_distance(pd_vec, d_vec);
      track_drift(d_q_d, *negative.d_q_d, "d_q_d", negative.doc_id);
      track_drift(d_pd_d, *negative.d_pd_d, "d_pd_d", negative.doc_id);
      ++checked;

      if (!miner::is_hard_negative(d_q_d, d_q_pd, d_pd_d, args.epsilon)) {
        ++violations;
        note(line, negative.doc_id + " fails the selection criteria on recomputed distances");
      }
      if (negative.rank != previous_rank + 1) {
        ++violations;
        note(line, "ranks are not contiguous at " + negative.doc_id);
      }
      if (d_q_d < previous_d) {
        ++violations;
        note(line, "negatives not sorted ascending by d(Q,D) at " + negative.doc_id);
      }
      previous_rank = negative.rank;
      previous_d = d_q_d;
    }
  }

  const bool drift_ok = max_drift <= args.max_drift;
  std::cout << "verify: " << records.size() << " records, " << checked
            << " negatives checked; violations=" << violations
            << " max_drift=" << format_double(max_drift) << "\n";
  for (const auto& detail : details) std::cout << "verify: " << detail << "\n";
  if (!drift_ok) {
    std::cout << "verify: drift exceeds " << format_double(args.max_drift) << " on "
              << drift_lines << " value(s) (distances disagree with the " << args.space
              << " space)\n";
  }
  return violations == 0 && drift_ok ? 0 : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"negminer: semantic hard-negative mining for retrieval training data"};
  app.require_subcommand(1);
  app.set_config("--config", "", "declarative config file; command-line flags win");

  EmbedArgs embed_args;
  auto* embed_cmd = app.add_subcommand(
      "embed", "fetch per-model embeddings (or load stores) and write the concat store");
  embed_cmd->add_option("--corpus", embed_args.corpus_path, "corpus JSONL");
  embed_cmd->add_option("--queries", embed_args.queries_path, "queries JSONL");
  embed_cmd->add_option("--out", embed_args.out_dir, "output directory")->required();
  embed_cmd->add_option("--provider-url", embed_args.provider_url, "embedding provider base URL")
      ->envname("NEGMINER_PROVIDER_URL");
  embed_cmd->add_option("--models", embed_args.models, "model names to fetch")->delimiter(',');
  embed_cmd->add_option("--stores", embed_args.store_dirs, "precomputed store directories")
      ->delimiter(',');
  embed_cmd->add_option("--batch-size", embed_args.batch_size, "texts per request");
  embed_cmd->add_option("--timeout-ms", embed_args.timeout_ms, "per-request timeout");
  embed_cmd->add_option("--max-retries", embed_args.max_retries,
                        "retries per batch after the first attempt");
  embed_cmd->add_flag("--normalize,!--no-normalize", embed_args.normalize,
                      "L2-normalize each model segment before concatenation (default on)");

  auto* pca_cmd = app.add_subcommand("pca", "fit or apply the PCA projection");
  pca_cmd->require_subcommand(1);
  std::string pca_store, pca_out;
  double pca_variance = 0.95;
  auto* fit_cmd = pca_cmd->add_subcommand("fit", "fit on a store, keep the variance threshold");
  fit_cmd->add_option("--store", pca_store, "store directory (embed output)")->required();
  fit_cmd->add_option("--variance", pca_variance, "explained-variance threshold in (0,1]");
  fit_cmd->add_option("--out", pca_out, "model file path")->required();
  std::string tr_store, tr_model, tr_out;
  auto* transform_cmd = pca_cmd->add_subcommand("transform", "project a store through a model");
  transform_cmd->add_option("--store", tr_store, "store directory")->required();
  transform_cmd->add_option("--model", tr_model, "pca model file")->required();
  transform_cmd->add_option("--out", tr_out, "projected store directory")->required();

  MineArgs mine_args;
  auto* mine_cmd = app.add_subcommand("mine", "select hard negatives by the dual criteria");
  mine_cmd->add_option("--qrels", mine_args.qrels_path, "qrels TSV")->required();
  mine_cmd->add_option("--corpus", mine_args.corpus_path, "corpus JSONL")->required();
  mine_cmd->add_option("--queries", mine_args.queries_path, "queries JSONL")->required();
  mine_cmd->add_option("--embeddings", mine_args.embeddings_root,
                       "embeddings root (holds concat/ and pca/)")
      ->required();
  mine_cmd->add_option("--space", mine_args.space, "distance space: pca or concat")
      ->check(CLI::IsMember({"pca", "concat"}));
  mine_cmd->add_option("--k", mine_args.k, "hard negatives per pair");
  mine_cmd->add_option("--epsilon", mine_args.epsilon, "strictness margin for the criteria");
  mine_cmd->add_flag("--exclude-cross-query-positives",
                     mine_args.exclude_cross_query_positives,
                     "drop every query's positives from all candidate pools");
  mine_cmd->add_option("--margin", mine_args.margin,
                       "training margin recorded in the triplet metadata");
  mine_cmd->add_option("--threads", mine_args.threads, "worker threads (0 = cores)");
  mine_cmd->add_option("--out", mine_args.out_path, "triplets JSONL output")->required();

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "baseline negative samplers");
  sample_cmd->add_option("--method", sample_args.method, "random | bm25 | inbatch | bm25+inbatch")
      ->check(CLI::IsMember({"random", "bm25", "inbatch", "bm25+inbatch"}));
  sample_cmd->add_option("--qrels", sample_args.qrels_path, "qrels TSV")->required();
  sample_cmd->add_option("--corpus", sample_args.corpus_path, "corpus JSONL")->required();
  sample_cmd->add_option("--queries", sample_args.queries_path, "queries JSONL")->required();
  sample_cmd->add_option("--k", sample_args.k, "negatives per pair");
  sample_cmd->add_option("--seed", sample_args.seed, "random sampler seed");
  sample_cmd->add_option("--batch-size", sample_args.batch_size, "in-batch batch size");
  sample_cmd->add_option("--k1", sample_args.k1, "BM25 k1");
  sample_cmd->add_option("--b", sample_args.b, "BM25 b");
  sample_cmd->add_option("--ratio", sample_args.ratio, "bm25:inbatch mix for the hybrid");
  sample_cmd->add_option("--out", sample_args.out_path, "triplets JSONL output")->required();

  LossArgs loss_args;
  auto* loss_cmd = app.add_subcommand("loss", "triplet margin loss over a triplets file");
  loss_cmd->add_option("--triplets", loss_args.triplets_path, "triplets JSONL")->required();
  loss_cmd->add_option("--embeddings", loss_args.embeddings_dir,
                       "store directory to recompute distances (default: recorded values)");
  loss_cmd->add_option("--margin", loss_args.margin, "margin m");
  loss_cmd->add_option("--reduce", loss_args.reduce, "sum or mean")
      ->check(CLI::IsMember({"sum", "mean"}));
  loss_cmd->add_option("--out", loss_args.out_path, "TSV output (default stdout)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "MRR@k with short/long document breakdown");
  eval_cmd->add_option("--run", eval_args.run_path, "scores TSV (query_id, doc_id, score)")
      ->required();
  eval_cmd->add_option("--qrels", eval_args.qrels_path, "qrels TSV")->required();
  eval_cmd->add_option("--corpus", eval_args.corpus_path, "corpus JSONL")->required();
  eval_cmd->add_option("--queries", eval_args.queries_path, "queries JSONL")->required();
  eval_cmd->add_option("--ks", eval_args.ks, "cutoffs, ascending (default 3,10)");
  eval_cmd->add_option("--length-threshold", eval_args.length_threshold,
                       "short/long token threshold");
  eval_cmd->add_option("--missing-query", eval_args.missing,
                       "judged query absent from run: error or zero")
      ->check(CLI::IsMember({"error", "zero"}));
  eval_cmd->add_option("--out", eval_args.out_path, "report JSON path");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "token-length histograms as TSV");
  stats_cmd->add_option("--corpus", stats_args.corpus_path, "corpus JSONL");
  stats_cmd->add_option("--queries", stats_args.queries_path, "queries JSONL");
  stats_cmd->add_option("--edges", stats_args.edges, "bucket edges, ascending CSV");
  stats_cmd->add_option("--out", stats_args.out_path, "TSV output (default stdout)");

  VerifyArgs verify_args;
  auto* verify_cmd =
      app.add_subcommand("verify", "recompute distances and re-check the selection criteria");
  verify_cmd->add_option("--triplets", verify_args.triplets_path, "triplets JSONL")->required();
  verify_cmd->add_option("--embeddings", verify_args.embeddings_root, "embeddings root")
      ->required();
  verify_cmd->add_option("--space", verify_args.space, "space the triplets were mined in")
      ->check(CLI::IsMember({"pca", "concat"}));
  verify_cmd->add_option("--pca-model", verify_args.pca_model_path,
                         "pca model file (required for pca space)");
  verify_cmd->add_option("--epsilon", verify_args.epsilon, "strictness margin used when mining");
  verify_cmd->add_option("--max-drift", verify_args.max_drift,
                         "tolerated |recomputed - recorded| (default 1e-9)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (embed_cmd->parsed()) return cmd_embed(embed_args);
    if (fit_cmd->parsed()) return cmd_pca_fit(pca_store, pca_variance, pca_out);
    if (transform_cmd->parsed()) return cmd_pca_transform(tr_store, tr_model, tr_out);
    if (mine_cmd->parsed()) return cmd_mine(mine_args);
    if (sample_cmd->parsed()) return cmd_sample(sample_args);
    if (loss_cmd->parsed()) return cmd_loss(loss_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (stats_cmd->parsed()) return cmd_stats(stats_args);
    if (verify_cmd->parsed()) return cmd_verify(verify_args);
  } catch (const std::exception& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::cerr << "negminer: error: " << message << "\n";
    return kExitError;
  }
  return kExitError;
}
