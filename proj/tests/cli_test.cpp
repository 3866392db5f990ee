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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>

#include <json.hpp>

#include "negminer/embed.hpp"
#include "negminer/fixture.hpp"
#include "negminer/miner.hpp"
#include "negminer/pca.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace negminer;
using testutil::TempDir;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CommandResult run(const TempDir& tmp, const std::string& args) {
  const std::string out_file = (tmp.path() / ".cmd_out").string();
  const std::string err_file = (tmp.path() / ".cmd_err").string();
  const std::string command =
      std::string(NEGMINER_BIN) + " " + args + " >" + out_file + " 2>" + err_file;
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = testutil::read_text(out_file);
  result.err = testutil::read_text(err_file);
  return result;
}

// Small clustered fixture plus embed/pca-fit/transform/mine artifacts.
struct PipelineDirs {
  fs::path fx;
  fs::path emb;
  fs::path model;
  fs::path triplets;
};

PipelineDirs prepare_pipeline(const TempDir& tmp, const std::string& space = "pca") {
  fixture::FixtureConfig config;
  config.n_docs = 320;
  config.n_queries = 24;
  config.n_clusters = 8;
  config.min_closer_docs = 10;
  config.seed = 11;
  auto fx = fixture::make_fixture(config);
  fixture::write_fixture(fx, tmp.file("fx"));

  PipelineDirs dirs;
  dirs.fx = tmp.file("fx");
  dirs.emb = tmp.file("emb");
  dirs.model = tmp.file("pca.nmpc");
  dirs.triplets = tmp.file("triplets.jsonl");

  auto stores = (dirs.fx / "stores").string();
  REQUIRE(run(tmp, "embed --stores " + stores + "/m0," + stores + "/m1 --out " +
                       dirs.emb.string())
              .exit_code == 0);
  REQUIRE(run(tmp, "pca fit --store " + (dirs.emb / "concat").string() + " --variance 0.95 " +
                       "--out " + dirs.model.string())
              .exit_code == 0);
  REQUIRE(run(tmp, "pca transform --store " + (dirs.emb / "concat").string() + " --model " +
                       dirs.model.string() + " --out " + (dirs.emb / "pca").string())
              .exit_code == 0);
  REQUIRE(run(tmp, "mine --qrels " + (dirs.fx / "qrels.tsv").string() + " --corpus " +
                       (dirs.fx / "corpus.jsonl").string() + " --queries " +
                       (dirs.fx / "queries.jsonl").string() + " --embeddings " +
                       dirs.emb.string() + " --space " + space + " --k 4 --out " +
                       dirs.triplets.string())
              .exit_code == 0);
  return dirs;
}

}  // namespace

TEST_CASE("pipeline: mine output passes verify") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  auto result = run(tmp, "verify --triplets " + dirs.triplets.string() + " --embeddings " +
                             dirs.emb.string() + " --space pca --pca-model " +
                             dirs.model.string());
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("violations=0") != std::string::npos);
  CHECK(result.out.find("max_drift=0") != std::string::npos);
}

TEST_CASE("verify flags a hand-corrupted distance") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  // Corrupt the first d_q_d value.
  std::string content = testutil::read_text(dirs.triplets);
  auto pos = content.find("\"d_q_d\":");
  REQUIRE(pos != std::string::npos);
  content.replace(pos, 10, "\"d_q_d\":9.");
  testutil::write_text(dirs.triplets, content);

  auto result = run(tmp, "verify --triplets " + dirs.triplets.string() + " --embeddings " +
                             dirs.emb.string() + " --space pca --pca-model " +
                             dirs.model.string());
  CHECK(result.exit_code == 2);
  CHECK(result.out.find("line 1") != std::string::npos);
}

TEST_CASE("triplets mined in concat space fail verification against pca space") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp, "concat");
  auto result = run(tmp, "verify --triplets " + dirs.triplets.string() + " --embeddings " +
                             dirs.emb.string() + " --space pca --pca-model " +
                             dirs.model.string());
  CHECK(result.exit_code == 2);
  CHECK(result.out.find("drift exceeds") != std::string::npos);
}

TEST_CASE("pca fit: component count is monotone in the variance threshold") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  REQUIRE(run(tmp, "pca fit --store " + (dirs.emb / "concat").string() +
                       " --variance 0.70 --out " + tmp.file("low.nmpc").string())
              .exit_code == 0);
  auto low = pca::load_model(tmp.file("low.nmpc"));
  auto high = pca::load_model(dirs.model);
  CHECK(low.n_components <= high.n_components);
  CHECK(low.variance_threshold == 0.70);
}

TEST_CASE("eval: perfect run reports MRR 1.0 and writes the report") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  // Perfect run: every positive outscores two fillers.
  std::string run_tsv;
  auto qrels = testutil::read_text(dirs.fx / "qrels.tsv");
  std::size_t start = 0;
  while (start < qrels.size()) {
    auto end = qrels.find('\n', start);
    if (end == std::string::npos) break;
    std::string line = qrels.substr(start, end - start);
    start = end + 1;
    auto tab1 = line.find('\t');
    auto tab2 = line.find('\t', tab1 + 1);
    const std::string query_id = line.substr(0, tab1);
    const std::string doc_id = line.substr(tab1 + 1, tab2 - tab1 - 1);
    run_tsv += query_id + "\t" + doc_id + "\t10\n";
    // Filler docs need not exist in the corpus; run ids are unvalidated.
    run_tsv += query_id + "\tzz_filler_a\t1\n";
    run_tsv += query_id + "\tzz_filler_b\t0.5\n";
  }
  testutil::write_text(tmp.file("run.tsv"), run_tsv);
  auto result = run(tmp, "eval --run " + tmp.file("run.tsv").string() + " --qrels " +
                             (dirs.fx / "qrels.tsv").string() + " --corpus " +
                             (dirs.fx / "corpus.jsonl").string() + " --queries " +
                             (dirs.fx / "queries.jsonl").string() +
                             " --ks 3,10 --length-threshold 16 --missing-query zero --out " +
                             tmp.file("report.json").string());
  REQUIRE(result.exit_code == 0);
  CHECK(result.out.find("overall") != std::string::npos);
  auto report = nlohmann::json::parse(testutil::read_text(tmp.file("report.json")));
  CHECK(report["mrr"]["3"].get<double>() == 1.0);
  CHECK(report["mrr"]["10"].get<double>() == 1.0);
}

TEST_CASE("sample: --seed fully determines the output") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  const std::string base = "sample --method random --qrels " + (dirs.fx / "qrels.tsv").string() +
                           " --corpus " + (dirs.fx / "corpus.jsonl").string() + " --queries " +
                           (dirs.fx / "queries.jsonl").string() + " --k 5 ";
  REQUIRE(run(tmp, base + "--seed 9 --out " + tmp.file("a.jsonl").string()).exit_code == 0);
  REQUIRE(run(tmp, base + "--seed 9 --out " + tmp.file("b.jsonl").string()).exit_code == 0);
  REQUIRE(run(tmp, base + "--seed 10 --out " + tmp.file("c.jsonl").string()).exit_code == 0);
  CHECK(testutil::read_text(tmp.file("a.jsonl")) == testutil::read_text(tmp.file("b.jsonl")));
  CHECK(testutil::read_text(tmp.file("a.jsonl")) != testutil::read_text(tmp.file("c.jsonl")));
}

TEST_CASE("sample: bm25+inbatch hybrid honors k and writes metadata") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  auto result = run(tmp, "sample --method bm25+inbatch --ratio 1:1 --k 4 --qrels " +
                             (dirs.fx / "qrels.tsv").string() + " --corpus " +
                             (dirs.fx / "corpus.jsonl").string() + " --queries " +
                             (dirs.fx / "queries.jsonl").string() + " --out " +
                             tmp.file("hybrid.jsonl").string());
  REQUIRE(result.exit_code == 0);
  auto records = miner::read_triplets(tmp.file("hybrid.jsonl"));
  for (const auto& record : records) CHECK(record.negatives.size() <= 4);
  auto meta = nlohmann::json::parse(testutil::read_text(tmp.file("hybrid.jsonl.meta.json")));
  CHECK(meta["method"] == "bm25+inbatch");
  CHECK(meta["ratio"] == "1:1");
}

TEST_CASE("loss: recorded distances agree with recomputation from the store") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  auto recorded = run(tmp, "loss --triplets " + dirs.triplets.string() + " --margin 0.2");
  auto recomputed = run(tmp, "loss --triplets " + dirs.triplets.string() + " --embeddings " +
                                 (dirs.emb / "pca").string() + " --margin 0.2");
  REQUIRE(recorded.exit_code == 0);
  REQUIRE(recomputed.exit_code == 0);
  CHECK(recorded.out == recomputed.out);
  CHECK(recorded.out.find("sum_loss=") != std::string::npos);
}

TEST_CASE("embed: --no-normalize changes the concat store") {
  TempDir tmp;
  fixture::FixtureConfig config;
  config.n_docs = 40;
  config.n_queries = 8;
  config.min_closer_docs = 2;
  fixture::write_fixture(fixture::make_fixture(config), tmp.file("fx"));
  const std::string stores = (tmp.file("fx") / "stores").string();
  REQUIRE(run(tmp, "embed --stores " + stores + "/m0," + stores + "/m1 --out " +
                       tmp.file("emb_norm").string())
              .exit_code == 0);
  REQUIRE(run(tmp, "embed --stores " + stores + "/m0," + stores + "/m1 --no-normalize --out " +
                       tmp.file("emb_raw").string())
              .exit_code == 0);
  auto normalized = embed::read_store(tmp.file("emb_norm") / "concat");
  auto raw = embed::read_store(tmp.file("emb_raw") / "concat");
  CHECK(normalized.matrix != raw.matrix);
  // Normalized segments are unit-norm; raw ones keep their native scale.
  double norm = 0.0;
  for (std::size_t j = 0; j < 12; ++j) {
    norm += static_cast<double>(normalized.row(0)[j]) * normalized.row(0)[j];
  }
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("loss: --reduce mean divides the sum by the triplet count") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  auto sum_run = run(tmp, "loss --triplets " + dirs.triplets.string() + " --margin 0.3");
  auto mean_run = run(tmp, "loss --triplets " + dirs.triplets.string() +
                              " --margin 0.3 --reduce mean");
  REQUIRE(sum_run.exit_code == 0);
  REQUIRE(mean_run.exit_code == 0);
  auto tail_value = [](const std::string& out, const std::string& key) {
    auto pos = out.rfind(key);
    REQUIRE(pos != std::string::npos);
    return std::stod(out.substr(pos + key.size()));
  };
  const double total = tail_value(sum_run.out, "sum_loss=");
  const double mean = tail_value(mean_run.out, "mean_loss=");
  auto count_pos = sum_run.out.rfind("# triplets=");
  REQUIRE(count_pos != std::string::npos);
  const double count = std::stod(sum_run.out.substr(count_pos + 11));
  CHECK(mean == doctest::Approx(total / count).epsilon(1e-12));
}

TEST_CASE("stats: histogram counts sum to the record count") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  auto result = run(tmp, "stats --corpus " + (dirs.fx / "corpus.jsonl").string() +
                             " --queries " + (dirs.fx / "queries.jsonl").string() +
                             " --edges 8,16,32");
  REQUIRE(result.exit_code == 0);
  CHECK(result.out.find("records=320") != std::string::npos);
  CHECK(result.out.find("# queries records=24") != std::string::npos);
  // Sum the count column over data rows of both histograms.
  std::size_t sum = 0;
  std::size_t pos = 0;
  while (pos < result.out.size()) {
    auto end = result.out.find('\n', pos);
    if (end == std::string::npos) end = result.out.size();
    std::string line = result.out.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line[0] == '#' || line.rfind("bucket", 0) == 0) continue;
    auto tab = line.rfind('\t');
    if (tab != std::string::npos) sum += std::stoul(line.substr(tab + 1));
  }
  CHECK(sum == 320 + 24);
}

TEST_CASE("failed command leaves no artifact under the declared output name") {
  TempDir tmp;
  auto result = run(tmp, "mine --qrels /nonexistent.tsv --corpus /nonexistent.jsonl "
                         "--queries /nonexistent.jsonl --embeddings /nonexistent --out " +
                             tmp.file("should_not_exist.jsonl").string());
  CHECK(result.exit_code == 1);
  CHECK_FALSE(fs::exists(tmp.file("should_not_exist.jsonl")));
  // Single-line machine-parseable error on stderr.
  CHECK(result.err.rfind("negminer: error:", 0) == 0);
  CHECK(std::count(result.err.begin(), result.err.end(), '\n') == 1);
}

TEST_CASE("config file values apply and command-line flags win") {
  TempDir tmp;
  auto dirs = prepare_pipeline(tmp);
  testutil::write_text(tmp.file("negminer.ini"),
                       "[sample]\n"
                       "method=random\n"
                       "qrels=" + (dirs.fx / "qrels.tsv").string() + "\n" +
                       "corpus=" + (dirs.fx / "corpus.jsonl").string() + "\n" +
                       "queries=" + (dirs.fx / "queries.jsonl").string() + "\n" +
                       "k=3\n"
                       "seed=5\n"
                       "out=" + tmp.file("from_config.jsonl").string() + "\n");
  REQUIRE(run(tmp, "--config " + tmp.file("negminer.ini").string() + " sample").exit_code == 0);
  auto from_config = miner::read_triplets(tmp.file("from_config.jsonl"));
  REQUIRE(!from_config.empty());
  CHECK(from_config[0].negatives.size() == 3);

  // Flag overrides the configured k.
  REQUIRE(run(tmp, "--config " + tmp.file("negminer.ini").string() + " sample --k 2 --out " +
                       tmp.file("override.jsonl").string())
              .exit_code == 0);
  auto overridden = miner::read_triplets(tmp.file("override.jsonl"));
  CHECK(overridden[0].negatives.size() == 2);
}

TEST_CASE("unknown flags and missing inputs exit nonzero") {
  TempDir tmp;
  CHECK(run(tmp, "mine --definitely-not-a-flag").exit_code != 0);
  CHECK(run(tmp, "nosuchcommand").exit_code != 0);
  CHECK(run(tmp, "eval --run /missing --qrels /missing --corpus /missing --queries /missing")
            .exit_code == 1);
}

TEST_CASE("embed fetches from a provider, URL taken from the environment") {
  TempDir tmp;
  testutil::write_text(tmp.file("corpus.jsonl"),
                       R"({"id":"d1","text":"mysql deployment guide"})"
                       "\n"
                       R"({"id":"d2","text":"virtual network setup"})"
                       "\n");
  testutil::write_text(tmp.file("queries.jsonl"),
                       R"({"id":"q1","text":"how to deploy mysql"})"
                       "\n");

  httplib::Server server;
  server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& input : body.at("inputs")) {
      const double h = static_cast<double>(
                           std::hash<std::string>{}(input.get<std::string>()) % 1000) /
                       1000.0;
      rows.push_back({0.5 + h, 1.0 - h, 0.25});
    }
    nlohmann::json out;
    out["embeddings"] = rows;
    out["dim"] = 3;
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string out_file = (tmp.path() / ".cmd_out").string();
  const std::string command = "NEGMINER_PROVIDER_URL=http://127.0.0.1:" + std::to_string(port) +
                              " " + NEGMINER_BIN + " embed --corpus " +
                              tmp.file("corpus.jsonl").string() + " --queries " +
                              tmp.file("queries.jsonl").string() + " --models toy-model --out " +
                              tmp.file("emb").string() + " >" + out_file + " 2>&1";
  const int status = std::system(command.c_str());
  server.stop();
  server_thread.join();
  REQUIRE(WIFEXITED(status));
  REQUIRE(WEXITSTATUS(status) == 0);

  auto model_store = embed::read_store(tmp.file("emb") / "toy-model");
  CHECK(model_store.count() == 3);  // d1, d2, q1
  CHECK(model_store.dim == 3);
  CHECK(model_store.ids == std::vector<std::string>{"d1", "d2", "q1"});
  auto concat = embed::read_store(tmp.file("emb") / "concat");
  CHECK(concat.dim == 3);
  CHECK(concat.count() == 3);
}
