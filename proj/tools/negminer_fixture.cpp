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

// Generates the bundled synthetic clustered fixture: corpus, queries,
// qrels, topic labels, and per-model embedding stores. Lets the whole
// pipeline run offline, without an embedding provider.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "negminer/common.hpp"
#include "negminer/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"negminer-fixture: synthetic clustered corpus generator"};

  negminer::fixture::FixtureConfig config;
  std::string out_dir;
  std::string dims = "12,8";
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--docs", config.n_docs, "number of documents");
  app.add_option("--queries", config.n_queries, "number of queries");
  app.add_option("--clusters", config.n_clusters, "number of topic clusters");
  app.add_option("--dims", dims, "per-model embedding dims, CSV");
  app.add_option("--doc-noise", config.doc_noise, "document noise sigma");
  app.add_option("--query-noise", config.query_noise, "query noise sigma");
  app.add_option("--seed", config.seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    config.model_dims.clear();
    for (const auto& part : negminer::split(dims, ',')) {
      config.model_dims.push_back(std::stoul(part));
    }
    auto fixture = negminer::fixture::make_fixture(config);
    negminer::fixture::write_fixture(fixture, out_dir);
    std::cerr << "fixture: " << config.n_docs << " docs, " << config.n_queries << " queries, "
              << config.n_clusters << " clusters -> " << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "negminer-fixture: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
