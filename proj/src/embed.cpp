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

#include "negminer/embed.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "negminer/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "matrix.f32 is little-endian; big-endian hosts are unsupported");

namespace negminer::embed {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("embed", message); }

constexpr double kNormTolerance = 1e-6;

}  // namespace

std::span<const float> EmbeddingStore::find_row(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) return {};
  return row(it->second);
}

void EmbeddingStore::rebuild_index() {
  index.clear();
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = index.emplace(ids[i], i);
    if (!inserted) fail("duplicate id in store: " + ids[i]);
  }
}

void EmbeddingStore::validate() const {
  if (dim == 0) fail("store dim must be positive");
  if (matrix.size() != ids.size() * dim) {
    fail("store matrix size " + std::to_string(matrix.size()) + " does not match count " +
         std::to_string(ids.size()) + " x dim " + std::to_string(dim));
  }
  if (index.size() != ids.size()) fail("store index out of date");
  for (std::size_t i = 0; i < count(); ++i) {
    double norm_sq = 0.0;
    for (float v : row(i)) {
      if (!std::isfinite(v)) fail("non-finite value in row for id " + ids[i]);
      norm_sq += static_cast<double>(v) * static_cast<double>(v);
    }
    if (normalized) {
      double norm = std::sqrt(norm_sq);
      if (std::abs(norm - 1.0) > kNormTolerance) {
        fail("row for id " + ids[i] + " is not unit-norm (" + format_double(norm) + ")");
      }
    }
  }
}

std::vector<double> l2_normalize(std::span<const double> v) {
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  double norm = std::sqrt(norm_sq);
  if (norm == 0.0) fail("cannot normalize a zero vector");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

std::vector<float> l2_normalize(std::span<const float> v) {
  double norm_sq = 0.0;
  for (float x : v) norm_sq += static_cast<double>(x) * static_cast<double>(x);
  double norm = std::sqrt(norm_sq);
  if (norm == 0.0) fail("cannot normalize a zero vector");
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
  }
  return out;
}

ConcatVector concat_embeddings(std::span<const EmbeddingStore* const> stores,
                               const std::string& id, bool normalize_segments) {
  if (stores.empty()) fail("concat requires at least one store");
  ConcatVector out;
  out.id = id;
  std::size_t offset = 0;
  for (const EmbeddingStore* store : stores) {
    std::span<const float> row = store->find_row(id);
    if (row.empty()) fail("id " + id + " missing from store " + store->model_name);
    std::vector<float> segment =
        normalize_segments ? l2_normalize(row) : std::vector<float>(row.begin(), row.end());
    out.values.insert(out.values.end(), segment.begin(), segment.end());
    out.layout.push_back({store->model_name, offset, store->dim});
    offset += store->dim;
  }
  return out;
}

EmbeddingStore concat_stores(std::span<const EmbeddingStore* const> stores,
                             bool normalize_segments) {
  if (stores.empty()) fail("concat requires at least one store");
  const std::vector<std::string>& ids = stores.front()->ids;
  std::size_t total_dim = 0;
  for (const EmbeddingStore* store : stores) {
    if (store->ids != ids) {
      fail("store " + store->model_name + " does not hold the same ids as " +
           stores.front()->model_name);
    }
    total_dim += store->dim;
  }

  EmbeddingStore out;
  out.model_name = "concat";
  out.dim = total_dim;
  out.normalized = false;  // each segment is unit-norm, the whole row is not
  out.ids = ids;
  out.matrix.resize(ids.size() * total_dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::size_t offset = 0;
    for (const EmbeddingStore* store : stores) {
      std::span<const float> row = store->row(i);
      if (normalize_segments) {
        std::vector<float> segment = l2_normalize(row);
        std::copy(segment.begin(), segment.end(), out.matrix.begin() + i * total_dim + offset);
      } else {
        std::copy(row.begin(), row.end(), out.matrix.begin() + i * total_dim + offset);
      }
      offset += store->dim;
    }
  }
  out.rebuild_index();
  return out;
}

namespace {

struct ParsedUrl {
  std::string host_port;  // scheme://host:port for httplib::Client
  std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) fail("provider URL must include a scheme: " + base_url);
  auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

std::vector<std::vector<float>> parse_embed_response(const std::string& body,
                                                     std::size_t expected_rows) {
  ordered_json obj = ordered_json::parse(body, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) fail("provider returned malformed JSON");
  if (!obj.contains("embeddings") || !obj["embeddings"].is_array()) {
    fail("provider response missing \"embeddings\" array");
  }
  if (!obj.contains("dim") || !obj["dim"].is_number_integer()) {
    fail("provider response missing integer \"dim\"");
  }
  const std::size_t dim = obj["dim"].get<std::size_t>();
  const auto& rows = obj["embeddings"];
  if (rows.size() != expected_rows) {
    fail("provider returned " + std::to_string(rows.size()) + " rows for " +
         std::to_string(expected_rows) + " inputs");
  }
  std::vector<std::vector<float>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != dim) {
      fail("provider row length disagrees with declared dim " + std::to_string(dim));
    }
    std::vector<float> values;
    values.reserve(dim);
    for (const auto& v : row) {
      if (!v.is_number()) fail("provider row contains a non-numeric value");
      double x = v.get<double>();
      if (!std::isfinite(x)) fail("provider row contains a non-finite value");
      values.push_back(static_cast<float>(x));
    }
    out.push_back(std::move(values));
  }
  return out;
}

}  // namespace

EmbeddingStore fetch_embeddings(const ProviderSpec& provider, const std::string& model,
                                const std::vector<std::string>& ids,
                                const std::vector<std::string>& texts) {
  if (texts.empty()) fail("fetch_embeddings requires at least one text");
  if (ids.size() != texts.size()) fail("ids and texts must be parallel");
  if (provider.batch_size == 0) fail("batch_size must be >= 1");

  ParsedUrl url = parse_base_url(provider.base_url);
  httplib::Client client(url.host_port);
  client.set_connection_timeout(provider.timeout);
  client.set_read_timeout(provider.timeout);

  EmbeddingStore store;
  store.model_name = model;
  store.ids = ids;

  const unsigned attempts_allowed = provider.max_retries + 1;
  for (std::size_t start = 0; start < texts.size(); start += provider.batch_size) {
    const std::size_t end = std::min(start + provider.batch_size, texts.size());
    ordered_json request;
    request["model"] = model;
    request["inputs"] = std::vector<std::string>(texts.begin() + start, texts.begin() + end);
    const std::string body = request.dump();

    std::string response_body;
    bool ok = false;
    std::string last_error;
    auto backoff = provider.initial_backoff;
    for (unsigned attempt = 1; attempt <= attempts_allowed; ++attempt) {
      auto res = client.Post(url.path_prefix + "/embed", body, "application/json");
      if (res && res->status == 200) {
        response_body = res->body;
        ok = true;
        break;
      }
      if (res && res->status >= 400 && res->status < 500) {
        fail("provider rejected request with HTTP " + std::to_string(res->status));
      }
      last_error = res ? "HTTP " + std::to_string(res->status)
                       : "transport error (" + httplib::to_string(res.error()) + ")";
      std::cerr << "embed: attempt " << attempt << "/" << attempts_allowed << " failed for batch "
                << (start / provider.batch_size) << ": " << last_error << "\n";
      if (attempt < attempts_allowed) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }
    if (!ok) {
      fail("provider unreachable after " + std::to_string(attempts_allowed) + " attempts: " +
           last_error);
    }

    auto rows = parse_embed_response(response_body, end - start);
    const std::size_t batch_dim = rows.empty() ? 0 : rows.front().size();
    if (store.dim == 0) {
      store.dim = batch_dim;
      if (store.dim == 0) fail("provider returned zero-dimensional embeddings");
    } else if (batch_dim != store.dim) {
      fail("dim mismatch between batches: got " + std::to_string(batch_dim) + ", expected " +
           std::to_string(store.dim));
    }
    for (const auto& row : rows) {
      store.matrix.insert(store.matrix.end(), row.begin(), row.end());
    }
  }

  store.rebuild_index();
  store.validate();
  return store;
}

void write_store(const EmbeddingStore& store, const fs::path& dir) {
  store.validate();
  for (const auto& id : store.ids) {
    if (id.find_first_of("\n\r") != std::string::npos) {
      fail("id contains a newline, cannot serialize: " + id);
    }
  }

  fs::path staging = dir;
  staging += ".staging." + std::to_string(::getpid());
  fs::create_directories(staging);

  const auto* bytes = reinterpret_cast<const char*>(store.matrix.data());
  const std::size_t byte_count = store.matrix.size() * sizeof(float);
  {
    std::ofstream out(staging / "matrix.f32", std::ios::binary | std::ios::trunc);
    out.write(bytes, static_cast<std::streamsize>(byte_count));
    if (!out) fail("failed writing matrix.f32 under " + staging.string());
  }
  {
    std::ofstream out(staging / "ids.txt", std::ios::binary | std::ios::trunc);
    for (const auto& id : store.ids) out << id << '\n';
    if (!out) fail("failed writing ids.txt under " + staging.string());
  }
  ordered_json manifest;
  manifest["model_name"] = store.model_name;
  manifest["dim"] = store.dim;
  manifest["count"] = store.count();
  manifest["normalized"] = store.normalized;
  char checksum[16];
  std::snprintf(checksum, sizeof(checksum), "%08x", crc32(bytes, byte_count));
  manifest["checksum"] = checksum;
  {
    std::ofstream out(staging / "manifest.json", std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) fail("failed writing manifest.json under " + staging.string());
  }

  atomic_replace_dir(staging, dir);
}

EmbeddingStore read_store(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) fail("no manifest.json under " + dir.string());
  ordered_json manifest = ordered_json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    fail("malformed manifest.json under " + dir.string());
  }
  for (const char* key : {"model_name", "dim", "count", "normalized", "checksum"}) {
    if (!manifest.contains(key)) fail("manifest missing \"" + std::string(key) + "\"");
  }

  EmbeddingStore store;
  store.model_name = manifest["model_name"].get<std::string>();
  store.dim = manifest["dim"].get<std::size_t>();
  store.normalized = manifest["normalized"].get<bool>();
  const std::size_t count = manifest["count"].get<std::size_t>();

  std::string ids_content = read_file(dir / "ids.txt");
  std::size_t start = 0;
  while (start < ids_content.size()) {
    std::size_t end = ids_content.find('\n', start);
    if (end == std::string::npos) end = ids_content.size();
    store.ids.emplace_back(ids_content.substr(start, end - start));
    start = end + 1;
  }
  if (store.ids.size() != count) {
    fail("manifest count " + std::to_string(count) + " disagrees with ids.txt (" +
         std::to_string(store.ids.size()) + " lines) under " + dir.string());
  }

  std::string matrix_bytes = read_file(dir / "matrix.f32");
  const std::size_t expected_bytes = count * store.dim * sizeof(float);
  if (matrix_bytes.size() != expected_bytes) {
    fail("matrix.f32 is " + std::to_string(matrix_bytes.size()) + " bytes, expected " +
         std::to_string(expected_bytes) + " (truncated or corrupt) under " + dir.string());
  }
  char expected_crc[16];
  std::snprintf(expected_crc, sizeof(expected_crc), "%08x", crc32(matrix_bytes));
  if (manifest["checksum"].get<std::string>() != expected_crc) {
    fail("matrix.f32 checksum mismatch under " + dir.string());
  }
  store.matrix.resize(count * store.dim);
  std::memcpy(store.matrix.data(), matrix_bytes.data(), expected_bytes);

  store.rebuild_index();
  store.validate();
  return store;
}

}  // namespace negminer::embed
