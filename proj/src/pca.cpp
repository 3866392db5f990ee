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

#include "negminer/pca.hpp"

#include <cmath>
#include <cstring>

#include <Eigen/Dense>

#include "negminer/common.hpp"

namespace negminer::pca {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("pca", message); }

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr char kMagic[4] = {'N', 'M', 'P', 'C'};
constexpr uint32_t kVersion = 1;

}  // namespace

PcaModel fit(std::span<const double> data, std::size_t n, std::size_t d,
             double variance_threshold) {
  if (n < 2) fail("fit requires at least 2 rows, got " + std::to_string(n));
  if (d < 1) fail("fit requires at least 1 column");
  if (data.size() != n * d) fail("data size does not match n x d");
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    fail("variance threshold must be in (0, 1], got " + format_double(variance_threshold));
  }
  for (double v : data) {
    if (!std::isfinite(v)) fail("non-finite value in input data");
  }

  Eigen::Map<const RowMajorMatrix> x(data.data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(d));
  Eigen::RowVectorXd mean = x.colwise().mean();
  RowMajorMatrix centered = x.rowwise() - mean;
  Eigen::MatrixXd covariance =
      (centered.adjoint() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) fail("eigendecomposition failed to converge");

  // Solver output is ascending; reorder descending and clamp the tiny
  // negative eigenvalues symmetric solvers can produce. Tied eigenvalues
  // keep the solver's order; the individual axes of a tied subspace are
  // rotation-ambiguous, only the subspace itself is contractual.
  const std::size_t dims = d;
  std::vector<double> eigenvalues(dims);
  for (std::size_t i = 0; i < dims; ++i) {
    eigenvalues[i] = std::max(solver.eigenvalues()(static_cast<Eigen::Index>(dims - 1 - i)), 0.0);
  }
  double total = 0.0;
  for (double ev : eigenvalues) total += ev;
  if (total <= 0.0) fail("zero total variance (all rows identical)");

  std::vector<double> ratios(dims);
  for (std::size_t i = 0; i < dims; ++i) ratios[i] = eigenvalues[i] / total;

  // Smallest m whose cumulative ratio reaches the threshold; all components
  // as a fallback when rounding keeps the partial sums fractionally short.
  std::size_t n_components = dims;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < dims; ++i) {
    cumulative += ratios[i];
    if (cumulative >= variance_threshold) {
      n_components = i + 1;
      break;
    }
  }

  PcaModel model;
  model.input_dim = d;
  model.n_components = n_components;
  model.variance_threshold = variance_threshold;
  model.mean.assign(mean.data(), mean.data() + d);
  model.explained_variance_ratio.assign(ratios.begin(), ratios.begin() + n_components);
  model.components.resize(n_components * d);
  for (std::size_t c = 0; c < n_components; ++c) {
    Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(dims - 1 - c));
    // Deterministic orientation: largest-magnitude entry positive.
    Eigen::Index max_idx = 0;
    axis.cwiseAbs().maxCoeff(&max_idx);
    if (axis(max_idx) < 0.0) axis = -axis;
    for (std::size_t j = 0; j < d; ++j) model.components[c * d + j] = axis(j);
  }
  return model;
}

std::vector<double> transform(const PcaModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim) {
    fail("transform input dim " + std::to_string(x.size()) + " != model input_dim " +
         std::to_string(model.input_dim));
  }
  std::vector<double> out(model.n_components, 0.0);
  for (std::size_t c = 0; c < model.n_components; ++c) {
    double dot = 0.0;
    std::span<const double> axis = model.component(c);
    for (std::size_t j = 0; j < model.input_dim; ++j) {
      dot += (x[j] - model.mean[j]) * axis[j];
    }
    out[c] = dot;
  }
  return out;
}

std::vector<double> transform_rows(const PcaModel& model, std::span<const double> data,
                                   std::size_t n) {
  if (data.size() != n * model.input_dim) fail("matrix size does not match n x input_dim");
  std::vector<double> out(n * model.n_components);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = transform(model, data.subspan(i * model.input_dim, model.input_dim));
    std::copy(row.begin(), row.end(), out.begin() + i * model.n_components);
  }
  return out;
}

std::vector<double> inverse_transform(const PcaModel& model, std::span<const double> y) {
  if (y.size() != model.n_components) {
    fail("inverse_transform input dim " + std::to_string(y.size()) + " != n_components " +
         std::to_string(model.n_components));
  }
  std::vector<double> out(model.mean.begin(), model.mean.end());
  for (std::size_t c = 0; c < model.n_components; ++c) {
    std::span<const double> axis = model.component(c);
    for (std::size_t j = 0; j < model.input_dim; ++j) out[j] += y[c] * axis[j];
  }
  return out;
}

const std::vector<double>& explained_variance(const PcaModel& model) {
  return model.explained_variance_ratio;
}

namespace {

void append_bytes(std::string& out, const void* data, std::size_t size) {
  out.append(static_cast<const char*>(data), size);
}

void append_u32(std::string& out, uint32_t v) { append_bytes(out, &v, sizeof(v)); }
void append_f64(std::string& out, double v) { append_bytes(out, &v, sizeof(v)); }

}  // namespace

void save_model(const PcaModel& model, const std::filesystem::path& path) {
  std::string buf;
  append_bytes(buf, kMagic, sizeof(kMagic));
  append_u32(buf, kVersion);
  append_u32(buf, static_cast<uint32_t>(model.input_dim));
  append_u32(buf, static_cast<uint32_t>(model.n_components));
  append_f64(buf, model.variance_threshold);
  for (double v : model.mean) append_f64(buf, v);
  for (double v : model.components) append_f64(buf, v);
  for (double v : model.explained_variance_ratio) append_f64(buf, v);
  append_u32(buf, crc32(buf));
  atomic_write_file(path, buf);
}

PcaModel load_model(const std::filesystem::path& path) {
  std::string buf = read_file(path);
  if (buf.size() < sizeof(kMagic) + 3 * sizeof(uint32_t) + sizeof(double) + sizeof(uint32_t)) {
    fail("model file too short: " + path.string());
  }
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    fail("bad magic, not a pca model file: " + path.string());
  }

  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - sizeof(uint32_t), sizeof(uint32_t));
  if (crc32(buf.data(), buf.size() - sizeof(uint32_t)) != stored_crc) {
    fail("model file corrupted (crc mismatch): " + path.string());
  }

  std::size_t pos = sizeof(kMagic);
  auto read_u32 = [&](const char* what) {
    uint32_t v;
    if (pos + sizeof(v) > buf.size()) fail(std::string("model file truncated at ") + what);
    std::memcpy(&v, buf.data() + pos, sizeof(v));
    pos += sizeof(v);
    return v;
  };
  auto read_f64 = [&](const char* what) {
    double v;
    if (pos + sizeof(v) > buf.size()) fail(std::string("model file truncated at ") + what);
    std::memcpy(&v, buf.data() + pos, sizeof(v));
    pos += sizeof(v);
    return v;
  };

  uint32_t version = read_u32("version");
  if (version != kVersion) {
    fail("unsupported model version " + std::to_string(version) + " (expected " +
         std::to_string(kVersion) + ")");
  }

  PcaModel model;
  model.input_dim = read_u32("input_dim");
  model.n_components = read_u32("n_components");
  model.variance_threshold = read_f64("threshold");

  const std::size_t expected =
      sizeof(kMagic) + 3 * sizeof(uint32_t) + sizeof(double) +
      sizeof(double) * (model.input_dim + model.n_components * model.input_dim +
                        model.n_components) +
      sizeof(uint32_t);
  if (buf.size() != expected) {
    fail("model dimensions are inconsistent with file size (" + std::to_string(buf.size()) +
         " bytes, expected " + std::to_string(expected) + "): " + path.string());
  }
  if (model.input_dim == 0 || model.n_components == 0 || model.n_components > model.input_dim) {
    fail("model header dimensions are inconsistent: " + path.string());
  }

  model.mean.resize(model.input_dim);
  for (auto& v : model.mean) v = read_f64("mean");
  model.components.resize(model.n_components * model.input_dim);
  for (auto& v : model.components) v = read_f64("components");
  model.explained_variance_ratio.resize(model.n_components);
  for (auto& v : model.explained_variance_ratio) v = read_f64("ratios");
  return model;
}

PcaModel fit_store(const embed::EmbeddingStore& store, double variance_threshold) {
  if (store.count() < 2) fail("store must hold at least 2 rows to fit");
  std::vector<double> data(store.matrix.begin(), store.matrix.end());
  return fit(data, store.count(), store.dim, variance_threshold);
}

embed::EmbeddingStore transform_store(const PcaModel& model,
                                      const embed::EmbeddingStore& store) {
  if (store.dim != model.input_dim) {
    fail("store dim " + std::to_string(store.dim) + " != model input_dim " +
         std::to_string(model.input_dim));
  }
  embed::EmbeddingStore out;
  out.model_name = store.model_name + "-pca";
  out.dim = model.n_components;
  out.normalized = false;
  out.ids = store.ids;
  out.matrix.resize(store.count() * model.n_components);
  std::vector<double> row(model.input_dim);
  for (std::size_t i = 0; i < store.count(); ++i) {
    std::span<const float> src = store.row(i);
    for (std::size_t j = 0; j < model.input_dim; ++j) row[j] = src[j];
    std::vector<double> projected = transform(model, row);
    for (std::size_t c = 0; c < model.n_components; ++c) {
      out.matrix[i * model.n_components + c] = static_cast<float>(projected[c]);
    }
  }
  out.rebuild_index();
  return out;
}

}  // namespace negminer::pca
