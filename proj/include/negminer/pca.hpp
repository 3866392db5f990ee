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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "negminer/embed.hpp"

namespace negminer::pca {

/// Centered PCA projection. Component rows are orthonormal principal axes
/// sorted by descending explained variance; n_components is the smallest
/// count whose cumulative variance ratio reaches the threshold.
struct PcaModel {
  std::size_t input_dim = 0;
  std::size_t n_components = 0;
  std::vector<double> mean;                      // input_dim
  std::vector<double> components;                // n_components x input_dim, row-major
  std::vector<double> explained_variance_ratio;  // nonincreasing, each in [0,1]
  double variance_threshold = 0.95;

  std::span<const double> component(std::size_t i) const {
    return std::span<const double>(components.data() + i * input_dim, input_dim);
  }
};

/// Exact eigendecomposition of the sample covariance of `data` (row-major
/// n x d). Sign convention: each axis is flipped so its largest-magnitude
/// entry is positive, making models reproducible across runs.
PcaModel fit(std::span<const double> data, std::size_t n, std::size_t d,
             double variance_threshold);

/// (x - mean) projected onto the component rows.
std::vector<double> transform(const PcaModel& model, std::span<const double> x);

/// Row-wise transform of a row-major n x input_dim matrix.
std::vector<double> transform_rows(const PcaModel& model, std::span<const double> data,
                                   std::size_t n);

/// mean + components^T y; exact inverse on the retained subspace.
std::vector<double> inverse_transform(const PcaModel& model, std::span<const double> y);

const std::vector<double>& explained_variance(const PcaModel& model);

/// Binary model file: magic "NMPC", version, dims, threshold, mean,
/// components, ratios, trailing CRC32. Round-trips bit-exactly.
void save_model(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_model(const std::filesystem::path& path);

/// Fit on every row of a store (the union population written by the embed
/// step: corpus documents plus queries).
PcaModel fit_store(const embed::EmbeddingStore& store, double variance_threshold);

/// Projects a store through the model, rounding to the store's 32-bit float
/// precision. Deterministic: re-running reproduces identical bytes.
embed::EmbeddingStore transform_store(const PcaModel& model, const embed::EmbeddingStore& store);

}  // namespace negminer::pca
