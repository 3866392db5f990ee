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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "negminer/corpus.hpp"
#include "negminer/embed.hpp"

namespace negminer::miner {

enum class DistanceSpace { pca, concat };

std::string_view to_string(DistanceSpace space);
DistanceSpace distance_space_from_string(std::string_view s);

struct MiningConfig {
  std::size_t k_negatives = 1;
  bool exclude_cross_query_positives = false;
  DistanceSpace distance_space = DistanceSpace::pca;
  /// Margin added to the strict inequalities; 0 keeps them exactly strict,
  /// a positive value guards against float noise near the boundary.
  double epsilon = 0.0;
};

struct TripletNegative {
  std::string doc_id;
  std::optional<double> d_q_d;
  std::optional<double> d_pd_d;
  int rank = 0;
};

/// One mined (query, positive) pair with its ranked hard negatives.
/// Negatives are sorted ascending by d(Q,D); rank 1 is the primary hard
/// negative. Baseline samplers reuse this shape with distances unset.
struct TripletRecord {
  std::string query_id;
  std::string positive_id;
  std::optional<double> d_q_pd;
  std::vector<TripletNegative> negatives;
  std::optional<std::string> no_negative;
};

inline constexpr std::string_view kNoCandidateReason = "no-candidate-satisfied-criteria";

/// 1 - cos(a, b), clamped into [0, 2]. Throws on zero vectors or dim
/// mismatch. 64-bit arithmetic regardless of input precision.
double cosine_distance(std::span<const float> a, std::span<const float> b);
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Both selection criteria, strict with an optional margin:
/// d(Q,D) + eps < d(Q,PD) and d(Q,D) + eps < d(PD,D).
bool is_hard_negative(double d_q_d, double d_q_pd, double d_pd_d, double eps = 0.0);

struct Candidate {
  std::string_view id;
  std::span<const float> vec;
};

/// Scans the candidate set, keeps passers of both criteria, and returns up
/// to k negatives ordered by ascending d(Q,D), ties broken by doc id.
TripletRecord mine_for_pair(std::string_view query_id, std::span<const float> q_vec,
                            std::string_view positive_id, std::span<const float> pd_vec,
                            std::span<const Candidate> candidates, const MiningConfig& config);

/// Mines every qrel pair against `candidate_ids` (minus the query's own
/// positives, and minus every query's positives when configured). All
/// vectors come from `vectors`; missing ids fail fast listing offenders.
/// Output preserves qrels order and is deterministic for fixed inputs.
std::vector<TripletRecord> mine_all(const corpus::QrelSet& qrels,
                                    const embed::EmbeddingStore& vectors,
                                    const std::vector<std::string>& candidate_ids,
                                    const MiningConfig& config, unsigned threads = 0);

std::string triplet_to_json_line(const TripletRecord& record);
void write_triplets(std::span<const TripletRecord> records, const std::filesystem::path& path);
std::vector<TripletRecord> read_triplets(const std::filesystem::path& path);

}  // namespace negminer::miner
