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

#include <span>
#include <vector>

namespace negminer::objective {

enum class Metric { bi_encoder_cosine, cross_encoder_score };

struct LossConfig {
  double margin = 0.2;
  Metric metric = Metric::bi_encoder_cosine;
};

/// Bi-encoder distance: 1 - cos(e_q, e_d). Shares the miner's kernel.
double bi_encoder_distance(std::span<const double> e_q, std::span<const double> e_d);

/// Cross-encoder distance: the negated relevance score (order-reversing).
double cross_encoder_distance(double score);

/// Hinge term max(0, m + d(Q,PD) - d(Q,HN)).
double triplet_loss(double d_q_pd, double d_q_hn, double margin);

/// Kahan-compensated sum of per-triplet hinge terms; order-stable.
double batch_loss(std::span<const double> d_q_pd, std::span<const double> d_q_hn, double margin);

struct TripletGradients {
  double loss = 0.0;
  std::vector<double> d_q;
  std::vector<double> d_pd;
  std::vector<double> d_hn;
};

/// Analytic gradients of the bi-encoder triplet loss w.r.t. all three
/// embeddings. Zero everywhere when the hinge is inactive (including the
/// exact kink, where the subgradient convention is 0).
TripletGradients triplet_loss_grad(std::span<const double> e_q, std::span<const double> e_pd,
                                   std::span<const double> e_hn, double margin);

}  // namespace negminer::objective
