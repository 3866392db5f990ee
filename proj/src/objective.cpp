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

#include "negminer/objective.hpp"

#include <cmath>

#include "negminer/common.hpp"
#include "negminer/miner.hpp"

namespace negminer::objective {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("objective", message); }

double norm_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double dot_of(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace

double bi_encoder_distance(std::span<const double> e_q, std::span<const double> e_d) {
  return miner::cosine_distance(e_q, e_d);
}

double cross_encoder_distance(double score) {
  if (!std::isfinite(score)) fail("cross-encoder score must be finite");
  return -score;
}

double triplet_loss(double d_q_pd, double d_q_hn, double margin) {
  if (margin < 0.0) fail("margin must be >= 0");
  if (!std::isfinite(d_q_pd) || !std::isfinite(d_q_hn)) fail("distances must be finite");
  return std::max(0.0, margin + d_q_pd - d_q_hn);
}

double batch_loss(std::span<const double> d_q_pd, std::span<const double> d_q_hn, double margin) {
  if (d_q_pd.size() != d_q_hn.size()) fail("batch distance arrays must be the same length");
  KahanSum sum;
  for (std::size_t i = 0; i < d_q_pd.size(); ++i) {
    sum.add(triplet_loss(d_q_pd[i], d_q_hn[i], margin));
  }
  return sum.value();
}

TripletGradients triplet_loss_grad(std::span<const double> e_q, std::span<const double> e_pd,
                                   std::span<const double> e_hn, double margin) {
  if (e_q.size() != e_pd.size() || e_q.size() != e_hn.size()) {
    fail("gradient inputs must share one dimension");
  }
  const double nq = norm_of(e_q);
  const double npd = norm_of(e_pd);
  const double nhn = norm_of(e_hn);
  if (nq == 0.0 || npd == 0.0 || nhn == 0.0) fail("zero-norm embedding in gradient");

  const double cos_q_pd = dot_of(e_q, e_pd) / (nq * npd);
  const double cos_q_hn = dot_of(e_q, e_hn) / (nq * nhn);
  const double loss = triplet_loss(1.0 - cos_q_pd, 1.0 - cos_q_hn, margin);

  const std::size_t dim = e_q.size();
  TripletGradients grads;
  grads.loss = loss;
  grads.d_q.assign(dim, 0.0);
  grads.d_pd.assign(dim, 0.0);
  grads.d_hn.assign(dim, 0.0);
  if (loss <= 0.0) return grads;  // inactive hinge, subgradient 0 at the kink

  // Active: L = m - cos(q,pd) + cos(q,hn), with
  // d cos(a,b)/da = (b/|b| - cos(a,b) a/|a|) / |a|.
  for (std::size_t i = 0; i < dim; ++i) {
    const double dcos_qpd_dq = (e_pd[i] / npd - cos_q_pd * e_q[i] / nq) / nq;
    const double dcos_qhn_dq = (e_hn[i] / nhn - cos_q_hn * e_q[i] / nq) / nq;
    grads.d_q[i] = -dcos_qpd_dq + dcos_qhn_dq;
    grads.d_pd[i] = -(e_q[i] / nq - cos_q_pd * e_pd[i] / npd) / npd;
    grads.d_hn[i] = (e_q[i] / nq - cos_q_hn * e_hn[i] / nhn) / nhn;
  }
  return grads;
}

}  // namespace negminer::objective
