// SPDX-License-Identifier: Apache-2.0
//
// pnlab - numerical laboratory for MIMO phase-noise channels
// Copyright (C) 2026 The pnlab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "pnlab/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pnlab {

KdTree::KdTree(const Eigen::MatrixXd& points, int leaf_size)
    : d_(points.rows()), n_(points.cols()), leaf_size_(std::max(1, leaf_size)) {
  if (n_ == 0 || d_ == 0) throw std::invalid_argument("KdTree: empty point set");
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), 0);
  pts_ = points;
  nodes_.reserve(static_cast<std::size_t>(2 * n_ / leaf_size_ + 2));
  build(0, n_);
  Eigen::MatrixXd sorted(d_, n_);
  where_.resize(n_);
  for (Eigen::Index s = 0; s < n_; ++s) {
    sorted.col(s) = points.col(order_[s]);
    where_[order_[s]] = s;
  }
  pts_.swap(sorted);
}

int KdTree::build(Eigen::Index begin, Eigen::Index end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, 0.0, -1, -1});
  if (end - begin <= leaf_size_) return id;
  int best_dim = 0;
  double best_spread = -1.0;
  for (Eigen::Index j = 0; j < d_; ++j) {
    double lo = INFINITY, hi = -INFINITY;
    for (Eigen::Index s = begin; s < end; ++s) {
      const double v = pts_(j, order_[s]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(j);
    }
  }
  if (best_spread <= 0.0) return id;
  const Eigen::Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) { return pts_(best_dim, a) < pts_(best_dim, b); });
  const double split = pts_(best_dim, order_[mid]);
  nodes_[id].split_dim = best_dim;
  nodes_[id].split_val = split;
  const int l = build(begin, mid);
  const int r = build(mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void KdTree::search(int node, const double* q, Eigen::Index self, int k, double* best, double& worst) const {
  const Node& nd = nodes_[node];
  if (nd.left < 0) {
    for (Eigen::Index s = nd.begin; s < nd.end; ++s) {
      if (s == self) continue;
      const double* p = pts_.col(s).data();
      double d2 = 0.0;
      for (Eigen::Index j = 0; j < d_ && d2 < worst; ++j) {
        const double t = p[j] - q[j];
        d2 += t * t;
      }
      if (d2 < worst) {
        int pos = k - 1;
        while (pos > 0 && best[pos - 1] > d2) {
          best[pos] = best[pos - 1];
          --pos;
        }
        best[pos] = d2;
        worst = best[k - 1];
      }
    }
    return;
  }
  const double diff = q[nd.split_dim] - nd.split_val;
  const int near = diff < 0.0 ? nd.left : nd.right;
  const int far = diff < 0.0 ? nd.right : nd.left;
  search(near, q, self, k, best, worst);
  if (diff * diff < worst) search(far, q, self, k, best, worst);
}

void KdTree::knn_self(Eigen::Index i, int k, double* out) const {
  if (k < 1 || k >= n_) throw std::invalid_argument("KdTree::knn_self: need 1 <= k < n");
  const Eigen::Index s = where_[i];
  for (int j = 0; j < k; ++j) out[j] = std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  search(0, pts_.col(s).data(), s, k, out, worst);
  for (int j = 0; j < k; ++j) out[j] = std::sqrt(out[j]);
}

}  // namespace pnlab
