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

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pnlab {

/// Static kd-tree over the columns of a d x n matrix (Euclidean metric).
class KdTree {
 public:
  explicit KdTree(const Eigen::MatrixXd& points, int leaf_size = 16);

  /// Distances from point i to its k nearest other points, ascending.
  void knn_self(Eigen::Index i, int k, double* out) const;

  Eigen::Index size() const { return n_; }
  Eigen::Index dim() const { return d_; }

 private:
  struct Node {
    Eigen::Index begin, end;
    int split_dim;
    double split_val;
    int left, right;
  };

  int build(Eigen::Index begin, Eigen::Index end);
  void search(int node, const double* q, Eigen::Index self, int k, double* best, double& worst) const;

  Eigen::Index d_, n_;
  int leaf_size_;
  Eigen::MatrixXd pts_;               // reordered copy
  std::vector<Eigen::Index> order_;   // original index of each stored column
  std::vector<Eigen::Index> where_;   // stored column of each original index
  std::vector<Node> nodes_;
};

}  // namespace pnlab
