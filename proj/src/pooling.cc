// Copyright 2026 The attnsv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attnsv/pooling.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace attnsv {

const char *PoolingKindName(PoolingKind kind) {
  switch (kind) {
    case PoolingKind::kNone: return "none";
    case PoolingKind::kSlidingWindow: return "sliding";
    case PoolingKind::kTopK: return "topk";
  }
  return "none";
}

PoolingKind ParsePoolingKind(const std::string &name) {
  if (name == "none") return PoolingKind::kNone;
  if (name == "sliding") return PoolingKind::kSlidingWindow;
  if (name == "topk") return PoolingKind::kTopK;
  throw std::invalid_argument("unknown pooling '" + name +
                              "' (expected none|sliding|topk)");
}

void PoolingConfig::Validate() const {
  if (window < 1) throw std::invalid_argument("pooling window must be >= 1");
  if (step < 1) throw std::invalid_argument("pooling step must be >= 1");
  if (k < 1) throw std::invalid_argument("pooling K must be >= 1");
}

std::vector<std::pair<int, int>> SlidingWindows(int num_frames, int window,
                                                int step) {
  std::vector<std::pair<int, int>> windows;
  for (int start = 0; start < num_frames; start += step) {
    windows.emplace_back(start, std::min(start + window, num_frames));
    if (start + window >= num_frames) break;
  }
  return windows;
}

Eigen::VectorXd PoolingMask(const Eigen::VectorXd &weights,
                            const PoolingConfig &config) {
  if (weights.size() == 0)
    throw std::invalid_argument("pooling: empty weight vector");
  config.Validate();
  const int n = static_cast<int>(weights.size());
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(n);
  switch (config.kind) {
    case PoolingKind::kNone:
      mask.setOnes();
      break;
    case PoolingKind::kSlidingWindow:
      for (auto [begin, end] : SlidingWindows(n, config.window, config.step)) {
        int best = begin;
        for (int t = begin + 1; t < end; ++t)
          if (weights(t) > weights(best)) best = t;
        mask(best) = 1.0;
      }
      break;
    case PoolingKind::kTopK: {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return weights(a) > weights(b);
      });
      for (int i = 0; i < std::min(config.k, n); ++i) mask(order[i]) = 1.0;
      break;
    }
  }
  return mask;
}

namespace {

Eigen::VectorXd ApplyMask(const Eigen::VectorXd &weights,
                          const Eigen::VectorXd &mask, bool renormalize) {
  Eigen::VectorXd out = weights.cwiseProduct(mask);
  if (renormalize) {
    const double total = out.sum();
    if (total > 0.0) out /= total;
  }
  return out;
}

}  // namespace

Eigen::VectorXd SlidingWindowMaxpool(const Eigen::VectorXd &weights,
                                     const PoolingConfig &config) {
  PoolingConfig c = config;
  c.kind = PoolingKind::kSlidingWindow;
  return ApplyMask(weights, PoolingMask(weights, c), c.renormalize);
}

Eigen::VectorXd TopKMaxpool(const Eigen::VectorXd &weights,
                            const PoolingConfig &config) {
  PoolingConfig c = config;
  c.kind = PoolingKind::kTopK;
  return ApplyMask(weights, PoolingMask(weights, c), c.renormalize);
}

Eigen::VectorXd Pool(const Eigen::VectorXd &weights,
                     const PoolingConfig &config) {
  switch (config.kind) {
    case PoolingKind::kNone:
      if (weights.size() == 0)
        throw std::invalid_argument("pooling: empty weight vector");
      return weights;
    case PoolingKind::kSlidingWindow:
      return SlidingWindowMaxpool(weights, config);
    case PoolingKind::kTopK:
      return TopKMaxpool(weights, config);
  }
  return weights;
}

}  // namespace attnsv
