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

#ifndef ATTNSV_POOLING_H_
#define ATTNSV_POOLING_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace attnsv {

enum class PoolingKind { kNone, kSlidingWindow, kTopK };

const char *PoolingKindName(PoolingKind kind);  // none | sliding | topk
PoolingKind ParsePoolingKind(const std::string &name);

struct PoolingConfig {
  PoolingKind kind = PoolingKind::kNone;
  int window = 10;
  int step = 5;
  int k = 5;
  bool renormalize = true;

  void Validate() const;
};

// Half-open frame ranges visited by the sliding window: starts at 0, step,
// 2 * step, ... and stops with the first window that reaches the last
// frame, which may be shorter than `window`.
std::vector<std::pair<int, int>> SlidingWindows(int num_frames, int window,
                                                int step);

// 1 for frames that survive pooling, 0 otherwise. Ties go to the earliest
// frame. kNone keeps everything.
Eigen::VectorXd PoolingMask(const Eigen::VectorXd &weights,
                            const PoolingConfig &config);

Eigen::VectorXd SlidingWindowMaxpool(const Eigen::VectorXd &weights,
                                     const PoolingConfig &config);
Eigen::VectorXd TopKMaxpool(const Eigen::VectorXd &weights,
                            const PoolingConfig &config);
// Dispatches on config.kind.
Eigen::VectorXd Pool(const Eigen::VectorXd &weights,
                     const PoolingConfig &config);

}  // namespace attnsv

#endif  // ATTNSV_POOLING_H_
