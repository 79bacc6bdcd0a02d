// Copyright 2026 The mia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Library walkthrough: train a logistic regression target, fit a reference
// model on held-aside data, and compare the loss-threshold attack with the
// first-order Taylor attack on the same samples.

#include <cstdio>
#include <vector>

#include "mia/mia.hpp"

int main() {
  using namespace mia;

  // 400 evaluated samples plus 200 reserved for the reference model.
  const Dataset data = GenTwoClassFeatures(600, 20, 3.5, RngSeed{1});
  std::vector<std::size_t> evaluated_idx, reference_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (i < 400 ? evaluated_idx : reference_idx).push_back(i);
  }
  const Dataset evaluated = data.Subset(evaluated_idx);

  const SplitSpec split = DrawExactSplit(evaluated.size(), 0.5, RngSeed{2});
  const TrainOptions opts{.l2 = 1.0};
  const ModelParams target = TrainLogreg(evaluated, split, opts);
  const ModelParams reference = TrainLogreg(data, reference_idx, opts);

  std::vector<ScoreRecord> malt, matt;
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    malt.push_back({i, MaltScore(target, evaluated[i]), split.is_member(i)});
    matt.push_back({i, MattScore(target, reference, evaluated[i]), split.is_member(i)});
  }
  for (const auto& [name, records] : {std::pair{"malt", &malt}, std::pair{"matt", &matt}}) {
    const AttackReport r = Evaluate(*records, name, 0);
    std::printf("%s: accuracy %.3f  mAP_train %.3f  mAP_test %.3f\n", name, r.accuracy,
                r.map_train, r.map_test);
  }

  std::printf("posterior bound for a 0.1-DP model at lambda = 0.5: %.4f\n",
              DpMembershipBound(0.1, 0.5));
}
