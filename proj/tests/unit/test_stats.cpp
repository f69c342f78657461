// Copyright 2026 The aiscale Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aiscale/stats.hpp"

#include "test_util.hpp"

using namespace aiscale;
using namespace aiscale::stats;

TEST(Stats, MeanAndVariance) {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(v), 5.0);
  EXPECT_DOUBLE_EQ(variance(v), 4.0);
  EXPECT_EQ(mean(std::vector<double>{}), 0.0);
}

TEST(Stats, Pearson) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{8, 6, 4, 2};
  EXPECT_DOUBLE_EQ(pearson(x, y), 1.0);
  EXPECT_DOUBLE_EQ(pearson(x, z), -1.0);
  EXPECT_EQ(pearson(x, std::vector<double>{3, 3, 3, 3}), 0.0);
  EXPECT_ERROR_KIND(pearson(std::vector<double>{1}, std::vector<double>{1}), ErrorKind::EmptyInput);
}

TEST(Stats, RanksWithTies) {
  EXPECT_EQ(ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Stats, SpearmanIsMonotoneInvariant) {
  const std::vector<double> x{0.1, 0.5, 0.2, 0.9, 0.7};
  std::vector<double> y;
  for (double v : x) y.push_back(v * v * v + 3);
  EXPECT_DOUBLE_EQ(spearman(x, y), 1.0);
}
