// Copyright 2026 The RADE Toolkit Authors.
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

// Correlation between automatic and human scores, permutation significance,
// and Fleiss' kappa for inter-annotator agreement.

#ifndef RADE_STATS_H_
#define RADE_STATS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rade::stats {

enum class Statistic { kPearson, kSpearman, kKendall };

std::string_view ToString(Statistic statistic);

// Throws kInvalidArgument unless both sides have equal length >= 3 and no
// NaN.
void CheckScorePair(std::span<const double> predicted,
                    std::span<const double> human);

// Sample Pearson correlation. Throws kUndefinedCorrelation for a constant
// input.
double Pearson(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> MidRanks(std::span<const double> values);

// Pearson over mid-ranks.
double Spearman(std::span<const double> x, std::span<const double> y);

// Tau-b by O(n^2) pair enumeration. Throws kUndefinedCorrelation when either
// side is entirely tied.
double Kendall(std::span<const double> x, std::span<const double> y);

double Compute(Statistic statistic, std::span<const double> x,
               std::span<const double> y);

struct PermutationOptions {
  int n_permutations = 999;
  std::uint64_t seed = 0;
  // Permutations are sharded over this many threads; the result does not
  // depend on it.
  int threads = 1;
};

// Two-sided permutation p-value (1 + #{|stat_perm| >= |stat_obs|}) /
// (n_perm + 1). Permutation k draws from its own stream derived from
// (seed, k).
double PermutationPValue(std::span<const double> x, std::span<const double> y,
                         Statistic statistic,
                         const PermutationOptions& options = {});

struct CorrelationReport {
  std::size_t n = 0;
  // Empty when the coefficient is undefined (constant input).
  std::optional<double> pearson_r;
  std::optional<double> spearman_rho;
  std::optional<double> kendall_tau;
  std::map<Statistic, double> p_values;
};

// Computes all three coefficients and, when n_permutations > 0, their
// permutation p-values. Undefined coefficients are left empty.
CorrelationReport Correlate(std::span<const double> predicted,
                            std::span<const double> human,
                            const PermutationOptions& options);

struct AgreementReport {
  double kappa = 0.0;
  std::size_t n_items = 0;
  std::size_t n_raters = 0;
  std::size_t n_categories = 0;
};

// `counts[i][j]` = raters who put item i in category j. All rows must sum to
// the same rater count (>= 2).
AgreementReport FleissKappa(const std::vector<std::vector<int>>& counts);

inline constexpr int kRatingCategories = 5;

// Nearest integer in 1..5 (halves round up).
int RatingCategory(double overall);

}  // namespace rade::stats

#endif  // RADE_STATS_H_
