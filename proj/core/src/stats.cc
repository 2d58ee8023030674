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

#include "rade/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "rade/error.h"
#include "rade/random.h"

namespace rade::stats {
namespace {

void CheckSameLength(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "score vectors differ in length: " + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least two paired observations");
  }
}

int Sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::string_view ToString(Statistic statistic) {
  switch (statistic) {
    case Statistic::kPearson: return "pearson";
    case Statistic::kSpearman: return "spearman";
    case Statistic::kKendall: return "kendall";
  }
  return "";
}

void CheckScorePair(std::span<const double> predicted,
                    std::span<const double> human) {
  CheckSameLength(predicted, human);
  if (predicted.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least three paired observations, got " +
                    std::to_string(predicted.size()));
  }
  auto has_nan = [](std::span<const double> v) {
    return std::any_of(v.begin(), v.end(),
                       [](double d) { return std::isnan(d); });
  };
  if (has_nan(predicted) || has_nan(human)) {
    throw Error(ErrorCode::kInvalidArgument, "score vector contains NaN");
  }
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  CheckSameLength(x, y);
  const double n = static_cast<double>(x.size());
  const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kUndefinedCorrelation,
                "correlation undefined for a constant vector");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> MidRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1.
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  CheckSameLength(x, y);
  const std::vector<double> rx = MidRanks(x);
  const std::vector<double> ry = MidRanks(y);
  return Pearson(rx, ry);
}

double Kendall(std::span<const double> x, std::span<const double> y) {
  CheckSameLength(x, y);
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sx = Sign(x[i] - x[j]);
      const int sy = Sign(y[i] - y[j]);
      if (sx == 0) ++ties_x;
      if (sy == 0) ++ties_y;
      if (sx == 0 || sy == 0) continue;
      if (sx == sy) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const long long pairs = static_cast<long long>(n * (n - 1) / 2);
  const double denom = std::sqrt(static_cast<double>(pairs - ties_x) *
                                 static_cast<double>(pairs - ties_y));
  if (denom == 0.0) {
    throw Error(ErrorCode::kUndefinedCorrelation,
                "Kendall tau undefined for an all-tied vector");
  }
  return std::clamp(static_cast<double>(concordant - discordant) / denom,
                    -1.0, 1.0);
}

double Compute(Statistic statistic, std::span<const double> x,
               std::span<const double> y) {
  switch (statistic) {
    case Statistic::kPearson: return Pearson(x, y);
    case Statistic::kSpearman: return Spearman(x, y);
    case Statistic::kKendall: return Kendall(x, y);
  }
  return 0.0;
}

double PermutationPValue(std::span<const double> x, std::span<const double> y,
                         Statistic statistic,
                         const PermutationOptions& options) {
  if (options.n_permutations < 100) {
    throw Error(ErrorCode::kInvalidArgument,
                "permutation test needs at least 100 permutations");
  }
  const double observed = std::abs(Compute(statistic, x, y));
  // Relative slack so that permutations reproducing the observed pairing
  // count as ties despite summation-order rounding.
  const double threshold = observed - 1e-12 * std::max(1.0, observed);

  const int n_perm = options.n_permutations;
  const int threads = std::clamp(options.threads, 1, n_perm);
  std::vector<long long> shard_counts(threads, 0);

  auto run_shard = [&](int shard) {
    std::vector<double> shuffled(y.begin(), y.end());
    long long count = 0;
    for (int k = shard; k < n_perm; k += threads) {
      std::copy(y.begin(), y.end(), shuffled.begin());
      std::mt19937_64 rng(DeriveSeed(options.seed, static_cast<std::uint64_t>(k)));
      Shuffle(std::span<double>(shuffled), rng);
      double value;
      try {
        value = std::abs(Compute(statistic, x, shuffled));
      } catch (const Error&) {
        continue;
      }
      if (value >= threshold) ++count;
    }
    shard_counts[shard] = count;
  };

  if (threads == 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> workers;
    for (int s = 0; s < threads; ++s) workers.emplace_back(run_shard, s);
    for (auto& w : workers) w.join();
  }
  const long long exceed =
      std::accumulate(shard_counts.begin(), shard_counts.end(), 0LL);
  return static_cast<double>(1 + exceed) / static_cast<double>(n_perm + 1);
}

CorrelationReport Correlate(std::span<const double> predicted,
                            std::span<const double> human,
                            const PermutationOptions& options) {
  CheckScorePair(predicted, human);
  CorrelationReport report;
  report.n = predicted.size();
  for (Statistic s :
       {Statistic::kPearson, Statistic::kSpearman, Statistic::kKendall}) {
    std::optional<double> value;
    try {
      value = Compute(s, predicted, human);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUndefinedCorrelation) throw;
    }
    if (value && options.n_permutations > 0) {
      report.p_values[s] = PermutationPValue(predicted, human, s, options);
    }
    switch (s) {
      case Statistic::kPearson: report.pearson_r = value; break;
      case Statistic::kSpearman: report.spearman_rho = value; break;
      case Statistic::kKendall: report.kendall_tau = value; break;
    }
  }
  return report;
}

AgreementReport FleissKappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no items to compute kappa over");
  }
  const std::size_t n_categories = counts.front().size();
  if (n_categories == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no rating categories");
  }
  long long raters = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != n_categories) {
      throw Error(ErrorCode::kRaggedRatings,
                  "item " + std::to_string(i) + " has " +
                      std::to_string(counts[i].size()) + " categories, expected " +
                      std::to_string(n_categories));
    }
    long long row = 0;
    for (int c : counts[i]) {
      if (c < 0) {
        throw Error(ErrorCode::kInvalidArgument, "negative rating count");
      }
      row += c;
    }
    if (raters < 0) raters = row;
    if (row != raters) {
      throw Error(ErrorCode::kRaggedRatings,
                  "item " + std::to_string(i) + " has " + std::to_string(row) +
                      " ratings, expected " + std::to_string(raters));
    }
  }
  if (raters < 2) {
    throw Error(ErrorCode::kInsufficientAnnotators,
                "Fleiss kappa needs at least two raters per item");
  }

  const double n = static_cast<double>(raters);
  const double items = static_cast<double>(counts.size());
  std::vector<double> category_share(n_categories, 0.0);
  double mean_agreement = 0.0;
  for (const auto& row : counts) {
    double pairs = 0.0;
    for (std::size_t j = 0; j < n_categories; ++j) {
      pairs += static_cast<double>(row[j]) * (row[j] - 1);
      category_share[j] += row[j];
    }
    mean_agreement += pairs / (n * (n - 1.0));
  }
  mean_agreement /= items;
  double chance = 0.0;
  for (double& share : category_share) {
    share /= items * n;
    chance += share * share;
  }

  AgreementReport report;
  report.n_items = counts.size();
  report.n_raters = static_cast<std::size_t>(raters);
  report.n_categories = n_categories;
  if (mean_agreement == 1.0) {
    report.kappa = 1.0;
    return report;
  }
  if (chance == 1.0) {
    throw Error(ErrorCode::kDegenerateAgreement,
                "chance agreement is 1 with imperfect observed agreement");
  }
  report.kappa = (mean_agreement - chance) / (1.0 - chance);
  return report;
}

int RatingCategory(double overall) {
  return std::clamp(static_cast<int>(std::floor(overall + 0.5)), 1,
                    kRatingCategories);
}

}  // namespace rade::stats
