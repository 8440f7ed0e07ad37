#pragma once

#include <optional>
#include <span>
#include <vector>

namespace gcp {

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of two equal-length samples; nullopt when either has
/// zero variance. Throws ConfigError on length mismatch or fewer than 2 points.
std::optional<double> pearson_correlation(std::span<const double> xs, std::span<const double> ys);

/// Spearman rank correlation: Pearson correlation of the average ranks.
/// nullopt (no signal) when either rank vector is constant.
std::optional<double> spearman_rank_correlation(std::span<const double> xs,
                                                std::span<const double> ys);

}  // namespace gcp
