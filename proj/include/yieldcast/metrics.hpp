#pragma once

#include <span>
#include <string>
#include <vector>

#include "yieldcast/common.hpp"

// RMSE / R² and fold aggregation. Predictions and actuals are yield
// fractions; reported RMSE is on the 0-100 scale.

namespace yieldcast::eval {

// sqrt(mean((pred-actual)^2)) on the fraction scale.
double rmse(std::span<const double> pred, std::span<const double> actual);

// 1 - SS_res/SS_tot about the mean of actual. Needs >= 2 points and a
// non-constant actual (DegenerateActual otherwise).
double r_squared(std::span<const double> pred, std::span<const double> actual);

struct Metrics {
  double rmse = 0.0;  // 0-100 scale
  double r2 = 0.0;
};

Metrics compute_metrics(std::span<const double> pred,
                        std::span<const double> actual);

struct AggregateMetrics {
  Metrics mean;
  Metrics stddev;  // population std across folds
  int n_folds = 0;
};

AggregateMetrics aggregate(const std::vector<Metrics>& folds);

// "m ± s" with a fixed number of decimals, e.g. format_pm(5.46, 0.31, 1)
// -> "5.5 ± 0.3".
std::string format_pm(double mean, double stddev, int decimals);

// Markdown table with one row per fold and an aggregate row, RMSE to one
// decimal and R² to three.
std::string metrics_markdown(const std::string& title,
                             const std::vector<Metrics>& folds,
                             const AggregateMetrics& agg);

}  // namespace yieldcast::eval
