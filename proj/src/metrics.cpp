#include "yieldcast/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace yieldcast::eval {

namespace {

void require_pair(std::span<const double> pred,
                  std::span<const double> actual) {
  if (pred.size() != actual.size()) {
    fail(ErrorCode::LengthMismatch,
         std::to_string(pred.size()) + " predictions vs " +
             std::to_string(actual.size()) + " actuals");
  }
  if (pred.empty()) {
    fail(ErrorCode::Empty, "no values to score");
  }
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> actual) {
  require_pair(pred, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - actual[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double r_squared(std::span<const double> pred,
                 std::span<const double> actual) {
  require_pair(pred, actual);
  if (pred.size() < 2) {
    fail(ErrorCode::Empty, "r_squared needs at least 2 points");
  }
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) {
    fail(ErrorCode::DegenerateActual,
         "actual values are all identical; R^2 is undefined");
  }
  return 1.0 - ss_res / ss_tot;
}

Metrics compute_metrics(std::span<const double> pred,
                        std::span<const double> actual) {
  Metrics m;
  m.rmse = 100.0 * rmse(pred, actual);
  m.r2 = r_squared(pred, actual);
  return m;
}

AggregateMetrics aggregate(const std::vector<Metrics>& folds) {
  if (folds.empty()) {
    fail(ErrorCode::Empty, "no fold metrics to aggregate");
  }
  AggregateMetrics agg;
  agg.n_folds = static_cast<int>(folds.size());
  const double inv = 1.0 / static_cast<double>(folds.size());
  for (const auto& m : folds) {
    agg.mean.rmse += inv * m.rmse;
    agg.mean.r2 += inv * m.r2;
  }
  for (const auto& m : folds) {
    agg.stddev.rmse += inv * (m.rmse - agg.mean.rmse) * (m.rmse - agg.mean.rmse);
    agg.stddev.r2 += inv * (m.r2 - agg.mean.r2) * (m.r2 - agg.mean.r2);
  }
  agg.stddev.rmse = std::sqrt(agg.stddev.rmse);
  agg.stddev.r2 = std::sqrt(agg.stddev.r2);
  return agg;
}

std::string format_pm(double mean, double stddev, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, mean, decimals,
                stddev);
  return buf;
}

std::string metrics_markdown(const std::string& title,
                             const std::vector<Metrics>& folds,
                             const AggregateMetrics& agg) {
  std::ostringstream out;
  out << "| " << title << " | RMSE | R² |\n";
  out << "| --- | --- | --- |\n";
  char buf[64];
  for (std::size_t i = 0; i < folds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "| fold %zu | %.1f | %.3f |\n", i + 1,
                  folds[i].rmse, folds[i].r2);
    out << buf;
  }
  out << "| aggregate | " << format_pm(agg.mean.rmse, agg.stddev.rmse, 1)
      << " | " << format_pm(agg.mean.r2, agg.stddev.r2, 3) << " |\n";
  return out.str();
}

}  // namespace yieldcast::eval
