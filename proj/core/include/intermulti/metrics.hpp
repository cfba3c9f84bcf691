#pragma once

#include <cstdint>
#include <vector>

#include "intermulti/dataset.hpp"

namespace intermulti {

// Pearson correlation is undefined on constant inputs; it is reported as
// this out-of-range sentinel rather than NaN.
constexpr double kCorrUndefined = -2.0;

struct RegressionMetrics {
  double mae = 0.0;
  double corr = 0.0;
  double acc7 = 0.0;  // round-and-clamp to integers in [-3, 3]
  // negative / non-negative convention: >= 0 counts as positive, all samples.
  double acc2_nonneg = 0.0;
  double f1_nonneg = 0.0;
  // negative / positive convention: exactly-zero labels are excluded,
  // positive means > 0.
  double acc2_strict = 0.0;
  double f1_strict = 0.0;
};

struct ClassMetrics {
  double acc2 = 0.0;  // one-vs-rest binary accuracy
  double f1 = 0.0;    // F1 with this class as the positive class
};

struct MetricReport {
  Task task = Task::regression;
  RegressionMetrics regression;
  std::vector<ClassMetrics> per_class;  // classification only
};

MetricReport regression_metrics(const std::vector<double>& preds,
                                const std::vector<double>& labels);

MetricReport classification_metrics(const std::vector<std::size_t>& preds,
                                    const std::vector<std::uint16_t>& labels,
                                    std::size_t num_classes);

double pearson_corr(const std::vector<double>& xs,
                    const std::vector<double>& ys);

}  // namespace intermulti
