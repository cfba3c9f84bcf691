#include "intermulti/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace intermulti {

namespace {

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * double(tp) / double(denom);
}

int bin7(double x) {
  const long r = std::lround(x);  // half away from zero
  return int(std::clamp(r, -3l, 3l));
}

}  // namespace

double pearson_corr(const std::vector<double>& xs,
                    const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return kCorrUndefined;
  return sxy / std::sqrt(sxx * syy);
}

MetricReport regression_metrics(const std::vector<double>& preds,
                                const std::vector<double>& labels) {
  if (preds.empty()) throw DataError("metrics: empty input");
  if (preds.size() != labels.size()) {
    throw DataError("metrics: " + std::to_string(preds.size()) +
                    " predictions vs " + std::to_string(labels.size()) +
                    " labels");
  }
  const std::size_t n = preds.size();

  MetricReport report;
  report.task = Task::regression;
  RegressionMetrics& m = report.regression;

  double abs_acc = 0.0;
  std::size_t acc7_hits = 0;
  std::size_t nn_hits = 0, nn_tp = 0, nn_fp = 0, nn_fn = 0;
  std::size_t st_total = 0, st_hits = 0, st_tp = 0, st_fp = 0, st_fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    abs_acc += std::abs(preds[i] - labels[i]);
    if (bin7(preds[i]) == bin7(labels[i])) ++acc7_hits;

    const bool p_nn = preds[i] >= 0.0;
    const bool l_nn = labels[i] >= 0.0;
    if (p_nn == l_nn) ++nn_hits;
    if (p_nn && l_nn) ++nn_tp;
    if (p_nn && !l_nn) ++nn_fp;
    if (!p_nn && l_nn) ++nn_fn;

    if (labels[i] != 0.0) {
      ++st_total;
      const bool p_pos = preds[i] > 0.0;
      const bool l_pos = labels[i] > 0.0;
      if (p_pos == l_pos) ++st_hits;
      if (p_pos && l_pos) ++st_tp;
      if (p_pos && !l_pos) ++st_fp;
      if (!p_pos && l_pos) ++st_fn;
    }
  }

  m.mae = abs_acc / double(n);
  m.corr = pearson_corr(preds, labels);
  m.acc7 = double(acc7_hits) / double(n);
  m.acc2_nonneg = double(nn_hits) / double(n);
  m.f1_nonneg = f1_from_counts(nn_tp, nn_fp, nn_fn);
  if (st_total == 0) {
    throw DataError("metrics: every label is exactly zero; the "
                    "negative/positive convention is undefined");
  }
  m.acc2_strict = double(st_hits) / double(st_total);
  m.f1_strict = f1_from_counts(st_tp, st_fp, st_fn);
  return report;
}

MetricReport classification_metrics(const std::vector<std::size_t>& preds,
                                    const std::vector<std::uint16_t>& labels,
                                    std::size_t num_classes) {
  if (preds.empty()) throw DataError("metrics: empty input");
  if (preds.size() != labels.size()) {
    throw DataError("metrics: " + std::to_string(preds.size()) +
                    " predictions vs " + std::to_string(labels.size()) +
                    " labels");
  }
  MetricReport report;
  report.task = Task::classification;
  report.per_class.resize(num_classes);
  const std::size_t n = preds.size();
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool p = preds[i] == k;
      const bool l = labels[i] == k;
      if (p && l) ++tp;
      else if (p && !l) ++fp;
      else if (!p && l) ++fn;
      else ++tn;
    }
    report.per_class[k].acc2 = double(tp + tn) / double(n);
    report.per_class[k].f1 = f1_from_counts(tp, fp, fn);
  }
  return report;
}

}  // namespace intermulti
