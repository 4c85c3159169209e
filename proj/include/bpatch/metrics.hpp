#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace bpatch {

// Classification metrics against one designated positive class; the confusion
// matrix is M x M with rows = truth, columns = prediction.
struct MetricSet {
  double accuracy = 0;
  double sensitivity = 0;
  double specificity = 0;
  double precision = 0;
  double recall = 0;
  double f_measure = 0;
  int n_classes = 0;
  int positive_class = 1;
  std::vector<int> confusion;
  // set when no positive predictions exist and precision is defined as 0
  bool degenerate_precision = false;

  int confusion_at(int truth, int pred) const { return confusion[truth * n_classes + pred]; }
};

inline MetricSet confusion_metrics(std::span<const int> predicted, std::span<const int> truth,
                                   int n_classes, int positive_class) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("confusion_metrics: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("confusion_metrics: empty input");
  if (positive_class < 0 || positive_class >= n_classes)
    throw std::invalid_argument("confusion_metrics: bad positive class");
  MetricSet m;
  m.n_classes = n_classes;
  m.positive_class = positive_class;
  m.confusion.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes)
      throw std::invalid_argument("confusion_metrics: label out of range");
    ++m.confusion[truth[i] * n_classes + predicted[i]];
  }
  const double n = static_cast<double>(truth.size());
  double diag = 0, tp = 0, fp = 0, fn = 0, tn = 0;
  for (int t = 0; t < n_classes; ++t)
    for (int p = 0; p < n_classes; ++p) {
      const int c = m.confusion_at(t, p);
      if (t == p) diag += c;
      const bool tpos = t == positive_class, ppos = p == positive_class;
      if (tpos && ppos) tp += c;
      else if (!tpos && ppos) fp += c;
      else if (tpos && !ppos) fn += c;
      else tn += c;
    }
  m.accuracy = diag / n;
  m.sensitivity = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.specificity = tn + fp > 0 ? tn / (tn + fp) : 0.0;
  if (tp + fp > 0) {
    m.precision = tp / (tp + fp);
  } else {
    m.precision = 0.0;
    m.degenerate_precision = true;
  }
  m.recall = m.sensitivity;
  m.f_measure =
      m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace bpatch
