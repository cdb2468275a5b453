#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dscn/manifest.hpp"

namespace dscn {

// Positive class = Depressed.
struct ConfusionMatrix {
  int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  int64_t total() const { return tp + fp + fn + tn; }
};

struct MetricReport {
  double accuracy = 0.0;
  std::optional<double> precision;  // absent when tp + fp == 0
  std::optional<double> recall;     // absent when tp + fn == 0
  double f1 = 0.0;                  // 0 when precision or recall absent/zero
};

ConfusionMatrix confusion(const std::vector<Label>& predictions,
                          const std::vector<Label>& truths);

MetricReport report(const ConfusionMatrix& cm);

// Accuracy to whole percent, others to four decimals, '-' for absent values.
std::string format_report_table(const ConfusionMatrix& cm, const MetricReport& r);
// Single JSON line with full-precision values (null for absent).
std::string format_report_json(const ConfusionMatrix& cm, const MetricReport& r);

}  // namespace dscn
