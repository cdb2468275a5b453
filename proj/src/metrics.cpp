#include "dscn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace dscn {

ConfusionMatrix confusion(const std::vector<Label>& predictions,
                          const std::vector<Label>& truths) {
  if (predictions.size() != truths.size())
    throw LengthMismatch("prediction and truth lists differ in length");
  if (predictions.empty()) throw EmptyInput("no samples to score");
  ConfusionMatrix cm;
  for (size_t i = 0; i < predictions.size(); ++i) {
    bool pred_pos = predictions[i] == Label::kDepressed;
    bool true_pos = truths[i] == Label::kDepressed;
    if (pred_pos && true_pos)
      ++cm.tp;
    else if (pred_pos && !true_pos)
      ++cm.fp;
    else if (!pred_pos && true_pos)
      ++cm.fn;
    else
      ++cm.tn;
  }
  return cm;
}

MetricReport report(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw EmptyInput("empty confusion matrix");
  MetricReport r;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp > 0)
    r.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0)
    r.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (r.precision && r.recall && (*r.precision + *r.recall) > 0.0)
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  return r;
}

std::string format_report_table(const ConfusionMatrix& cm, const MetricReport& r) {
  auto fmt4 = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "confusion  tp=" << cm.tp << " fp=" << cm.fp << " fn=" << cm.fn << " tn=" << cm.tn
     << "\n";
  os << "accuracy   " << std::lround(r.accuracy * 100.0) << "%\n";
  os << "f1         " << fmt4(r.f1) << "\n";
  os << "precision  " << fmt4(r.precision) << "\n";
  os << "recall     " << fmt4(r.recall) << "\n";
  return os.str();
}

std::string format_report_json(const ConfusionMatrix& cm, const MetricReport& r) {
  nlohmann::json j;
  j["tp"] = cm.tp;
  j["fp"] = cm.fp;
  j["fn"] = cm.fn;
  j["tn"] = cm.tn;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision ? nlohmann::json(*r.precision) : nlohmann::json(nullptr);
  j["recall"] = r.recall ? nlohmann::json(*r.recall) : nlohmann::json(nullptr);
  j["f1"] = r.f1;
  return j.dump();
}

}  // namespace dscn
