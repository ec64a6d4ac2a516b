#pragma once

#include <span>
#include <string>
#include <vector>

namespace meshgnn {

// ROC curve from (0,0) to (1,1). thresholds[0] is +inf; point k counts every
// subject with score >= thresholds[k] as positive.
struct RocResult {
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Labels are 0/1 with 1 the positive class. Equal scores form one threshold
// step, so ties contribute half credit.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

std::string roc_to_csv(const RocResult& roc);

}  // namespace meshgnn
