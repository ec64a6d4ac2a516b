#include "meshgnn/evaluation.hpp"

#include "meshgnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace meshgnn {

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "roc_auc: size mismatch");
  RocResult r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::InvalidArgument, "roc_auc: labels must be 0/1");
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::Numeric, "roc_auc: non-finite score");
    (labels[i] == 1 ? r.positives : r.negatives)++;
  }
  if (r.positives == 0 || r.negatives == 0) {
    throw Error(ErrorCode::InvalidArgument, "roc_auc: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double np = static_cast<double>(r.positives);
  const double nn = static_cast<double>(r.negatives);
  r.thresholds.push_back(std::numeric_limits<double>::infinity());
  r.fpr.push_back(0.0);
  r.tpr.push_back(0.0);

  // Twice the area in units of (1/np)(1/nn), accumulated in integers.
  std::uint64_t tp = 0, fp = 0;
  std::uint64_t area2 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    std::uint64_t dtp = 0, dfp = 0;
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? dtp : dfp)++;
      ++i;
    }
    area2 += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    r.thresholds.push_back(s);
    r.fpr.push_back(static_cast<double>(fp) / nn);
    r.tpr.push_back(static_cast<double>(tp) / np);
  }
  r.auc = static_cast<double>(area2) / (2.0 * np * nn);
  return r;
}

std::string roc_to_csv(const RocResult& roc) {
  std::string out = "threshold,fpr,tpr\n";
  char buf[96];
  for (std::size_t i = 0; i < roc.fpr.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", roc.thresholds[i], roc.fpr[i], roc.tpr[i]);
    out += buf;
  }
  return out;
}

}  // namespace meshgnn
