#include "meshgnn/inspection.hpp"

#include "meshgnn/error.hpp"
#include "meshgnn/rng.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

namespace meshgnn {

std::vector<EmbeddingRecord> extract_embeddings(const ModelParams& params, const std::vector<TrainingSubject>& samples) {
  std::vector<EmbeddingRecord> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const auto t = forward(s.graphs, params);
    out.push_back({s.subject_id, s.site, s.label, t.gcn_embedding, t.fc1, t.logits});
  }
  return out;
}

std::string to_string(Layer layer) {
  switch (layer) {
    case Layer::Gcn: return "gcn";
    case Layer::Fc1: return "fc1";
    case Layer::Fc2: return "fc2";
  }
  return "?";
}

std::string to_string(Grouping grouping) { return grouping == Grouping::Label ? "label" : "site"; }

Layer parse_layer(const std::string& text) {
  if (text == "gcn") return Layer::Gcn;
  if (text == "fc1") return Layer::Fc1;
  if (text == "fc2") return Layer::Fc2;
  throw Error(ErrorCode::InvalidArgument, "unknown layer '" + text + "' (expected gcn|fc1|fc2)");
}

Grouping parse_grouping(const std::string& text) {
  if (text == "label") return Grouping::Label;
  if (text == "site") return Grouping::Site;
  throw Error(ErrorCode::InvalidArgument, "unknown grouping '" + text + "' (expected label|site)");
}

const Vector& layer_vector(const EmbeddingRecord& r, Layer layer) {
  switch (layer) {
    case Layer::Gcn: return r.gcn;
    case Layer::Fc1: return r.fc1;
    case Layer::Fc2: return r.fc2;
  }
  return r.gcn;
}

PcaModel fit_pca(const Matrix& x, int k) {
  const auto m = x.rows();
  const auto d = x.cols();
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "fit_pca needs at least 2 samples");
  if (k < 1 || k > std::min<Eigen::Index>(m, d)) {
    throw Error(ErrorCode::InvalidArgument, "fit_pca: k=" + std::to_string(k) + " out of range [1, " +
                                                std::to_string(std::min<Eigen::Index>(m, d)) + "]");
  }
  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - model.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(m - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::Numeric, "fit_pca: eigendecomposition failed");
  // Ascending order from Eigen; clamp tiny negative round-off.
  const Vector values = eig.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();
  model.components.resize(k, d);
  model.explained_variance.resize(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index col = d - 1 - i;
    Vector c = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    c.cwiseAbs().maxCoeff(&arg);
    if (c(arg) < 0.0) c = -c;
    model.components.row(i) = c.transpose();
    model.explained_variance(i) = total > 0.0 ? values(col) / total : 0.0;
  }
  return model;
}

Matrix project(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size()) {
    throw Error(ErrorCode::InvalidArgument, "project: expected " + std::to_string(model.mean.size()) +
                                                " columns, got " + std::to_string(x.cols()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

double silhouette_score(const Matrix& points, const std::vector<int>& groups) {
  const auto m = points.rows();
  if (static_cast<std::size_t>(m) != groups.size()) throw Error(ErrorCode::InvalidArgument, "silhouette: size mismatch");
  std::map<int, int> index;
  for (int g : groups) index.emplace(g, 0);
  if (index.size() < 2) throw Error(ErrorCode::InvalidArgument, "silhouette needs at least 2 groups");
  int next = 0;
  for (auto& [key, idx] : index) idx = next++;
  std::vector<int> gid(groups.size());
  std::vector<double> sizes(index.size(), 0.0);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    gid[i] = index[groups[i]];
    sizes[static_cast<std::size_t>(gid[i])] += 1.0;
  }

  Matrix dist = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) dist(i, j) = dist(j, i) = (points.row(i) - points.row(j)).norm();
  }

  double total = 0.0;
  std::vector<double> sums(index.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != i) sums[static_cast<std::size_t>(gid[static_cast<std::size_t>(j)])] += dist(i, j);
    }
    const auto own = static_cast<std::size_t>(gid[static_cast<std::size_t>(i)]);
    if (sizes[own] < 2.0) continue;
    const double a = sums[own] / (sizes[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < sums.size(); ++g) {
      if (g != own) b = std::min(b, sums[g] / sizes[g]);
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(m);
}

std::vector<std::size_t> capped_sample(const std::vector<std::string>& group_keys, std::size_t cap, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < group_keys.size(); ++i) members[group_keys[i]].push_back(i);
  std::vector<std::size_t> out;
  std::uint64_t ordinal = 0;
  for (auto& [key, idx] : members) {
    if (idx.size() > cap) {
      Rng rng = Rng::derive(seed, "cap:" + key, {ordinal});
      // Partial Fisher-Yates: first `cap` slots become the sample.
      for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(cap);
      std::sort(idx.begin(), idx.end());
    }
    out.insert(out.end(), idx.begin(), idx.end());
    ++ordinal;
  }
  return out;
}

SeparabilityReport separability_report(const std::vector<EmbeddingRecord>& records, Layer layer, Grouping grouping,
                                       std::size_t sample_cap, std::uint64_t seed) {
  std::vector<std::string> keys;
  keys.reserve(records.size());
  for (const auto& r : records) keys.push_back(grouping == Grouping::Label ? std::to_string(r.label) : r.site);
  {
    std::map<std::string, int> counts;
    for (const auto& k : keys) counts[k]++;
    if (counts.size() < 2) throw Error(ErrorCode::InvalidArgument, "separability_report: fewer than 2 groups");
    for (const auto& [k, c] : counts) {
      if (c < 2) throw Error(ErrorCode::InvalidArgument, "separability_report: group '" + k + "' has fewer than 2 members");
    }
  }
  if (sample_cap < 2) throw Error(ErrorCode::InvalidArgument, "separability_report: sample cap must be >= 2");

  const auto chosen = capped_sample(keys, sample_cap, seed);
  const auto d = layer_vector(records[chosen.front()], layer).size();
  Matrix x(static_cast<Eigen::Index>(chosen.size()), d);
  std::vector<int> groups;
  std::map<std::string, int> group_ids;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto& v = layer_vector(records[chosen[i]], layer);
    if (v.size() != d) throw Error(ErrorCode::InvalidArgument, "separability_report: inconsistent embedding widths");
    x.row(static_cast<Eigen::Index>(i)) = v.transpose();
    auto it = group_ids.emplace(keys[chosen[i]], static_cast<int>(group_ids.size())).first;
    groups.push_back(it->second);
  }

  SeparabilityReport rep;
  rep.layer = layer;
  rep.grouping = grouping;
  Matrix coords;
  if (layer == Layer::Fc2 || d <= 2) {
    coords = x;
  } else {
    const auto pca = fit_pca(x, 2);
    coords = project(pca, x);
    rep.explained_variance.assign(pca.explained_variance.data(),
                                  pca.explained_variance.data() + pca.explained_variance.size());
  }
  rep.silhouette_2d = silhouette_score(coords, groups);
  rep.silhouette_full = silhouette_score(x, groups);
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto& r = records[chosen[i]];
    const auto row = static_cast<Eigen::Index>(i);
    rep.scatter.push_back({r.subject_id, r.site, r.label, coords(row, 0), coords.cols() > 1 ? coords(row, 1) : 0.0});
  }
  return rep;
}

nlohmann::json report_to_json(const SeparabilityReport& report) {
  return {{"layer", to_string(report.layer)},
          {"grouping", to_string(report.grouping)},
          {"silhouette_2d", report.silhouette_2d},
          {"silhouette_full", report.silhouette_full},
          {"explained_variance", report.explained_variance},
          {"n", report.scatter.size()}};
}

std::string scatter_to_csv(const SeparabilityReport& report) {
  std::string out = "subject_id,site,label,layer,pc1,pc2\n";
  char buf[64];
  const std::string layer = to_string(report.layer);
  for (const auto& r : report.scatter) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.pc1, r.pc2);
    out += r.subject_id + "," + r.site + "," + std::to_string(r.label) + "," + layer + "," + buf + "\n";
  }
  return out;
}

std::string scatter_to_svg(const SeparabilityReport& report) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double size = 400.0, pad = 30.0;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!report.scatter.empty()) {
    xmin = xmax = report.scatter[0].pc1;
    ymin = ymax = report.scatter[0].pc2;
    for (const auto& r : report.scatter) {
      xmin = std::min(xmin, r.pc1);
      xmax = std::max(xmax, r.pc1);
      ymin = std::min(ymin, r.pc2);
      ymax = std::max(ymax, r.pc2);
    }
  }
  const double sx = xmax > xmin ? (size - 2 * pad) / (xmax - xmin) : 1.0;
  const double sy = ymax > ymin ? (size - 2 * pad) / (ymax - ymin) : 1.0;
  std::map<std::string, int> colors;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\">\n";
  out += "<rect width=\"400\" height=\"400\" fill=\"white\"/>\n";
  char buf[160];
  for (const auto& r : report.scatter) {
    const std::string key = report.grouping == Grouping::Label ? std::to_string(r.label) : r.site;
    const int c = colors.emplace(key, static_cast<int>(colors.size())).first->second;
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\" fill-opacity=\"0.6\"/>\n",
                  pad + (r.pc1 - xmin) * sx, size - pad - (r.pc2 - ymin) * sy, palette[c % 6]);
    out += buf;
  }
  int row = 0;
  for (const auto& [key, c] : colors) {
    std::snprintf(buf, sizeof buf, "<text x=\"8\" y=\"%d\" font-size=\"11\" fill=\"%s\">%s=%s</text>\n", 14 + 13 * row++,
                  palette[c % 6], to_string(report.grouping).c_str(), key.c_str());
    out += buf;
  }
  out += "<text x=\"300\" y=\"14\" font-size=\"11\">" + to_string(report.layer) + "</text>\n</svg>\n";
  return out;
}

}  // namespace meshgnn
