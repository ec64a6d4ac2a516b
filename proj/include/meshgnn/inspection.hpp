#pragma once

#include "meshgnn/gnn.hpp"
#include "meshgnn/training.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace meshgnn {

// Layer-wise embeddings of one subject.
struct EmbeddingRecord {
  std::string subject_id;
  std::string site;
  int label = 0;
  Vector gcn;     // structures * hidden
  Vector fc1;     // fc_hidden
  Vector fc2;     // logits
};

std::vector<EmbeddingRecord> extract_embeddings(const ModelParams& params, const std::vector<TrainingSubject>& samples);

enum class Layer { Gcn, Fc1, Fc2 };
enum class Grouping { Label, Site };

std::string to_string(Layer layer);
std::string to_string(Grouping grouping);
Layer parse_layer(const std::string& text);
Grouping parse_grouping(const std::string& text);

const Vector& layer_vector(const EmbeddingRecord& r, Layer layer);

struct PcaModel {
  Vector mean;
  Matrix components;          // k x d, orthonormal rows
  Vector explained_variance;  // fraction of total variance per component
};

// Principal axes by descending covariance eigenvalue. Each component's
// largest-magnitude loading is made positive.
PcaModel fit_pca(const Matrix& x, int k);
Matrix project(const PcaModel& model, const Matrix& x);

// Mean Euclidean silhouette; singleton groups contribute 0.
double silhouette_score(const Matrix& points, const std::vector<int>& groups);

struct ScatterRow {
  std::string subject_id;
  std::string site;
  int label = 0;
  double pc1 = 0.0;
  double pc2 = 0.0;
};

struct SeparabilityReport {
  Layer layer = Layer::Gcn;
  Grouping grouping = Grouping::Label;
  double silhouette_2d = 0.0;
  double silhouette_full = 0.0;
  std::vector<double> explained_variance;  // empty for fc2 (plotted raw)
  std::vector<ScatterRow> scatter;
};

// Caps every group at `sample_cap` members by seeded sampling, fits PCA on the
// pooled sample (fc2 is used as-is), and scores group separation.
SeparabilityReport separability_report(const std::vector<EmbeddingRecord>& records, Layer layer, Grouping grouping,
                                       std::size_t sample_cap = 500, std::uint64_t seed = 0);

// Indices kept when capping each group; groups ordered by key, indices ascending.
std::vector<std::size_t> capped_sample(const std::vector<std::string>& group_keys, std::size_t cap, std::uint64_t seed);

nlohmann::json report_to_json(const SeparabilityReport& report);
std::string scatter_to_csv(const SeparabilityReport& report);
std::string scatter_to_svg(const SeparabilityReport& report);

}  // namespace meshgnn
