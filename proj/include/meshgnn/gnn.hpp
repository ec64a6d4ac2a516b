#pragma once

#include "meshgnn/features.hpp"
#include "meshgnn/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace meshgnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class SubmodelMode { Shared, NonShared };

std::string to_string(SubmodelMode mode);
SubmodelMode parse_mode(const std::string& text);

// D^-1/2 (A + I) D^-1/2 for the graph's undirected edges.
struct NormalizedAdjacency {
  SparseMatrix matrix;
  int size() const { return static_cast<int>(matrix.rows()); }
};

NormalizedAdjacency normalized_adjacency(int node_count, const std::vector<Edge>& edges);
NormalizedAdjacency normalized_adjacency(const Mesh& mesh);

enum class Activation { Relu, None };

// act(P * H * W)
Matrix gcn_layer(const Matrix& h, const NormalizedAdjacency& p, const Matrix& w, Activation act);

// Column means.
Vector global_mean_pool(const Matrix& h);

struct ModelConfig {
  int structures = 15;
  int in_features = kFpfhWidth;
  int hidden = 32;      // width of all three graph convolutions
  int fc_hidden = 32;
  int classes = 2;
  SubmodelMode mode = SubmodelMode::Shared;

  int embedding_width() const { return structures * hidden; }
};

struct GcnWeights {
  Matrix w1, w2, w3;  // in x hidden, hidden x hidden, hidden x hidden
};

struct ModelParams {
  ModelConfig config;
  std::vector<GcnWeights> gcn;  // one set when shared, one per structure otherwise
  Matrix fc1_w;                 // embedding_width x fc_hidden
  Vector fc1_b;
  Matrix fc2_w;                 // fc_hidden x classes
  Vector fc2_b;

  const GcnWeights& weights_for(int structure) const {
    return gcn[config.mode == SubmodelMode::Shared ? 0 : static_cast<std::size_t>(structure)];
  }
  GcnWeights& weights_for(int structure) {
    return gcn[config.mode == SubmodelMode::Shared ? 0 : static_cast<std::size_t>(structure)];
  }

  // Visits every parameter tensor in a fixed order.
  template <class F>
  void for_each_tensor(F&& f) {
    for (auto& g : gcn) {
      f(g.w1);
      f(g.w2);
      f(g.w3);
    }
    f(fc1_w);
    f(fc1_b);
    f(fc2_w);
    f(fc2_b);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_tensor([&](auto& t) { f(std::as_const(t)); });
  }

  // Same layout, all zeros.
  ModelParams zeros_like() const;
};

// Glorot-uniform weights, zero biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ParameterCount {
  std::size_t gcn = 0;
  std::size_t head = 0;
  std::size_t total() const { return gcn + head; }
};

ParameterCount parameter_count(const ModelParams& params);
ParameterCount parameter_count(const ModelConfig& config);

// One structure's graph: topology (shared across subjects) plus node features.
struct GraphInput {
  std::shared_ptr<const NormalizedAdjacency> adjacency;
  Matrix features;  // n x in_features
};

struct StructureTrace {
  Matrix ph0, z1, h1, ph1, z2, h2, ph2, z3, h3;  // ph_l = P * H_l
};

struct ForwardTrace {
  std::vector<StructureTrace> structures;
  Matrix pooled;         // structures x hidden
  Vector gcn_embedding;  // in-order stack of pooled rows
  Vector fc1_pre;
  Vector fc1;            // relu(fc1_pre)
  Vector logits;
};

ForwardTrace forward(const std::vector<GraphInput>& sample, const ModelParams& params);

// -log softmax(logits)[label] via log-sum-exp.
double cross_entropy(const Vector& logits, int label);
Vector softmax(const Vector& logits);

struct LossAndGradients {
  double loss = 0.0;
  ModelParams gradients;
};

LossAndGradients loss_and_gradients(const ForwardTrace& trace, int label,
                                    const std::vector<GraphInput>& sample, const ModelParams& params);

// Checkpoint = JSON manifest + row-major little-endian float64 array file.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  int selected_epoch = -1;
};

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const CheckpointMeta& meta);
ModelParams load_checkpoint(const std::filesystem::path& dir, CheckpointMeta* meta = nullptr);

}  // namespace meshgnn
