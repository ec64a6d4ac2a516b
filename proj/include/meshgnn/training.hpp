#pragma once

#include "meshgnn/features.hpp"
#include "meshgnn/gnn.hpp"
#include "meshgnn/mesh.hpp"
#include "meshgnn/rng.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace meshgnn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 50;
  int batch_size = 8;
  double augment_max_offset_mm = 0.1;
  std::uint64_t seed = 0;
  SubmodelMode mode = SubmodelMode::Shared;
  bool registration = false;  // recorded only; registration happens in preprocessing
  FpfhOptions fpfh;           // used to recompute features of augmented meshes
  int hidden = 32;
  int fc_hidden = 32;
};

void validate(const TrainConfig& config);
nlohmann::json config_to_json(const TrainConfig& config);
// Unknown keys are rejected by name; missing keys keep their defaults.
TrainConfig config_from_json(const nlohmann::json& j);

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;

  static AdamState zeros_like(const ModelParams& params) { return {params.zeros_like(), params.zeros_like(), 0}; }
};

// One bias-corrected Adam update, in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config);

// Every vertex moved by an independent uniform offset in [-max, max]^3.
Mesh augment_translate(const Mesh& mesh, double max_offset_mm, Rng& rng);

// Per-structure topology cache so subjects that share a template share P.
class AdjacencyCache {
 public:
  std::shared_ptr<const NormalizedAdjacency> get(int structure, const Mesh& mesh);

 private:
  struct Entry {
    std::vector<Edge> edges;
    int vertices = 0;
    std::shared_ptr<const NormalizedAdjacency> adjacency;
  };
  std::vector<Entry> entries_;
};

struct TrainingSubject {
  std::string subject_id;
  std::string site;
  int label = 0;
  std::vector<Mesh> meshes;         // processed meshes, needed for augmentation
  std::vector<GraphInput> graphs;   // adjacency + precomputed FPFH
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int selected_epoch = -1;  // argmin val_loss, earliest on ties
};

std::string history_to_csv(const TrainHistory& history);

struct TrainResult {
  ModelParams params;  // parameters at the selected epoch
  TrainHistory history;
};

// Mean cross entropy over subjects, no augmentation.
double mean_loss(const ModelParams& params, const std::vector<TrainingSubject>& subjects);
// Logit margin (class 1 minus class 0) per subject; orders subjects exactly
// like the class-1 softmax probability.
std::vector<double> class1_scores(const ModelParams& params, const std::vector<TrainingSubject>& subjects);

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const std::vector<TrainingSubject>& train_set, const std::vector<TrainingSubject>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace meshgnn
