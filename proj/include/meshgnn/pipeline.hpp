#pragma once

#include "meshgnn/evaluation.hpp"
#include "meshgnn/features.hpp"
#include "meshgnn/gnn.hpp"
#include "meshgnn/inspection.hpp"
#include "meshgnn/registration.hpp"
#include "meshgnn/synthgen.hpp"
#include "meshgnn/training.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace meshgnn {

inline constexpr const char* kToolVersion = "0.1.0";

// 16 hex digits of FNV-1a over the canonical (sorted-key) JSON dump.
std::string config_hash(const nlohmann::json& config);

// ---- In-memory stages -------------------------------------------------------

struct PreprocessOptions {
  bool registration = false;
  FpfhOptions fpfh;
  std::size_t reference_index = 0;  // subject whose meshes define each structure's reference
};

nlohmann::json preprocess_options_to_json(const PreprocessOptions& options);

struct ProcessedDataset {
  PreprocessOptions options;
  std::vector<SubjectSample> subjects;                   // meshes registered when requested, features filled
  std::vector<std::vector<RigidTransform>> transforms;   // [subject][structure]; empty without registration
};

ProcessedDataset preprocess(std::vector<SubjectSample> subjects, const PreprocessOptions& options);

std::vector<TrainingSubject> training_subjects(const ProcessedDataset& data, Split split, AdjacencyCache& cache);
std::vector<TrainingSubject> training_subjects(const ProcessedDataset& data, AdjacencyCache& cache);

struct EvaluationSummaryRow {
  std::string dataset;  // "all" or a site name
  double auc = 0.0;
  std::size_t n = 0;
  std::size_t n_pos = 0;
  RocResult roc;
};

// ROC over all subjects, then per site when requested.
std::vector<EvaluationSummaryRow> evaluate_subjects(const ModelParams& params, const std::vector<TrainingSubject>& subjects,
                                                    bool per_site);

// ---- Archives ----------------------------------------------------------------

void write_dataset_archive(const std::filesystem::path& dir, const SynthDataset& dataset);

struct LoadedDataset {
  int structures = 0;
  std::vector<SubjectSample> subjects;
  std::optional<SynthSpec> spec;
};

LoadedDataset read_dataset_archive(const std::filesystem::path& dir);

void write_features_archive(const std::filesystem::path& dir, const ProcessedDataset& data);
ProcessedDataset read_features_archive(const std::filesystem::path& dir);

// ---- Commands ----------------------------------------------------------------

struct GenerateOptions {
  std::optional<std::filesystem::path> spec_file;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;
};

struct PreprocessCommandOptions {
  std::filesystem::path dataset_dir;
  bool registration = false;
  std::optional<double> radius;  // unset = auto
  std::size_t reference_index = 0;
  std::filesystem::path out_dir;
};

struct TrainCommandOptions {
  std::filesystem::path features_dir;
  std::optional<std::filesystem::path> config_file;
  std::optional<SubmodelMode> mode;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;
};

struct InspectCommandOptions {
  std::filesystem::path checkpoint_dir;
  std::filesystem::path features_dir;
  std::vector<Layer> layers = {Layer::Gcn, Layer::Fc1, Layer::Fc2};
  std::vector<Grouping> groupings = {Grouping::Label, Grouping::Site};
  std::size_t sample_cap = 500;
  std::uint64_t seed = 0;
  bool svg = false;
  Split split = Split::Test;
  std::filesystem::path out_dir;
};

struct EvaluateCommandOptions {
  std::filesystem::path checkpoint_dir;
  std::filesystem::path features_dir;
  bool per_site = false;
  Split split = Split::Test;
  std::filesystem::path out_dir;
};

struct RunAllOptions {
  std::optional<std::filesystem::path> spec_file;
  std::optional<std::filesystem::path> train_config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  bool svg = false;
  std::filesystem::path out_dir;
};

void cmd_generate(const GenerateOptions& options);
void cmd_preprocess(const PreprocessCommandOptions& options);
void cmd_train(const TrainCommandOptions& options);
void cmd_inspect(const InspectCommandOptions& options);
void cmd_evaluate(const EvaluateCommandOptions& options);
void cmd_run_all(const RunAllOptions& options);

}  // namespace meshgnn
