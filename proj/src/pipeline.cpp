#include "meshgnn/pipeline.hpp"

#include "meshgnn/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace meshgnn {

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string structure_name(int s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "structure_%02d", s);
  return buf;
}

void require_file(const fs::path& path, const std::string& what, const std::string& producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingArtifact,
                what + " not found at " + path.parent_path().string() + " (run `" + producer + "` first)");
  }
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Timestamps live only here so every other artifact stays byte-reproducible.
class RunManifest {
 public:
  RunManifest(std::string command, fs::path out_dir) : command_(std::move(command)), out_(std::move(out_dir)) {
    started_ = utc_now();
  }
  void input(const std::string& role, const fs::path& path) { inputs_[role] = path.string(); }
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }
  void set_config(const nlohmann::json& config) { hash_ = config_hash(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void write() const {
    std::vector<std::string> outputs;
    for (const auto& entry : fs::recursive_directory_iterator(out_)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), out_).generic_string();
      if (rel != "run_manifest.json") outputs.push_back(rel);
    }
    std::sort(outputs.begin(), outputs.end());
    nlohmann::json j = {{"command", command_},   {"tool_version", kToolVersion}, {"config_hash", hash_},
                        {"seed", seed_},         {"inputs", inputs_},            {"outputs", outputs},
                        {"started_at", started_}, {"finished_at", utc_now()}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    write_json(out_ / "run_manifest.json", j);
  }

 private:
  std::string command_;
  fs::path out_;
  std::string started_;
  std::string hash_;
  std::uint64_t seed_ = 0;
  std::map<std::string, std::string> inputs_;
  nlohmann::json extra_ = nlohmann::json::object();
};

std::string manifest_header(int structures) {
  std::string h = "subject_id,site,label,split";
  for (int s = 0; s < structures; ++s) h += "," + structure_name(s);
  return h + "\n";
}

std::string mesh_rel_path(const SubjectSample& subj, int s) {
  return "meshes/" + subj.subject_id + "/" + structure_name(s) + ".json";
}

void write_meshes_and_manifest(const fs::path& dir, const std::vector<SubjectSample>& subjects, int structures) {
  std::string manifest = manifest_header(structures);
  for (const auto& subj : subjects) {
    fs::create_directories(dir / "meshes" / subj.subject_id);
    manifest += subj.subject_id + "," + subj.site + "," + std::to_string(subj.label) + "," + to_string(subj.split);
    for (int s = 0; s < structures; ++s) {
      const auto rel = mesh_rel_path(subj, s);
      save_mesh(dir / rel, subj.meshes[static_cast<std::size_t>(s)], MeshFormat::Json);
      manifest += "," + rel;
    }
    manifest += "\n";
  }
  write_text(dir / "manifest.csv", manifest);
}

std::vector<SubjectSample> read_manifest(const fs::path& dir, int* structures_out) {
  const std::string text = read_text(dir / "manifest.csv");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, (dir / "manifest.csv").string() + ": empty manifest");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "subject_id" || header[1] != "site" || header[2] != "label" ||
      header[3] != "split") {
    throw Error(ErrorCode::Parse, (dir / "manifest.csv").string() + ": unexpected header");
  }
  const int structures = static_cast<int>(header.size()) - 4;
  std::map<std::string, int> site_index;
  std::vector<SubjectSample> subjects;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Parse, (dir / "manifest.csv").string() + ": row " + std::to_string(row) + " has " +
                                        std::to_string(cells.size()) + " columns, expected " + std::to_string(header.size()));
    }
    SubjectSample subj;
    subj.subject_id = cells[0];
    subj.site = cells[1];
    try {
      subj.label = std::stoi(cells[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "manifest row " + std::to_string(row) + ": bad label '" + cells[2] + "'");
    }
    if (subj.label != 0 && subj.label != 1) {
      throw Error(ErrorCode::Parse, "manifest row " + std::to_string(row) + ": label must be 0 or 1");
    }
    subj.split = parse_split(cells[3]);
    subj.site_index = site_index.emplace(subj.site, static_cast<int>(site_index.size())).first->second;
    for (int s = 0; s < structures; ++s) subj.meshes.push_back(load_mesh(dir / cells[4 + static_cast<std::size_t>(s)]));
    subjects.push_back(std::move(subj));
  }
  if (structures_out) *structures_out = structures;
  return subjects;
}

std::vector<TrainingSubject> by_split(const ProcessedDataset& data, Split split, AdjacencyCache& cache, bool all) {
  std::vector<TrainingSubject> out;
  for (const auto& subj : data.subjects) {
    if (!all && subj.split != split) continue;
    if (subj.features.size() != subj.meshes.size()) {
      throw Error(ErrorCode::InvalidArgument, "subject " + subj.subject_id + " has no features (preprocess first)");
    }
    TrainingSubject t;
    t.subject_id = subj.subject_id;
    t.site = subj.site;
    t.label = subj.label;
    t.meshes = subj.meshes;
    for (std::size_t s = 0; s < subj.meshes.size(); ++s) {
      t.graphs.push_back({cache.get(static_cast<int>(s), subj.meshes[s]), subj.features[s]});
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::string config_hash(const nlohmann::json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json preprocess_options_to_json(const PreprocessOptions& o) {
  nlohmann::json j = {{"registration", o.registration ? "on" : "off"},
                      {"reference_subject_index", o.reference_index},
                      {"radius_scale", o.fpfh.radius_scale},
                      {"neighbourhood", "euclidean"},
                      {"feature_width", kFpfhWidth}};
  j["radius"] = o.fpfh.radius ? nlohmann::json(*o.fpfh.radius) : nlohmann::json("auto");
  return j;
}

ProcessedDataset preprocess(std::vector<SubjectSample> subjects, const PreprocessOptions& options) {
  ProcessedDataset out;
  out.options = options;
  if (subjects.empty()) throw Error(ErrorCode::InvalidArgument, "preprocess: no subjects");
  const std::size_t structures = subjects.front().meshes.size();
  for (const auto& s : subjects) {
    if (s.meshes.size() != structures) {
      throw Error(ErrorCode::Validation, "subject " + s.subject_id + " has " + std::to_string(s.meshes.size()) +
                                             " structures, expected " + std::to_string(structures));
    }
  }
  if (options.registration) {
    if (options.reference_index >= subjects.size()) {
      throw Error(ErrorCode::InvalidArgument, "reference subject index out of range");
    }
    out.transforms.assign(subjects.size(), std::vector<RigidTransform>(structures));
    for (std::size_t s = 0; s < structures; ++s) {
      std::vector<Mesh> column;
      column.reserve(subjects.size());
      for (const auto& subj : subjects) column.push_back(subj.meshes[s]);
      RegisteredMeshes reg;
      try {
        reg = register_dataset(column, options.reference_index);
      } catch (const Error& e) {
        throw Error(e.code(), "registering " + structure_name(static_cast<int>(s)) + ": " + e.what());
      }
      for (std::size_t i = 0; i < subjects.size(); ++i) {
        subjects[i].meshes[s] = std::move(reg.meshes[i]);
        out.transforms[i][s] = reg.transforms[i];
      }
    }
  }
  for (auto& subj : subjects) {
    subj.features.clear();
    for (std::size_t s = 0; s < structures; ++s) {
      try {
        subj.features.push_back(compute_fpfh(subj.meshes[s], options.fpfh));
      } catch (const Error& e) {
        throw Error(e.code(), "FPFH for " + subj.subject_id + "/" + structure_name(static_cast<int>(s)) + ": " + e.what());
      }
    }
  }
  out.subjects = std::move(subjects);
  return out;
}

std::vector<TrainingSubject> training_subjects(const ProcessedDataset& data, Split split, AdjacencyCache& cache) {
  return by_split(data, split, cache, false);
}

std::vector<TrainingSubject> training_subjects(const ProcessedDataset& data, AdjacencyCache& cache) {
  return by_split(data, Split::Train, cache, true);
}

std::vector<EvaluationSummaryRow> evaluate_subjects(const ModelParams& params, const std::vector<TrainingSubject>& subjects,
                                                    bool per_site) {
  const auto scores = class1_scores(params, subjects);
  std::vector<EvaluationSummaryRow> rows;
  auto add = [&](const std::string& name, const std::vector<std::size_t>& idx) {
    std::vector<double> sc;
    std::vector<int> lb;
    for (auto i : idx) {
      sc.push_back(scores[i]);
      lb.push_back(subjects[i].label);
    }
    EvaluationSummaryRow row;
    row.dataset = name;
    try {
      row.roc = roc_auc(sc, lb);
    } catch (const Error& e) {
      throw Error(e.code(), "evaluating '" + name + "': " + e.what());
    }
    row.auc = row.roc.auc;
    row.n = idx.size();
    row.n_pos = row.roc.positives;
    rows.push_back(std::move(row));
  };
  std::vector<std::size_t> all(subjects.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  add("all", all);
  if (per_site) {
    std::map<std::string, std::vector<std::size_t>> sites;
    for (std::size_t i = 0; i < subjects.size(); ++i) sites[subjects[i].site].push_back(i);
    for (const auto& [site, idx] : sites) add(site, idx);
  }
  return rows;
}

void write_dataset_archive(const fs::path& dir, const SynthDataset& dataset) {
  fs::create_directories(dir);
  write_meshes_and_manifest(dir, dataset.subjects, dataset.spec.structures);
  write_json(dir / "spec.json", spec_to_json(dataset.spec));
  nlohmann::json sites = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.site_transforms.size(); ++i) {
    sites.push_back({{"name", dataset.spec.sites[i].name}, {"transform", transform_to_json(dataset.site_transforms[i])}});
  }
  write_json(dir / "sites.json", sites);
}

LoadedDataset read_dataset_archive(const fs::path& dir) {
  require_file(dir / "manifest.csv", "dataset archive", "generate");
  LoadedDataset out;
  out.subjects = read_manifest(dir, &out.structures);
  if (fs::exists(dir / "spec.json")) out.spec = spec_from_json(read_json(dir / "spec.json"));
  return out;
}

void write_features_archive(const fs::path& dir, const ProcessedDataset& data) {
  fs::create_directories(dir);
  const int structures = data.subjects.empty() ? 0 : static_cast<int>(data.subjects.front().meshes.size());
  write_meshes_and_manifest(dir, data.subjects, structures);

  std::ofstream bin(dir / "features.bin", std::ios::binary);
  if (!bin) throw Error(ErrorCode::Io, "cannot write " + (dir / "features.bin").string());
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& subj : data.subjects) {
    for (int s = 0; s < structures; ++s) {
      const auto& f = subj.features.at(static_cast<std::size_t>(s));
      bin.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
      entries.push_back({{"subject_id", subj.subject_id}, {"structure", s}, {"offset", offset}, {"rows", f.rows()}});
      offset += static_cast<std::size_t>(f.size());
    }
  }
  if (!bin) throw Error(ErrorCode::Io, "write failed for features.bin");
  write_json(dir / "features.json",
             {{"dtype", "float64-le"}, {"layout", "row-major"}, {"width", kFpfhWidth}, {"entries", entries}});

  nlohmann::json pre = preprocess_options_to_json(data.options);
  pre["structures"] = structures;
  pre["subjects"] = data.subjects.size();
  write_json(dir / "preprocess.json", pre);

  if (data.options.registration) {
    nlohmann::json xf = nlohmann::json::object();
    for (std::size_t i = 0; i < data.subjects.size(); ++i) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& t : data.transforms[i]) list.push_back(transform_to_json(t));
      xf[data.subjects[i].subject_id] = list;
    }
    write_json(dir / "transforms.json", xf);
  }
}

ProcessedDataset read_features_archive(const fs::path& dir) {
  require_file(dir / "preprocess.json", "features archive", "preprocess");
  ProcessedDataset out;
  const auto pre = read_json(dir / "preprocess.json");
  try {
    out.options.registration = pre.at("registration") == "on";
    out.options.reference_index = pre.at("reference_subject_index").get<std::size_t>();
    out.options.fpfh.radius_scale = pre.at("radius_scale").get<double>();
    if (pre.at("radius").is_number()) out.options.fpfh.radius = pre.at("radius").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, (dir / "preprocess.json").string() + ": " + e.what());
  }
  int structures = 0;
  out.subjects = read_manifest(dir, &structures);

  const auto index = read_json(dir / "features.json");
  std::ifstream bin(dir / "features.bin", std::ios::binary);
  if (!bin) throw Error(ErrorCode::MissingArtifact, "features.bin missing in " + dir.string() + " (run `preprocess` first)");
  std::map<std::string, std::size_t> subject_pos;
  for (std::size_t i = 0; i < out.subjects.size(); ++i) {
    subject_pos[out.subjects[i].subject_id] = i;
    out.subjects[i].features.resize(static_cast<std::size_t>(structures));
  }
  const int width = index.at("width").get<int>();
  for (const auto& e : index.at("entries")) {
    const auto id = e.at("subject_id").get<std::string>();
    const auto s = e.at("structure").get<int>();
    const auto rows = e.at("rows").get<Eigen::Index>();
    const auto offset = e.at("offset").get<std::size_t>();
    auto it = subject_pos.find(id);
    if (it == subject_pos.end() || s < 0 || s >= structures) {
      throw Error(ErrorCode::Parse, "features.json references unknown subject/structure " + id);
    }
    FeatureMatrix f(rows, width);
    bin.seekg(static_cast<std::streamoff>(offset * sizeof(double)));
    bin.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!bin) throw Error(ErrorCode::Parse, "features.bin truncated at " + id);
    out.subjects[it->second].features[static_cast<std::size_t>(s)] = std::move(f);
  }
  for (const auto& subj : out.subjects) {
    for (int s = 0; s < structures; ++s) {
      if (subj.features[static_cast<std::size_t>(s)].rows() != subj.meshes[static_cast<std::size_t>(s)].vertex_count()) {
        throw Error(ErrorCode::Parse, "feature rows do not match mesh vertices for " + subj.subject_id);
      }
    }
  }

  if (out.options.registration) {
    require_file(dir / "transforms.json", "registration transforms", "preprocess --register on");
    const auto xf = read_json(dir / "transforms.json");
    for (const auto& subj : out.subjects) {
      std::vector<RigidTransform> list;
      for (const auto& t : xf.at(subj.subject_id)) list.push_back(transform_from_json(t));
      out.transforms.push_back(std::move(list));
    }
  }
  return out;
}

void cmd_generate(const GenerateOptions& o) {
  SynthSpec spec;
  nlohmann::json raw = nlohmann::json::object();
  if (o.spec_file) {
    raw = read_json(*o.spec_file);
    try {
      spec = spec_from_json(raw);
    } catch (const Error& e) {
      throw Error(e.code(), o.spec_file->string() + ": " + e.what());
    }
  }
  if (o.seed) spec.seed = *o.seed;
  validate(spec);
  fs::create_directories(o.out_dir);
  RunManifest manifest("generate", o.out_dir);
  if (o.spec_file) manifest.input("spec", *o.spec_file);
  manifest.set_config(spec_to_json(spec));
  manifest.set_seed(spec.seed);
  write_dataset_archive(o.out_dir, generate_dataset(spec));
  manifest.write();
}

void cmd_preprocess(const PreprocessCommandOptions& o) {
  auto loaded = read_dataset_archive(o.dataset_dir);
  PreprocessOptions options;
  options.registration = o.registration;
  options.fpfh.radius = o.radius;
  options.reference_index = o.reference_index;
  fs::create_directories(o.out_dir);
  // A stale transforms file from an earlier registered run must not survive.
  fs::remove(o.out_dir / "transforms.json");
  RunManifest manifest("preprocess", o.out_dir);
  manifest.input("dataset", o.dataset_dir);
  manifest.set_config(preprocess_options_to_json(options));
  write_features_archive(o.out_dir, preprocess(std::move(loaded.subjects), options));
  manifest.write();
}

namespace {

TrainConfig resolve_train_config(const std::optional<fs::path>& file, const std::optional<SubmodelMode>& mode,
                                 const std::optional<int>& epochs, const std::optional<std::uint64_t>& seed) {
  TrainConfig config;
  if (file) {
    try {
      config = config_from_json(read_json(*file));
    } catch (const Error& e) {
      throw Error(e.code(), file->string() + ": " + e.what());
    }
  }
  if (mode) config.mode = *mode;
  if (epochs) config.epochs = *epochs;
  if (seed) config.seed = *seed;
  validate(config);
  return config;
}

void train_from_archive(const ProcessedDataset& data, TrainConfig config, const fs::path& out_dir, RunManifest& manifest) {
  config.registration = data.options.registration;
  config.fpfh = data.options.fpfh;
  AdjacencyCache cache;
  const auto train_set = training_subjects(data, Split::Train, cache);
  const auto val_set = training_subjects(data, Split::Val, cache);
  const auto cfg_json = config_to_json(config);
  manifest.set_config(cfg_json);
  manifest.set_seed(config.seed);
  auto result = train(train_set, val_set, config, [&](const EpochRecord& r) {
    std::fprintf(stderr, "[train %s] epoch %d train_loss=%.5f val_loss=%.5f val_auc=%.4f\n",
                 to_string(config.mode).c_str(), r.epoch, r.train_loss, r.val_loss, r.val_auc);
  });
  CheckpointMeta meta{config.seed, config_hash(cfg_json), result.history.selected_epoch};
  save_checkpoint(out_dir, result.params, meta);
  write_text(out_dir / "history.csv", history_to_csv(result.history));
  write_json(out_dir / "train_config.json", cfg_json);
}

std::vector<TrainingSubject> split_subjects(const fs::path& features_dir, Split split) {
  const auto data = read_features_archive(features_dir);
  AdjacencyCache cache;
  auto subjects = training_subjects(data, split, cache);
  if (subjects.empty()) {
    throw Error(ErrorCode::InvalidArgument, "features archive has no '" + to_string(split) + "' subjects");
  }
  return subjects;
}

ModelParams load_checked(const fs::path& checkpoint_dir, const std::vector<TrainingSubject>& subjects) {
  auto params = load_checkpoint(checkpoint_dir);
  if (!subjects.empty() && static_cast<int>(subjects.front().graphs.size()) != params.config.structures) {
    throw Error(ErrorCode::InvalidArgument, "checkpoint expects " + std::to_string(params.config.structures) +
                                                " structures, features archive has " +
                                                std::to_string(subjects.front().graphs.size()));
  }
  return params;
}

nlohmann::json summary_to_json(const std::vector<EvaluationSummaryRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back({{"dataset", r.dataset}, {"auc", r.auc}, {"n", r.n}, {"n_pos", r.n_pos}});
  return out;
}

}  // namespace

void cmd_train(const TrainCommandOptions& o) {
  const auto data = read_features_archive(o.features_dir);
  const auto config = resolve_train_config(o.config_file, o.mode, o.epochs, o.seed);
  fs::create_directories(o.out_dir);
  RunManifest manifest("train", o.out_dir);
  manifest.input("features", o.features_dir);
  if (o.config_file) manifest.input("config", *o.config_file);
  train_from_archive(data, config, o.out_dir, manifest);
  manifest.write();
}

void cmd_inspect(const InspectCommandOptions& o) {
  require_file(o.checkpoint_dir / "checkpoint.json", "checkpoint", "train");
  const auto subjects = split_subjects(o.features_dir, o.split);
  const auto params = load_checked(o.checkpoint_dir, subjects);
  const auto records = extract_embeddings(params, subjects);
  fs::create_directories(o.out_dir);
  RunManifest manifest("inspect", o.out_dir);
  manifest.input("checkpoint", o.checkpoint_dir);
  manifest.input("features", o.features_dir);
  manifest.set_seed(o.seed);
  nlohmann::json all = nlohmann::json::array();
  for (Layer layer : o.layers) {
    for (Grouping grouping : o.groupings) {
      const auto rep = separability_report(records, layer, grouping, o.sample_cap, o.seed);
      const std::string stem = to_string(layer) + "_" + to_string(grouping);
      write_text(o.out_dir / ("scatter_" + stem + ".csv"), scatter_to_csv(rep));
      write_json(o.out_dir / ("report_" + stem + ".json"), report_to_json(rep));
      if (o.svg) write_text(o.out_dir / ("scatter_" + stem + ".svg"), scatter_to_svg(rep));
      all.push_back(report_to_json(rep));
    }
  }
  manifest.set_config({{"sample_cap", o.sample_cap}, {"split", to_string(o.split)}, {"reports", all.size()}});
  manifest.write();
}

void cmd_evaluate(const EvaluateCommandOptions& o) {
  require_file(o.checkpoint_dir / "checkpoint.json", "checkpoint", "train");
  const auto subjects = split_subjects(o.features_dir, o.split);
  const auto params = load_checked(o.checkpoint_dir, subjects);
  const auto rows = evaluate_subjects(params, subjects, o.per_site);
  fs::create_directories(o.out_dir);
  RunManifest manifest("evaluate", o.out_dir);
  manifest.input("checkpoint", o.checkpoint_dir);
  manifest.input("features", o.features_dir);
  for (const auto& r : rows) write_text(o.out_dir / ("roc_" + r.dataset + ".csv"), roc_to_csv(r.roc));
  write_json(o.out_dir / "summary.json", summary_to_json(rows));
  manifest.set_config({{"per_site", o.per_site}, {"split", to_string(o.split)}});
  manifest.write();
}

void cmd_run_all(const RunAllOptions& o) {
  const fs::path out = o.out_dir;
  fs::create_directories(out);
  RunManifest manifest("run-all", out);

  cmd_generate({o.spec_file, o.seed, out / "dataset"});
  for (bool reg : {false, true}) {
    cmd_preprocess({out / "dataset", reg, std::nullopt, 0, out / (reg ? "features_reg" : "features_noreg")});
  }

  nlohmann::json summary = nlohmann::json::array();
  for (bool reg : {false, true}) {
    const fs::path features = out / (reg ? "features_reg" : "features_noreg");
    for (SubmodelMode mode : {SubmodelMode::Shared, SubmodelMode::NonShared}) {
      const std::string variant = to_string(mode) + (reg ? "_reg" : "_noreg");
      const fs::path model_dir = out / "models" / variant;
      cmd_train({features, o.train_config_file, mode, o.epochs, o.seed, model_dir});
      cmd_evaluate({model_dir, features, true, Split::Test, model_dir / "evaluate"});
      cmd_inspect({model_dir, features, {Layer::Gcn, Layer::Fc1, Layer::Fc2}, {Grouping::Label, Grouping::Site}, 500,
                   o.seed.value_or(0), o.svg, Split::Test, model_dir / "inspect"});
      nlohmann::json entry = {{"variant", variant},
                              {"mode", to_string(mode)},
                              {"registration", reg ? "on" : "off"},
                              {"auc", read_json(model_dir / "evaluate" / "summary.json")}};
      nlohmann::json sil = nlohmann::json::object();
      for (const char* layer : {"gcn", "fc1", "fc2"}) {
        for (const char* grouping : {"label", "site"}) {
          const auto rep = read_json(model_dir / "inspect" / (std::string("report_") + layer + "_" + grouping + ".json"));
          sil[std::string(layer) + "_" + grouping] = rep.at("silhouette_2d");
        }
      }
      entry["silhouette_2d"] = sil;
      summary.push_back(entry);
    }
  }
  write_json(out / "summary.json", summary);
  if (o.spec_file) manifest.input("spec", *o.spec_file);
  if (o.train_config_file) manifest.input("train_config", *o.train_config_file);
  manifest.set_seed(o.seed.value_or(0));
  manifest.write();
}

}  // namespace meshgnn
