#include "meshgnn/meshgnn.h"

#include "meshgnn/error.hpp"
#include "meshgnn/pipeline.hpp"

#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

using namespace meshgnn;

struct mg_mesh {
  Mesh mesh;
};

struct mg_model {
  ModelParams params;
};

namespace {

thread_local std::string g_last_error;

struct BufferTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

mg_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return MG_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return MG_ERR_IO;
    case ErrorCode::Parse: return MG_ERR_PARSE;
    case ErrorCode::Validation: return MG_ERR_VALIDATION;
    case ErrorCode::Numeric: return MG_ERR_NUMERIC;
    case ErrorCode::MissingArtifact: return MG_ERR_MISSING_ARTIFACT;
  }
  return MG_ERR_INTERNAL;
}

mg_status fail(mg_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
mg_status guarded(F&& f) {
  try {
    f();
    return MG_OK;
  } catch (const BufferTooSmall& e) {
    return fail(MG_ERR_BUFFER_TOO_SMALL, e.what());
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MG_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(MG_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(MG_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

void copy_rows(const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& m,
               double* out, std::size_t out_len) {
  require(out != nullptr, "output buffer is NULL");
  if (out_len < static_cast<std::size_t>(m.size())) {
    throw BufferTooSmall("output buffer too small: need " + std::to_string(m.size()) + " values");
  }
  std::memcpy(out, m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

std::vector<std::string> split_list(const char* text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

extern "C" {

const char* mg_version(void) { return kToolVersion; }

const char* mg_status_name(mg_status status) {
  switch (status) {
    case MG_OK: return "ok";
    case MG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MG_ERR_IO: return "io";
    case MG_ERR_PARSE: return "parse";
    case MG_ERR_VALIDATION: return "validation";
    case MG_ERR_NUMERIC: return "numeric";
    case MG_ERR_MISSING_ARTIFACT: return "missing_artifact";
    case MG_ERR_BUFFER_TOO_SMALL: return "buffer_too_small";
    case MG_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* mg_last_error(void) { return g_last_error.c_str(); }

mg_status mg_mesh_load(const char* path, mg_mesh** out) {
  return guarded([&] {
    require(path && out, "mg_mesh_load: NULL argument");
    *out = new mg_mesh{load_mesh(path)};
  });
}

mg_status mg_mesh_save(const mg_mesh* mesh, const char* path) {
  return guarded([&] {
    require(mesh && path, "mg_mesh_save: NULL argument");
    save_mesh(path, mesh->mesh);
  });
}

mg_status mg_mesh_icosphere(int level, mg_mesh** out) {
  return guarded([&] {
    require(out != nullptr, "mg_mesh_icosphere: NULL output");
    *out = new mg_mesh{icosphere(level)};
  });
}

void mg_mesh_free(mg_mesh* mesh) { delete mesh; }

size_t mg_mesh_vertex_count(const mg_mesh* mesh) { return mesh ? static_cast<size_t>(mesh->mesh.vertex_count()) : 0; }
size_t mg_mesh_face_count(const mg_mesh* mesh) { return mesh ? static_cast<size_t>(mesh->mesh.face_count()) : 0; }
size_t mg_mesh_edge_count(const mg_mesh* mesh) { return mesh ? mesh->mesh.edges().size() : 0; }

mg_status mg_mesh_vertices(const mg_mesh* mesh, double* out, size_t out_len) {
  return guarded([&] {
    require(mesh != nullptr, "mg_mesh_vertices: NULL mesh");
    copy_rows(mesh->mesh.vertices(), out, out_len);
  });
}

mg_status mg_mesh_normals(const mg_mesh* mesh, double* out, size_t out_len) {
  return guarded([&] {
    require(mesh != nullptr, "mg_mesh_normals: NULL mesh");
    copy_rows(vertex_normals(mesh->mesh), out, out_len);
  });
}

mg_status mg_mesh_transform(const mg_mesh* mesh, const double rotation[9], const double translation[3], mg_mesh** out) {
  return guarded([&] {
    require(mesh && rotation && translation && out, "mg_mesh_transform: NULL argument");
    RigidTransform xf;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) xf.rotation(r, c) = rotation[r * 3 + c];
      xf.translation(r) = translation[r];
    }
    *out = new mg_mesh{apply_transform(mesh->mesh, xf)};
  });
}

mg_status mg_mesh_fpfh(const mg_mesh* mesh, double radius, double* out, size_t out_len) {
  return guarded([&] {
    require(mesh != nullptr, "mg_mesh_fpfh: NULL mesh");
    FpfhOptions opt;
    if (radius > 0.0) opt.radius = radius;
    copy_rows(compute_fpfh(mesh->mesh, opt), out, out_len);
  });
}

mg_status mg_umeyama_rigid(const double* source, const double* target, size_t n, double rotation[9],
                           double translation[3]) {
  return guarded([&] {
    require(source && target && rotation && translation, "mg_umeyama_rigid: NULL argument");
    const auto rows = static_cast<Eigen::Index>(n);
    const Vertices s = Eigen::Map<const Vertices>(source, rows, 3);
    const Vertices t = Eigen::Map<const Vertices>(target, rows, 3);
    const auto xf = umeyama_rigid(s, t);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rotation[r * 3 + c] = xf.rotation(r, c);
      translation[r] = xf.translation(r);
    }
  });
}

mg_status mg_roc_auc(const double* scores, const int* labels, size_t n, double* auc) {
  return guarded([&] {
    require(scores && labels && auc, "mg_roc_auc: NULL argument");
    *auc = roc_auc({scores, n}, {labels, n}).auc;
  });
}

mg_status mg_model_load(const char* checkpoint_dir, mg_model** out) {
  return guarded([&] {
    require(checkpoint_dir && out, "mg_model_load: NULL argument");
    *out = new mg_model{load_checkpoint(checkpoint_dir)};
  });
}

void mg_model_free(mg_model* model) { delete model; }

int mg_model_structures(const mg_model* model) { return model ? model->params.config.structures : 0; }

int mg_model_is_shared(const mg_model* model) {
  return model && model->params.config.mode == SubmodelMode::Shared ? 1 : 0;
}

size_t mg_model_embedding_width(const mg_model* model) {
  return model ? static_cast<size_t>(model->params.config.embedding_width()) : 0;
}

size_t mg_model_fc1_width(const mg_model* model) {
  return model ? static_cast<size_t>(model->params.config.fc_hidden) : 0;
}

mg_status mg_model_parameter_count(const mg_model* model, size_t* gcn, size_t* head) {
  return guarded([&] {
    require(model && gcn && head, "mg_model_parameter_count: NULL argument");
    const auto c = parameter_count(model->params);
    *gcn = c.gcn;
    *head = c.head;
  });
}

mg_status mg_model_forward(const mg_model* model, const mg_mesh* const* meshes, size_t mesh_count, double radius,
                           double* gcn_out, size_t gcn_len, double* fc1_out, size_t fc1_len, double logits_out[2]) {
  return guarded([&] {
    require(model && meshes, "mg_model_forward: NULL argument");
    FpfhOptions opt;
    if (radius > 0.0) opt.radius = radius;
    std::vector<GraphInput> graphs;
    for (size_t i = 0; i < mesh_count; ++i) {
      require(meshes[i] != nullptr, "mg_model_forward: NULL mesh");
      const auto& m = meshes[i]->mesh;
      graphs.push_back({std::make_shared<NormalizedAdjacency>(normalized_adjacency(m)), compute_fpfh(m, opt)});
    }
    const auto t = forward(graphs, model->params);
    if (gcn_out) copy_rows(t.gcn_embedding.transpose(), gcn_out, gcn_len);
    if (fc1_out) copy_rows(t.fc1.transpose(), fc1_out, fc1_len);
    if (logits_out) {
      logits_out[0] = t.logits(0);
      logits_out[1] = t.logits(1);
    }
  });
}

mg_status mg_cmd_generate(const mg_generate_options* o) {
  return guarded([&] {
    require(o && o->out_dir, "mg_cmd_generate: out_dir required");
    GenerateOptions opt;
    if (o->spec_file) opt.spec_file = o->spec_file;
    if (o->has_seed) opt.seed = o->seed;
    opt.out_dir = o->out_dir;
    cmd_generate(opt);
  });
}

mg_status mg_cmd_preprocess(const mg_preprocess_options* o) {
  return guarded([&] {
    require(o && o->dataset_dir && o->out_dir, "mg_cmd_preprocess: dataset_dir and out_dir required");
    PreprocessCommandOptions opt;
    opt.dataset_dir = o->dataset_dir;
    opt.out_dir = o->out_dir;
    opt.registration = o->register_meshes != 0;
    if (o->radius > 0.0) opt.radius = o->radius;
    opt.reference_index = o->reference_index;
    cmd_preprocess(opt);
  });
}

mg_status mg_cmd_train(const mg_train_options* o) {
  return guarded([&] {
    require(o && o->features_dir && o->out_dir, "mg_cmd_train: features_dir and out_dir required");
    TrainCommandOptions opt;
    opt.features_dir = o->features_dir;
    opt.out_dir = o->out_dir;
    if (o->config_file) opt.config_file = o->config_file;
    if (o->mode) opt.mode = parse_mode(o->mode);
    if (o->epochs > 0) opt.epochs = o->epochs;
    if (o->has_seed) opt.seed = o->seed;
    cmd_train(opt);
  });
}

mg_status mg_cmd_inspect(const mg_inspect_options* o) {
  return guarded([&] {
    require(o && o->checkpoint_dir && o->features_dir && o->out_dir,
            "mg_cmd_inspect: checkpoint_dir, features_dir and out_dir required");
    InspectCommandOptions opt;
    opt.checkpoint_dir = o->checkpoint_dir;
    opt.features_dir = o->features_dir;
    opt.out_dir = o->out_dir;
    if (o->layers) {
      opt.layers.clear();
      for (const auto& l : split_list(o->layers)) opt.layers.push_back(parse_layer(l));
    }
    if (o->groupings) {
      opt.groupings.clear();
      for (const auto& g : split_list(o->groupings)) opt.groupings.push_back(parse_grouping(g));
    }
    if (o->split) opt.split = parse_split(o->split);
    if (o->sample_cap > 0) opt.sample_cap = o->sample_cap;
    opt.seed = o->seed;
    opt.svg = o->svg != 0;
    cmd_inspect(opt);
  });
}

mg_status mg_cmd_evaluate(const mg_evaluate_options* o) {
  return guarded([&] {
    require(o && o->checkpoint_dir && o->features_dir && o->out_dir,
            "mg_cmd_evaluate: checkpoint_dir, features_dir and out_dir required");
    EvaluateCommandOptions opt;
    opt.checkpoint_dir = o->checkpoint_dir;
    opt.features_dir = o->features_dir;
    opt.out_dir = o->out_dir;
    opt.per_site = o->per_site != 0;
    if (o->split) opt.split = parse_split(o->split);
    cmd_evaluate(opt);
  });
}

mg_status mg_cmd_run_all(const mg_run_all_options* o) {
  return guarded([&] {
    require(o && o->out_dir, "mg_cmd_run_all: out_dir required");
    RunAllOptions opt;
    if (o->spec_file) opt.spec_file = o->spec_file;
    if (o->train_config_file) opt.train_config_file = o->train_config_file;
    if (o->has_seed) opt.seed = o->seed;
    if (o->epochs > 0) opt.epochs = o->epochs;
    opt.svg = o->svg != 0;
    opt.out_dir = o->out_dir;
    cmd_run_all(opt);
  });
}

}  // extern "C"
