/* C interface to the meshgnn library. Objects are opaque handles released with
 * the matching *_free function. Every fallible call returns mg_status; on
 * failure mg_last_error() describes the problem (per thread, valid until the
 * next failing call on that thread). */
#ifndef MESHGNN_MESHGNN_H
#define MESHGNN_MESHGNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(MESHGNN_BUILDING_LIBRARY)
#define MESHGNN_API __attribute__((visibility("default")))
#else
#define MESHGNN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mg_status {
  MG_OK = 0,
  MG_ERR_INVALID_ARGUMENT = 1,
  MG_ERR_IO = 2,
  MG_ERR_PARSE = 3,
  MG_ERR_VALIDATION = 4,
  MG_ERR_NUMERIC = 5,
  MG_ERR_MISSING_ARTIFACT = 6,
  MG_ERR_BUFFER_TOO_SMALL = 7,
  MG_ERR_INTERNAL = 99
} mg_status;

MESHGNN_API const char* mg_version(void);
MESHGNN_API const char* mg_status_name(mg_status status);
MESHGNN_API const char* mg_last_error(void);

/* ---- meshes ---------------------------------------------------------- */

typedef struct mg_mesh mg_mesh;

/* Format chosen by extension (.off or .json). */
MESHGNN_API mg_status mg_mesh_load(const char* path, mg_mesh** out);
MESHGNN_API mg_status mg_mesh_save(const mg_mesh* mesh, const char* path);
MESHGNN_API mg_status mg_mesh_icosphere(int level, mg_mesh** out);
MESHGNN_API void mg_mesh_free(mg_mesh* mesh);

MESHGNN_API size_t mg_mesh_vertex_count(const mg_mesh* mesh);
MESHGNN_API size_t mg_mesh_face_count(const mg_mesh* mesh);
MESHGNN_API size_t mg_mesh_edge_count(const mg_mesh* mesh);

/* Row-major n x 3 buffers. */
MESHGNN_API mg_status mg_mesh_vertices(const mg_mesh* mesh, double* out, size_t out_len);
MESHGNN_API mg_status mg_mesh_normals(const mg_mesh* mesh, double* out, size_t out_len);
/* Applies x -> R x + t; rotation is row-major 3 x 3. */
MESHGNN_API mg_status mg_mesh_transform(const mg_mesh* mesh, const double rotation[9], const double translation[3],
                                        mg_mesh** out);

/* Row-major n x 33 FPFH matrix. radius <= 0 selects 2.5 x mean edge length. */
MESHGNN_API mg_status mg_mesh_fpfh(const mg_mesh* mesh, double radius, double* out, size_t out_len);

/* ---- registration / evaluation -------------------------------------- */

/* Rigid least-squares transform taking n source points onto n target points
 * (both row-major n x 3). */
MESHGNN_API mg_status mg_umeyama_rigid(const double* source, const double* target, size_t n, double rotation[9],
                                       double translation[3]);

MESHGNN_API mg_status mg_roc_auc(const double* scores, const int* labels, size_t n, double* auc);

/* ---- models ---------------------------------------------------------- */

typedef struct mg_model mg_model;

MESHGNN_API mg_status mg_model_load(const char* checkpoint_dir, mg_model** out);
MESHGNN_API void mg_model_free(mg_model* model);
MESHGNN_API int mg_model_structures(const mg_model* model);
MESHGNN_API int mg_model_is_shared(const mg_model* model);
MESHGNN_API size_t mg_model_embedding_width(const mg_model* model);
MESHGNN_API size_t mg_model_fc1_width(const mg_model* model);
MESHGNN_API mg_status mg_model_parameter_count(const mg_model* model, size_t* gcn, size_t* head);

/* Runs one subject (one mesh per structure, FPFH computed with `radius`,
 * <= 0 meaning auto). Output buffers may be NULL when not wanted. */
MESHGNN_API mg_status mg_model_forward(const mg_model* model, const mg_mesh* const* meshes, size_t mesh_count,
                                       double radius, double* gcn_out, size_t gcn_len, double* fc1_out,
                                       size_t fc1_len, double logits_out[2]);

/* ---- pipeline commands ------------------------------------------------ */

typedef struct mg_generate_options {
  const char* spec_file; /* NULL: built-in defaults */
  const char* out_dir;
  uint64_t seed;
  int has_seed;
} mg_generate_options;

typedef struct mg_preprocess_options {
  const char* dataset_dir;
  const char* out_dir;
  int register_meshes;
  double radius; /* <= 0: auto */
  size_t reference_index;
} mg_preprocess_options;

typedef struct mg_train_options {
  const char* features_dir;
  const char* out_dir;
  const char* config_file; /* NULL: defaults */
  const char* mode;        /* "shared", "non-shared" or NULL (config) */
  int epochs;              /* <= 0: config */
  uint64_t seed;
  int has_seed;
} mg_train_options;

typedef struct mg_inspect_options {
  const char* checkpoint_dir;
  const char* features_dir;
  const char* out_dir;
  const char* layers;    /* comma list of gcn,fc1,fc2; NULL: all */
  const char* groupings; /* comma list of label,site; NULL: both */
  const char* split;     /* NULL: test */
  size_t sample_cap;     /* 0: 500 */
  uint64_t seed;
  int svg;
} mg_inspect_options;

typedef struct mg_evaluate_options {
  const char* checkpoint_dir;
  const char* features_dir;
  const char* out_dir;
  const char* split; /* NULL: test */
  int per_site;
} mg_evaluate_options;

typedef struct mg_run_all_options {
  const char* spec_file;         /* NULL: defaults */
  const char* train_config_file; /* NULL: defaults */
  const char* out_dir;
  uint64_t seed;
  int has_seed;
  int epochs; /* <= 0: config */
  int svg;
} mg_run_all_options;

MESHGNN_API mg_status mg_cmd_generate(const mg_generate_options* options);
MESHGNN_API mg_status mg_cmd_preprocess(const mg_preprocess_options* options);
MESHGNN_API mg_status mg_cmd_train(const mg_train_options* options);
MESHGNN_API mg_status mg_cmd_inspect(const mg_inspect_options* options);
MESHGNN_API mg_status mg_cmd_evaluate(const mg_evaluate_options* options);
MESHGNN_API mg_status mg_cmd_run_all(const mg_run_all_options* options);

#ifdef __cplusplus
}
#endif

#endif /* MESHGNN_MESHGNN_H */
