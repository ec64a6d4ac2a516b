#include "meshgnn/gnn.hpp"

#include "meshgnn/error.hpp"
#include "meshgnn/rng.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <fstream>

namespace meshgnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::string to_string(SubmodelMode mode) { return mode == SubmodelMode::Shared ? "shared" : "non-shared"; }

SubmodelMode parse_mode(const std::string& text) {
  if (text == "shared") return SubmodelMode::Shared;
  if (text == "non-shared" || text == "nonshared" || text == "non_shared") return SubmodelMode::NonShared;
  throw Error(ErrorCode::InvalidArgument, "unknown submodel mode '" + text + "' (expected shared|non-shared)");
}

NormalizedAdjacency normalized_adjacency(int node_count, const std::vector<Edge>& edges) {
  if (node_count < 1) throw Error(ErrorCode::InvalidArgument, "normalized_adjacency: empty graph");
  std::vector<double> degree(static_cast<std::size_t>(node_count), 1.0);  // self loop
  for (const auto& e : edges) {
    if (e[0] < 0 || e[1] < 0 || e[0] >= node_count || e[1] >= node_count || e[0] == e[1]) {
      throw Error(ErrorCode::InvalidArgument, "normalized_adjacency: bad edge");
    }
    degree[static_cast<std::size_t>(e[0])] += 1.0;
    degree[static_cast<std::size_t>(e[1])] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(node_count) + 2 * edges.size());
  for (int i = 0; i < node_count; ++i) triplets.emplace_back(i, i, 1.0 / degree[static_cast<std::size_t>(i)]);
  for (const auto& e : edges) {
    const double v = 1.0 / std::sqrt(degree[static_cast<std::size_t>(e[0])] * degree[static_cast<std::size_t>(e[1])]);
    triplets.emplace_back(e[0], e[1], v);
    triplets.emplace_back(e[1], e[0], v);
  }
  NormalizedAdjacency out;
  out.matrix.resize(node_count, node_count);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

NormalizedAdjacency normalized_adjacency(const Mesh& mesh) {
  return normalized_adjacency(mesh.vertex_count(), mesh.edges());
}

Matrix gcn_layer(const Matrix& h, const NormalizedAdjacency& p, const Matrix& w, Activation act) {
  if (h.rows() != p.size() || h.cols() != w.rows()) {
    throw Error(ErrorCode::InvalidArgument, "gcn_layer: shape mismatch");
  }
  Matrix z = (p.matrix * h) * w;
  if (act == Activation::Relu) z = z.cwiseMax(0.0);
  return z;
}

Vector global_mean_pool(const Matrix& h) {
  if (h.rows() == 0) throw Error(ErrorCode::InvalidArgument, "global_mean_pool: empty input");
  return h.colwise().mean().transpose();
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.for_each_tensor([](auto& t) { t.setZero(); });
  return z;
}

namespace {

Matrix glorot(Rng& rng, int fan_in, int fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

void validate_config(const ModelConfig& c) {
  if (c.structures < 1 || c.in_features < 1 || c.hidden < 1 || c.fc_hidden < 1 || c.classes < 2) {
    throw Error(ErrorCode::InvalidArgument, "invalid model configuration");
  }
}

Vector relu_mask(const Vector& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  validate_config(config);
  Rng rng = Rng::derive(seed, "init");
  ModelParams p;
  p.config = config;
  const int sets = config.mode == SubmodelMode::Shared ? 1 : config.structures;
  for (int s = 0; s < sets; ++s) {
    GcnWeights g;
    g.w1 = glorot(rng, config.in_features, config.hidden);
    g.w2 = glorot(rng, config.hidden, config.hidden);
    g.w3 = glorot(rng, config.hidden, config.hidden);
    p.gcn.push_back(std::move(g));
  }
  p.fc1_w = glorot(rng, config.embedding_width(), config.fc_hidden);
  p.fc1_b = Vector::Zero(config.fc_hidden);
  p.fc2_w = glorot(rng, config.fc_hidden, config.classes);
  p.fc2_b = Vector::Zero(config.classes);
  return p;
}

ParameterCount parameter_count(const ModelConfig& c) {
  const std::size_t per_set = static_cast<std::size_t>(c.in_features * c.hidden + 2 * c.hidden * c.hidden);
  const std::size_t sets = c.mode == SubmodelMode::Shared ? 1 : static_cast<std::size_t>(c.structures);
  ParameterCount out;
  out.gcn = per_set * sets;
  out.head = static_cast<std::size_t>(c.embedding_width() * c.fc_hidden + c.fc_hidden +
                                      c.fc_hidden * c.classes + c.classes);
  return out;
}

ParameterCount parameter_count(const ModelParams& params) {
  ParameterCount out;
  for (const auto& g : params.gcn) out.gcn += static_cast<std::size_t>(g.w1.size() + g.w2.size() + g.w3.size());
  out.head = static_cast<std::size_t>(params.fc1_w.size() + params.fc1_b.size() + params.fc2_w.size() +
                                      params.fc2_b.size());
  return out;
}

ForwardTrace forward(const std::vector<GraphInput>& sample, const ModelParams& params) {
  const auto& cfg = params.config;
  if (static_cast<int>(sample.size()) != cfg.structures) {
    throw Error(ErrorCode::InvalidArgument, "forward: sample has " + std::to_string(sample.size()) +
                                                " structures, model expects " + std::to_string(cfg.structures));
  }
  ForwardTrace t;
  t.structures.resize(sample.size());
  t.pooled.resize(cfg.structures, cfg.hidden);
  for (int s = 0; s < cfg.structures; ++s) {
    const auto& in = sample[static_cast<std::size_t>(s)];
    if (in.features.cols() != cfg.in_features) {
      throw Error(ErrorCode::InvalidArgument, "forward: structure " + std::to_string(s) + " has feature width " +
                                                  std::to_string(in.features.cols()) + ", expected " +
                                                  std::to_string(cfg.in_features));
    }
    if (!in.adjacency || in.adjacency->size() != in.features.rows()) {
      throw Error(ErrorCode::InvalidArgument, "forward: adjacency/feature size mismatch at structure " +
                                                  std::to_string(s));
    }
    const auto& p = in.adjacency->matrix;
    const auto& w = params.weights_for(s);
    auto& st = t.structures[static_cast<std::size_t>(s)];
    st.ph0 = p * in.features;
    st.z1 = st.ph0 * w.w1;
    st.h1 = st.z1.cwiseMax(0.0);
    st.ph1 = p * st.h1;
    st.z2 = st.ph1 * w.w2;
    st.h2 = st.z2.cwiseMax(0.0);
    st.ph2 = p * st.h2;
    st.z3 = st.ph2 * w.w3;
    st.h3 = st.z3.cwiseMax(0.0);
    t.pooled.row(s) = st.h3.colwise().mean();
  }
  t.gcn_embedding.resize(cfg.embedding_width());
  for (int s = 0; s < cfg.structures; ++s) {
    t.gcn_embedding.segment(static_cast<Eigen::Index>(s) * cfg.hidden, cfg.hidden) = t.pooled.row(s).transpose();
  }
  t.fc1_pre = params.fc1_w.transpose() * t.gcn_embedding + params.fc1_b;
  t.fc1 = t.fc1_pre.cwiseMax(0.0);
  t.logits = params.fc2_w.transpose() * t.fc1 + params.fc2_b;
  return t;
}

double cross_entropy(const Vector& logits, int label) {
  if (label < 0 || label >= logits.size()) throw Error(ErrorCode::InvalidArgument, "cross_entropy: bad label");
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(label);
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

LossAndGradients loss_and_gradients(const ForwardTrace& trace, int label, const std::vector<GraphInput>& sample,
                                    const ModelParams& params) {
  const auto& cfg = params.config;
  LossAndGradients out;
  out.loss = cross_entropy(trace.logits, label);
  if (!std::isfinite(out.loss)) throw Error(ErrorCode::Numeric, "non-finite loss");
  auto& g = out.gradients = params.zeros_like();

  Vector dlogits = softmax(trace.logits);
  dlogits(label) -= 1.0;
  g.fc2_w = trace.fc1 * dlogits.transpose();
  g.fc2_b = dlogits;
  const Vector dpre = (params.fc2_w * dlogits).cwiseProduct(relu_mask(trace.fc1_pre));
  g.fc1_w = trace.gcn_embedding * dpre.transpose();
  g.fc1_b = dpre;
  const Vector dz = params.fc1_w * dpre;

  for (int s = 0; s < cfg.structures; ++s) {
    const auto& st = trace.structures[static_cast<std::size_t>(s)];
    const auto& p = sample[static_cast<std::size_t>(s)].adjacency->matrix;
    const auto& w = params.weights_for(s);
    auto& gw = g.weights_for(s);
    const auto n = static_cast<double>(st.h3.rows());
    const Eigen::RowVectorXd dg = dz.segment(static_cast<Eigen::Index>(s) * cfg.hidden, cfg.hidden).transpose() / n;

    Matrix dz3 = (st.z3.array() > 0.0).cast<double>().matrix();
    dz3.array().rowwise() *= dg.array();
    gw.w3 += st.ph2.transpose() * dz3;
    // P is symmetric, so P^T (dZ W^T) = P (dZ W^T).
    Matrix dz2 = p * (dz3 * w.w3.transpose());
    dz2.array() *= (st.z2.array() > 0.0).cast<double>();
    gw.w2 += st.ph1.transpose() * dz2;
    Matrix dz1 = p * (dz2 * w.w2.transpose());
    dz1.array() *= (st.z1.array() > 0.0).cast<double>();
    gw.w1 += st.ph0.transpose() * dz1;
  }

  bool finite = true;
  g.for_each_tensor([&](const auto& t) { finite = finite && t.allFinite(); });
  if (!finite) throw Error(ErrorCode::Numeric, "non-finite gradient");
  return out;
}

namespace {

struct ArrayEntry {
  std::string name;
  Eigen::Index rows, cols;
};

template <class F>
void visit_named(ModelParams& p, F&& f) {
  for (std::size_t s = 0; s < p.gcn.size(); ++s) {
    const std::string prefix = "gcn" + std::to_string(s) + ".";
    f(prefix + "w1", p.gcn[s].w1);
    f(prefix + "w2", p.gcn[s].w2);
    f(prefix + "w3", p.gcn[s].w3);
  }
  f(std::string("fc1.w"), p.fc1_w);
  f(std::string("fc1.b"), p.fc1_b);
  f(std::string("fc2.w"), p.fc2_w);
  f(std::string("fc2.b"), p.fc2_b);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const CheckpointMeta& meta) {
  std::filesystem::create_directories(dir);
  ModelParams copy = params;
  nlohmann::json arrays = nlohmann::json::array();
  std::ofstream bin(dir / "params.bin", std::ios::binary);
  if (!bin) throw Error(ErrorCode::Io, "cannot write " + (dir / "params.bin").string());
  std::size_t offset = 0;
  visit_named(copy, [&](const std::string& name, auto& t) {
    const auto rows = t.rows();
    const auto cols = t.cols();
    // Eigen default storage is column-major; emit row-major.
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double v = t(r, c);
        bin.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
    arrays.push_back({{"name", name}, {"shape", {rows, cols}}, {"offset", offset}});
    offset += static_cast<std::size_t>(rows * cols);
  });
  if (!bin) throw Error(ErrorCode::Io, "write failed for params.bin");

  const auto& c = params.config;
  nlohmann::json j = {
      {"format", "meshgnn-checkpoint"},
      {"version", 1},
      {"mode", to_string(c.mode)},
      {"structures", c.structures},
      {"in_features", c.in_features},
      {"hidden", c.hidden},
      {"fc_hidden", c.fc_hidden},
      {"classes", c.classes},
      {"seed", meta.seed},
      {"config_hash", meta.config_hash},
      {"selected_epoch", meta.selected_epoch},
      {"data_file", "params.bin"},
      {"dtype", "float64-le"},
      {"arrays", arrays},
  };
  std::ofstream out(dir / "checkpoint.json");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::Io, "write failed for checkpoint.json");
}

ModelParams load_checkpoint(const std::filesystem::path& dir, CheckpointMeta* meta) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) {
    throw Error(ErrorCode::MissingArtifact, "no checkpoint at " + dir.string() + " (run `train` first)");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("checkpoint.json: ") + e.what());
  }
  ModelConfig c;
  try {
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.structures = j.at("structures").get<int>();
    c.in_features = j.at("in_features").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.fc_hidden = j.at("fc_hidden").get<int>();
    c.classes = j.at("classes").get<int>();
    if (meta) {
      meta->seed = j.at("seed").get<std::uint64_t>();
      meta->config_hash = j.at("config_hash").get<std::string>();
      meta->selected_epoch = j.at("selected_epoch").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("checkpoint.json: ") + e.what());
  }
  ModelParams p = init_params(c, 0);

  std::ifstream bin(dir / j.value("data_file", std::string("params.bin")), std::ios::binary);
  if (!bin) throw Error(ErrorCode::MissingArtifact, "checkpoint data file missing in " + dir.string());
  bin.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  bin.seekg(0);
  std::vector<double> data(bytes / sizeof(double));
  bin.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));

  const auto& arrays = j.at("arrays");
  std::size_t idx = 0;
  visit_named(p, [&](const std::string& name, auto& t) {
    if (idx >= arrays.size() || arrays[idx].at("name") != name) {
      throw Error(ErrorCode::Parse, "checkpoint array order mismatch at '" + name + "'");
    }
    const auto& a = arrays[idx++];
    const auto rows = a.at("shape")[0].get<Eigen::Index>();
    const auto cols = a.at("shape")[1].get<Eigen::Index>();
    const auto offset = a.at("offset").get<std::size_t>();
    if (rows != t.rows() || cols != t.cols()) throw Error(ErrorCode::Parse, "checkpoint shape mismatch for " + name);
    if (offset + static_cast<std::size_t>(rows * cols) > data.size()) {
      throw Error(ErrorCode::Parse, "checkpoint data truncated at " + name);
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index cc = 0; cc < cols; ++cc) t(r, cc) = data[offset + static_cast<std::size_t>(r * cols + cc)];
    }
  });
  return p;
}

}  // namespace meshgnn
