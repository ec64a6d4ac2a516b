#include "meshgnn/training.hpp"

#include "meshgnn/error.hpp"
#include "meshgnn/evaluation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

namespace meshgnn {

namespace {

std::vector<Eigen::Map<Eigen::ArrayXd>> flat_views(ModelParams& mp) {
  std::vector<Eigen::Map<Eigen::ArrayXd>> out;
  mp.for_each_tensor([&](auto& t) { out.emplace_back(t.data(), t.size()); });
  return out;
}

}  // namespace

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "train config '" + key + "': " + why);
  };
  if (!(c.learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) fail("beta1", "must be in [0, 1)");
  if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) fail("beta2", "must be in [0, 1)");
  if (!(c.epsilon > 0.0)) fail("epsilon", "must be > 0");
  if (c.epochs < 1) fail("epochs", "must be >= 1");
  if (c.batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(c.augment_max_offset_mm >= 0.0)) fail("augment_max_offset_mm", "must be >= 0");
  if (c.fpfh.radius && !(*c.fpfh.radius > 0.0)) fail("fpfh_radius", "must be > 0");
  if (!(c.fpfh.radius_scale > 0.0)) fail("fpfh_radius_scale", "must be > 0");
  if (c.hidden < 1 || c.fc_hidden < 1) fail("hidden", "widths must be >= 1");
}

nlohmann::json config_to_json(const TrainConfig& c) {
  nlohmann::json j = {{"learning_rate", c.learning_rate},
                      {"beta1", c.beta1},
                      {"beta2", c.beta2},
                      {"epsilon", c.epsilon},
                      {"epochs", c.epochs},
                      {"batch_size", c.batch_size},
                      {"augment_max_offset_mm", c.augment_max_offset_mm},
                      {"seed", c.seed},
                      {"mode", to_string(c.mode)},
                      {"registration", c.registration ? "on" : "off"},
                      {"fpfh_radius_scale", c.fpfh.radius_scale},
                      {"hidden", c.hidden},
                      {"fc_hidden", c.fc_hidden}};
  j["fpfh_radius"] = c.fpfh.radius ? nlohmann::json(*c.fpfh.radius) : nlohmann::json("auto");
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"learning_rate", "beta1", "beta2", "epsilon", "epochs",
                                              "batch_size", "augment_max_offset_mm", "seed", "mode",
                                              "registration", "fpfh_radius", "fpfh_radius_scale", "hidden",
                                              "fc_hidden"};
  if (!j.is_object()) throw Error(ErrorCode::Parse, "train config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw Error(ErrorCode::Parse, "train config has unknown key '" + it.key() + "'");
  }
  TrainConfig c;
  auto get = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      target = j.at(key).get<std::decay_t<decltype(target)>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::Parse, std::string("train config key '") + key + "' has the wrong type");
    }
  };
  get("learning_rate", c.learning_rate);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("epsilon", c.epsilon);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("augment_max_offset_mm", c.augment_max_offset_mm);
  get("seed", c.seed);
  get("fpfh_radius_scale", c.fpfh.radius_scale);
  get("hidden", c.hidden);
  get("fc_hidden", c.fc_hidden);
  if (j.contains("mode")) {
    std::string mode;
    get("mode", mode);
    c.mode = parse_mode(mode);
  }
  if (j.contains("registration")) {
    const auto& r = j.at("registration");
    if (r.is_boolean()) {
      c.registration = r.get<bool>();
    } else if (r == "on" || r == "off") {
      c.registration = r == "on";
    } else {
      throw Error(ErrorCode::Parse, "train config key 'registration' must be on|off");
    }
  }
  if (j.contains("fpfh_radius")) {
    const auto& r = j.at("fpfh_radius");
    if (r.is_number()) {
      c.fpfh.radius = r.get<double>();
    } else if (r != "auto") {
      throw Error(ErrorCode::Parse, "train config key 'fpfh_radius' must be a number or \"auto\"");
    }
  }
  validate(c);
  return c;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config) {
  bool finite = true;
  grads.for_each_tensor([&](const auto& t) { finite = finite && t.allFinite(); });
  if (!finite) throw Error(ErrorCode::Numeric, "adam_step: non-finite gradient");

  auto p = flat_views(params);
  auto g = flat_views(const_cast<ModelParams&>(grads));
  auto m = flat_views(state.m);
  auto v = flat_views(state.v);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw Error(ErrorCode::InvalidArgument, "adam_step: parameter layout mismatch");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != g[i].size() || p[i].size() != m[i].size() || p[i].size() != v[i].size()) {
      throw Error(ErrorCode::InvalidArgument, "adam_step: tensor shape mismatch");
    }
  }

  state.step += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i].square();
    p[i] -= config.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + config.epsilon);
  }
}

Mesh augment_translate(const Mesh& mesh, double max_offset_mm, Rng& rng) {
  if (!(max_offset_mm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "augment_translate: negative offset");
  if (max_offset_mm == 0.0) return mesh;
  Vertices v = mesh.vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (int c = 0; c < 3; ++c) v(i, c) += rng.uniform(-max_offset_mm, max_offset_mm);
  }
  return mesh.with_vertices(std::move(v));
}

std::shared_ptr<const NormalizedAdjacency> AdjacencyCache::get(int structure, const Mesh& mesh) {
  if (structure < 0) throw Error(ErrorCode::InvalidArgument, "AdjacencyCache: negative structure index");
  if (static_cast<std::size_t>(structure) >= entries_.size()) entries_.resize(static_cast<std::size_t>(structure) + 1);
  auto& e = entries_[static_cast<std::size_t>(structure)];
  if (!e.adjacency) {
    e.edges = mesh.edges();
    e.vertices = mesh.vertex_count();
    e.adjacency = std::make_shared<NormalizedAdjacency>(normalized_adjacency(mesh));
    return e.adjacency;
  }
  if (e.vertices == mesh.vertex_count() && e.edges == mesh.edges()) return e.adjacency;
  // Different topology for this structure: no sharing.
  return std::make_shared<NormalizedAdjacency>(normalized_adjacency(mesh));
}

std::string history_to_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,val_loss,val_auc\n";
  char buf[128];
  for (const auto& e : h.epochs) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss, e.val_auc);
    out += buf;
  }
  return out;
}

double mean_loss(const ModelParams& params, const std::vector<TrainingSubject>& subjects) {
  if (subjects.empty()) throw Error(ErrorCode::InvalidArgument, "mean_loss: no subjects");
  double sum = 0.0;
  for (const auto& s : subjects) sum += cross_entropy(forward(s.graphs, params).logits, s.label);
  return sum / static_cast<double>(subjects.size());
}

std::vector<double> class1_scores(const ModelParams& params, const std::vector<TrainingSubject>& subjects) {
  std::vector<double> out;
  out.reserve(subjects.size());
  for (const auto& s : subjects) {
    const Vector logits = forward(s.graphs, params).logits;
    out.push_back(logits(1) - logits(0));
  }
  return out;
}

namespace {

double safe_auc(const std::vector<double>& scores, const std::vector<TrainingSubject>& subjects) {
  std::vector<int> labels;
  labels.reserve(subjects.size());
  for (const auto& s : subjects) labels.push_back(s.label);
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<long>(labels.size())) return std::numeric_limits<double>::quiet_NaN();
  return roc_auc(scores, labels).auc;
}

std::vector<GraphInput> augmented_graphs(const TrainingSubject& subj, const TrainConfig& config, Rng& rng) {
  std::vector<GraphInput> out;
  out.reserve(subj.graphs.size());
  for (std::size_t s = 0; s < subj.graphs.size(); ++s) {
    const Mesh jittered = augment_translate(subj.meshes[s], config.augment_max_offset_mm, rng);
    out.push_back({subj.graphs[s].adjacency, compute_fpfh(jittered, config.fpfh)});
  }
  return out;
}

void accumulate(ModelParams& into, const ModelParams& g) {
  auto dst = flat_views(into);
  auto src = flat_views(const_cast<ModelParams&>(g));
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void scale(ModelParams& p, double f) {
  p.for_each_tensor([&](auto& t) { t *= f; });
}

}  // namespace

TrainResult train(const std::vector<TrainingSubject>& train_set, const std::vector<TrainingSubject>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  if (train_set.empty() || val_set.empty()) throw Error(ErrorCode::InvalidArgument, "train: empty train or validation split");
  const auto structures = train_set.front().graphs.size();
  for (const auto* set : {&train_set, &val_set}) {
    for (const auto& s : *set) {
      if (s.graphs.size() != structures || s.meshes.size() != structures) {
        throw Error(ErrorCode::InvalidArgument, "train: subject " + s.subject_id + " has inconsistent structure count");
      }
    }
  }

  ModelConfig mc;
  mc.structures = static_cast<int>(structures);
  mc.in_features = static_cast<int>(train_set.front().graphs.front().features.cols());
  mc.hidden = config.hidden;
  mc.fc_hidden = config.fc_hidden;
  mc.mode = config.mode;
  ModelParams params = init_params(mc, config.seed);
  AdamState adam = AdamState::zeros_like(params);

  Rng shuffle_rng = Rng::derive(config.seed, "shuffle");
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size), ++batch_index) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      ModelParams grad = params.zeros_like();
      for (std::size_t b = start; b < end; ++b) {
        const auto idx = order[b];
        const auto& subj = train_set[idx];
        std::vector<GraphInput> augmented;
        const std::vector<GraphInput>* graphs = &subj.graphs;
        if (config.augment_max_offset_mm > 0.0) {
          Rng aug = Rng::derive(config.seed, "augment", {static_cast<std::uint64_t>(idx), static_cast<std::uint64_t>(epoch)});
          augmented = augmented_graphs(subj, config, aug);
          graphs = &augmented;
        }
        const auto trace = forward(*graphs, params);
        LossAndGradients lg;
        try {
          lg = loss_and_gradients(trace, subj.label, *graphs, params);
        } catch (const Error& e) {
          throw Error(e.code(), std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index) + " (subject " + subj.subject_id + ")");
        }
        loss_sum += lg.loss;
        accumulate(grad, lg.gradients);
      }
      scale(grad, 1.0 / static_cast<double>(end - start));
      adam_step(params, grad, adam, config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.val_loss = mean_loss(params, val_set);
    rec.val_auc = safe_auc(class1_scores(params, val_set), val_set);
    if (!std::isfinite(rec.val_loss)) {
      throw Error(ErrorCode::Numeric, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.history.selected_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

}  // namespace meshgnn
