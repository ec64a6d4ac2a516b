// Acceptance gate. Prints one PASS/FAIL line per criterion; exit status is
// non-zero when any selected criterion fails.
//
//   meshgnn_acceptance            run every criterion
//   meshgnn_acceptance --only 6   run a single criterion

#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "meshgnn/evaluation.hpp"
#include "meshgnn/features.hpp"
#include "meshgnn/inspection.hpp"
#include "meshgnn/pipeline.hpp"
#include "meshgnn/registration.hpp"
#include "meshgnn/synthgen.hpp"
#include "meshgnn/training.hpp"
#include "oracles.hpp"

using namespace meshgnn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- 1 ------------------------------------------------------------------

Outcome registration_recovery() {
  const auto t0 = Clock::now();
  double worst_rot = 0.0, worst_rms = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed) + 1);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    Vertices src(200, 3);
    for (long i = 0; i < src.rows(); ++i) src.row(i) << u(gen), u(gen), u(gen);
    const RigidTransform truth = testutil::random_transform(gen, 50.0);
    const Vertices dst = apply_transform(src, truth);
    const RigidTransform got = umeyama_rigid(src, dst);
    worst_rot = std::max(worst_rot, (got.rotation - truth.rotation).norm());
    worst_rms = std::max(worst_rms, rms_residual(src, dst, got));
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = worst_rot < 1e-6 && worst_rms < 1e-9 && t < 5.0;
  o.detail = "max rotation error " + fmt("%.3g", worst_rot) + " (< 1e-6), max residual RMS " + fmt("%.3g", worst_rms) +
             " (< 1e-9), " + fmt("%.2f", t) + " s (< 5 s)";
  return o;
}

// ---- 2 ------------------------------------------------------------------

Outcome fpfh_pose_invariance() {
  const auto t0 = Clock::now();
  const Mesh m = icosphere(3);
  const FeatureMatrix base = compute_fpfh(m);
  std::mt19937_64 gen(2);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Mesh moved = apply_transform(m, testutil::random_transform(gen, 50.0));
    worst = std::max(worst, (compute_fpfh(moved) - base).cwiseAbs().maxCoeff());
  }
  const double t = seconds_since(t0);
  return {worst < 1e-6 && t < 30.0,
          "max feature deviation " + fmt("%.3g", worst) + " (< 1e-6), " + fmt("%.2f", t) + " s (< 30 s)"};
}

// ---- 3 ------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, failures = 0;
  double worst = 0.0;
  for (auto mode : {SubmodelMode::Shared, SubmodelMode::NonShared}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = testutil::gradient_check(mode, 100 + seed);
      checked += r.checked;
      failures += r.failures;
      worst = std::max(worst, r.worst_rel);
    }
  }
  const double t = seconds_since(t0);
  return {failures == 0 && checked > 0 && t < 60.0,
          std::to_string(checked) + " entries, " + std::to_string(failures) + " beyond rel. err 1e-4 (worst " +
              fmt("%.3g", worst) + "), " + fmt("%.2f", t) + " s (< 60 s)"};
}

// ---- 4 ------------------------------------------------------------------

Outcome auc_oracle() {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> size(2, 300);
  std::bernoulli_distribution coin(0.5), coarse(0.3);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = size(gen);
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      y.push_back(coin(gen) ? 1 : 0);
      // A share of instances use rounded scores so ties are exercised.
      const double v = nd(gen) + 0.7 * y.back();
      s.push_back(coarse(gen) ? std::round(v * 4.0) / 4.0 : v);
    }
    y[0] = 0;
    y[1] = 1;
    worst = std::max(worst, std::abs(roc_auc(s, y).auc - oracle::pairwise_auc(s, y)));
  }
  return {worst < 1e-12, "max |auc - pairwise statistic| " + fmt("%.3g", worst) + " over 50 instances (< 1e-12)"};
}

// ---- 5 ------------------------------------------------------------------

Outcome parameter_efficiency() {
  ModelConfig shared;
  ModelConfig separate;
  separate.mode = SubmodelMode::NonShared;
  const auto a = parameter_count(init_params(shared, 0));
  const auto b = parameter_count(init_params(separate, 0));
  const bool ok = b.gcn == 15 * a.gcn && a.head == b.head && a.gcn == 3104 && a.head == 15458;
  return {ok, "gcn shared " + std::to_string(a.gcn) + ", non-shared " + std::to_string(b.gcn) + " (ratio " +
                  fmt("%.1f", static_cast<double>(b.gcn) / static_cast<double>(a.gcn)) + "), head " +
                  std::to_string(a.head) + " / " + std::to_string(b.head)};
}

// ---- 6, 7, 8: synthetic reproduction -----------------------------------

// Two acquisition sites with 100 subjects each (60/20/20), five structures,
// plus a third site with a novel rigid offset that only contributes test
// subjects. Subject streams are keyed by site, so the first two sites are
// identical to a stand-alone two-site dataset.
SynthSpec experiment_spec() {
  SynthSpec spec;
  spec.structures = 5;
  spec.subjects_per_site = {60, 20, 20};
  spec.sites = {{"site0", 0.0, 0.0, 1.0, std::nullopt},
                {"site1", 20.0, 0.5, 1.0, std::nullopt},
                {"heldout", 35.0, 0.8, 1.0, SplitCounts{0, 0, 40}}};
  spec.icosphere_level = 2;
  spec.seed = 2024;
  return spec;
}

constexpr std::uint64_t kTrainSeed = 7;

struct Variant {
  TrainResult model;
  std::vector<TrainingSubject> test_in;   // sites 0 and 1
  std::vector<TrainingSubject> test_out;  // held-out site
  double seconds = 0.0;
};

class Experiment {
 public:
  Experiment() {
    const auto t0 = Clock::now();
    const auto ds = generate_dataset(experiment_spec());
    for (bool reg : {false, true}) {
      PreprocessOptions opt;
      opt.registration = reg;
      data_[reg] = preprocess(ds.subjects, opt);
    }
    setup_seconds_ = seconds_since(t0);
  }

  const Variant& get(bool reg, SubmodelMode mode) {
    const auto key = std::make_pair(reg, mode);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const auto t0 = Clock::now();
    AdjacencyCache adj;
    const auto& data = data_.at(reg);
    const auto train_set = training_subjects(data, Split::Train, adj);
    const auto val_set = training_subjects(data, Split::Val, adj);
    TrainConfig cfg;
    cfg.seed = kTrainSeed;
    cfg.mode = mode;
    cfg.registration = reg;
    Variant v;
    std::fprintf(stderr, "training %s %s on %zu subjects\n", to_string(mode).c_str(), reg ? "reg" : "noreg",
                 train_set.size());
    v.model = train(train_set, val_set, cfg);
    for (auto& s : training_subjects(data, Split::Test, adj)) {
      (s.site == "heldout" ? v.test_out : v.test_in).push_back(std::move(s));
    }
    v.seconds = seconds_since(t0);
    return cache_.emplace(key, std::move(v)).first->second;
  }

  double setup_seconds() const { return setup_seconds_; }

 private:
  std::map<bool, ProcessedDataset> data_;
  std::map<std::pair<bool, SubmodelMode>, Variant> cache_;
  double setup_seconds_ = 0.0;
};

double test_auc(const Variant& v, const std::vector<TrainingSubject>& subjects) {
  return evaluate_subjects(v.model.params, subjects, false).at(0).auc;
}

double gcn_silhouette(const Variant& v, Grouping g) {
  const auto recs = extract_embeddings(v.model.params, v.test_in);
  return separability_report(recs, Layer::Gcn, g, 500, kTrainSeed).silhouette_2d;
}

Outcome sharing_effect(Experiment& ex) {
  const auto t0 = Clock::now();
  const auto& shared = ex.get(true, SubmodelMode::Shared);
  const auto& separate = ex.get(true, SubmodelMode::NonShared);
  const double s_shared = gcn_silhouette(shared, Grouping::Label);
  const double s_sep = gcn_silhouette(separate, Grouping::Label);
  const double auc_shared = test_auc(shared, shared.test_in);
  const double auc_sep = test_auc(separate, separate.test_in);
  const double t = seconds_since(t0) + ex.setup_seconds();
  Outcome o;
  o.pass = s_sep - s_shared >= 0.15 && auc_shared >= 0.90 && auc_sep >= 0.90 && t < 600.0;
  o.detail = "GCN label silhouette non-shared " + fmt("%.3f", s_sep) + " vs shared " + fmt("%.3f", s_shared) +
             " (gap " + fmt("%.3f", s_sep - s_shared) + ", need >= 0.15); test AUC shared " + fmt("%.3f", auc_shared) +
             ", non-shared " + fmt("%.3f", auc_sep) + " (need >= 0.90); " + fmt("%.0f", t) + " s (< 600 s)";
  return o;
}

Outcome site_encoding(Experiment& ex) {
  bool ok = true;
  std::ostringstream detail;
  for (auto mode : {SubmodelMode::Shared, SubmodelMode::NonShared}) {
    const auto& noreg = ex.get(false, mode);
    const auto& reg = ex.get(true, mode);
    const double site_noreg = gcn_silhouette(noreg, Grouping::Site);
    const double label_noreg = gcn_silhouette(noreg, Grouping::Label);
    const double site_reg = gcn_silhouette(reg, Grouping::Site);
    ok = ok && site_noreg >= 0.5 && site_noreg > label_noreg && site_reg <= 0.1;
    detail << to_string(mode) << ": unregistered site " << fmt("%.3f", site_noreg) << " (need >= 0.5) vs label "
           << fmt("%.3f", label_noreg) << ", registered site " << fmt("%.3f", site_reg) << " (need <= 0.1); ";
  }
  std::string d = detail.str();
  d.resize(d.size() - 2);
  return {ok, d};
}

Outcome generalization_gap(Experiment& ex) {
  bool ok = true;
  std::ostringstream detail;
  for (auto mode : {SubmodelMode::Shared, SubmodelMode::NonShared}) {
    const double with_reg = test_auc(ex.get(true, mode), ex.get(true, mode).test_out);
    const double without = test_auc(ex.get(false, mode), ex.get(false, mode).test_out);
    ok = ok && with_reg - without >= 0.05;
    detail << to_string(mode) << ": held-out AUC registered " << fmt("%.3f", with_reg) << ", unregistered "
           << fmt("%.3f", without) << " (difference " << fmt("%.3f", with_reg - without) << ", need >= 0.05); ";
  }
  std::string d = detail.str();
  d.resize(d.size() - 2);
  return {ok, d};
}

// ---- 9 ------------------------------------------------------------------

std::map<std::string, std::string> artifact_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run_manifest.json") continue;
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    out[fs::relative(e.path(), root).generic_string()] = testutil::slurp(e.path());
  }
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "meshgnn_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  SynthSpec spec;
  spec.structures = 3;
  spec.subjects_per_site = {6, 2, 4};
  spec.icosphere_level = 1;
  {
    std::ofstream(root / "spec.json") << spec_to_json(spec).dump(2);
  }
  for (const char* run : {"a", "b"}) {
    RunAllOptions o;
    o.spec_file = root / "spec.json";
    o.seed = 11;
    o.epochs = 3;
    o.out_dir = root / run;
    cmd_run_all(o);
  }
  const auto a = artifact_bytes(root / "a");
  const auto b = artifact_bytes(root / "b");
  std::size_t differing = 0;
  std::string first;
  for (const auto& [path, bytes] : a) {
    auto it = b.find(path);
    if (it == b.end() || it->second != bytes) {
      if (first.empty()) first = path;
      ++differing;
    }
  }
  const bool same_set = a.size() == b.size();
  std::string detail = std::to_string(a.size()) + " CSV/JSON artifacts compared, " + std::to_string(differing) +
                       " differ";
  if (!first.empty()) detail += " (first: " + first + ")";
  if (!same_set) detail += ", artifact sets differ";
  return {differing == 0 && same_set && !a.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }

  std::optional<Experiment> experiment;
  auto ex = [&]() -> Experiment& {
    if (!experiment) experiment.emplace();
    return *experiment;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"registration recovery", registration_recovery},
      {"FPFH pose invariance", fpfh_pose_invariance},
      {"gradient correctness", gradient_correctness},
      {"AUC oracle equivalence", auc_oracle},
      {"parameter efficiency", parameter_efficiency},
      {"submodel sharing vs GCN label separation", [&] { return sharing_effect(ex()); }},
      {"site encoding without registration", [&] { return site_encoding(ex()); }},
      {"held-out site generalization gap", [&] { return generalization_gap(ex()); }},
      {"run-all determinism", determinism},
  };

  if (only && (*only < 1 || *only > static_cast<int>(criteria.size()))) {
    std::fprintf(stderr, "no criterion %d\n", *only);
    return 2;
  }

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only && *only != id) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
