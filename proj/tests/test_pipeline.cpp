#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "meshgnn/error.hpp"
#include "meshgnn/pipeline.hpp"
#include "smoke.hpp"

using namespace meshgnn;
namespace fs = std::filesystem;

namespace {

void write_spec(const fs::path& file, const SynthSpec& spec) {
  std::ofstream(file) << spec_to_json(spec).dump(2);
}

std::string first_line(const fs::path& file) {
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  return line;
}

// Every regular file except run manifests, keyed by relative path.
std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run_manifest.json") continue;
    out[fs::relative(e.path(), root).generic_string()] = testutil::slurp(e.path());
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("default generate lists 15 structures per subject and is reproducible") {
  const auto dir = testutil::scratch_dir("pipe_default");
  SynthSpec spec;
  spec.subjects_per_site = {2, 1, 1};
  spec.icosphere_level = 0;
  write_spec(dir / "spec.json", spec);
  cmd_generate({dir / "spec.json", std::nullopt, dir / "a"});
  cmd_generate({dir / "spec.json", std::nullopt, dir / "b"});
  const std::string header = first_line(dir / "a" / "manifest.csv");
  CHECK(std::count(header.begin(), header.end(), ',') == 4 + 15 - 1);
  CHECK(header.find("structure_14") != std::string::npos);
  CHECK(tree_contents(dir / "a") == tree_contents(dir / "b"));
  CHECK(fs::exists(dir / "a" / "run_manifest.json"));
  const auto loaded = read_dataset_archive(dir / "a");
  CHECK(loaded.structures == 15);
  CHECK(loaded.subjects.size() == 8);
}

TEST_CASE("malformed spec names the offending key") {
  const auto dir = testutil::scratch_dir("pipe_badspec");
  std::ofstream(dir / "spec.json") << R"({"structures": 3, "noise": 0.1})";
  try {
    cmd_generate({dir / "spec.json", std::nullopt, dir / "out"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("noise") != std::string::npos);
  }
  std::ofstream(dir / "broken.json") << "{\"structures\": ";
  try {
    cmd_generate({dir / "broken.json", std::nullopt, dir / "out"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
  }
}

TEST_CASE("preprocess: transforms only with registration, rigid copies recover site transforms") {
  const auto dir = testutil::scratch_dir("pipe_pre");
  SynthSpec spec = testutil::smoke_spec(3, 1, 1);
  spec.class_effect = {1.0};
  spec.vertex_noise_sd = 0.0;
  write_spec(dir / "spec.json", spec);
  cmd_generate({dir / "spec.json", std::nullopt, dir / "ds"});
  cmd_preprocess({dir / "ds", false, std::nullopt, 0, dir / "noreg"});
  CHECK_FALSE(fs::exists(dir / "noreg" / "transforms.json"));
  cmd_preprocess({dir / "ds", true, std::nullopt, 0, dir / "reg"});
  REQUIRE(fs::exists(dir / "reg" / "transforms.json"));

  const auto sites = nlohmann::json::parse(testutil::slurp(dir / "ds" / "sites.json"));
  std::vector<RigidTransform> truth;
  for (const auto& s : sites) truth.push_back(transform_from_json(s.at("transform")));
  const auto data = read_features_archive(dir / "reg");
  const auto ds = read_dataset_archive(dir / "ds");
  const RigidTransform& ref_site = truth[0];  // subject 0 is the reference
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const RigidTransform expected = ref_site.compose(truth[static_cast<std::size_t>(ds.subjects[i].site_index)].inverse());
    for (const auto& xf : data.transforms[i]) {
      CHECK((xf.rotation - expected.rotation).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((xf.translation - expected.translation).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  // Re-running without registration into the same directory drops stale transforms.
  cmd_preprocess({dir / "ds", false, std::nullopt, 0, dir / "reg"});
  CHECK_FALSE(fs::exists(dir / "reg" / "transforms.json"));
}

TEST_CASE("features archive round trip") {
  const auto dir = testutil::scratch_dir("pipe_features");
  const auto data = testutil::smoke_data(testutil::smoke_spec(2, 1, 1), true);
  write_features_archive(dir, data);
  const auto back = read_features_archive(dir);
  REQUIRE(back.subjects.size() == data.subjects.size());
  CHECK(back.options.registration);
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    CHECK(back.subjects[i].subject_id == data.subjects[i].subject_id);
    CHECK(back.subjects[i].split == data.subjects[i].split);
    for (std::size_t k = 0; k < data.subjects[i].features.size(); ++k) {
      CHECK(back.subjects[i].features[k] == data.subjects[i].features[k]);
      CHECK(back.subjects[i].meshes[k].vertices() == data.subjects[i].meshes[k].vertices());
      CHECK(back.transforms[i][k].rotation == data.transforms[i][k].rotation);
    }
  }
}

TEST_CASE("missing upstream artifacts name the prior command") {
  const auto dir = testutil::scratch_dir("pipe_missing");
  auto expect_missing = [](const std::function<void()>& f, const std::string& command) {
    try {
      f();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingArtifact);
      CHECK(std::string(e.what()).find(command) != std::string::npos);
    }
  };
  expect_missing([&] { cmd_preprocess({dir / "nothing", false, std::nullopt, 0, dir / "f"}); }, "generate");
  expect_missing([&] { cmd_train({dir / "nothing", std::nullopt, std::nullopt, 1, 0, dir / "m"}); }, "preprocess");
  expect_missing([&] { cmd_evaluate({dir / "nothing", dir / "nothing", false, Split::Test, dir / "e"}); }, "train");
  InspectCommandOptions io;
  io.checkpoint_dir = dir / "nothing";
  io.features_dir = dir / "nothing";
  io.out_dir = dir / "i";
  expect_missing([&] { cmd_inspect(io); }, "train");
}

TEST_CASE("train, evaluate and inspect produce the documented files") {
  const auto dir = testutil::scratch_dir("pipe_stages");
  write_spec(dir / "spec.json", testutil::smoke_spec(4, 2, 4));
  cmd_generate({dir / "spec.json", std::nullopt, dir / "ds"});
  cmd_preprocess({dir / "ds", false, std::nullopt, 0, dir / "f"});

  for (const char* mode : {"shared", "non-shared"}) {
    const fs::path m = dir / mode;
    cmd_train({dir / "f", std::nullopt, parse_mode(mode), 3, 1, m});
    for (const char* f : {"checkpoint.json", "params.bin", "history.csv", "train_config.json"})
      CHECK(fs::exists(m / f));
    std::ifstream hist(m / "history.csv");
    int lines = 0;
    for (std::string l; std::getline(hist, l);) ++lines;
    CHECK(lines == 4);
    CheckpointMeta meta;
    const auto params = load_checkpoint(m, &meta);
    CHECK(params.config.mode == parse_mode(mode));
    CHECK(meta.config_hash.size() == 16);

    cmd_evaluate({m, dir / "f", true, Split::Test, m / "eval"});
    for (const char* f : {"roc_all.csv", "roc_site0.csv", "roc_site1.csv", "summary.json"}) CHECK(fs::exists(m / "eval" / f));
    const auto summary = nlohmann::json::parse(testutil::slurp(m / "eval" / "summary.json"));
    for (const auto& row : summary) {
      CHECK(row.at("auc").get<double>() >= 0.0);
      CHECK(row.at("auc").get<double>() <= 1.0);
    }

    InspectCommandOptions io;
    io.checkpoint_dir = m;
    io.features_dir = dir / "f";
    io.out_dir = m / "inspect";
    cmd_inspect(io);
    int reports = 0;
    for (const auto& e : fs::directory_iterator(m / "inspect"))
      if (e.path().filename().string().rfind("report_", 0) == 0) ++reports;
    CHECK(reports == 6);
    const auto first = testutil::slurp(m / "inspect" / "scatter_gcn_label.csv");
    cmd_inspect(io);
    CHECK(testutil::slurp(m / "inspect" / "scatter_gcn_label.csv") == first);
  }
  // Both modes differ only in parameter layout.
  const auto a = nlohmann::json::parse(testutil::slurp(dir / "shared" / "train_config.json"));
  auto b = nlohmann::json::parse(testutil::slurp(dir / "non-shared" / "train_config.json"));
  b["mode"] = a["mode"];
  CHECK(a == b);
}

TEST_CASE("untrained model scores near chance on balanced data") {
  auto spec = testutil::smoke_spec(2, 2, 40);
  spec.class_effect = {1.0};
  const auto data = testutil::smoke_data(spec);
  AdjacencyCache cache;
  const auto test = training_subjects(data, Split::Test, cache);
  ModelConfig mc;
  mc.structures = 2;
  const auto rows = evaluate_subjects(init_params(mc, 0), test, false);
  CHECK(rows[0].auc >= 0.35);
  CHECK(rows[0].auc <= 0.65);
}

TEST_CASE("config hash is stable and key-order independent") {
  const nlohmann::json a = {{"x", 1}, {"y", {1, 2}}};
  const nlohmann::json b = nlohmann::json::parse(R"({"y":[1,2],"x":1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash({{"x", 2}}));
}

}  // TEST_SUITE
