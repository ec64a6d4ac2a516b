// Command-line front end. Talks to the library only through the C API.
#include "meshgnn/meshgnn.h"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

int report(mg_status status, const char* command) {
  if (status == MG_OK) return 0;
  std::fprintf(stderr, "{\"error\":\"%s\",\"command\":\"%s\",\"message\":\"%s\"}\n", mg_status_name(status), command,
               json_escape(mg_last_error()).c_str());
  return static_cast<int>(status);
}

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-graph GCN brain-shape classification pipeline with layer-wise embedding inspection"};
  app.set_version_flag("--version", std::string(mg_version()));
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  app.add_option("--seed", seed, "Seed overriding the config seed");
  app.add_option("--config", config, "Config file (synth spec for generate/run-all, train config for train)");
  app.add_option("--out", out, "Output directory");

  auto* generate = app.add_subcommand("generate", "Generate a synthetic multi-site mesh dataset");

  auto* preprocess = app.add_subcommand("preprocess", "Optional rigid registration, then FPFH node features");
  std::string dataset_dir, register_flag = "off", radius = "auto";
  std::size_t reference = 0;
  preprocess->add_option("dataset", dataset_dir, "Dataset archive directory")->required();
  preprocess->add_option("--register", register_flag, "Rigid registration to the reference subject")
      ->check(CLI::IsMember({"on", "off"}));
  preprocess->add_option("--radius", radius, "FPFH radius in mm or 'auto'");
  preprocess->add_option("--reference", reference, "Reference subject index for registration");

  auto* train = app.add_subcommand("train", "Train a shared or non-shared multi-graph GCN");
  std::string features_dir, mode;
  int epochs = 0;
  train->add_option("features", features_dir, "Features archive directory")->required();
  train->add_option("--mode", mode, "Submodel mode")->check(CLI::IsMember({"shared", "non-shared"}));
  train->add_option("--epochs", epochs, "Override epoch count");

  auto* inspect = app.add_subcommand("inspect", "Layer-wise embedding PCA scatter data and separability reports");
  std::string checkpoint_dir, layers = "gcn,fc1,fc2", groupings = "label,site", split = "test";
  std::size_t cap = 500;
  bool svg = false;
  inspect->add_option("checkpoint", checkpoint_dir, "Checkpoint directory")->required();
  inspect->add_option("features", features_dir, "Features archive directory")->required();
  inspect->add_option("--layers", layers, "Comma list of gcn,fc1,fc2");
  inspect->add_option("--groupings", groupings, "Comma list of label,site");
  inspect->add_option("--split", split, "Subjects to inspect")->check(CLI::IsMember({"train", "val", "test"}));
  inspect->add_option("--sample-cap", cap, "Maximum subjects per group");
  inspect->add_flag("--svg", svg, "Also render SVG scatter plots");

  auto* evaluate = app.add_subcommand("evaluate", "ROC curves and AUC on the test split");
  bool per_site = false;
  evaluate->add_option("checkpoint", checkpoint_dir, "Checkpoint directory")->required();
  evaluate->add_option("features", features_dir, "Features archive directory")->required();
  evaluate->add_option("--split", split, "Subjects to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
  evaluate->add_flag("--per-site", per_site, "One ROC file per site");

  auto* run_all = app.add_subcommand("run-all", "Generate, preprocess and run the four-variant experiment grid");
  std::string train_config;
  run_all->add_option("--train-config", train_config, "Train config file");
  run_all->add_option("--epochs", epochs, "Override epoch count");
  run_all->add_flag("--svg", svg, "Also render SVG scatter plots");

  // Global flags may also follow the subcommand.
  for (auto* sub : {generate, preprocess, train, inspect, evaluate, run_all}) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  auto need_out = [&](const char* cmd) {
    if (out.empty()) {
      std::fprintf(stderr, "{\"error\":\"invalid_argument\",\"command\":\"%s\",\"message\":\"--out is required\"}\n", cmd);
      return false;
    }
    return true;
  };

  if (*generate) {
    if (!need_out("generate")) return MG_ERR_INVALID_ARGUMENT;
    mg_generate_options o{opt_cstr(config), out.c_str(), seed.value_or(0), seed ? 1 : 0};
    return report(mg_cmd_generate(&o), "generate");
  }
  if (*preprocess) {
    if (!need_out("preprocess")) return MG_ERR_INVALID_ARGUMENT;
    double r = 0.0;
    if (radius != "auto") {
      try {
        r = std::stod(radius);
      } catch (const std::exception&) {
        r = -1.0;
      }
      if (!(r > 0.0)) {
        std::fprintf(stderr, "{\"error\":\"invalid_argument\",\"command\":\"preprocess\",\"message\":\"--radius must be 'auto' or a positive number\"}\n");
        return MG_ERR_INVALID_ARGUMENT;
      }
    }
    mg_preprocess_options o{dataset_dir.c_str(), out.c_str(), register_flag == "on" ? 1 : 0, r, reference};
    return report(mg_cmd_preprocess(&o), "preprocess");
  }
  if (*train) {
    if (!need_out("train")) return MG_ERR_INVALID_ARGUMENT;
    mg_train_options o{features_dir.c_str(), out.c_str(), opt_cstr(config), opt_cstr(mode), epochs,
                       seed.value_or(0), seed ? 1 : 0};
    return report(mg_cmd_train(&o), "train");
  }
  if (*inspect) {
    if (!need_out("inspect")) return MG_ERR_INVALID_ARGUMENT;
    mg_inspect_options o{checkpoint_dir.c_str(), features_dir.c_str(), out.c_str(), layers.c_str(), groupings.c_str(),
                         split.c_str(), cap, seed.value_or(0), svg ? 1 : 0};
    return report(mg_cmd_inspect(&o), "inspect");
  }
  if (*evaluate) {
    if (!need_out("evaluate")) return MG_ERR_INVALID_ARGUMENT;
    mg_evaluate_options o{checkpoint_dir.c_str(), features_dir.c_str(), out.c_str(), split.c_str(), per_site ? 1 : 0};
    return report(mg_cmd_evaluate(&o), "evaluate");
  }
  if (*run_all) {
    if (!need_out("run-all")) return MG_ERR_INVALID_ARGUMENT;
    mg_run_all_options o{opt_cstr(config), opt_cstr(train_config), out.c_str(), seed.value_or(0), seed ? 1 : 0, epochs,
                         svg ? 1 : 0};
    return report(mg_cmd_run_all(&o), "run-all");
  }
  return 0;
}
