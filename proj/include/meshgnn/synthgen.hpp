#pragma once

#include "meshgnn/features.hpp"
#include "meshgnn/mesh.hpp"
#include "meshgnn/registration.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace meshgnn {

// Unit-sphere icosahedron subdivided `level` times (level in [0, 5]).
Mesh icosphere(int level);

enum class Split { Train = 0, Val = 1, Test = 2 };
std::string to_string(Split split);
Split parse_split(const std::string& text);

struct SplitCounts {
  int train = 40;
  int val = 10;
  int test = 10;
  int of(Split s) const { return s == Split::Train ? train : s == Split::Val ? val : test; }
};

// Acquisition site: every subject of the site is moved by one rigid transform
// (random axis, angle uniform in [-rotation_max_rad, rotation_max_rad],
// translation of length offset_mm in a random direction).
struct SiteSpec {
  std::string name;
  double offset_mm = 0.0;
  double rotation_max_rad = 0.0;
  double global_scale = 1.0;  // optional non-rigid site effect, off by default
  std::optional<SplitCounts> counts;  // falls back to SynthSpec::subjects_per_site
};

struct SynthSpec {
  int structures = 15;
  SplitCounts subjects_per_site;
  std::vector<SiteSpec> sites = {{"site0", 0.0, 0.0, 1.0, std::nullopt}, {"site1", 20.0, 0.5, 1.0, std::nullopt}};
  // Stretch along a structure-specific axis for class-1 subjects; one value for
  // all structures or one per structure.
  std::vector<double> class_effect = {1.05};
  double vertex_noise_sd = 0.05;  // mm
  int icosphere_level = 3;
  std::uint64_t seed = 0;

  double class_effect_for(int structure) const;
};

nlohmann::json spec_to_json(const SynthSpec& spec);
// Unknown keys and type errors are reported by key name.
SynthSpec spec_from_json(const nlohmann::json& j);
void validate(const SynthSpec& spec);

struct SubjectSample {
  std::string subject_id;
  std::string site;
  int site_index = 0;
  int label = 0;
  Split split = Split::Train;
  std::vector<Mesh> meshes;           // one per structure
  std::vector<FeatureMatrix> features;  // filled by preprocessing
};

// Structure templates are subject-independent; class scaling, vertex noise and
// the site transform are applied on top per subject.
struct StructureTemplate {
  Mesh mesh;  // in structure-local coordinates (centred at origin)
  Eigen::Vector3d position;
  Eigen::Vector3d class_axis;
};

struct SynthDataset {
  SynthSpec spec;
  std::vector<StructureTemplate> templates;
  std::vector<RigidTransform> site_transforms;
  std::vector<SubjectSample> subjects;  // ordered by site, split, index

  std::vector<const SubjectSample*> split(Split s) const;
};

std::vector<StructureTemplate> make_templates(const SynthSpec& spec);
RigidTransform site_transform(const SynthSpec& spec, int site_index);
SynthDataset generate_dataset(const SynthSpec& spec);

}  // namespace meshgnn
