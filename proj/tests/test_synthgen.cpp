#include "doctest.h"

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "meshgnn/error.hpp"
#include "meshgnn/synthgen.hpp"

using namespace meshgnn;

namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.structures = 3;
  spec.subjects_per_site = {6, 2, 2};
  spec.icosphere_level = 1;
  spec.seed = 42;
  return spec;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("icosphere sizes") {
  const Mesh l0 = icosphere(0);
  CHECK(l0.vertex_count() == 12);
  CHECK(l0.face_count() == 20);
  CHECK(l0.edges().size() == 30);
  const Mesh l3 = icosphere(3);
  CHECK(l3.vertex_count() == 642);
  CHECK(l3.face_count() == 1280);
  for (int i = 0; i < l3.vertex_count(); ++i) CHECK(l3.vertices().row(i).norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(icosphere(-1), Error);
  CHECK_THROWS_AS(icosphere(6), Error);
}

TEST_CASE("no variation sources give identical same-site subjects") {
  SynthSpec spec = small_spec();
  spec.class_effect = {1.0};
  spec.vertex_noise_sd = 0.0;
  spec.sites = {{"only", 12.0, 0.4, 1.0, std::nullopt}};
  const auto ds = generate_dataset(spec);
  for (const auto& s : ds.subjects)
    for (int k = 0; k < spec.structures; ++k)
      CHECK(s.meshes[static_cast<std::size_t>(k)].vertices() == ds.subjects[0].meshes[static_cast<std::size_t>(k)].vertices());
}

TEST_CASE("site offset of 30 mm shows up in centroids") {
  SynthSpec spec = small_spec();
  spec.vertex_noise_sd = 0.01;
  spec.sites = {{"a", 0.0, 0.0, 1.0, std::nullopt}, {"b", 30.0, 0.0, 1.0, std::nullopt}};
  const auto ds = generate_dataset(spec);
  Eigen::Vector3d ca = Eigen::Vector3d::Zero(), cb = Eigen::Vector3d::Zero();
  int na = 0, nb = 0;
  for (const auto& s : ds.subjects) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& m : s.meshes) c += m.centroid();
    c /= static_cast<double>(s.meshes.size());
    if (s.site_index == 0) {
      ca += c;
      ++na;
    } else {
      cb += c;
      ++nb;
    }
  }
  CHECK(((cb / nb) - (ca / na)).norm() == doctest::Approx(30.0).epsilon(0.5 / 30.0));
}

TEST_CASE("same seed gives an identical dataset") {
  const auto a = generate_dataset(small_spec());
  const auto b = generate_dataset(small_spec());
  REQUIRE(a.subjects.size() == b.subjects.size());
  for (std::size_t i = 0; i < a.subjects.size(); ++i) {
    CHECK(a.subjects[i].subject_id == b.subjects[i].subject_id);
    CHECK(a.subjects[i].label == b.subjects[i].label);
    for (std::size_t k = 0; k < a.subjects[i].meshes.size(); ++k)
      CHECK(a.subjects[i].meshes[k].vertices() == b.subjects[i].meshes[k].vertices());
  }
  SynthSpec other = small_spec();
  other.seed = 43;
  CHECK(generate_dataset(other).subjects[0].meshes[0].vertices() != a.subjects[0].meshes[0].vertices());
}

TEST_CASE("labels are balanced per site and splits are sized as requested") {
  SynthSpec spec = small_spec();
  spec.subjects_per_site = {7, 3, 3};
  const auto ds = generate_dataset(spec);
  for (std::size_t si = 0; si < spec.sites.size(); ++si) {
    int pos = 0, n = 0;
    for (const auto& s : ds.subjects)
      if (s.site_index == static_cast<int>(si)) {
        pos += s.label;
        ++n;
      }
    CHECK(n == 13);
    CHECK(std::abs(2 * pos - n) <= 1);
  }
  CHECK(ds.split(Split::Train).size() == 14);
  CHECK(ds.split(Split::Test).size() == 6);
}

TEST_CASE("site effect is exactly rigid: registration removes it for noise-free subjects") {
  SynthSpec spec = small_spec();
  spec.vertex_noise_sd = 0.0;
  const auto ds = generate_dataset(spec);
  for (int k = 0; k < spec.structures; ++k) {
    std::vector<Mesh> meshes;
    std::vector<int> labels;
    for (const auto& s : ds.subjects) {
      meshes.push_back(s.meshes[static_cast<std::size_t>(k)]);
      labels.push_back(s.label);
    }
    // Reference: first class-0 subject; compare all class-0 subjects to it.
    const auto reg = register_dataset(meshes, std::size_t{0});
    for (std::size_t i = 0; i < meshes.size(); ++i)
      if (labels[i] == labels[0])
        CHECK((reg.meshes[i].vertices() - reg.meshes[0].vertices()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("spec JSON round trip and key-naming errors") {
  SynthSpec spec = small_spec();
  spec.class_effect = {1.1, 0.9, 1.05};
  spec.sites[1].counts = SplitCounts{3, 1, 1};
  const SynthSpec back = spec_from_json(spec_to_json(spec));
  CHECK(spec_to_json(back) == spec_to_json(spec));
  CHECK(back.class_effect_for(1) == 0.9);

  auto j = spec_to_json(spec);
  j["strucures"] = 3;
  try {
    spec_from_json(j);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("strucures") != std::string::npos);
  }
  auto k = spec_to_json(spec);
  k["vertex_noise_sd"] = "loud";
  try {
    spec_from_json(k);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("vertex_noise_sd") != std::string::npos);
  }
  auto bad = spec_to_json(spec);
  bad["class_effect"] = nlohmann::json::array({1.0, 1.0});
  CHECK_THROWS_AS(spec_from_json(bad), Error);
  auto negative = spec_to_json(spec);
  negative["vertex_noise_sd"] = -1.0;
  CHECK_THROWS_AS(spec_from_json(negative), Error);
}

}  // TEST_SUITE
