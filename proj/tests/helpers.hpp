#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "meshgnn/mesh.hpp"
#include "meshgnn/registration.hpp"
#include "oracles.hpp"

namespace testutil {

inline meshgnn::Mesh tetrahedron() {
  meshgnn::Vertices v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  meshgnn::Faces f(4, 3);
  f << 0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3;
  return meshgnn::Mesh::from_faces(v, f, "tet");
}

inline meshgnn::RigidTransform random_transform(std::mt19937_64& gen, double max_shift = 50.0) {
  meshgnn::RigidTransform xf;
  xf.rotation = oracle::random_rotation(gen);
  std::uniform_real_distribution<double> u(-max_shift, max_shift);
  xf.translation = Eigen::Vector3d(u(gen), u(gen), u(gen));
  return xf;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("meshgnn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
