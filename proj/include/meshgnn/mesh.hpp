#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace meshgnn {

using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Edge = std::array<int, 2>;  // unordered pair stored as (lo, hi)

enum class MeshFormat { Off, Json };

// Closed triangular surface mesh. Construction validates topology and derives
// the undirected edge set, so every Mesh instance satisfies:
//  - face indices in range, no degenerate faces
//  - edges == deduplicated union of face edges, sorted lexicographically
//  - a single connected component
class Mesh {
 public:
  Mesh() = default;

  static Mesh from_faces(Vertices vertices, Faces faces, std::string name = {});

  // Same topology, new coordinates.
  Mesh with_vertices(Vertices vertices) const;

  const Vertices& vertices() const noexcept { return vertices_; }
  const Faces& faces() const noexcept { return faces_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  int vertex_count() const noexcept { return static_cast<int>(vertices_.rows()); }
  int face_count() const noexcept { return static_cast<int>(faces_.rows()); }
  std::size_t directed_edge_count() const noexcept { return 2 * edges_.size(); }

  Eigen::Vector3d centroid() const;
  double mean_edge_length() const;

 private:
  Vertices vertices_;
  Faces faces_;
  std::vector<Edge> edges_;
  std::string name_;
};

// Deduplicated, sorted undirected edges of a face list.
std::vector<Edge> edges_from_faces(const Faces& faces);

MeshFormat format_from_path(const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path, MeshFormat format);
Mesh load_mesh(const std::filesystem::path& path);
void save_mesh(const std::filesystem::path& path, const Mesh& mesh, MeshFormat format);
void save_mesh(const std::filesystem::path& path, const Mesh& mesh);

Mesh parse_off(const std::string& text, std::string name = {});
std::string to_off(const Mesh& mesh);
Mesh parse_mesh_json(const std::string& text);
std::string to_mesh_json(const Mesh& mesh);

// Unit per-vertex normals: area-weighted mean of incident face normals,
// flipped globally when they point toward the centroid on average.
Vertices vertex_normals(const Mesh& mesh);

}  // namespace meshgnn
