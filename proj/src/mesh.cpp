#include "meshgnn/mesh.hpp"

#include "meshgnn/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace meshgnn {

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Edge> edges_from_faces(const Faces& faces) {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(faces.rows()) * 3);
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = faces(f, k);
      int b = faces(f, (k + 1) % 3);
      edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

Mesh Mesh::from_faces(Vertices vertices, Faces faces, std::string name) {
  const auto n = static_cast<int>(vertices.rows());
  if (n == 0) throw Error(ErrorCode::Validation, "mesh has no vertices");
  if (!vertices.allFinite()) throw Error(ErrorCode::Validation, "mesh has non-finite coordinates");
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int idx = faces(f, k);
      if (idx < 0 || idx >= n) {
        throw Error(ErrorCode::Validation, "face " + std::to_string(f) + " references vertex " +
                                               std::to_string(idx) + " but mesh has " +
                                               std::to_string(n) + " vertices");
      }
    }
    if (faces(f, 0) == faces(f, 1) || faces(f, 1) == faces(f, 2) || faces(f, 0) == faces(f, 2)) {
      throw Error(ErrorCode::Validation, "face " + std::to_string(f) + " is degenerate");
    }
  }

  Mesh mesh;
  mesh.edges_ = edges_from_faces(faces);

  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  int components = n;
  for (const auto& e : mesh.edges_) {
    int ra = find_root(parent, e[0]);
    int rb = find_root(parent, e[1]);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  if (components != 1) {
    throw Error(ErrorCode::Validation,
                "mesh is disconnected (" + std::to_string(components) + " components)");
  }

  mesh.vertices_ = std::move(vertices);
  mesh.faces_ = std::move(faces);
  mesh.name_ = std::move(name);
  return mesh;
}

Mesh Mesh::with_vertices(Vertices vertices) const {
  if (vertices.rows() != vertices_.rows()) {
    throw Error(ErrorCode::InvalidArgument, "vertex count mismatch in with_vertices");
  }
  Mesh out = *this;
  out.vertices_ = std::move(vertices);
  return out;
}

Eigen::Vector3d Mesh::centroid() const { return vertices_.colwise().mean().transpose(); }

double Mesh::mean_edge_length() const {
  if (edges_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : edges_) sum += (vertices_.row(e[0]) - vertices_.row(e[1])).norm();
  return sum / static_cast<double>(edges_.size());
}

MeshFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return MeshFormat::Off;
  if (ext == ".json") return MeshFormat::Json;
  throw Error(ErrorCode::InvalidArgument, "unknown mesh extension '" + ext + "'");
}

Mesh parse_off(const std::string& text, std::string name) {
  // Strip comments, then tokenize.
  std::string cleaned;
  cleaned.reserve(text.size());
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    cleaned += line;
    cleaned += '\n';
  }
  std::istringstream in(cleaned);
  std::string header;
  if (!(in >> header) || header != "OFF") throw Error(ErrorCode::Parse, "OFF: missing 'OFF' header");
  long nv = 0, nf = 0, ne = 0;
  if (!(in >> nv >> nf >> ne) || nv < 0 || nf < 0) throw Error(ErrorCode::Parse, "OFF: bad counts line");
  Vertices v(nv, 3);
  for (long i = 0; i < nv; ++i) {
    if (!(in >> v(i, 0) >> v(i, 1) >> v(i, 2))) {
      throw Error(ErrorCode::Parse, "OFF: truncated vertex " + std::to_string(i));
    }
  }
  Faces f(nf, 3);
  for (long i = 0; i < nf; ++i) {
    int k = 0;
    if (!(in >> k)) throw Error(ErrorCode::Parse, "OFF: truncated face " + std::to_string(i));
    if (k != 3) throw Error(ErrorCode::Parse, "OFF: face " + std::to_string(i) + " is not a triangle");
    if (!(in >> f(i, 0) >> f(i, 1) >> f(i, 2))) {
      throw Error(ErrorCode::Parse, "OFF: truncated face " + std::to_string(i));
    }
  }
  return Mesh::from_faces(std::move(v), std::move(f), std::move(name));
}

std::string to_off(const Mesh& mesh) {
  std::string out = "OFF\n";
  out += std::to_string(mesh.vertex_count()) + " " + std::to_string(mesh.face_count()) + " " +
         std::to_string(mesh.edges().size()) + "\n";
  const auto& v = mesh.vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out += format_double(v(i, 0)) + " " + format_double(v(i, 1)) + " " + format_double(v(i, 2)) + "\n";
  }
  const auto& f = mesh.faces();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    out += "3 " + std::to_string(f(i, 0)) + " " + std::to_string(f(i, 1)) + " " + std::to_string(f(i, 2)) + "\n";
  }
  return out;
}

Mesh parse_mesh_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("mesh JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("vertices") || !j.contains("faces")) {
    throw Error(ErrorCode::Parse, "mesh JSON: expected object with 'vertices' and 'faces'");
  }
  try {
    const auto& jv = j.at("vertices");
    const auto& jf = j.at("faces");
    Vertices v(static_cast<Eigen::Index>(jv.size()), 3);
    for (std::size_t i = 0; i < jv.size(); ++i) {
      if (jv[i].size() != 3) throw Error(ErrorCode::Parse, "mesh JSON: vertex " + std::to_string(i) + " is not a 3-vector");
      for (int k = 0; k < 3; ++k) v(static_cast<Eigen::Index>(i), k) = jv[i][k].get<double>();
    }
    Faces f(static_cast<Eigen::Index>(jf.size()), 3);
    for (std::size_t i = 0; i < jf.size(); ++i) {
      if (jf[i].size() != 3) throw Error(ErrorCode::Parse, "mesh JSON: face " + std::to_string(i) + " is not a triangle");
      for (int k = 0; k < 3; ++k) f(static_cast<Eigen::Index>(i), k) = jf[i][k].get<int>();
    }
    std::string name = j.value("name", std::string{});
    return Mesh::from_faces(std::move(v), std::move(f), std::move(name));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("mesh JSON: ") + e.what());
  }
}

std::string to_mesh_json(const Mesh& mesh) {
  nlohmann::json j;
  auto& jv = j["vertices"] = nlohmann::json::array();
  const auto& v = mesh.vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) jv.push_back({v(i, 0), v(i, 1), v(i, 2)});
  auto& jf = j["faces"] = nlohmann::json::array();
  const auto& f = mesh.faces();
  for (Eigen::Index i = 0; i < f.rows(); ++i) jf.push_back({f(i, 0), f(i, 1), f(i, 2)});
  j["name"] = mesh.name();
  return j.dump();
}

Mesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const std::string text = read_file(path);
  try {
    if (format == MeshFormat::Off) return parse_off(text, path.stem().string());
    return parse_mesh_json(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Mesh load_mesh(const std::filesystem::path& path) { return load_mesh(path, format_from_path(path)); }

void save_mesh(const std::filesystem::path& path, const Mesh& mesh, MeshFormat format) {
  write_file(path, format == MeshFormat::Off ? to_off(mesh) : to_mesh_json(mesh));
}

void save_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  save_mesh(path, mesh, format_from_path(path));
}

Vertices vertex_normals(const Mesh& mesh) {
  const auto& v = mesh.vertices();
  const auto& f = mesh.faces();
  Vertices normals = Vertices::Zero(v.rows(), 3);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const Eigen::Vector3d a = v.row(f(i, 0));
    const Eigen::Vector3d b = v.row(f(i, 1));
    const Eigen::Vector3d c = v.row(f(i, 2));
    // Cross product length is twice the face area: area weighting for free.
    const Eigen::RowVector3d n = (b - a).cross(c - a).transpose();
    normals.row(f(i, 0)) += n;
    normals.row(f(i, 1)) += n;
    normals.row(f(i, 2)) += n;
  }
  for (Eigen::Index i = 0; i < normals.rows(); ++i) {
    const double len = normals.row(i).norm();
    if (!(len > 0.0)) {
      throw Error(ErrorCode::Numeric, "zero-magnitude normal at vertex " + std::to_string(i));
    }
    normals.row(i) /= len;
  }
  const Eigen::RowVector3d c = v.colwise().mean();
  double alignment = 0.0;
  for (Eigen::Index i = 0; i < v.rows(); ++i) alignment += normals.row(i).dot(v.row(i) - c);
  if (alignment < 0.0) normals = -normals;
  return normals;
}

}  // namespace meshgnn
