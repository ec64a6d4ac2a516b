#include "meshgnn/features.hpp"

#include "meshgnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace meshgnn {

namespace {

int clamp_bin(double t) {
  const int b = static_cast<int>(std::floor(t * kBinsPerAngle));
  return std::clamp(b, 0, kBinsPerAngle - 1);
}

struct CellKey {
  long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

DarbouxAngles darboux_angles(const Eigen::Vector3d& p_s, const Eigen::Vector3d& n_s,
                             const Eigen::Vector3d& p_t, const Eigen::Vector3d& n_t) {
  const Eigen::Vector3d delta = p_t - p_s;
  const double d = delta.norm();
  if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "darboux_angles: coincident points");
  const Eigen::Vector3d dir = delta / d;
  const Eigen::Vector3d& u = n_s;
  Eigen::Vector3d v = u.cross(dir);
  const double vlen = v.norm();
  // u parallel to the connecting line leaves v undefined; use the zero axis.
  if (vlen > 1e-12) {
    v /= vlen;
  } else {
    v.setZero();
  }
  const Eigen::Vector3d w = u.cross(v);

  DarbouxAngles out;
  out.alpha = std::clamp(v.dot(n_t), -1.0, 1.0);
  out.phi = std::clamp(u.dot(dir), -1.0, 1.0);
  out.theta = std::atan2(w.dot(n_t), u.dot(n_t));
  if (out.theta <= -M_PI) out.theta = M_PI;
  out.d = d;
  return out;
}

DarbouxAngles pair_features(const Eigen::Vector3d& p1, const Eigen::Vector3d& n1,
                            const Eigen::Vector3d& p2, const Eigen::Vector3d& n2) {
  const Eigen::Vector3d delta = p2 - p1;
  const double d = delta.norm();
  if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "pair_features: coincident points");
  // Smaller angle to the line <=> larger |cos|.
  const double c1 = std::abs(n1.dot(delta)) / d;
  const double c2 = std::abs(n2.dot(delta)) / d;
  if (c2 > c1) return darboux_angles(p2, n2, p1, n1);
  return darboux_angles(p1, n1, p2, n2);
}

int alpha_bin(double alpha) { return clamp_bin((alpha + 1.0) / 2.0); }
int phi_bin(double phi) { return clamp_bin((phi + 1.0) / 2.0); }
int theta_bin(double theta) { return clamp_bin((theta + M_PI) / (2.0 * M_PI)); }

double resolve_radius(const Mesh& mesh, const FpfhOptions& options) {
  const double r = options.radius ? *options.radius : options.radius_scale * mesh.mean_edge_length();
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "FPFH radius must be positive, got " + std::to_string(r));
  }
  return r;
}

std::vector<std::vector<int>> radius_neighbors(const Vertices& points, double radius) {
  const auto n = static_cast<int>(points.rows());
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  const double r2 = radius * radius;
  auto cell_of = [&](int i) {
    return CellKey{static_cast<long>(std::floor(points(i, 0) / radius)),
                   static_cast<long>(std::floor(points(i, 1) / radius)),
                   static_cast<long>(std::floor(points(i, 2) / radius))};
  };
  std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
  for (int i = 0; i < n; ++i) grid[cell_of(i)].push_back(i);
  for (int i = 0; i < n; ++i) {
    const CellKey c = cell_of(i);
    auto& nb = out[static_cast<std::size_t>(i)];
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j != i && (points.row(i) - points.row(j)).squaredNorm() <= r2) nb.push_back(j);
          }
        }
      }
    }
    std::sort(nb.begin(), nb.end());
  }
  return out;
}

FeatureMatrix compute_spfh(const Vertices& points, const Vertices& normals,
                           const std::vector<std::vector<int>>& neighbors) {
  const auto n = static_cast<Eigen::Index>(points.rows());
  FeatureMatrix spfh = FeatureMatrix::Zero(n, kFpfhWidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& nb = neighbors[static_cast<std::size_t>(i)];
    if (nb.empty()) continue;
    const double inc = 100.0 / static_cast<double>(nb.size());
    const Eigen::Vector3d p = points.row(i);
    const Eigen::Vector3d np = normals.row(i);
    for (int j : nb) {
      const auto a = pair_features(p, np, points.row(j).transpose(), normals.row(j).transpose());
      spfh(i, alpha_bin(a.alpha)) += inc;
      spfh(i, kBinsPerAngle + phi_bin(a.phi)) += inc;
      spfh(i, 2 * kBinsPerAngle + theta_bin(a.theta)) += inc;
    }
  }
  return spfh;
}

FeatureMatrix compute_fpfh(const Mesh& mesh, const Vertices& normals, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "FPFH radius must be positive");
  const auto& pts = mesh.vertices();
  if (normals.rows() != pts.rows()) throw Error(ErrorCode::InvalidArgument, "normals/vertices row mismatch");
  const auto neighbors = radius_neighbors(pts, radius);

  std::string isolated;
  int isolated_count = 0;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if (neighbors[i].empty()) {
      if (isolated_count < 10) isolated += (isolated.empty() ? "" : ",") + std::to_string(i);
      ++isolated_count;
    }
    for (int j : neighbors[i]) {
      if ((pts.row(static_cast<Eigen::Index>(i)) - pts.row(j)).squaredNorm() == 0.0) {
        throw Error(ErrorCode::Validation, "duplicate vertex positions at indices " + std::to_string(i) +
                                               " and " + std::to_string(j));
      }
    }
  }
  if (isolated_count > 0) {
    throw Error(ErrorCode::Validation, std::to_string(isolated_count) +
                                           " vertices have no neighbour within radius " +
                                           std::to_string(radius) + " (e.g. " + isolated + ")");
  }

  const FeatureMatrix spfh = compute_spfh(pts, normals, neighbors);
  FeatureMatrix fpfh = spfh;
  Eigen::Matrix<double, 1, kFpfhWidth> acc;
  for (Eigen::Index i = 0; i < fpfh.rows(); ++i) {
    const auto& nb = neighbors[static_cast<std::size_t>(i)];
    acc.setZero();
    for (int j : nb) {
      const double w = (pts.row(i) - pts.row(j)).norm();
      acc += spfh.row(j) / w;
    }
    fpfh.row(i) += acc / static_cast<double>(nb.size());
  }
  return fpfh;
}

FeatureMatrix compute_fpfh(const Mesh& mesh, const FpfhOptions& options) {
  return compute_fpfh(mesh, vertex_normals(mesh), resolve_radius(mesh, options));
}

}  // namespace meshgnn
