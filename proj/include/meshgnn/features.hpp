#pragma once

#include "meshgnn/mesh.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace meshgnn {

inline constexpr int kBinsPerAngle = 11;
inline constexpr int kFpfhWidth = 3 * kBinsPerAngle;

// Angular relation between an oriented point pair, expressed in the Darboux
// frame (u, v, w) of the source point: u = n_s, v = u x dir, w = u x v.
struct DarbouxAngles {
  double alpha = 0.0;  // v . n_t, in [-1, 1]
  double phi = 0.0;    // u . dir, in [-1, 1]
  double theta = 0.0;  // atan2(w . n_t, u . n_t), in (-pi, pi]
  double d = 0.0;      // |p_t - p_s|
};

// Frame angles with (p_s, n_s) as the source; no reordering is applied.
DarbouxAngles darboux_angles(const Eigen::Vector3d& p_s, const Eigen::Vector3d& n_s,
                             const Eigen::Vector3d& p_t, const Eigen::Vector3d& n_t);

// Picks as source the point whose normal makes the smaller angle with the
// connecting line, then evaluates darboux_angles. Symmetric in its arguments.
DarbouxAngles pair_features(const Eigen::Vector3d& p1, const Eigen::Vector3d& n1,
                            const Eigen::Vector3d& p2, const Eigen::Vector3d& n2);

// Bin index in [0, 11) for each angle; upper range edges are inclusive.
int alpha_bin(double alpha);
int phi_bin(double phi);
int theta_bin(double theta);

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FpfhOptions {
  // Neighbourhood radius in mm; unset means radius_scale * mean edge length.
  std::optional<double> radius;
  double radius_scale = 2.5;
};

double resolve_radius(const Mesh& mesh, const FpfhOptions& options);

// Sorted indices of all points within `radius` of each point (self excluded).
std::vector<std::vector<int>> radius_neighbors(const Vertices& points, double radius);

// n x 33 SPFH histograms; each 11-bin block sums to 100.
FeatureMatrix compute_spfh(const Vertices& points, const Vertices& normals,
                           const std::vector<std::vector<int>>& neighbors);

// n x 33 Fast Point Feature Histograms.
FeatureMatrix compute_fpfh(const Mesh& mesh, const Vertices& normals, double radius);
// Normals and radius resolved internally.
FeatureMatrix compute_fpfh(const Mesh& mesh, const FpfhOptions& options = {});

}  // namespace meshgnn
