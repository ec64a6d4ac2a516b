#pragma once

#include "meshgnn/mesh.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <variant>
#include <vector>

namespace meshgnn {

// Proper rigid motion x -> rotation * x + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  // (*this) after `first`.
  RigidTransform compose(const RigidTransform& first) const;
};

nlohmann::json transform_to_json(const RigidTransform& xf);
RigidTransform transform_from_json(const nlohmann::json& j);

// Least-squares proper rigid transform taking `source` onto `target` (rows are
// index-corresponded points). Closed form via the SVD of the cross-covariance
// with a determinant sign correction; scale is fixed at 1.
RigidTransform umeyama_rigid(const Vertices& source, const Vertices& target);

Vertices apply_transform(const Vertices& points, const RigidTransform& xf);
Mesh apply_transform(const Mesh& mesh, const RigidTransform& xf);

double rms_residual(const Vertices& source, const Vertices& target, const RigidTransform& xf);

struct RegisteredMeshes {
  std::vector<Mesh> meshes;
  std::vector<RigidTransform> transforms;
};

// Reference is either an index into `meshes` or an explicit mesh.
using ReferenceSelector = std::variant<std::size_t, Mesh>;

// Aligns every mesh of one structure onto the reference. An indexed reference
// maps to the exact identity.
RegisteredMeshes register_dataset(const std::vector<Mesh>& meshes,
                                  const ReferenceSelector& reference = std::size_t{0});

}  // namespace meshgnn
