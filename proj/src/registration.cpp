#include "meshgnn/registration.hpp"

#include "meshgnn/error.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace meshgnn {

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& first) const {
  RigidTransform out;
  out.rotation = rotation * first.rotation;
  out.translation = rotation * first.translation + translation;
  return out;
}

nlohmann::json transform_to_json(const RigidTransform& xf) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({xf.rotation(r, 0), xf.rotation(r, 1), xf.rotation(r, 2)});
  return {{"rotation", rot},
          {"translation", {xf.translation.x(), xf.translation.y(), xf.translation.z()}}};
}

RigidTransform transform_from_json(const nlohmann::json& j) {
  try {
    RigidTransform xf;
    const auto& rot = j.at("rotation");
    const auto& t = j.at("translation");
    if (rot.size() != 3 || t.size() != 3) throw Error(ErrorCode::Parse, "transform JSON: bad shapes");
    for (int r = 0; r < 3; ++r) {
      if (rot[r].size() != 3) throw Error(ErrorCode::Parse, "transform JSON: rotation must be 3x3");
      for (int c = 0; c < 3; ++c) xf.rotation(r, c) = rot[r][c].get<double>();
      xf.translation(r) = t[r].get<double>();
    }
    return xf;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("transform JSON: ") + e.what());
  }
}

RigidTransform umeyama_rigid(const Vertices& source, const Vertices& target) {
  const Eigen::Index n = source.rows();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "umeyama_rigid needs at least 3 points");
  if (target.rows() != n) {
    throw Error(ErrorCode::InvalidArgument, "umeyama_rigid: source has " + std::to_string(n) +
                                                " points, target has " + std::to_string(target.rows()));
  }
  const Eigen::RowVector3d mu_s = source.colwise().mean();
  const Eigen::RowVector3d mu_t = target.colwise().mean();
  const Eigen::Matrix3d cov =
      (target.rowwise() - mu_t).transpose() * (source.rowwise() - mu_s) / static_cast<double>(n);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::Numeric, "umeyama_rigid: degenerate configuration (cross-covariance rank < 2)");
  }
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d s(1.0, 1.0, 1.0);
  if ((u * v.transpose()).determinant() < 0.0) s(2) = -1.0;

  RigidTransform xf;
  xf.rotation = u * s.asDiagonal() * v.transpose();
  xf.translation = mu_t.transpose() - xf.rotation * mu_s.transpose();
  return xf;
}

Vertices apply_transform(const Vertices& points, const RigidTransform& xf) {
  Vertices out = points * xf.rotation.transpose();
  out.rowwise() += xf.translation.transpose();
  return out;
}

Mesh apply_transform(const Mesh& mesh, const RigidTransform& xf) {
  return mesh.with_vertices(apply_transform(mesh.vertices(), xf));
}

double rms_residual(const Vertices& source, const Vertices& target, const RigidTransform& xf) {
  const Vertices moved = apply_transform(source, xf);
  return std::sqrt((moved - target).squaredNorm() / static_cast<double>(source.rows()));
}

RegisteredMeshes register_dataset(const std::vector<Mesh>& meshes, const ReferenceSelector& reference) {
  RegisteredMeshes out;
  if (meshes.empty()) return out;

  std::optional<std::size_t> ref_index;
  const Mesh* ref = nullptr;
  if (const auto* idx = std::get_if<std::size_t>(&reference)) {
    if (*idx >= meshes.size()) {
      throw Error(ErrorCode::InvalidArgument, "reference index " + std::to_string(*idx) + " out of range");
    }
    ref_index = *idx;
    ref = &meshes[*idx];
  } else {
    ref = &std::get<Mesh>(reference);
  }

  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (meshes[i].vertex_count() != ref->vertex_count()) {
      throw Error(ErrorCode::Validation, "mesh " + std::to_string(i) + " has " +
                                             std::to_string(meshes[i].vertex_count()) +
                                             " vertices, reference has " + std::to_string(ref->vertex_count()));
    }
  }

  out.meshes.reserve(meshes.size());
  out.transforms.reserve(meshes.size());
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (ref_index && *ref_index == i) {
      out.meshes.push_back(meshes[i]);
      out.transforms.push_back(RigidTransform::identity());
      continue;
    }
    auto xf = umeyama_rigid(meshes[i].vertices(), ref->vertices());
    out.meshes.push_back(apply_transform(meshes[i], xf));
    out.transforms.push_back(xf);
  }
  return out;
}

}  // namespace meshgnn
