#include "meshgnn/synthgen.hpp"

#include "meshgnn/error.hpp"
#include "meshgnn/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace meshgnn {

Mesh icosphere(int level) {
  if (level < 0 || level > 5) throw Error(ErrorCode::InvalidArgument, "icosphere level must be in [0, 5]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
  };
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int a = mid(f[0], f[1]);
      const int b = mid(f[1], f[2]);
      const int c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  Vertices v(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
  Faces f(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    for (int k = 0; k < 3; ++k) f(static_cast<Eigen::Index>(i), k) = faces[i][static_cast<std::size_t>(k)];
  }
  return Mesh::from_faces(std::move(v), std::move(f), "icosphere" + std::to_string(level));
}

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw Error(ErrorCode::Parse, "unknown split '" + text + "'");
}

double SynthSpec::class_effect_for(int structure) const {
  if (class_effect.size() == 1) return class_effect[0];
  return class_effect.at(static_cast<std::size_t>(structure));
}

void validate(const SynthSpec& s) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "synth spec '" + key + "': " + why);
  };
  if (s.structures < 1) fail("structures", "must be >= 1");
  if (s.icosphere_level < 0 || s.icosphere_level > 5) fail("icosphere_level", "must be in [0, 5]");
  if (s.vertex_noise_sd < 0) fail("vertex_noise_sd", "must be >= 0");
  if (s.class_effect.size() != 1 && s.class_effect.size() != static_cast<std::size_t>(s.structures)) {
    fail("class_effect", "needs 1 or `structures` values");
  }
  for (double e : s.class_effect) {
    if (!(e > 0.0)) fail("class_effect", "scale factors must be positive");
  }
  if (s.sites.empty()) fail("sites", "at least one site required");
  std::set<std::string> names;
  for (const auto& site : s.sites) {
    if (site.name.empty() || site.name.find_first_of(",/\\ \n") != std::string::npos) {
      fail("sites.name", "site names must be non-empty without separators");
    }
    if (!names.insert(site.name).second) fail("sites.name", "duplicate site '" + site.name + "'");
    if (site.offset_mm < 0 || site.rotation_max_rad < 0) fail("sites", "offset and rotation range must be >= 0");
    if (!(site.global_scale > 0)) fail("sites.global_scale", "must be positive");
    const auto c = site.counts.value_or(s.subjects_per_site);
    if (c.train < 0 || c.val < 0 || c.test < 0) fail("sites.counts", "counts must be >= 0");
  }
  const auto& c = s.subjects_per_site;
  if (c.train < 0 || c.val < 0 || c.test < 0) fail("subjects_per_site", "counts must be >= 0");
}

namespace {

nlohmann::json counts_to_json(const SplitCounts& c) { return {{"train", c.train}, {"val", c.val}, {"test", c.test}}; }

template <class T>
T get_key(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Parse, "synth spec key '" + path + key + "' has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "synth spec '" + path + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw Error(ErrorCode::Parse, "synth spec has unknown key '" + path + it.key() + "'");
  }
}

SplitCounts counts_from_json(const nlohmann::json& j, const std::string& path) {
  reject_unknown(j, {"train", "val", "test"}, path);
  SplitCounts c;
  if (j.contains("train")) c.train = get_key<int>(j, "train", path);
  if (j.contains("val")) c.val = get_key<int>(j, "val", path);
  if (j.contains("test")) c.test = get_key<int>(j, "test", path);
  return c;
}

Eigen::Vector3d random_unit(Rng& rng) {
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-9);
  return v.normalized();
}

}  // namespace

nlohmann::json spec_to_json(const SynthSpec& s) {
  nlohmann::json sites = nlohmann::json::array();
  for (const auto& site : s.sites) {
    nlohmann::json js = {{"name", site.name},
                         {"offset_mm", site.offset_mm},
                         {"rotation_max_rad", site.rotation_max_rad},
                         {"global_scale", site.global_scale}};
    if (site.counts) js["counts"] = counts_to_json(*site.counts);
    sites.push_back(js);
  }
  return {{"structures", s.structures},
          {"subjects_per_site", counts_to_json(s.subjects_per_site)},
          {"sites", sites},
          {"class_effect", s.class_effect},
          {"vertex_noise_sd", s.vertex_noise_sd},
          {"icosphere_level", s.icosphere_level},
          {"seed", s.seed}};
}

SynthSpec spec_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"structures", "subjects_per_site", "sites", "class_effect", "vertex_noise_sd", "icosphere_level", "seed"},
                 "");
  SynthSpec s;
  if (j.contains("structures")) s.structures = get_key<int>(j, "structures", "");
  if (j.contains("subjects_per_site")) s.subjects_per_site = counts_from_json(j.at("subjects_per_site"), "subjects_per_site.");
  if (j.contains("class_effect")) {
    const auto& ce = j.at("class_effect");
    if (ce.is_number()) {
      s.class_effect = {ce.get<double>()};
    } else {
      s.class_effect = get_key<std::vector<double>>(j, "class_effect", "");
    }
  }
  if (j.contains("vertex_noise_sd")) s.vertex_noise_sd = get_key<double>(j, "vertex_noise_sd", "");
  if (j.contains("icosphere_level")) s.icosphere_level = get_key<int>(j, "icosphere_level", "");
  if (j.contains("seed")) s.seed = get_key<std::uint64_t>(j, "seed", "");
  if (j.contains("sites")) {
    const auto& js = j.at("sites");
    if (!js.is_array()) throw Error(ErrorCode::Parse, "synth spec key 'sites' must be an array");
    s.sites.clear();
    for (std::size_t i = 0; i < js.size(); ++i) {
      const std::string path = "sites[" + std::to_string(i) + "].";
      reject_unknown(js[i], {"name", "offset_mm", "rotation_max_rad", "global_scale", "counts"}, path);
      SiteSpec site;
      site.name = js[i].contains("name") ? get_key<std::string>(js[i], "name", path) : "site" + std::to_string(i);
      if (js[i].contains("offset_mm")) site.offset_mm = get_key<double>(js[i], "offset_mm", path);
      if (js[i].contains("rotation_max_rad")) site.rotation_max_rad = get_key<double>(js[i], "rotation_max_rad", path);
      if (js[i].contains("global_scale")) site.global_scale = get_key<double>(js[i], "global_scale", path);
      if (js[i].contains("counts")) site.counts = counts_from_json(js[i].at("counts"), path + "counts.");
      s.sites.push_back(site);
    }
  }
  validate(s);
  return s;
}

std::vector<StructureTemplate> make_templates(const SynthSpec& spec) {
  const Mesh sphere = icosphere(spec.icosphere_level);
  std::vector<StructureTemplate> out;
  for (int s = 0; s < spec.structures; ++s) {
    Rng rng = Rng::derive(spec.seed, "structure", {static_cast<std::uint64_t>(s)});
    const double radius = rng.uniform(4.0, 10.0);
    const Eigen::Vector3d stretch(rng.uniform(0.7, 1.3), rng.uniform(0.7, 1.3), rng.uniform(0.7, 1.3));
    struct Bump {
      Eigen::Vector3d centre;
      double amplitude, width;
    };
    std::vector<Bump> bumps;
    for (int b = 0; b < 3; ++b) {
      Bump bump;
      bump.centre = random_unit(rng);
      bump.amplitude = rng.uniform(-0.25, 0.25);
      bump.width = rng.uniform(0.3, 0.7);
      bumps.push_back(bump);
    }
    StructureTemplate t;
    t.position = Eigen::Vector3d(rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-30, 30));
    t.class_axis = random_unit(rng);

    Vertices v = sphere.vertices();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const Eigen::Vector3d dir = v.row(i).transpose();
      double r = radius;
      for (const auto& b : bumps) {
        const double ang = std::acos(std::clamp(dir.dot(b.centre), -1.0, 1.0));
        r *= 1.0 + b.amplitude * std::exp(-ang * ang / (2.0 * b.width * b.width));
      }
      v.row(i) = (dir * r).cwiseProduct(stretch).transpose();
    }
    v.rowwise() -= v.colwise().mean();
    t.mesh = sphere.with_vertices(std::move(v));
    char name[32];
    std::snprintf(name, sizeof name, "structure_%02d", s);
    t.mesh.set_name(name);
    out.push_back(std::move(t));
  }
  return out;
}

RigidTransform site_transform(const SynthSpec& spec, int site_index) {
  const auto& site = spec.sites.at(static_cast<std::size_t>(site_index));
  Rng rng = Rng::derive(spec.seed, "site", {static_cast<std::uint64_t>(site_index)});
  const Eigen::Vector3d axis = random_unit(rng);
  const double angle = rng.uniform(-site.rotation_max_rad, site.rotation_max_rad);
  const Eigen::Vector3d dir = random_unit(rng);
  RigidTransform xf;
  xf.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  xf.translation = site.offset_mm * dir;
  return xf;
}

std::vector<const SubjectSample*> SynthDataset::split(Split s) const {
  std::vector<const SubjectSample*> out;
  for (const auto& subj : subjects) {
    if (subj.split == s) out.push_back(&subj);
  }
  return out;
}

SynthDataset generate_dataset(const SynthSpec& spec) {
  validate(spec);
  SynthDataset ds;
  ds.spec = spec;
  ds.templates = make_templates(spec);
  for (int si = 0; si < static_cast<int>(spec.sites.size()); ++si) ds.site_transforms.push_back(site_transform(spec, si));

  for (int si = 0; si < static_cast<int>(spec.sites.size()); ++si) {
    const auto& site = spec.sites[static_cast<std::size_t>(si)];
    const auto counts = site.counts.value_or(spec.subjects_per_site);
    const auto& xf = ds.site_transforms[static_cast<std::size_t>(si)];
    int running = 0;  // alternating labels across the whole site keep it balanced within 1
    for (Split split : {Split::Train, Split::Val, Split::Test}) {
      for (int k = 0; k < counts.of(split); ++k) {
        SubjectSample subj;
        char id[96];
        std::snprintf(id, sizeof id, "%s-%s-%03d", site.name.c_str(), to_string(split).c_str(), k);
        subj.subject_id = id;
        subj.site = site.name;
        subj.site_index = si;
        subj.split = split;
        subj.label = running++ % 2;
        Rng rng = Rng::derive(spec.seed, "subject",
                              {static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(split),
                               static_cast<std::uint64_t>(k)});
        for (int s = 0; s < spec.structures; ++s) {
          const auto& tmpl = ds.templates[static_cast<std::size_t>(s)];
          Vertices v = tmpl.mesh.vertices();
          if (subj.label == 1) {
            const double f = spec.class_effect_for(s);
            const Eigen::RowVector3d axis = tmpl.class_axis.transpose();
            const Eigen::VectorXd along = v * tmpl.class_axis;
            v += (f - 1.0) * along * axis;
          }
          v *= site.global_scale;
          v.rowwise() += (site.global_scale * tmpl.position).transpose();
          if (spec.vertex_noise_sd > 0.0) {
            for (Eigen::Index i = 0; i < v.rows(); ++i) {
              for (int c = 0; c < 3; ++c) v(i, c) += spec.vertex_noise_sd * rng.normal();
            }
          }
          Mesh m = apply_transform(tmpl.mesh.with_vertices(std::move(v)), xf);
          m.set_name(tmpl.mesh.name());
          subj.meshes.push_back(std::move(m));
        }
        ds.subjects.push_back(std::move(subj));
      }
    }
  }
  return ds;
}

}  // namespace meshgnn
