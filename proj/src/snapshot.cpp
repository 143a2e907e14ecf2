#include "sensefuse/snapshot.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace sensefuse {

namespace {

using json = nlohmann::ordered_json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& v, int rows, int cols) {
  if (!v.is_array() || static_cast<int>(v.size()) != rows * cols) {
    throw SnapshotError("snapshot: bad matrix payload");
  }
  Eigen::MatrixXd out(rows, cols);
  int k = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = v[k++].get<double>();
  }
  return out;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i].get<double>();
  return out;
}

LandmarkKind kind_from_string(const std::string& s) {
  if (s == "BS") return LandmarkKind::kBS;
  if (s == "VA") return LandmarkKind::kVA;
  if (s == "SP") return LandmarkKind::kSP;
  if (s == "IP") return LandmarkKind::kIP;
  if (s == "UE_TRACK") return LandmarkKind::kUETrack;
  throw SnapshotError("snapshot: unknown landmark kind '" + s + "'");
}

json gaussian_to_json(const Gaussian& g) {
  json out;
  out["mean"] = vector_to_json(g.mean);
  out["cov"] = matrix_to_json(g.cov);  // row-major
  return out;
}

Gaussian gaussian_from_json(const json& v) {
  Gaussian g;
  g.mean = vector_from_json(v.at("mean"));
  const int d = g.dim();
  g.cov = matrix_from_json(v.at("cov"), d, d);
  return g;
}

json state_to_json(const FilterState& fs) {
  json out;
  out["modality"] = to_string(fs.modality);
  out["bs"] = vector_to_json(fs.bs);
  out["next_bernoulli_id"] = fs.next_bernoulli_id;
  if (fs.modality == Modality::kBistatic) {
    out["ue"] = gaussian_to_json(fs.ue.density);
  } else if (fs.ue_track_id.has_value()) {
    out["ue_track_id"] = *fs.ue_track_id;
  }
  json ppp = json::array();
  for (const PPPComponent& c : fs.map.ppp.components) {
    json jc;
    jc["weight"] = c.weight;
    jc["density"] = gaussian_to_json(c.density);
    jc["birth_slot"] = c.birth_slot;
    ppp.push_back(std::move(jc));
  }
  out["ppp"] = std::move(ppp);
  json berns = json::array();
  for (const Bernoulli& b : fs.map.bernoullis) {
    json jb;
    jb["id"] = b.id;
    jb["existence"] = b.existence;
    if (b.resolved_type.has_value()) jb["resolved_type"] = to_string(*b.resolved_type);
    json hyps = json::array();
    for (const ModelHypothesis& h : b.hypotheses) {
      json jh;
      jh["kind"] = to_string(h.kind);
      jh["weight"] = h.weight;
      jh["density"] = gaussian_to_json(h.density);
      hyps.push_back(std::move(jh));
    }
    jb["hypotheses"] = std::move(hyps);
    berns.push_back(std::move(jb));
  }
  out["bernoullis"] = std::move(berns);
  return out;
}

FilterState state_from_json(const json& v) {
  FilterState fs;
  const std::string modality = v.at("modality").get<std::string>();
  if (modality == "bistatic") {
    fs.modality = Modality::kBistatic;
  } else if (modality == "monostatic") {
    fs.modality = Modality::kMonostatic;
  } else {
    throw SnapshotError("snapshot: unknown modality '" + modality + "'");
  }
  fs.bs = vector_from_json(v.at("bs"));
  fs.next_bernoulli_id = v.value("next_bernoulli_id", 0);
  if (v.contains("ue")) fs.ue.density = gaussian_from_json(v.at("ue"));
  if (v.contains("ue_track_id")) fs.ue_track_id = v.at("ue_track_id").get<int>();
  for (const json& jc : v.at("ppp")) {
    PPPComponent c;
    c.weight = jc.at("weight").get<double>();
    c.density = gaussian_from_json(jc.at("density"));
    c.birth_slot = jc.value("birth_slot", -1);
    fs.map.ppp.components.push_back(std::move(c));
  }
  for (const json& jb : v.at("bernoullis")) {
    Bernoulli b;
    b.id = jb.at("id").get<int>();
    b.existence = jb.at("existence").get<double>();
    if (jb.contains("resolved_type")) {
      b.resolved_type = kind_from_string(jb.at("resolved_type").get<std::string>());
    }
    for (const json& jh : jb.at("hypotheses")) {
      ModelHypothesis h;
      h.kind = kind_from_string(jh.at("kind").get<std::string>());
      h.weight = jh.at("weight").get<double>();
      h.density = gaussian_from_json(jh.at("density"));
      b.hypotheses.push_back(std::move(h));
    }
    fs.map.bernoullis.push_back(std::move(b));
  }
  return fs;
}

json parse_checked(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SnapshotError(std::string("snapshot: ") + e.what());
  }
  const int version = root.value("version", -1);
  if (version != kSnapshotVersion) {
    throw SnapshotError("snapshot: schema version mismatch (expected " +
                        std::to_string(kSnapshotVersion) + ", got " +
                        std::to_string(version) + ")");
  }
  return root;
}

}  // namespace

std::string snapshot_to_json(const FilterState& fs) {
  json root;
  root["version"] = kSnapshotVersion;
  root["state"] = state_to_json(fs);
  return root.dump(2) + "\n";
}

FilterState snapshot_from_json(const std::string& text) {
  return state_from_json(parse_checked(text).at("state"));
}

void save_snapshot(const FilterState& fs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SnapshotError("snapshot: cannot write " + path);
  out << snapshot_to_json(fs);
}

FilterState load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("snapshot: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return snapshot_from_json(buffer.str());
}

std::string fused_snapshot_to_json(const FilterState& fs_b, const FilterState& fs_m) {
  json root;
  root["version"] = kSnapshotVersion;
  root["bistatic"] = state_to_json(fs_b);
  root["monostatic"] = state_to_json(fs_m);
  return root.dump(2) + "\n";
}

}  // namespace sensefuse
