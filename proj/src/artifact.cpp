#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "xlmap/error.hpp"
#include "xlmap/pipeline.hpp"

namespace xlmap {
namespace {

using json = nlohmann::json;

json means_to_json(const INTransform& t) {
  json arr = json::array();
  for (const auto& m : t.means) arr.push_back(m);
  return arr;
}

INTransform means_from_json(const json& j, std::size_t dim, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::FormatError, field + " must be a non-empty array");
  }
  INTransform t;
  t.dim = dim;
  for (const auto& row : j) {
    auto v = row.get<std::vector<double>>();
    if (v.size() != dim) {
      throw Error(ErrorCode::FormatError, field + " entry has length " + std::to_string(v.size()) +
                                              ", expected " + std::to_string(dim));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::FormatError, field + " has a non-finite entry");
    }
    t.means.push_back(std::move(v));
  }
  return t;
}

}  // namespace

std::string serialize_artifact(const MappingArtifact& a) {
  json j;
  j["version"] = a.version;
  j["dim"] = a.dim;
  j["level"] = std::string(to_string(a.level));
  json w = json::array();
  for (std::size_t r = 0; r < a.w.dim; ++r) {
    const auto row = a.w.row(r);
    w.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["w"] = std::move(w);
  j["target_in_means"] = means_to_json(a.target_in);
  j["source_in_means"] = means_to_json(a.source_in);
  j["anchor_count"] = a.anchor_count;
  j["residual"] = a.residual;
  const PipelineConfig& s = a.settings;
  j["settings"] = {
      {"cap", s.cap},
      {"min_count", s.min_count},
      {"k_min", s.clustering.k_min},
      {"k_max", s.clustering.k_max},
      {"max_iters", s.clustering.max_iters},
      {"rel_tol", s.clustering.rel_tol},
      {"min_cluster_size", s.clustering.min_cluster_size},
      {"in_iterations", s.in_iterations},
      {"use_in", s.use_in},
      {"lowercase", s.lowercase},
      {"level", std::string(to_string(s.level))},
      {"target_side", s.target_side == Side::Left ? "left" : "right"},
  };
  j["seeds"] = {{"seed", s.seed}, {"clustering", s.clustering.seed}};
  j["warnings"] = a.warnings;
  return j.dump() + "\n";
}

MappingArtifact parse_artifact(const std::string& text, const std::string& where) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::FormatError, where + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::FormatError, where + ": artifact must be an object");
  if (!j.contains("version") || !j["version"].is_string()) {
    throw Error(ErrorCode::FormatError, where + ": missing version");
  }
  if (j["version"].get<std::string>() != kArtifactVersion) {
    throw Error(ErrorCode::VersionMismatch, where + ": unsupported artifact version \"" +
                                                j["version"].get<std::string>() + "\"");
  }
  try {
    MappingArtifact a;
    a.dim = j.at("dim").get<std::size_t>();
    if (a.dim == 0) throw Error(ErrorCode::FormatError, where + ": dim must be positive");
    a.level = parse_level(j.at("level").get<std::string>());
    const auto& w = j.at("w");
    if (!w.is_array() || w.size() != a.dim) {
      throw Error(ErrorCode::FormatError, where + ": w must have dim rows");
    }
    a.w.dim = a.dim;
    a.w.values.reserve(a.dim * a.dim);
    for (const auto& row : w) {
      auto r = row.get<std::vector<double>>();
      if (r.size() != a.dim) throw Error(ErrorCode::FormatError, where + ": w must be square");
      a.w.values.insert(a.w.values.end(), r.begin(), r.end());
    }
    a.target_in = means_from_json(j.at("target_in_means"), a.dim, "target_in_means");
    a.source_in = means_from_json(j.at("source_in_means"), a.dim, "source_in_means");
    a.anchor_count = j.at("anchor_count").get<std::size_t>();
    a.residual = j.at("residual").get<double>();
    a.w.residual = a.residual;

    const auto& s = j.at("settings");
    PipelineConfig& cfg = a.settings;
    cfg.cap = s.at("cap").get<std::size_t>();
    cfg.min_count = s.at("min_count").get<std::size_t>();
    cfg.clustering.k_min = s.at("k_min").get<std::size_t>();
    cfg.clustering.k_max = s.at("k_max").get<std::size_t>();
    cfg.clustering.max_iters = s.at("max_iters").get<int>();
    cfg.clustering.rel_tol = s.at("rel_tol").get<double>();
    cfg.clustering.min_cluster_size = s.at("min_cluster_size").get<std::size_t>();
    cfg.clustering.min_count = cfg.min_count;
    cfg.in_iterations = s.at("in_iterations").get<int>();
    cfg.use_in = s.at("use_in").get<bool>();
    cfg.lowercase = s.at("lowercase").get<bool>();
    cfg.level = parse_level(s.at("level").get<std::string>());
    const auto side = s.at("target_side").get<std::string>();
    if (side != "left" && side != "right") {
      throw Error(ErrorCode::FormatError, where + ": target_side must be left or right");
    }
    cfg.target_side = side == "left" ? Side::Left : Side::Right;
    const auto& seeds = j.at("seeds");
    cfg.seed = seeds.at("seed").get<std::uint64_t>();
    cfg.clustering.seed = seeds.at("clustering").get<std::uint64_t>();
    if (j.contains("warnings")) a.warnings = j["warnings"].get<std::vector<std::string>>();

    for (double x : a.w.values) {
      if (!std::isfinite(x)) throw Error(ErrorCode::FormatError, where + ": non-finite entry in w");
    }
    if (orthogonality_error(a.w) > 1e-6) {
      throw Error(ErrorCode::FormatError, where + ": w is not orthogonal");
    }
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, where + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) {
      throw Error(ErrorCode::FormatError, where + ": " + e.what());
    }
    throw;
  }
}

void save_artifact(const MappingArtifact& artifact, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << serialize_artifact(artifact);
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "write failure on " + path);
}

MappingArtifact load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_artifact(ss.str(), path);
}

}  // namespace xlmap
