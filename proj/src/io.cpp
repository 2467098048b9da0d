#include "gromovlab/io.hpp"

#include "gromovlab/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace gromovlab::io {

double round12(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

namespace {

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round12(v);
}

// Space data is written exactly so that files validate again on reading.
Json exact(const Vector& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Json exact(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(exact(Vector(m.row(i).transpose())));
  return out;
}

}  // namespace

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

Json to_json(const Tensor& t) {
  // Nested arrays, outermost axis first.
  std::size_t flat = 0;
  auto build = [&](auto&& self, std::size_t axis) -> Json {
    Json level = Json::array();
    for (Eigen::Index i = 0; i < t.extent(axis); ++i) {
      level.push_back(axis + 1 == t.rank() ? number(t[flat++]) : self(self, axis + 1));
    }
    return level;
  };
  return t.rank() == 0 ? Json::array() : build(build, 0);
}

Json to_json(const MmSpace& space) {
  Json out = {{"label", space.label()}, {"weights", exact(space.weights())}};
  if (space.has_coords()) {
    out["points"] = exact(*space.coords());
    out["metric"] = "euclidean";
  } else {
    out["distance_matrix"] = exact(space.dist());
  }
  return out;
}

Json to_json(const Plan2& plan) {
  return {{"mass", to_json(plan.mass())}, {"marginals", {to_json(plan.mu()), to_json(plan.nu())}}};
}

Json to_json(const Plan3& plan) {
  return {{"mass", to_json(plan.mass())},
          {"marginals", {to_json(plan.sigma()), to_json(plan.mu()), to_json(plan.nu())}}};
}

Json to_json(const MultiPlan& plan) {
  Json marginals = Json::array();
  for (const Vector& m : plan.marginals()) marginals.push_back(to_json(m));
  return {{"mass", to_json(plan.mass())}, {"marginals", marginals}, {"constrained", plan.constrained()}};
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::ParseError, "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::ParseError, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from_json(j[i]);
    if (static_cast<std::size_t>(row.size()) != cols) throw Error(ErrorCode::ParseError, "rows differ in length");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

RawSpace raw_space_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "a space must be a JSON object");
  const bool has_dist = j.contains("distance_matrix");
  const bool has_points = j.contains("points");
  if (has_dist == has_points) {
    throw Error(ErrorCode::ParseError, "exactly one of distance_matrix and points must be present");
  }
  if (!j.contains("weights")) throw Error(ErrorCode::ParseError, "missing weights");
  RawSpace raw;
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw Error(ErrorCode::ParseError, "label must be a string");
    raw.label = j["label"].get<std::string>();
  }
  raw.weights = vector_from_json(j["weights"]);
  if (has_dist) {
    raw.dist = matrix_from_json(j["distance_matrix"]);
  } else {
    if (j.contains("metric") && j["metric"] != "euclidean") {
      throw Error(ErrorCode::ParseError, "only the euclidean metric is supported");
    }
    raw.coords = matrix_from_json(j["points"]);
  }
  return raw;
}

MmSpace space_from_json(const Json& j, Strictness strictness) { return validate(raw_space_from_json(j), strictness); }

void merge_params(const Json& j, SolverParams& p) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "params must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "eta") p.eta = value.get<double>();
      else if (key == "anneal_factor") p.anneal_factor = value.get<double>();
      else if (key == "eta_floor") p.eta_floor = value.get<double>();
      else if (key == "outer_max") p.outer_max = value.get<int>();
      else if (key == "sinkhorn_max") p.sinkhorn_max = value.get<int>();
      else if (key == "sinkhorn_tol") p.sinkhorn_tol = value.get<double>();
      else if (key == "outer_tol") p.outer_tol = value.get<double>();
      else if (key == "restarts") p.restarts = value.get<int>();
      else if (key == "seed") p.seed = value.get<std::uint64_t>();
      else if (key == "round_plan") p.round_plan = value.get<bool>();
      else if (key == "polish") p.polish = value.get<bool>();
      else if (key == "polish_max") p.polish_max = value.get<int>();
      else if (key == "polish_tol") p.polish_tol = value.get<double>();
      else if (key == "polish_cap") p.polish_cap = value.get<std::size_t>();
      else if (key == "vertex_starts") p.vertex_starts = value.get<int>();
      else if (key == "vertex_start_cap") p.vertex_start_cap = value.get<std::size_t>();
      else if (key == "opt_tol") p.opt_tol = value.get<double>();
      else if (key == "tensor_cap") p.tensor_cap = value.get<std::size_t>();
      else throw Error(ErrorCode::ParseError, "unknown parameter '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "parameter '" + key + "': " + e.what());
    }
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

MmSpace read_space(const std::string& path, Strictness strictness) {
  return space_from_json(read_json_file(path), strictness);
}

}  // namespace gromovlab::io
