#pragma once

#include "gromovlab/coupling.hpp"
#include "gromovlab/mmspace.hpp"
#include "gromovlab/params.hpp"

#include <json.hpp>

#include <string>

namespace gromovlab::io {

using Json = nlohmann::json;

/// Rounds to 12 significant digits so serialized output is stable.
double round12(double v);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
/// Space data is written at full precision so the file validates again.
Json to_json(const MmSpace& space);
Json to_json(const Plan2& plan);
Json to_json(const Plan3& plan);
Json to_json(const MultiPlan& plan);
Json to_json(const Tensor& t);

/// {"label", "weights", "distance_matrix"} or {"label", "weights", "points",
/// "metric": "euclidean"}; exactly one of distance_matrix / points.
/// Throws ParseError on schema problems, validation errors otherwise.
RawSpace raw_space_from_json(const Json& j);
MmSpace space_from_json(const Json& j, Strictness strictness = Strictness::Strict);

Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

/// Overwrites the fields present in j; unknown keys are a ParseError.
void merge_params(const Json& j, SolverParams& params);

Json read_json_file(const std::string& path);
MmSpace read_space(const std::string& path, Strictness strictness = Strictness::Strict);

}  // namespace gromovlab::io
