#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "tlab/fields.hpp"
#include "tlab/mesh.hpp"
#include "tlab/solver.hpp"

namespace tlab {

using Json = nlohmann::ordered_json;

inline constexpr int scenario_version = 1;

/// A transmission scenario as declared in a scenario file (docs/formats.md).
struct Scenario {
    std::string name;
    Box domain;
    std::optional<InterfaceCurve> interface;
    PiecewiseCoefficient coefficient;
    std::optional<LowerOrderTerms> lower_order;
    std::optional<InclusionScenario> inclusion;
    BoundaryData boundary;
    ScalarField source;
    ScalarField exact;
    std::optional<double> mesh_h;
    std::optional<double> d0;
    Json document;  // the parsed input, kept for fingerprints and reports

    MeshSpec mesh_spec(double h, bool with_inclusion = true) const;
    Problem problem(bool with_inclusion) const;
};

/// Throws Error(config) naming the offending key.
Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::string& path);

/// number -> c I; "expr" -> expr(x, y) I; [[a, b], [c, d]] with numbers or expressions.
MatrixField parse_matrix_field(const Json& value, const std::string& key);
ScalarField parse_scalar_field(const Json& value, const std::string& key);
Shape parse_shape(const Json& value);
unsigned parse_sides(const Json& value);

Json read_json_file(const std::string& path);

}  // namespace tlab
